"""Acceptance criteria.

One test per criterion; each prints a single verdict line (run with -s to see
them).  Tolerances are pinned here and match the module contracts; runtime
budgets are enforced on the criterion's own computation.
"""

import json
import time

import numpy as np
import pytest

from squeezelab.grid import (Grid1D, PhysConstants, gaussian_state,
                             harmonic_ground_state, observables)
from squeezelab.checks import frame_sweep
from squeezelab.dynamics import (DispersionLaw, integrate, kinematic_record,
                                 synthesize_potential, feedback_diagnostic,
                                 trajectory_rhs)
from squeezelab.operators import (SqueezeParams, commutator_identity_residual,
                                  l2_difference, squeeze_closed_form,
                                  squeeze_matrix_oracle, squeezed_state)
from squeezelab.potentials import HarmonicPotential, free_potential, quench_potential
from squeezelab.profiles import (TrajectoryState, assemble_state,
                                 gaussian_profile, sech2_profile)
from squeezelab.propagator import PropagatorConfig, compare_with_model, propagate
from squeezelab.sampler import EnsembleConfig, ensemble_summary, sample_forward
from squeezelab import reference
from squeezelab.scenarios import run_scenario
from squeezelab.cli import build_config

C = PhysConstants()
GP = gaussian_profile(C)
DQ0 = 2.0 ** -0.5
DT_ODE = 1e-3
DT_PDE = 2.5e-4


def _verdict(tag, ok, detail):
    print(f"[{tag}] {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{tag}: {detail}"


# ---------------------------------------------------------- shared fixtures

@pytest.fixture(scope="module")
def harmonic_run():
    grid = Grid1D(-20.0, 20.0, 512)
    pot = HarmonicPotential(1.0, C)
    init = TrajectoryState(q_mean=1.0, v_mean=0.0, dq=DQ0, dq_dot=0.0)
    t_final = round(20 * np.pi / DT_ODE) * DT_ODE  # 10 periods
    t0 = time.perf_counter()
    rec = integrate(init, GP, pot, t_span=(0.0, t_final), dt=DT_ODE)
    wf0 = assemble_state(GP, init, grid, C)
    frames = propagate(wf0, PropagatorConfig(potential=pot, dt=DT_PDE,
                                             output_stride=800),
                       (0.0, t_final))
    rep = compare_with_model(frames, GP, rec)
    elapsed = time.perf_counter() - t0
    return dict(grid=grid, pot=pot, init=init, rec=rec, rep=rep,
                elapsed=elapsed)


@pytest.fixture(scope="module")
def quench_run():
    grid = Grid1D(-20.0, 20.0, 512)
    pot = quench_potential(1.0, 2.0)
    init = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=DQ0, dq_dot=0.0)
    t_final = round(2 * np.pi / DT_ODE) * DT_ODE  # 4 quench periods (pi/2 each)
    t0 = time.perf_counter()
    rec = integrate(init, GP, pot, t_span=(0.0, t_final), dt=DT_ODE)
    frames = propagate(harmonic_ground_state(grid, C),
                       PropagatorConfig(potential=pot, dt=DT_PDE,
                                        output_stride=400), (0.0, t_final))
    rep = compare_with_model(frames, GP, rec)
    elapsed = time.perf_counter() - t0
    return dict(grid=grid, pot=pot, init=init, rec=rec, rep=rep,
                frames=frames, elapsed=elapsed)


@pytest.fixture(scope="module")
def free_run():
    init = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=DQ0, dq_dot=0.0)
    rec = integrate(init, GP, free_potential(), t_span=(0.0, 5.0), dt=DT_ODE)
    return dict(init=init, rec=rec)


@pytest.fixture(scope="module")
def feedback_run():
    profile = sech2_profile(C)
    grid = Grid1D(-36.0, 36.0, 2048)
    t_final = round(2 * np.pi / DT_ODE) * DT_ODE  # one traversal period
    t0 = time.perf_counter()
    rec = kinematic_record(
        profile,
        center=lambda t: np.sin(t),
        center_rate=lambda t: np.cos(t),
        center_accel=lambda t: -np.sin(t),
        dispersion=lambda t: 1.0, dispersion_rate=lambda t: 0.0,
        dispersion_accel=lambda t: 0.0,
        t_span=(0.0, t_final), dt=DT_ODE, constants=C)
    pot = synthesize_potential(profile, rec)
    wf0 = assemble_state(profile, rec.state_at(0.0), grid, C)
    frames = propagate(wf0, PropagatorConfig(potential=pot, dt=DT_PDE,
                                             output_stride=800),
                       (0.0, t_final))
    rep = compare_with_model(frames, profile, rec)
    elapsed = time.perf_counter() - t0
    return dict(profile=profile, grid=grid, rec=rec, pot=pot, rep=rep,
                elapsed=elapsed)


@pytest.fixture(scope="module")
def sampler_run():
    pot = HarmonicPotential(1.0, C)
    init = TrajectoryState(q_mean=1.0, v_mean=0.0, dq=DQ0, dq_dot=0.0)
    t_final = round(2 * np.pi / DT_ODE) * DT_ODE  # one period
    rec = integrate(init, GP, pot, t_span=(0.0, t_final), dt=DT_ODE)
    cfg = EnsembleConfig(n_paths=100000, dt=DT_ODE, seed=20240101,
                         t_span=(0.0, t_final), output_stride=50)
    t0 = time.perf_counter()
    ens = sample_forward(GP, rec, cfg)
    elapsed = time.perf_counter() - t0
    return dict(rec=rec, cfg=cfg, ens=ens, elapsed=elapsed)


# -------------------------------------------------------------- criteria

def test_accept_01_harmonic_coherence(harmonic_run):
    rec, rep = harmonic_run["rec"], harmonic_run["rep"]
    q_ref = reference.harmonic_center(rec.t, 1.0, 0.0, 1.0)
    ode_q = np.max(np.abs(rec.q_mean - q_ref))
    ode_dq = np.max(np.abs(rec.dq - DQ0))
    pde_q = np.max(np.abs(rep.q_mean_pde
                          - reference.harmonic_center(rep.t, 1.0, 0.0, 1.0)))
    pde_dq = np.max(np.abs(rep.dq_pde - DQ0))
    elapsed = harmonic_run["elapsed"]
    ok = (ode_q <= 1e-8 and ode_dq <= 1e-8 and pde_q <= 1e-6
          and pde_dq <= 1e-6 and elapsed < 10.0)
    _verdict("ACCEPT-01 harmonic-coherence", ok,
             f"ODE |q-cos t|={ode_q:.2e}<=1e-8, |dq-dq0|={ode_dq:.2e}<=1e-8; "
             f"PDE {pde_q:.2e}<=1e-6, {pde_dq:.2e}<=1e-6; "
             f"runtime {elapsed:.1f}s<10s")


def test_accept_02_ermakov_fixed_point():
    fp = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=np.sqrt(0.5), dq_dot=0.0)
    d = trajectory_rhs(fp, GP, HarmonicPotential(1.0, C),
                       DispersionLaw.PROJECTED)
    resid = float(np.max(np.abs(d[:4])))
    s0_ok = abs(d[4] + 0.5 * C.hbar) <= 1e-12
    _verdict("ACCEPT-02 ermakov-fixed-point", resid <= 1e-12 and s0_ok,
             f"|rhs|={resid:.2e}<=1e-12 at dq^2=hbar/2m omega, "
             f"S0'={d[4]:.12f}=-hbar omega/2")


def test_accept_03_quench_squeezing(quench_run):
    rec, rep = quench_run["rec"], quench_run["rep"]
    ode = np.max(np.abs(rec.dq ** 2
                        - reference.quench_dispersion_sq(rec.t, 1.0, 2.0)))
    pde = np.max(np.abs(rep.dq_pde ** 2
                        - reference.quench_dispersion_sq(rep.t, 1.0, 2.0)))
    elapsed = quench_run["elapsed"]
    ok = ode <= 1e-6 and pde <= 1e-5 and elapsed < 60.0
    _verdict("ACCEPT-03 quench-squeezing", ok,
             f"ODE |dq^2-closed|={ode:.2e}<=1e-6, PDE {pde:.2e}<=1e-5 "
             f"over 4 periods; runtime {elapsed:.1f}s<60s")


def test_accept_04_free_spreading(free_run):
    rec = free_run["rec"]
    expect = DQ0 ** 2 + (C.hbar * rec.t / (2.0 * C.mass * DQ0)) ** 2
    err = np.max(np.abs(rec.dq ** 2 - expect))
    _verdict("ACCEPT-04 free-spreading", err <= 1e-8,
             f"|dq^2 - closed form|={err:.2e}<=1e-8 over [0,5]")


def test_accept_05_operator_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for f in np.linspace(-1.0, 1.0, 11):
        dq = DQ0 * np.exp(-2.0 * f)
        half = 12.0 * max(dq, DQ0)
        grid = Grid1D(-half, half, 512)
        psi0 = gaussian_state(grid, C, dq=DQ0)
        params = SqueezeParams.from_dispersion(DQ0, dq, 0.0, C)
        closed, _ = squeeze_closed_form(psi0, params)
        oracle = squeeze_matrix_oracle(params, grid, C)
        worst = max(worst, l2_difference(oracle.apply(psi0), closed))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and elapsed < 120.0
    _verdict("ACCEPT-05 operator-equivalence", ok,
             f"max L2 discrepancy {worst:.2e}<=1e-5 over 11 values |f|<=1 "
             f"at n=512; runtime {elapsed:.1f}s<120s")


def test_accept_06_commutator_identity():
    grid = Grid1D(-20.0, 20.0, 512)
    resid = commutator_identity_residual(grid, C)
    _verdict("ACCEPT-06 commutator-identity", resid <= 1e-6,
             f"relative residual {resid:.2e}<=1e-6 on interior rows, n=512")


def test_accept_07_composition():
    grid = Grid1D(-20.0, 20.0, 512)
    psi0 = harmonic_ground_state(grid, C)
    coh = TrajectoryState(q_mean=1.0, v_mean=0.5, dq=DQ0, dq_dot=0.0, S0=0.1)
    _, rep_coh = squeezed_state(psi0, coh, GP)
    full = TrajectoryState(q_mean=0.6, v_mean=0.2, dq=1.1, dq_dot=0.25)
    state, rep_full = squeezed_state(psi0, full, GP)
    model = assemble_state(GP, full, grid, C)
    dens = float(np.max(np.abs(np.abs(state.psi) ** 2
                               - np.abs(model.psi) ** 2)))
    ok = rep_coh["overlap"] >= 1.0 - 1e-9 and dens <= 1e-6
    _verdict("ACCEPT-07 composition", ok,
             f"f=0 overlap {rep_coh['overlap']:.12f}>=1-1e-9; full-route "
             f"density diff {dens:.2e}<=1e-6; phase-coefficient ratio "
             f"{rep_full['phase_coeff_ratio']:.6f} logged "
             f"(2/dq^2={2.0 / full.dq ** 2:.6f}, no pass/fail)")


def test_accept_08_uncertainty_chain(harmonic_run, quench_run, free_run,
                                     feedback_run, sampler_run):
    worst_upper, worst_lower, worst_sat = np.inf, np.inf, 0.0
    scenarios = [
        ("harmonic", GP, harmonic_run["rec"], harmonic_run["grid"], True),
        ("quench", GP, quench_run["rec"], quench_run["grid"], True),
        ("free", GP, free_run["rec"], Grid1D(-48.0, 48.0, 1024), True),
        ("feedback", feedback_run["profile"], feedback_run["rec"],
         feedback_run["grid"], False),
        ("sample", GP, sampler_run["rec"], harmonic_run["grid"], True),
    ]
    for _name, profile, rec, grid, is_gaussian in scenarios:
        sweep = frame_sweep(profile, rec, grid, n_frames=15)
        worst_upper = min(worst_upper, sweep["chain_upper_margin"])
        worst_lower = min(worst_lower, sweep["chain_lower_margin"])
        if is_gaussian:
            worst_sat = max(worst_sat, sweep["saturation_defect"])
    ok = worst_upper >= -1e-8 and worst_lower >= -1e-8 and worst_sat <= 1e-8
    _verdict("ACCEPT-08 uncertainty-chain", ok,
             f"min margins {worst_upper:.2e}/{worst_lower:.2e}>=-1e-8 on all "
             f"scenario frames; Gaussian |m dq du - hbar/2|={worst_sat:.2e}"
             f"<=1e-8")


def test_accept_09_squeezing_identity(quench_run):
    rec, grid = quench_run["rec"], quench_run["grid"]
    worst = 0.0
    for t in np.linspace(rec.t[0], rec.t[-1], 25):
        traj = rec.state_at(float(t))
        obs = observables(assemble_state(GP, traj, grid, C))
        lhs = (obs.dq * obs.dp) ** 2
        rhs = C.mass ** 2 * GP.osmotic_moment \
            + (C.mass * traj.dq * traj.dq_dot) ** 2
        worst = max(worst, abs(lhs - rhs) / rhs)
    _verdict("ACCEPT-09 squeezing-identity", worst <= 1e-6,
             f"max rel defect of (dq dp)^2 = m^2 K + L^2 along the quench: "
             f"{worst:.2e}<=1e-6")


def test_accept_10_sampler_statistics(sampler_run):
    ens, rec, cfg = sampler_run["ens"], sampler_run["rec"], sampler_run["cfg"]
    summ = ensemble_summary(ens, rec)
    n = cfg.n_paths
    mean_dev = np.max(np.abs(summ["empirical_mean"] - summ["model_mean"])
                      / (4.0 * summ["model_std"] / np.sqrt(n)))
    std_dev = np.max(np.abs(summ["empirical_std"] - summ["model_std"])
                     / (4.0 * summ["model_std"] / np.sqrt(2.0 * n)))
    from squeezelab.scenarios import _chi2_density_pvalue
    p = _chi2_density_pvalue(ens, rec, GP)
    elapsed = sampler_run["elapsed"]
    ok = mean_dev <= 1.0 and std_dev <= 1.0 and p > 1e-3 and elapsed < 120.0
    _verdict("ACCEPT-10 sampler-statistics", ok,
             f"n=1e5: mean/std within 4-sigma bands (worst {mean_dev:.2f}/"
             f"{std_dev:.2f} of band), chi2 p={p:.3f}>0.001; "
             f"runtime {elapsed:.1f}s<120s")


def test_accept_11_feedback_synthesis(feedback_run):
    rep, rec, pot = feedback_run["rep"], feedback_run["rec"], feedback_run["pot"]
    profile = feedback_run["profile"]
    overlap_min = rep.min_overlap
    resid = max(abs(feedback_diagnostic(profile, rec.state_at(t), pot, t,
                                        constants=C))
                for t in np.linspace(0.2, rec.t[-1] - 0.2, 9))
    ok = overlap_min >= 1.0 - 1e-4 and resid <= 1e-6
    _verdict("ACCEPT-11 feedback-synthesis", ok,
             f"PDE overlap in synthesized potential >= {overlap_min:.8f} "
             f"(>=1-1e-4) over one traversal; feedback residual "
             f"{resid:.2e}<=1e-6; runtime {feedback_run['elapsed']:.1f}s")


def test_accept_12_energy_balance_divergence_reported(tmp_path):
    cfg = build_config(None, "quench-squeeze")
    cfg["grid"]["n_points"] = 512
    cfg["integrator"]["t_final"] = round(np.pi / DT_ODE) * DT_ODE
    out = tmp_path / "quench"
    out.mkdir()
    checks = run_scenario("quench-squeeze", cfg, out)
    entry = {ch.name: ch for ch in checks}["energy-balance-mode-divergence"]
    ok = (entry.status == "reported" and entry.value is not None
          and np.isfinite(entry.value) and entry.value > 0.0)
    _verdict("ACCEPT-12 energy-balance-divergence", ok,
             f"reported (never asserted): overlap decayed by "
             f"{entry.value:.4f}; {entry.detail}")
