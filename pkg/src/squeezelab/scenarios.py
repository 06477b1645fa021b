"""End-to-end scenario implementations behind the command-line runner.

Each scenario builds its profile and potential, runs the relevant engines
(trajectory integrator, PDE oracle, path sampler, operator algebra), writes
the machine-readable artifacts and returns the invariant check list.  Checks
carry a status: pass/fail for hard invariants, "reported" for measured
quantities that are documented rather than asserted (the energy-balance
divergence, the operator-route phase-coefficient ratio), and "skipped" with a
reason when a check does not apply to the configuration.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import chisquare

from .grid import (Grid1D, PhysConstants, gaussian_state, harmonic_ground_state,
                   observables, overlap)
from .profiles import (StateProfile, TrajectoryState, assemble_state,
                       profile_by_name)
from .potentials import (HarmonicPotential, PolynomialPotential, free_potential,
                         quench_potential, validate_gradient)
from .dynamics import (DispersionLaw, TrajectoryRecord, integrate,
                       kinematic_record, synthesize_potential,
                       feedback_diagnostic, ehrenfest_defect)
from .propagator import (Frames, PropagatorConfig, compare_with_model,
                         propagate)
from .operators import (SqueezeParams, commutator_identity_residual,
                        dilation_generator, displace, l2_difference,
                        squeeze_closed_form, squeeze_matrix_oracle,
                        squeezed_state)
from .sampler import (EnsembleConfig, backward_consistency, ensemble_summary,
                      osmotic_uncertainty, sample_forward, summary_to_csv)
from .checks import frame_sweep, hjm_center_residual
from . import reference

__all__ = ["Check", "SCENARIOS", "run_scenario"]


@dataclass
class Check:
    name: str
    status: str          # pass | fail | skipped | reported
    value: float | None = None
    tolerance: float | None = None
    detail: str = ""


def _check(name, value, tol, *, larger_is_bad=True, detail="") -> Check:
    ok = value <= tol if larger_is_bad else value >= tol
    return Check(name=name, status="pass" if ok else "fail",
                 value=float(value), tolerance=float(tol), detail=detail)


def _ground_dq(constants: PhysConstants, omega: float) -> float:
    return float(np.sqrt(constants.hbar / (2.0 * constants.mass * omega)))


def _aligned_pde_dt(dt_ode: float, dt_pde_requested: float) -> float:
    k = max(1, round(dt_ode / dt_pde_requested))
    return dt_ode / k


def _quantized(t_final: float, dt: float) -> float:
    return max(1, round(t_final / dt)) * dt


def _initial_state(cfg, constants, default_dq) -> TrajectoryState:
    ini = cfg["initial"]
    dq = ini["dq"]
    dq = default_dq if dq == "auto" else float(dq)
    return TrajectoryState(q_mean=ini["q_mean"], v_mean=ini["v_mean"], dq=dq,
                           dq_dot=ini["dq_dot"], S0=0.0, t=0.0)


def _chi2_density_pvalue(ens, record, profile, n_bins: int = 50,
                         frame: int = -1) -> float:
    t = float(ens.times[frame])
    q, dq = (float(a) for a in record.channels_at(t, ("q_mean", "dq")))
    xi = (ens.positions[ens.alive, frame] - q) / dq
    edges = np.linspace(-3.5, 3.5, n_bins + 1)
    counts, _ = np.histogram(xi, np.concatenate([[-np.inf], edges, [np.inf]]))
    cdf = np.interp(edges, profile.xi, profile._cdf)
    probs = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    expected = probs * xi.size
    expected *= counts.sum() / expected.sum()
    _, p = chisquare(counts, expected)
    return float(p)


# ---------------------------------------------------------------- scenarios

def _run_harmonic(cfg, out):
    c = PhysConstants(cfg["constants"]["hbar"], cfg["constants"]["mass"])
    grid = Grid1D(cfg["grid"]["x_min"], cfg["grid"]["x_max"], cfg["grid"]["n_points"])
    profile = profile_by_name(cfg["profile"]["name"], c)
    omega = cfg["potential"]["omega"]
    pot = HarmonicPotential(omega, c)
    dt = cfg["integrator"]["dt"]
    t_final = cfg["integrator"]["t_final"]
    t_final = _quantized(10 * 2 * np.pi / omega if t_final == "auto" else t_final, dt)
    init = _initial_state(cfg, c, _ground_dq(c, omega))
    law = DispersionLaw(cfg["integrator"]["dispersion_law"])

    rec = integrate(init, profile, pot, law, t_span=(0.0, t_final), dt=dt,
                    record_stride=cfg["integrator"]["record_stride"], constants=c)
    rec.to_csv(out / "trajectory.csv")
    checks = []

    q_ref = reference.harmonic_center(rec.t, init.q_mean, init.v_mean, omega)
    checks.append(_check("ode-center-classical-motion",
                         np.max(np.abs(rec.q_mean - q_ref)), 1e-8))
    dq_ref = np.sqrt(reference.harmonic_dispersion_sq(
        rec.t, init.dq, init.dq_dot, profile.osmotic_moment, omega))
    checks.append(_check("ode-dispersion-closed-form",
                         np.max(np.abs(rec.dq - dq_ref)), 1e-8))
    checks.append(_check("ehrenfest-consistency", ehrenfest_defect(rec), 1e-8))
    checks.append(_check("feedback-relation-residual",
                         np.max(np.abs(rec.feedback_residual)), 1e-10))

    sweep = frame_sweep(profile, rec, grid)
    checks.append(_check("chain-upper-link", sweep["chain_upper_margin"], -1e-8,
                         larger_is_bad=False))
    checks.append(_check("chain-osmotic-bound", sweep["chain_lower_margin"], -1e-8,
                         larger_is_bad=False))
    if profile.name == "gaussian":
        checks.append(_check("osmotic-saturation", sweep["saturation_defect"], 1e-8))
    else:
        checks.append(Check("osmotic-saturation", "skipped",
                            detail="only the gaussian profile saturates"))
    checks.append(_check("squeezing-identity", sweep["identity_rel_err"], 1e-6))
    checks.append(_check("anticommutator-identity", sweep["anticom_defect"], 1e-6))
    checks.append(_check("osmotic-mean-zero", sweep["u_mean_max"], 1e-9))
    checks.append(_check("phase-closure-hjm-center",
                         max(hjm_center_residual(profile, rec, pot, grid, t)
                             for t in np.linspace(0.1, t_final - 0.1, 5)), 1e-6))

    if cfg["pde"]["enabled"]:
        dt_pde = _aligned_pde_dt(dt, cfg["pde"]["dt"])
        wf0 = assemble_state(profile, init, grid, c)
        frames = propagate(wf0, PropagatorConfig(potential=pot, dt=dt_pde,
                                                 output_stride=cfg["pde"]["output_stride"]),
                           (0.0, t_final))
        rep = compare_with_model(frames, profile, rec)
        rep.to_csv(out / "fidelity.csv")
        checks.append(_check("pde-model-overlap", 1.0 - rep.min_overlap, 1e-8))
        q_ref_f = reference.harmonic_center(rep.t, init.q_mean, init.v_mean, omega)
        checks.append(_check("pde-center-classical-motion",
                             np.max(np.abs(rep.q_mean_pde - q_ref_f)), 1e-6))
        dq_ref_f = np.sqrt(reference.harmonic_dispersion_sq(
            rep.t, init.dq, init.dq_dot, profile.osmotic_moment, omega))
        checks.append(_check("pde-dispersion-closed-form",
                             np.max(np.abs(rep.dq_pde - dq_ref_f)), 1e-6))
    else:
        checks.append(Check("pde-model-overlap", "skipped", detail="pde disabled"))
    return checks


def _run_quench(cfg, out):
    c = PhysConstants(cfg["constants"]["hbar"], cfg["constants"]["mass"])
    grid = Grid1D(cfg["grid"]["x_min"], cfg["grid"]["x_max"], cfg["grid"]["n_points"])
    profile = profile_by_name(cfg["profile"]["name"], c)
    w0 = cfg["potential"]["omega"]
    w1 = cfg["potential"]["omega_after"]
    pot = quench_potential(w0, w1, cfg["potential"]["switch_time"], c)
    dt = cfg["integrator"]["dt"]
    t_final = cfg["integrator"]["t_final"]
    t_final = _quantized(4 * np.pi / w1 if t_final == "auto" else t_final, dt)
    init = _initial_state(cfg, c, _ground_dq(c, w0))

    rec = integrate(init, profile, pot, DispersionLaw.PROJECTED,
                    t_span=(0.0, t_final), dt=dt,
                    record_stride=cfg["integrator"]["record_stride"], constants=c)
    rec.to_csv(out / "trajectory.csv")
    checks = []

    dq2_ref = reference.harmonic_dispersion_sq(rec.t, init.dq, init.dq_dot,
                                               profile.osmotic_moment, w1)
    checks.append(_check("ode-dispersion-closed-form",
                         np.max(np.abs(rec.dq ** 2 - dq2_ref)), 1e-6))
    checks.append(_check("ehrenfest-consistency", ehrenfest_defect(rec), 1e-8))
    sweep = frame_sweep(profile, rec, grid)
    checks.append(_check("chain-upper-link", sweep["chain_upper_margin"], -1e-8,
                         larger_is_bad=False))
    checks.append(_check("chain-osmotic-bound", sweep["chain_lower_margin"], -1e-8,
                         larger_is_bad=False))
    checks.append(_check("squeezing-identity", sweep["identity_rel_err"], 1e-6))
    checks.append(_check("anticommutator-identity", sweep["anticom_defect"], 1e-6))
    checks.append(_check("phase-closure-hjm-center",
                         max(hjm_center_residual(profile, rec, pot, grid, t)
                             for t in np.linspace(0.1, t_final - 0.1, 5)), 1e-6))

    dt_pde = _aligned_pde_dt(dt, cfg["pde"]["dt"])
    frames = None
    if cfg["pde"]["enabled"]:
        wf0 = assemble_state(profile, init, grid, c)
        frames = propagate(wf0, PropagatorConfig(potential=pot, dt=dt_pde,
                                                 output_stride=cfg["pde"]["output_stride"]),
                           (0.0, t_final))
        rep = compare_with_model(frames, profile, rec)
        rep.to_csv(out / "fidelity.csv")
        checks.append(_check("pde-model-overlap", 1.0 - rep.min_overlap, 1e-5))
        dq2_ref_f = reference.harmonic_dispersion_sq(rep.t, init.dq, init.dq_dot,
                                                     profile.osmotic_moment, w1)
        checks.append(_check("pde-dispersion-closed-form",
                             np.max(np.abs(rep.dq_pde ** 2 - dq2_ref_f)), 1e-5))
    else:
        checks.append(Check("pde-model-overlap", "skipped", detail="pde disabled"))

    # the literal mean-balance dispersion law: measured divergence, never asserted
    rec_eb = integrate(init, profile, pot, DispersionLaw.ENERGY_BALANCE,
                       t_span=(0.0, t_final), dt=dt,
                       record_stride=cfg["integrator"]["record_stride"],
                       constants=c, truncate_on_singularity=True)
    detail = (f"ran to t={rec_eb.t[-1]:.4f} of {t_final:.4f}"
              + ("" if rec_eb.complete else f"; halted: {rec_eb.halt_reason}"))
    if frames is not None and len(rec_eb.t) > 2:
        in_span = frames.times <= rec_eb.t[-1]
        rep_eb = compare_with_model(_frames_subset(frames, in_span), profile,
                                    rec_eb)
        value = 1.0 - rep_eb.min_overlap
        detail += f"; overlap decayed to {rep_eb.min_overlap:.6f}"
    else:
        value = float("nan")
    checks.append(Check("energy-balance-mode-divergence", "reported",
                        value=value, detail=detail))
    return checks


def _frames_subset(frames: Frames, mask) -> Frames:
    return Frames(grid=frames.grid, constants=frames.constants,
                  times=frames.times[mask], psis=frames.psis[mask],
                  norm_drift=frames.norm_drift)


def _run_free(cfg, out):
    c = PhysConstants(cfg["constants"]["hbar"], cfg["constants"]["mass"])
    grid = Grid1D(cfg["grid"]["x_min"], cfg["grid"]["x_max"], cfg["grid"]["n_points"])
    profile = profile_by_name(cfg["profile"]["name"], c)
    pot = free_potential()
    dt = cfg["integrator"]["dt"]
    t_final = cfg["integrator"]["t_final"]
    t_final = _quantized(5.0 if t_final == "auto" else t_final, dt)
    init = _initial_state(cfg, c, _ground_dq(c, 1.0))

    rec = integrate(init, profile, pot, DispersionLaw(cfg["integrator"]["dispersion_law"]),
                    t_span=(0.0, t_final), dt=dt,
                    record_stride=cfg["integrator"]["record_stride"], constants=c)
    rec.to_csv(out / "trajectory.csv")
    checks = []
    dq2_ref = reference.free_dispersion_sq(rec.t, init.dq, init.dq_dot,
                                           profile.osmotic_moment)
    checks.append(_check("ode-dispersion-closed-form",
                         np.max(np.abs(rec.dq ** 2 - dq2_ref)), 1e-8))
    q_ref = init.q_mean + init.v_mean * rec.t
    checks.append(_check("ode-center-classical-motion",
                         np.max(np.abs(rec.q_mean - q_ref)), 1e-10))
    checks.append(_check("ehrenfest-consistency", ehrenfest_defect(rec), 1e-8))
    sweep = frame_sweep(profile, rec, grid)
    checks.append(_check("chain-upper-link", sweep["chain_upper_margin"], -1e-8,
                         larger_is_bad=False))
    checks.append(_check("chain-osmotic-bound", sweep["chain_lower_margin"], -1e-8,
                         larger_is_bad=False))
    checks.append(_check("squeezing-identity", sweep["identity_rel_err"], 1e-6))
    checks.append(_check("phase-closure-hjm-center",
                         max(hjm_center_residual(profile, rec, pot, grid, t)
                             for t in np.linspace(0.1, t_final - 0.1, 5)), 1e-6))
    if cfg["pde"]["enabled"]:
        dt_pde = _aligned_pde_dt(dt, cfg["pde"]["dt"])
        wf0 = assemble_state(profile, init, grid, c)
        frames = propagate(wf0, PropagatorConfig(potential=pot, dt=dt_pde,
                                                 output_stride=cfg["pde"]["output_stride"]),
                           (0.0, t_final))
        rep = compare_with_model(frames, profile, rec)
        rep.to_csv(out / "fidelity.csv")
        checks.append(_check("pde-model-overlap", 1.0 - rep.min_overlap, 1e-6))
    else:
        checks.append(Check("pde-model-overlap", "skipped", detail="pde disabled"))
    return checks


def _run_feedback(cfg, out):
    c = PhysConstants(cfg["constants"]["hbar"], cfg["constants"]["mass"])
    grid = Grid1D(cfg["grid"]["x_min"], cfg["grid"]["x_max"], cfg["grid"]["n_points"])
    profile = profile_by_name(cfg["profile"]["name"], c)
    amp = cfg["feedback"]["amplitude"]
    rate = cfg["feedback"]["angular_rate"]
    dq = cfg["feedback"]["dispersion"]
    dt = cfg["integrator"]["dt"]
    t_final = cfg["integrator"]["t_final"]
    t_final = _quantized(2 * np.pi / rate if t_final == "auto" else t_final, dt)

    rec = kinematic_record(
        profile,
        center=lambda t: amp * np.sin(rate * t),
        center_rate=lambda t: amp * rate * np.cos(rate * t),
        center_accel=lambda t: -amp * rate ** 2 * np.sin(rate * t),
        dispersion=lambda t: dq, dispersion_rate=lambda t: 0.0,
        dispersion_accel=lambda t: 0.0,
        t_span=(0.0, t_final), dt=dt, constants=c)
    rec.to_csv(out / "trajectory.csv")
    pot = synthesize_potential(profile, rec)
    validate_gradient(pot, np.linspace(-3 * dq + 0.1, 3 * dq - 0.1, 41),
                      [0.3 * t_final, 0.8 * t_final])
    checks = []

    times = np.linspace(0.05 * t_final, 0.95 * t_final, 7)
    checks.append(_check("feedback-relation-residual",
                         max(abs(feedback_diagnostic(profile, rec.state_at(t), pot, t,
                                                     constants=c))
                             for t in times), 1e-6))
    checks.append(_check("hjm-residual-synthesized",
                         max(hjm_center_residual(profile, rec, pot, grid, t)
                             for t in times), 1e-5))

    dt_pde = _aligned_pde_dt(dt, cfg["pde"]["dt"])
    wf0 = assemble_state(profile, rec.state_at(0.0), grid, c)
    frames = propagate(wf0, PropagatorConfig(potential=pot, dt=dt_pde,
                                             output_stride=cfg["pde"]["output_stride"]),
                       (0.0, t_final))
    rep = compare_with_model(frames, profile, rec)
    rep.to_csv(out / "fidelity.csv")
    checks.append(_check("pde-model-overlap", 1.0 - rep.min_overlap, 1e-4))
    sweep = frame_sweep(profile, rec, grid, n_frames=9)
    checks.append(_check("chain-upper-link", sweep["chain_upper_margin"], -1e-8,
                         larger_is_bad=False))
    checks.append(_check("chain-osmotic-bound", sweep["chain_lower_margin"], -1e-8,
                         larger_is_bad=False))
    checks.append(_check("squeezing-identity", sweep["identity_rel_err"], 1e-6))
    return checks


def _run_sample(cfg, out):
    c = PhysConstants(cfg["constants"]["hbar"], cfg["constants"]["mass"])
    profile = profile_by_name(cfg["profile"]["name"], c)
    omega = cfg["potential"]["omega"]
    pot = HarmonicPotential(omega, c)
    dt = cfg["sampler"]["dt"]
    t_final = _quantized(cfg["sampler"]["t_final"], dt)
    init = _initial_state(cfg, c, _ground_dq(c, omega))
    rec = integrate(init, profile, pot, t_span=(0.0, t_final), dt=dt,
                    record_stride=cfg["integrator"]["record_stride"], constants=c)
    rec.to_csv(out / "trajectory.csv")

    ens_cfg = EnsembleConfig(n_paths=cfg["sampler"]["n_paths"], dt=dt,
                             seed=cfg["run"]["seed"], t_span=(0.0, t_final),
                             output_stride=cfg["sampler"]["output_stride"])
    ens = sample_forward(profile, rec, ens_cfg)
    summ = ensemble_summary(ens, rec)
    summary_to_csv(out / "ensemble.csv", summ)
    checks = []
    n = ens_cfg.n_paths
    mean_band = 4.0 * summ["model_std"] / np.sqrt(n)
    checks.append(_check("ensemble-mean-tracks-center",
                         np.max(np.abs(summ["empirical_mean"] - summ["model_mean"])
                                / mean_band), 1.0,
                         detail="worst deviation in units of the 4-sigma band"))
    std_band = 4.0 * summ["model_std"] / np.sqrt(2.0 * n)
    checks.append(_check("ensemble-std-tracks-dispersion",
                         np.max(np.abs(summ["empirical_std"] - summ["model_std"])
                                / std_band), 1.0,
                         detail="worst deviation in units of the 4-sigma band"))
    checks.append(_check("density-chi2-pvalue",
                         _chi2_density_pvalue(ens, rec, profile), 1e-3,
                         larger_is_bad=False))
    diff = ens.diffusion_estimate()
    target = c.hbar / c.mass
    checks.append(_check("wiener-coefficient", abs(diff - target) / target, 0.02,
                         detail=f"quadratic variation per unit time {diff:.6f}"))
    bc = backward_consistency(ens, profile, rec)
    checks.append(_check("backward-drift-consistency", bc["max_band_units"], 5.0))
    osm = osmotic_uncertainty(profile, init.dq, ens, record=rec)
    osm_band = 5.0 * osm["exact"] / np.sqrt(2.0 * n)
    checks.append(_check("osmotic-uncertainty-empirical",
                         abs(osm["empirical"] - osm["exact"]), osm_band,
                         detail=f"exact {osm['exact']:.6f}, "
                                f"empirical {osm['empirical']:.6f}"))
    checks.append(_check("osmotic-uncertainty-bound",
                         osm["exact"] - 0.5 * c.hbar, -1e-9, larger_is_bad=False))
    checks.append(_check("excluded-path-fraction", ens.excluded_fraction, 0.01))

    # determinism probe at a reduced size (full-size rerun would double cost)
    probe_cfg = EnsembleConfig(n_paths=2000, dt=dt, seed=cfg["run"]["seed"],
                               t_span=(0.0, min(0.2, t_final)), output_stride=20)
    a = sample_forward(profile, rec, probe_cfg)
    b = sample_forward(profile, rec, probe_cfg)
    identical = np.array_equal(a.positions, b.positions)
    checks.append(Check("seeded-determinism", "pass" if identical else "fail",
                        value=0.0 if identical else 1.0, tolerance=0.0,
                        detail="bit-identical positions for identical config"))
    return checks


def _run_operator(cfg, out):
    c = PhysConstants(cfg["constants"]["hbar"], cfg["constants"]["mass"])
    n = cfg["operator"]["n_points"]
    f_count = cfg["operator"]["f_count"]
    f_max = cfg["operator"]["f_max"]
    profile = profile_by_name(cfg["profile"]["name"], c)
    dq0 = _ground_dq(c, cfg["potential"]["omega"])
    checks = []
    report = {}

    # dilation route: closed form vs matrix exponential over the f sweep
    sweep_rows = []
    worst = 0.0
    for f in np.linspace(-f_max, f_max, f_count):
        dq = dq0 * np.exp(-2.0 * f)
        half = 12.0 * max(dq, dq0)
        grid = Grid1D(-half, half, n)
        psi0 = gaussian_state(grid, c, dq=dq0)
        params = SqueezeParams.from_dispersion(dq0, dq, 0.0, c)
        closed, prenorm = squeeze_closed_form(psi0, params)
        oracle = squeeze_matrix_oracle(params, grid, c)
        err = l2_difference(oracle.apply(psi0), closed)
        worst = max(worst, err)
        sweep_rows.append({"f": float(f), "dq": float(dq), "box_half": float(half),
                           "l2_error": float(err), "prenorm": float(prenorm),
                           "oracle_norm": float(oracle.applied_norm(psi0))})
    report["dilation_sweep"] = sweep_rows
    checks.append(_check("oracle-equivalence-sweep", worst, 1e-5,
                         detail=f"{f_count} values of |f| <= {f_max}, g = 0"))

    half = 12.0 * 2.357 * dq0  # same proportions as the default box for dq0
    grid = Grid1D(-half, half, n)
    psi0 = gaussian_state(grid, c, dq=dq0)

    r_comm = commutator_identity_residual(grid, c)
    report["commutator_residual"] = r_comm
    checks.append(_check("commutator-identity", r_comm, 1e-6))

    # dilation identity on an analytic fixture
    from scipy.linalg import expm
    f_test = 0.3
    N = dilation_generator(grid)
    U = expm(2.0 * f_test * N)
    W = np.exp(-grid.x ** 2 / 2.0) / np.pi ** 0.25
    rhs = np.exp(f_test) * np.exp(-(np.exp(2 * f_test) * grid.x) ** 2 / 2.0) / np.pi ** 0.25
    sl = slice(16, n - 16)
    dil_err = float(np.max(np.abs((U @ W) - rhs)[sl]))
    report["dilation_identity_error"] = dil_err
    checks.append(_check("dilation-identity", dil_err, 1e-6))

    # displacement: unitarity and Weyl composition
    d1 = displace(psi0, 1.0, 0.4)
    norm_err = abs(float(np.sum(np.abs(d1.psi) ** 2) * grid.dx) - 1.0)
    checks.append(_check("displace-unitarity", norm_err, 1e-10))
    d12 = displace(displace(psi0, 0.7, 0.3), 0.5, -0.9)
    d_once = displace(psi0, 1.2, -0.6)
    comp_err = float(np.max(np.abs(np.abs(d12.psi) - np.abs(d_once.psi))))
    report["composition_modulus_error"] = comp_err
    checks.append(_check("displace-composition", comp_err, 1e-9))

    # quadratic-phase-only squeeze leaves the modulus alone
    params_g = SqueezeParams.from_dispersion(dq0, dq0, 0.4, c)
    oracle_g = squeeze_matrix_oracle(params_g, grid, c)
    out_g = oracle_g.apply(psi0)
    mod_err = float(np.max(np.abs(np.abs(out_g.psi) - np.abs(psi0.psi))))
    report["phase_only_modulus_error"] = mod_err
    checks.append(_check("phase-only-squeeze-modulus", mod_err, 1e-8))
    checks.append(_check("oracle-unitarity", abs(oracle_g.applied_norm(psi0) - 1.0),
                         1e-8))

    # composed squeezed state vs the directly assembled model state
    traj_coh = TrajectoryState(q_mean=1.0, v_mean=0.5, dq=dq0, dq_dot=0.0, S0=0.2)
    _, rep_coh = squeezed_state(psi0, traj_coh, profile)
    checks.append(_check("squeezed-state-coherent-limit", 1.0 - rep_coh["overlap"],
                         1e-9))
    ratio = cfg["operator"]["dq_ratio"]
    traj_full = TrajectoryState(q_mean=0.6, v_mean=0.2, dq=ratio * dq0,
                                dq_dot=0.3, S0=0.0)
    _, rep_full = squeezed_state(psi0, traj_full, profile)
    report["squeezed_state_full"] = rep_full
    checks.append(_check("squeezed-state-density", rep_full["modulus_max_diff"],
                         1e-6))
    checks.append(Check("squeezed-state-phase-ratio", "reported",
                        value=rep_full["phase_coeff_ratio"],
                        detail=f"operator-route / model quadratic-phase "
                               f"coefficient; 2/dq^2 = {2.0 / traj_full.dq ** 2:.6f}"))
    checks.append(Check("closed-form-norm", "reported",
                        value=rep_full["prenorm"],
                        detail="norm carried by the printed amplitude factor "
                               "exp(f); 1 means the rescale is unitary"))

    with open(out / "operator_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return checks


SCENARIOS = {
    "harmonic-coherent": _run_harmonic,
    "quench-squeeze": _run_quench,
    "free-spread": _run_free,
    "feedback": _run_feedback,
    "sample": _run_sample,
    "operator-check": _run_operator,
}


def run_scenario(name: str, cfg: dict, out_dir) -> list[Check]:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario '{name}'")
    return SCENARIOS[name](cfg, out_dir)


def write_invariants(path, scenario: str, checks: list[Check],
                     error: str | None = None) -> int:
    """Write invariants.json; returns the process exit status (0/1)."""
    statuses = [ch.status for ch in checks]
    summary = {s: statuses.count(s) for s in ("pass", "fail", "skipped", "reported")}
    payload = {
        "schema": "squeezelab-invariants v1",
        "scenario": scenario,
        "checks": [asdict(ch) for ch in checks],
        "summary": summary,
    }
    if error is not None:
        payload["error"] = error
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return 1 if (error is not None or summary["fail"] > 0) else 0
