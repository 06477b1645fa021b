"""Madelung decomposition, drifts and hydrodynamic residuals."""

import numpy as np
import pytest

from squeezelab.grid import (Grid1D, PhysConstants, derivative, gaussian_state,
                             harmonic_ground_state, wavefunction)
from squeezelab.hydro import (HydroFields, PhaseUnwrapError, chain_report,
                              continuity_residual, decompose,
                              drift_reconstruction_error, drifts, hjm_residual,
                              momentum_split_error, pin_phase, residual_norms,
                              velocity_moments)
from squeezelab.potentials import HarmonicPotential, free_potential
from squeezelab.propagator import PropagatorConfig, propagate
from squeezelab.reference import free_dispersion_sq, gouy_phase_free

C = PhysConstants()
GRID = Grid1D(-20.0, 20.0, 1024)


def _core(h, floor=1e-6):
    return h.rho > floor * np.max(h.rho)


def test_gaussian_at_rest():
    # dq = 1/sqrt(2): u = (hbar/2m) dln rho/dx = -x
    h = decompose(harmonic_ground_state(GRID, C))
    core = _core(h)
    assert np.max(np.abs(h.v[core])) < 1e-10
    assert np.max(np.abs(h.u[core] + GRID.x[core])) < 1e-8
    assert np.max(np.abs(h.du[core] + 1.0)) < 1e-8


def test_plane_wave_factor_moves_v_only():
    base = harmonic_ground_state(GRID, C)
    p0 = 1.7
    boosted = decompose(wavefunction(GRID, base.psi * np.exp(1j * p0 * GRID.x), C))
    rest = decompose(base)
    core = _core(rest)
    assert np.max(np.abs(boosted.v[core] - p0 / C.mass)) < 1e-8
    assert np.max(np.abs(boosted.u[core] - rest.u[core])) < 1e-8


def test_real_state_has_flat_phase():
    h = decompose(harmonic_ground_state(GRID, C))
    core = _core(h)
    assert np.max(np.abs(h.S[core])) < 1e-12
    assert np.max(np.abs(h.v[core])) < 1e-10


def test_drifts_gaussian():
    h = decompose(harmonic_ground_state(GRID, C))
    v_fwd, v_bwd = drifts(h)
    core = _core(h)
    # forward = u = -x, backward = -u = +x
    assert np.max(np.abs(v_fwd[core] + GRID.x[core])) < 1e-8
    assert np.max(np.abs(v_bwd[core] - GRID.x[core])) < 1e-8
    assert np.max(np.abs(0.5 * (v_fwd + v_bwd) - h.v)) < 1e-14


def test_drifts_zero_osmotic_fixture():
    n = GRID.n_points
    rho = np.ones(n) / (GRID.x_max - GRID.x_min)
    v = np.full(n, 0.8)
    h = HydroFields(grid=GRID, constants=C, rho=rho, S=C.mass * 0.8 * GRID.x,
                    u=np.zeros(n), v=v, du=np.zeros(n), j=rho * v,
                    valid=np.ones(n, bool), center_index=n // 2)
    v_fwd, v_bwd = drifts(h)
    assert np.array_equal(v_fwd, v_bwd)


def test_drift_reconstruction():
    h = decompose(gaussian_state(GRID, C, q_mean=0.7, p_mean=1.2, dq=0.6,
                                 anticom=0.2))
    assert drift_reconstruction_error(h) < 1e-8


def test_phase_aliasing_detected():
    # chirp whose local wavenumber crosses the Nyquist limit inside the
    # packet support: the unwrapped phase cannot stay consistent with the
    # spectral current velocity
    c_chirp = 1.4 * np.pi / GRID.dx / 4.0
    psi = np.exp(-GRID.x ** 2 / 2.0 + 1j * c_chirp * GRID.x ** 2)
    wf = wavefunction(GRID, psi, C)
    with pytest.raises(PhaseUnwrapError):
        decompose(wf)


def test_pin_phase():
    h = decompose(harmonic_ground_state(GRID, C))
    pinned = pin_phase(h, 3.5)
    assert pinned.S[pinned.center_index] == pytest.approx(3.5, abs=1e-14)


# -------------------------------------------------------------- continuity

def test_continuity_stationary_state():
    pot = HarmonicPotential(1.0, C)
    frames = propagate(harmonic_ground_state(GRID, C),
                       PropagatorConfig(potential=pot, dt=1e-3, output_stride=1),
                       (0.0, 2e-3))
    rho = [np.abs(frames.psis[i]) ** 2 for i in range(3)]
    rho_dot = (rho[2] - rho[0]) / (2e-3)
    h = decompose(frames.state(1))
    max_abs, _ = residual_norms(continuity_residual(h, rho_dot), h)
    assert max_abs < 1e-6


def test_continuity_translating_gaussian():
    # rho(x - c t), v = c: exact transport solution at one instant
    c_vel = 1.3
    wf = wavefunction(GRID, np.exp(-GRID.x ** 2 / 2.0)
                      * np.exp(1j * C.mass * c_vel * GRID.x / C.hbar), C)
    h = decompose(wf)
    rho_dot = -c_vel * derivative(GRID, h.rho, 1)
    max_abs, _ = residual_norms(continuity_residual(h, rho_dot), h)
    assert max_abs < 1e-6


def test_continuity_pde_coherent_frames():
    pot = HarmonicPotential(1.0, C)
    wf0 = gaussian_state(GRID, C, q_mean=1.0, dq=2.0 ** -0.5)
    dt = 2.5e-4
    frames = propagate(wf0, PropagatorConfig(potential=pot, dt=dt,
                                             output_stride=1), (0.0, 1.0))
    i = 2000
    rho_dot = (np.abs(frames.psis[i + 1]) ** 2
               - np.abs(frames.psis[i - 1]) ** 2) / (2 * dt)
    h = decompose(frames.state(i))
    max_abs, _ = residual_norms(continuity_residual(h, rho_dot), h)
    assert max_abs < 1e-5


# --------------------------------------------------------------------- HJM

def test_hjm_harmonic_ground_state():
    h = decompose(harmonic_ground_state(GRID, C))
    S_dot = np.full(GRID.n_points, -0.5 * C.hbar)  # -E0 = -hbar omega / 2
    res = hjm_residual(h, S_dot, HarmonicPotential(1.0, C), 0.0)
    assert np.max(np.abs(res[_core(h)])) < 1e-6


def test_hjm_free_spreading_packet():
    # analytic free packet at t = 1, S_dot by a tight centered difference
    dq0 = 2.0 ** -0.5
    t, delta = 1.0, 1e-6

    def frame(tau):
        dq2 = free_dispersion_sq(tau, dq0, 0.0, 0.25)
        dq = np.sqrt(dq2)
        dqd = 0.25 * tau / (dq0 ** 2 * dq)  # d/dt sqrt(dq0^2 + (t/2dq0)^2)
        s0 = gouy_phase_free(tau, dq0)
        amp = (2 * np.pi * dq2) ** -0.25 * np.exp(-GRID.x ** 2 / (4 * dq2))
        phase = (0.5 * C.mass * GRID.x ** 2 * dqd / dq + s0) / C.hbar
        return wavefunction(GRID, amp * np.exp(1j * phase), C), s0

    wf_m, s0_m = frame(t - delta)
    wf_p, s0_p = frame(t + delta)
    wf_0, _ = frame(t)
    h0 = decompose(wf_0)
    hm, hp = decompose(wf_m), decompose(wf_p)
    anchor = h0.center_index
    Sm = hm.S + (s0_m - hm.S[anchor])
    Sp = hp.S + (s0_p - hp.S[anchor])
    S_dot = (Sp - Sm) / (2 * delta)
    res = hjm_residual(h0, S_dot, free_potential(), t)
    assert np.max(np.abs(res[_core(h0)])) < 1e-5


# -------------------------------------------------------------- invariants

@pytest.mark.parametrize("kw", [
    dict(dq=2.0 ** -0.5),
    dict(dq=0.4, q_mean=1.0, p_mean=2.0),
    dict(dq=1.1, anticom=0.6),
])
def test_chain_inequality(kw):
    wf = gaussian_state(GRID, C, **kw)
    rep = chain_report(wf)
    assert rep["lhs"] >= rep["mid"] - 1e-8
    assert rep["mid"] >= rep["lower"] - 1e-8


def test_chain_saturation_gaussian():
    rep = chain_report(gaussian_state(GRID, C, dq=0.9))
    assert np.sqrt(rep["mid"]) == pytest.approx(0.5 * C.hbar, abs=1e-8)


@pytest.mark.parametrize("kw", [
    dict(dq=2.0 ** -0.5),
    dict(dq=0.5, p_mean=1.0, anticom=0.3),
])
def test_momentum_decomposition(kw):
    assert momentum_split_error(gaussian_state(GRID, C, **kw)) < 1e-6


def test_osmotic_mean_vanishes():
    h = decompose(gaussian_state(GRID, C, q_mean=-1.2, dq=0.7, anticom=0.2))
    assert abs(velocity_moments(h)["u_mean"]) < 1e-9
