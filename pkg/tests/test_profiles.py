"""Shape profiles, their moments, and model-state assembly."""

import numpy as np
import pytest
from scipy.integrate import quad

from squeezelab.grid import (Grid1D, PhysConstants, gaussian_state,
                             harmonic_ground_state, observables, resample,
                             wavefunction)
from squeezelab.hydro import decompose, velocity_moments
from squeezelab.profiles import (ProfileError, TrajectoryState, assemble_state,
                                 gaussian_profile, load_profile_csv,
                                 profile_by_name, profile_from_ground_state,
                                 profile_from_table, sech2_profile,
                                 uncertainty_identity)

C = PhysConstants()
GRID = Grid1D(-20.0, 20.0, 1024)
SECH_A = np.pi / np.sqrt(12.0)


# ------------------------------------------------- oracles (brute quadrature)

def _gauss_rho(s):
    return np.exp(-0.5 * s ** 2) / np.sqrt(2.0 * np.pi)


def _sech_rho(s):
    return 0.5 * SECH_A / np.cosh(SECH_A * s) ** 2


def test_gaussian_profile_moments():
    p = gaussian_profile(C)
    # oracle: independent adaptive quadrature of G^2 rho with G = -s/2
    K_oracle, _ = quad(lambda s: (0.5 * s) ** 2 * _gauss_rho(s), -12, 12)
    assert p.osmotic_moment == pytest.approx(K_oracle, abs=1e-10)
    assert p.osmotic_moment == pytest.approx(0.25, abs=1e-10)
    assert p.force_moment == pytest.approx(0.25, abs=1e-10)
    assert p.center_value == 0.0
    assert p.center_slope == pytest.approx(-0.5, abs=1e-14)
    assert p.center_curvature == 0.0
    xi = np.linspace(-6, 6, 13)
    assert np.max(np.abs(p.osmotic_shape(xi) + 0.5 * xi)) < 1e-12


def test_profile_normalization_invariants():
    for p in (gaussian_profile(C), sech2_profile(C)):
        assert np.trapezoid(p.rho, p.xi) == pytest.approx(1.0, abs=1e-8)
        assert np.trapezoid(p.xi * p.rho, p.xi) == pytest.approx(0.0, abs=1e-8)
        assert np.trapezoid(p.xi ** 2 * p.rho, p.xi) == pytest.approx(1.0, abs=1e-8)
        assert p.osmotic_moment > 0.0


def test_sech2_profile_moments():
    p = sech2_profile(C)
    # analytic: K = (a hbar/m)^2 * <tanh^2> with <tanh^2 sech^2>/norm = 1/3
    K_analytic = (SECH_A * C.hbar / C.mass) ** 2 / 3.0
    K_oracle, _ = quad(lambda s: (SECH_A * np.tanh(SECH_A * s)) ** 2 * _sech_rho(s),
                       -20, 20)
    assert K_analytic == pytest.approx(K_oracle, abs=1e-12)
    assert p.osmotic_moment == pytest.approx(K_oracle, abs=1e-10)
    assert p.osmotic_moment > 0.25  # strictly above the Gaussian minimum
    # force moment equals m K for decaying shapes (integration by parts)
    assert p.force_moment == pytest.approx(C.mass * p.osmotic_moment, abs=1e-8)


def test_measured_profile_matches_analytic():
    p = profile_from_ground_state(harmonic_ground_state(GRID, C))
    assert p.osmotic_moment == pytest.approx(0.25, abs=1e-8)
    assert p.force_moment == pytest.approx(0.25, abs=1e-8)
    assert p.center_value == pytest.approx(0.0, abs=1e-8)
    assert p.center_slope == pytest.approx(-0.5, abs=1e-8)
    xi = np.linspace(-5, 5, 21)
    assert np.max(np.abs(p.osmotic_shape(xi) + 0.5 * xi)) < 1e-8


def test_measured_profile_off_center_state():
    wf = gaussian_state(GRID, C, q_mean=2.0, dq=0.9)
    p = profile_from_ground_state(wf)
    assert np.trapezoid(p.xi ** 2 * p.rho, p.xi) == pytest.approx(1.0, abs=1e-10)
    assert p.osmotic_moment == pytest.approx(0.25, abs=1e-8)


def test_profile_rejects_complex_state():
    wf = gaussian_state(GRID, C, p_mean=1.0)
    with pytest.raises(ProfileError):
        profile_from_ground_state(wf)


def test_profile_rejects_nodes():
    psi = GRID.x * np.exp(-GRID.x ** 2 / 2.0)  # first excited state: one node
    wf = wavefunction(GRID, psi, C)
    with pytest.raises(ProfileError):
        profile_from_ground_state(wf)


def test_table_profile_roundtrip(tmp_path):
    # tabulated sech^2 samples: moments must match the analytic profile and
    # an independent quadrature at doubled resolution
    xi = np.linspace(-14.0, 14.0, 1401)
    rows = np.column_stack([xi, _sech_rho(xi)])
    path = tmp_path / "shape.csv"
    np.savetxt(path, rows, delimiter=",", header="xi,rho")
    p = load_profile_csv(path, C)
    ref = sech2_profile(C)
    assert p.osmotic_moment == pytest.approx(ref.osmotic_moment, abs=1e-8)
    assert p.force_moment == pytest.approx(ref.force_moment, abs=1e-8)
    xi2 = np.linspace(p.xi[0], p.xi[-1], 2 * (p.xi.size - 1) + 1)
    rho2 = p.density(xi2)
    rho2 /= np.trapezoid(rho2, xi2)
    K2 = np.trapezoid(p.osmotic_shape(xi2) ** 2 * rho2, xi2)
    assert p.osmotic_moment == pytest.approx(K2, abs=1e-8)


def test_table_profile_renormalizes_affine():
    # scaled and shifted input table must come out centered with unit variance
    xi = np.linspace(-20.0, 28.0, 2401)
    rho = np.exp(-0.5 * ((xi - 4.0) / 3.0) ** 2)
    p = profile_from_table(xi, rho, C)
    assert np.trapezoid(p.xi * p.rho, p.xi) == pytest.approx(0.0, abs=1e-10)
    assert np.trapezoid(p.xi ** 2 * p.rho, p.xi) == pytest.approx(1.0, abs=1e-10)
    assert p.osmotic_moment == pytest.approx(0.25, abs=1e-7)


def test_profile_by_name():
    assert profile_by_name("gaussian", C).name == "gaussian"
    assert profile_by_name("sech2", C).name == "sech2"
    with pytest.raises(ProfileError):
        profile_by_name("lorentz", C)


def test_sample_xi_inverse_cdf():
    p = gaussian_profile(C)
    u = (np.arange(100000) + 0.5) / 100000  # deterministic uniform sweep
    xi = p.sample_xi(u)
    assert np.mean(xi) == pytest.approx(0.0, abs=1e-4)
    assert np.std(xi) == pytest.approx(1.0, abs=1e-3)


# ----------------------------------------------------------------- assembly

def test_assemble_identity_case():
    p = gaussian_profile(C)
    traj = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=2.0 ** -0.5, dq_dot=0.0)
    wf = assemble_state(p, traj, GRID, C)
    ref = harmonic_ground_state(GRID, C)
    assert np.max(np.abs(wf.psi - ref.psi)) < 1e-10


def test_assemble_momentum():
    p = gaussian_profile(C)
    traj = TrajectoryState(q_mean=0.0, v_mean=1.0, dq=2.0 ** -0.5, dq_dot=0.0)
    obs = observables(assemble_state(p, traj, GRID, C))
    assert obs.p_mean == pytest.approx(C.mass * 1.0, abs=1e-10)


def test_assemble_anticommutator():
    p = gaussian_profile(C)
    traj = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=0.7, dq_dot=0.3)
    obs = observables(assemble_state(p, traj, GRID, C))
    assert obs.anticom == pytest.approx(0.21, rel=1e-6)


def test_uncertainty_identity_ground():
    p = gaussian_profile(C)
    traj = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=2.0 ** -0.5, dq_dot=0.0)
    lhs, rhs = uncertainty_identity(p, traj, GRID, C)
    assert rhs == pytest.approx(0.25, abs=1e-12)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_uncertainty_identity_squeezed():
    p = gaussian_profile(C)
    traj = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=0.7, dq_dot=0.3)
    lhs, rhs = uncertainty_identity(p, traj, GRID, C)
    assert rhs == pytest.approx(0.25 + 0.21 ** 2, abs=1e-12)
    assert lhs == pytest.approx(rhs, rel=1e-6)


@pytest.mark.parametrize("profile_name", ["gaussian", "sech2"])
def test_self_similarity(profile_name):
    p = profile_by_name(profile_name, C)
    grid = GRID if profile_name == "gaussian" else Grid1D(-36.0, 36.0, 2048)
    xi_probe = np.linspace(-3.0, 3.0, 121)
    recon = []
    for dq in (0.5, 1.2):
        traj = TrajectoryState(q_mean=0.4, v_mean=0.0, dq=dq, dq_dot=0.0)
        wf = assemble_state(p, traj, grid, C)
        rho_vals = np.abs(resample(grid, wf.psi, 0.4 + dq * xi_probe)) ** 2
        recon.append(dq * rho_vals)
    assert np.max(np.abs(recon[0] - recon[1])) < 1e-10


@pytest.mark.parametrize("profile_name,dq", [("gaussian", 0.6),
                                             ("sech2", 1.0),
                                             ("gaussian", 1.1)])
def test_osmotic_moment_relation(profile_name, dq):
    # <u^2> dq^2 = K for every assembled state
    p = profile_by_name(profile_name, C)
    grid = Grid1D(-36.0, 36.0, 2048) if profile_name == "sech2" else GRID
    traj = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=dq, dq_dot=0.1)
    h = decompose(assemble_state(p, traj, grid, C))
    mom = velocity_moments(h)
    u2 = mom["u_var"] + mom["u_mean"] ** 2
    assert u2 * dq ** 2 == pytest.approx(p.osmotic_moment, abs=1e-8)


def test_gaussian_saturation():
    p = gaussian_profile(C)
    traj = TrajectoryState(q_mean=0.0, v_mean=0.0, dq=0.8, dq_dot=0.0)
    h = decompose(assemble_state(p, traj, GRID, C))
    mom = velocity_moments(h)
    # m dq du = hbar/2 exactly for the Gaussian
    assert C.mass * 0.8 * np.sqrt(mom["u_var"]) == pytest.approx(0.5, abs=1e-8)


def test_assemble_rejects_unsupported_width():
    p = gaussian_profile(C)
    traj = TrajectoryState(q_mean=15.0, v_mean=0.0, dq=3.0, dq_dot=0.0)
    with pytest.raises(Exception):
        assemble_state(p, traj, GRID, C)
