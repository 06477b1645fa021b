"""Coherent-state shape profiles and assembly of the model wavefunctions.

A profile is the dimensionless shape rho_tilde(xi) of a packet in the comoving
coordinate xi = (x - <q>)/dq, normalized to unit mass, zero mean and unit
variance so that dq is literally the rms dispersion.  From the shape follow
the osmotic shape function G(xi) = (hbar/2m) d ln rho_tilde / dxi and the two
moments that drive the dynamics:

    osmotic_moment  K  = integral G^2 rho_tilde dxi      (<u^2> = K / dq^2)
    force_moment        = integral xi (m G G' + (hbar/2) G'') rho_tilde dxi

The density is carried in the Jacobian form rho(x) = rho_tilde(xi)/dq, which
is the normalizable realization of the self-similar shape transport (the bare
exponential parameterization does not stay normalized as dq varies).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import (Grid1D, PhysConstants, WaveFunction, observables,
                   quadrature, resample, wavefunction)

__all__ = [
    "StateProfile",
    "TrajectoryState",
    "ProfileError",
    "gaussian_profile",
    "sech2_profile",
    "profile_from_ground_state",
    "profile_from_table",
    "load_profile_csv",
    "profile_by_name",
    "assemble_state",
    "uncertainty_identity",
]

MAX_MOMENT = 12

# assembled tails are limited by the tabulated support of the profile, which
# truncates a bit above the strict construction threshold
LEAK_TOL_ASSEMBLE = 1e-9


class ProfileError(ValueError):
    """Profile input violates the ground-state-shape contract."""


@dataclass(frozen=True)
class TrajectoryState:
    """Finite-dimensional dynamical state of one packet."""

    q_mean: float
    v_mean: float
    dq: float
    dq_dot: float
    S0: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        if not self.dq > 0.0:
            raise ValueError("dq must be strictly positive")


@dataclass(frozen=True)
class StateProfile:
    """Shape data of one coherent-state family (see module docstring)."""

    name: str
    xi: np.ndarray            # uniform table nodes
    rho: np.ndarray           # rho_tilde on the nodes
    constants: PhysConstants
    osmotic_moment: float     # K
    force_moment: float       # C_G, equals m*K analytically for decaying shapes
    center_value: float       # G(0)
    center_slope: float       # G'(0)
    center_curvature: float   # G''(0)
    unweighted_moment: float  # integral of G^2 over the table (diagnostic only)
    moments: np.ndarray       # <xi^k>, k = 0..MAX_MOMENT
    _density: object          # callable xi -> rho_tilde
    _shape: object            # callable xi -> G
    _shape_d1: object
    _shape_d2: object
    _cdf: np.ndarray

    def density(self, xi):
        """rho_tilde(xi); zero outside the tabulated support."""
        return self._density(np.asarray(xi, dtype=float))

    def osmotic_shape(self, xi):
        """G(xi), linearly extrapolated beyond the table edges."""
        return self._shape(np.asarray(xi, dtype=float))

    def osmotic_shape_d1(self, xi):
        return self._shape_d1(np.asarray(xi, dtype=float))

    def osmotic_shape_d2(self, xi):
        return self._shape_d2(np.asarray(xi, dtype=float))

    def xi_moment(self, k: int) -> float:
        return float(self.moments[k])

    def sample_xi(self, uniforms) -> np.ndarray:
        """Inverse-CDF draw of xi values from rho_tilde."""
        return np.interp(np.asarray(uniforms, dtype=float), self._cdf, self.xi)


def _tabulate(xi, fn_rho, fn_G, fn_Gp, fn_Gpp, name, constants, density_fn):
    """Assemble a StateProfile from callables on a (already affine-fixed) table."""
    rho = fn_rho(xi)
    rho = np.clip(rho, 0.0, None)
    mass = np.trapezoid(rho, xi)
    rho = rho / mass
    G = fn_G(xi)
    Gp = fn_Gp(xi)
    Gpp = fn_Gpp(xi)
    m = constants.mass
    hbar = constants.hbar
    K = float(np.trapezoid(G ** 2 * rho, xi))
    force = float(np.trapezoid(xi * (m * G * Gp + 0.5 * hbar * Gpp) * rho, xi))
    unweighted = float(np.trapezoid(G ** 2, xi))
    moments = np.array([np.trapezoid(xi ** k * rho, xi) for k in range(MAX_MOMENT + 1)])
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(xi))])
    cdf /= cdf[-1]
    rho_frozen = rho.copy()
    rho_frozen.flags.writeable = False
    return StateProfile(
        name=name, xi=xi, rho=rho_frozen, constants=constants,
        osmotic_moment=K, force_moment=force,
        center_value=float(fn_G(np.array([0.0]))[0]),
        center_slope=float(fn_Gp(np.array([0.0]))[0]),
        center_curvature=float(fn_Gpp(np.array([0.0]))[0]),
        unweighted_moment=unweighted, moments=moments,
        _density=density_fn, _shape=fn_G, _shape_d1=fn_Gp, _shape_d2=fn_Gpp,
        _cdf=cdf)


def gaussian_profile(constants: PhysConstants = PhysConstants(), *,
                     xi_max: float = 10.0, n_table: int = 2049) -> StateProfile:
    """Standard normal shape: G is exactly linear, K = (hbar/2m)^2."""
    xi = np.linspace(-xi_max, xi_max, n_table)
    a = 0.5 * constants.hbar / constants.mass
    rho_fn = lambda s: np.exp(-0.5 * s ** 2) / np.sqrt(2.0 * np.pi)
    G = lambda s: -a * s
    Gp = lambda s: np.full_like(s, -a)
    Gpp = lambda s: np.zeros_like(s)
    return _tabulate(xi, rho_fn, G, Gp, Gpp, "gaussian", constants, rho_fn)


def sech2_profile(constants: PhysConstants = PhysConstants(), *,
                  xi_max: float = 16.0, n_table: int = 4097) -> StateProfile:
    """Unit-variance sech^2 shape (ground state of the sech^2 well)."""
    # variance of (a/2) sech^2(a xi) is pi^2/(12 a^2)
    a = np.pi / np.sqrt(12.0)
    xi = np.linspace(-xi_max, xi_max, n_table)
    hm = constants.hbar / constants.mass
    rho_fn = lambda s: 0.5 * a / np.cosh(a * s) ** 2
    G = lambda s: -hm * a * np.tanh(a * s)
    Gp = lambda s: -hm * a ** 2 / np.cosh(a * s) ** 2
    Gpp = lambda s: 2.0 * hm * a ** 3 * np.tanh(a * s) / np.cosh(a * s) ** 2
    return _tabulate(xi, rho_fn, G, Gp, Gpp, "sech2", constants, rho_fn)


def _spline_with_linear_tail(spline, lo, hi, value_lo, value_hi, slope_lo,
                             slope_hi):
    """Evaluate a spline inside [lo, hi], continue linearly outside."""

    def fn(s):
        s = np.asarray(s, dtype=float)
        out = spline(np.clip(s, lo, hi))
        below = s < lo
        above = s > hi
        if np.any(below):
            out = np.where(below, value_lo + slope_lo * (s - lo), out)
        if np.any(above):
            out = np.where(above, value_hi + slope_hi * (s - hi), out)
        return out

    return fn


def _profile_from_density_samples(xi, rho, name, constants,
                                  log_floor: float = 1e-13) -> StateProfile:
    """Build a profile from density samples on a uniform xi table.

    The affine normalization (mass 1, mean 0, variance 1) must already hold;
    G and its derivatives come from a quintic spline of ln rho_tilde on the
    region where the density is above log_floor relative to its peak (the
    third log-derivative enters the force moment, so cubic interpolation
    would cap the moment accuracy around 1e-6), with linear continuation of
    G outside.
    """
    from scipy.interpolate import make_interp_spline

    rho = np.clip(rho, 0.0, None)
    mass = np.trapezoid(rho, xi)
    rho = rho / mass
    good = rho > log_floor * np.max(rho)
    lo = int(np.argmax(good))
    hi = len(good) - int(np.argmax(good[::-1]))
    xi_core, rho_core = xi[lo:hi], rho[lo:hi]
    log_spline = make_interp_spline(xi_core, np.log(rho_core), k=5)
    a = 0.5 * constants.hbar / constants.mass
    lo_x, hi_x = xi_core[0], xi_core[-1]
    d1, d2, d3 = (log_spline.derivative(k) for k in (1, 2, 3))
    G_lo, G_hi = a * d1(lo_x), a * d1(hi_x)
    Gp_lo, Gp_hi = a * d2(lo_x), a * d2(hi_x)
    # tails: G continued linearly, so G' is frozen and G'' vanishes there
    G_fn = _spline_with_linear_tail(lambda s: a * d1(s), lo_x, hi_x,
                                    G_lo, G_hi, Gp_lo, Gp_hi)
    Gp_fn = _spline_with_linear_tail(lambda s: a * d2(s), lo_x, hi_x,
                                     Gp_lo, Gp_hi, 0.0, 0.0)
    Gpp_fn = _spline_with_linear_tail(lambda s: a * d3(s), lo_x, hi_x,
                                      0.0, 0.0, 0.0, 0.0)

    dens_spline = CubicSpline(xi, rho)
    span = (xi[0], xi[-1])

    def density_fn(s):
        s = np.asarray(s, dtype=float)
        out = dens_spline(np.clip(s, *span))
        out = np.where((s < span[0]) | (s > span[1]), 0.0, out)
        return np.clip(out, 0.0, None)

    return _tabulate(xi, density_fn, G_fn, Gp_fn, Gpp_fn, name, constants,
                     density_fn)


def profile_from_ground_state(psi0: WaveFunction, *, xi_max: float = 10.0,
                              n_table: int = 2049) -> StateProfile:
    """Measure the shape profile of a real, positive, nodeless ground state.

    The density is sampled at x = q0 + dq0*xi by band-limited interpolation
    of psi0, and (q0, dq0) are refined so the resulting table has exactly
    zero mean and unit variance.
    """
    psi = psi0.psi
    peak = np.max(np.abs(psi))
    if np.max(np.abs(psi.imag)) > 1e-10 * peak:
        raise ProfileError("ground-state profile requires a real wavefunction")
    body = np.abs(psi) > 1e-10 * peak
    if np.min(psi.real[body]) <= 0.0:
        raise ProfileError("ground-state profile requires a positive, nodeless state")

    grid = psi0.grid
    rho_grid = psi.real ** 2
    q0 = quadrature(grid, grid.x * rho_grid)
    dq0 = np.sqrt(quadrature(grid, (grid.x - q0) ** 2 * rho_grid))
    xi = np.linspace(-xi_max, xi_max, n_table)
    for _ in range(3):
        amp = resample(grid, psi.real, q0 + dq0 * xi)
        rho = dq0 * amp ** 2
        mass = np.trapezoid(rho, xi)
        mean = np.trapezoid(xi * rho, xi) / mass
        var = np.trapezoid((xi - mean) ** 2 * rho, xi) / mass
        q0 = q0 + dq0 * mean
        dq0 = dq0 * np.sqrt(var)
        if abs(mean) < 1e-14 and abs(var - 1.0) < 1e-14:
            break
    amp = resample(grid, psi.real, q0 + dq0 * xi)
    rho = dq0 * amp ** 2
    return _profile_from_density_samples(xi, rho, "measured", psi0.constants)


def profile_from_table(xi_raw, rho_raw, constants: PhysConstants = PhysConstants(),
                       *, name: str = "table", n_table: int = 4097) -> StateProfile:
    """Profile from tabulated (xi, rho) pairs, cubic-interpolated.

    The input table is affinely rescaled to unit mass, zero mean and unit
    variance before the shape functions are extracted.
    """
    xi_raw = np.asarray(xi_raw, dtype=float)
    rho_raw = np.asarray(rho_raw, dtype=float)
    if xi_raw.ndim != 1 or xi_raw.shape != rho_raw.shape or xi_raw.size < 8:
        raise ProfileError("need matching 1-D xi and rho arrays with >= 8 rows")
    if np.any(np.diff(xi_raw) <= 0.0):
        raise ProfileError("xi values must be strictly increasing")
    if np.any(rho_raw < 0.0):
        raise ProfileError("rho values must be non-negative")
    spline = CubicSpline(xi_raw, rho_raw)
    mass = spline.integrate(xi_raw[0], xi_raw[-1])
    mean = CubicSpline(xi_raw, xi_raw * rho_raw).integrate(xi_raw[0], xi_raw[-1]) / mass
    var = CubicSpline(xi_raw, (xi_raw - mean) ** 2 * rho_raw).integrate(
        xi_raw[0], xi_raw[-1]) / mass
    scale = np.sqrt(var)
    lo = (xi_raw[0] - mean) / scale
    hi = (xi_raw[-1] - mean) / scale
    xi = np.linspace(lo, hi, n_table)
    rho = np.clip(spline(mean + scale * xi), 0.0, None) * scale
    return _profile_from_density_samples(xi, rho, name, constants)


def load_profile_csv(path, constants: PhysConstants = PhysConstants()) -> StateProfile:
    """Read a two-column CSV (xi, rho); '#' lines are comments."""
    data = np.loadtxt(path, delimiter=",", comments="#")
    if data.ndim != 2 or data.shape[1] != 2:
        raise ProfileError(f"{path}: expected two columns (xi, rho)")
    return profile_from_table(data[:, 0], data[:, 1], constants, name=str(path))


def profile_by_name(name: str, constants: PhysConstants = PhysConstants()) -> StateProfile:
    if name == "gaussian":
        return gaussian_profile(constants)
    if name == "sech2":
        return sech2_profile(constants)
    if name.startswith("table:"):
        return load_profile_csv(name[len("table:"):], constants)
    raise ProfileError(f"unknown profile '{name}' (use gaussian, sech2 or table:<csv>)")


def assemble_state(profile: StateProfile, traj: TrajectoryState, grid: Grid1D,
                   constants: PhysConstants | None = None) -> WaveFunction:
    """Model wavefunction with shape rho_tilde(xi)/dq and the quadratic phase.

    The phase is (m v x + (m/2)(x - <q>)^2 dq_dot/dq + S0)/hbar, so that the
    measured <{Q,P}>/2 equals m*dq*dq_dot.
    """
    c = constants if constants is not None else profile.constants
    x = grid.x
    xi = (x - traj.q_mean) / traj.dq
    amp = np.sqrt(profile.density(xi) / traj.dq)
    phase = (c.mass * traj.v_mean * x
             + 0.5 * c.mass * (x - traj.q_mean) ** 2 * traj.dq_dot / traj.dq
             + traj.S0) / c.hbar
    return wavefunction(grid, amp * np.exp(1j * phase), c, normalize=True,
                        leak_tol=LEAK_TOL_ASSEMBLE)


def uncertainty_identity(profile: StateProfile, traj: TrajectoryState,
                         grid: Grid1D,
                         constants: PhysConstants | None = None) -> tuple[float, float]:
    """(measured, formula) sides of (dq dp)^2 = m^2 K + L^2, L = m dq dq_dot."""
    c = constants if constants is not None else profile.constants
    wf = assemble_state(profile, traj, grid, c)
    obs = observables(wf)
    lhs = (obs.dq * obs.dp) ** 2
    L = c.mass * traj.dq * traj.dq_dot
    rhs = c.mass ** 2 * profile.osmotic_moment + L ** 2
    return lhs, rhs
