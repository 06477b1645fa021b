"""Uniform 1-D grid, complex wavefunctions, spectral calculus, and observables.

Everything downstream (hydrodynamic decomposition, operator algebra, the PDE
propagator) lives on the uniform grid defined here.  Wave packets are required
to decay below a tiny amplitude near both box edges, which makes the FFT-based
derivatives and the plain Riemann/trapezoid quadrature spectrally accurate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhysConstants",
    "Grid1D",
    "WaveFunction",
    "Observables",
    "GridError",
    "NormalizationError",
    "BoundaryLeakError",
    "wavefunction",
    "quadrature",
    "derivative",
    "observables",
    "overlap",
    "resample",
    "gaussian_state",
    "harmonic_ground_state",
    "momentum_spread",
    "BOUNDARY_MARGIN",
    "LEAK_TOL_STRICT",
    "LEAK_TOL_DYNAMIC",
]

# Number of points inspected at each edge by the leakage monitor, and the
# relative-amplitude thresholds: strict at construction time, looser for
# states produced by time evolution.
BOUNDARY_MARGIN = 5
LEAK_TOL_STRICT = 1e-12
LEAK_TOL_DYNAMIC = 1e-8


class GridError(ValueError):
    """Invalid grid geometry or field of the wrong shape."""


class NormalizationError(ValueError):
    """State norm outside the accepted tolerance."""


class BoundaryLeakError(ValueError):
    """Packet amplitude too large near the box edges."""


@dataclass(frozen=True)
class PhysConstants:
    """Physical constants; natural units hbar = mass = 1 by default."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0.0 and self.mass > 0.0):
            raise ValueError("hbar and mass must be strictly positive")


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid x_j = x_min + j*dx, j = 0..n-1 (right endpoint excluded).

    n_points must be a power of two (>= 16) so the spectral derivative and
    the dense momentum matrix stay cheap and exactly invertible.
    """

    x_min: float
    x_max: float
    n_points: int
    x: np.ndarray = field(init=False, repr=False, compare=False)
    k: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_points
        if n < 16 or (n & (n - 1)) != 0:
            raise GridError(f"n_points must be a power of two >= 16, got {n}")
        if not self.x_max > self.x_min:
            raise GridError("x_max must exceed x_min")
        dx = (self.x_max - self.x_min) / n
        x = self.x_min + dx * np.arange(n)
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        x.flags.writeable = False
        k.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k", k)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points


@dataclass(frozen=True)
class WaveFunction:
    """Complex field psi on a grid, unit L2 norm, decaying at both edges."""

    grid: Grid1D
    psi: np.ndarray
    constants: PhysConstants


@dataclass(frozen=True)
class Observables:
    """Position/momentum means and spreads plus the symmetrized correlation.

    anticom is <{Q,P}>/2 with Q = q - <q>, P = p - <p>; kinetic is <p^2>/2m.
    """

    q_mean: float
    p_mean: float
    dq: float
    dp: float
    anticom: float
    kinetic: float


def _leak_amplitude(psi: np.ndarray) -> float:
    """Largest relative amplitude within BOUNDARY_MARGIN points of an edge."""
    peak = np.max(np.abs(psi))
    if peak == 0.0:
        return 0.0
    edge = max(np.max(np.abs(psi[:BOUNDARY_MARGIN])),
               np.max(np.abs(psi[-BOUNDARY_MARGIN:])))
    return float(edge / peak)


def wavefunction(grid: Grid1D, psi, constants: PhysConstants = PhysConstants(),
                 *, normalize: bool = True,
                 leak_tol: float = LEAK_TOL_STRICT) -> WaveFunction:
    """Validate and wrap a complex field as a WaveFunction.

    With normalize=True the field is rescaled to unit L2 norm; otherwise the
    norm must already be within 1e-9 of one.  In both cases the boundary
    leakage monitor rejects packets that reach the box edges.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (grid.n_points,):
        raise GridError(f"psi has shape {psi.shape}, expected ({grid.n_points},)")
    norm2 = float(np.sum(np.abs(psi) ** 2) * grid.dx)
    if norm2 <= 0.0 or not np.isfinite(norm2):
        raise NormalizationError(f"state norm^2 = {norm2}")
    if normalize:
        psi = psi / np.sqrt(norm2)
    elif abs(norm2 - 1.0) > 1e-9:
        raise NormalizationError(f"|norm^2 - 1| = {abs(norm2 - 1.0):.3e} > 1e-9")
    leak = _leak_amplitude(psi)
    if leak > leak_tol:
        raise BoundaryLeakError(
            f"boundary amplitude {leak:.3e} exceeds {leak_tol:.1e}; enlarge the box")
    psi = psi.copy()
    psi.flags.writeable = False
    return WaveFunction(grid=grid, psi=psi, constants=constants)


def quadrature(grid: Grid1D, values):
    """Integral over the box: plain sum times dx.

    On this periodic-style grid (right endpoint excluded) the rectangle sum
    coincides with the trapezoid rule for fields that vanish at the edges,
    and converges superalgebraically for smooth decaying integrands.
    """
    values = np.asarray(values)
    if values.shape != (grid.n_points,):
        raise GridError(f"field has shape {values.shape}, expected ({grid.n_points},)")
    total = np.sum(values) * grid.dx
    return float(total) if not np.iscomplexobj(values) else complex(total)


def derivative(grid: Grid1D, values, order: int = 1) -> np.ndarray:
    """Spectral (FFT) derivative of order 1 or 2.

    The Nyquist mode is zeroed for the first derivative so that real input
    yields real output; fields must be effectively periodic (decay at edges).
    """
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    values = np.asarray(values)
    if values.shape != (grid.n_points,):
        raise GridError(f"field has shape {values.shape}, expected ({grid.n_points},)")
    fk = np.fft.fft(values)
    if order == 1:
        mult = 1j * grid.k.copy()
        mult[grid.n_points // 2] = 0.0
    else:
        mult = -(grid.k ** 2)
    out = np.fft.ifft(mult * fk)
    return out.real if not np.iscomplexobj(values) else out


def observables(wf: WaveFunction, *, norm_tol: float = 1e-6,
                leak_tol: float = LEAK_TOL_DYNAMIC) -> Observables:
    """Quantum expectations <q>, <p>, spreads and <{Q,P}>/2 by grid quadrature."""
    grid, psi, c = wf.grid, wf.psi, wf.constants
    norm2 = float(np.sum(np.abs(psi) ** 2) * grid.dx)
    if abs(norm2 - 1.0) > norm_tol:
        raise NormalizationError(f"|norm^2 - 1| = {abs(norm2 - 1.0):.3e} > {norm_tol:.1e}")
    leak = _leak_amplitude(psi)
    if leak > leak_tol:
        raise BoundaryLeakError(f"boundary amplitude {leak:.3e} exceeds {leak_tol:.1e}")

    x, dx = grid.x, grid.dx
    rho = np.abs(psi) ** 2
    q_mean = float(np.sum(x * rho) * dx)
    dpsi = derivative(grid, psi, 1)
    p_mean = c.hbar * float(np.sum(np.imag(np.conj(psi) * dpsi)) * dx)
    dq2 = float(np.sum((x - q_mean) ** 2 * rho) * dx)
    # (P - <p>) psi, with P realized spectrally
    p_resid = -1j * c.hbar * dpsi - p_mean * psi
    dp2 = float(np.sum(np.abs(p_resid) ** 2) * dx)
    anticom = float(np.sum(np.real(np.conj(psi) * (x - q_mean) * p_resid)) * dx)
    kinetic = float(np.sum(c.hbar ** 2 * np.abs(dpsi) ** 2) * dx) / (2.0 * c.mass)
    return Observables(q_mean=q_mean, p_mean=p_mean, dq=np.sqrt(dq2),
                       dp=np.sqrt(dp2), anticom=anticom, kinetic=kinetic)


def momentum_spread(wf: WaveFunction) -> tuple[float, float]:
    """(<p>, dp) from the momentum-space density |psi_hat(k)|^2.

    Independent route used to cross-check the spectral P-hat evaluation in
    observables() (Parseval consistency).
    """
    c = wf.constants
    psik = np.fft.fft(wf.psi)
    w = np.abs(psik) ** 2
    w_sum = np.sum(w)
    p = wf.constants.hbar * wf.grid.k
    p_mean = float(np.sum(p * w) / w_sum)
    p2_mean = float(np.sum(p ** 2 * w) / w_sum)
    return p_mean, float(np.sqrt(max(p2_mean - p_mean ** 2, 0.0)))


def overlap(a: WaveFunction, b: WaveFunction) -> float:
    """|<a|b>| on the shared grid."""
    if a.grid != b.grid:
        raise GridError("overlap requires a shared grid")
    return float(abs(np.sum(np.conj(a.psi) * b.psi) * a.grid.dx))


def resample(grid: Grid1D, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Band-limited (periodic sinc) interpolation of grid data at points.

    Points outside the box evaluate to zero; the data must decay at the box
    edges so its periodic image does not contaminate the interpolant.
    """
    values = np.asarray(values)
    points = np.asarray(points, dtype=float)
    n = grid.n_points
    L = grid.x_max - grid.x_min
    inside = (points >= grid.x_min) & (points < grid.x_max)
    u = (points[inside, None] - grid.x[None, :]) / L  # units of the period
    arg = np.pi * u
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.sin(n * arg) / (n * np.tan(arg))
    kernel[~np.isfinite(kernel)] = 1.0  # coincident points
    out = np.zeros(points.shape, dtype=values.dtype)
    out[inside] = kernel @ values
    return out


def gaussian_state(grid: Grid1D, constants: PhysConstants = PhysConstants(), *,
                   q_mean: float = 0.0, p_mean: float = 0.0,
                   dq: float = 2.0 ** -0.5, anticom: float = 0.0,
                   leak_tol: float = LEAK_TOL_STRICT) -> WaveFunction:
    """Normalized Gaussian packet with prescribed moments.

    The quadratic phase is chosen so that <{Q,P}>/2 equals the requested
    anticom value (zero gives a minimum-uncertainty packet).
    """
    x = grid.x
    xi = x - q_mean
    curv = anticom / (2.0 * constants.hbar * dq ** 2)
    psi = np.exp(-xi ** 2 / (4.0 * dq ** 2)
                 + 1j * (p_mean * x / constants.hbar + curv * xi ** 2))
    return wavefunction(grid, psi, constants, normalize=True, leak_tol=leak_tol)


def harmonic_ground_state(grid: Grid1D, constants: PhysConstants = PhysConstants(),
                          omega: float = 1.0) -> WaveFunction:
    """Ground state of the harmonic well, dispersion sqrt(hbar/2 m omega)."""
    dq0 = np.sqrt(constants.hbar / (2.0 * constants.mass * omega))
    return gaussian_state(grid, constants, dq=dq0)
