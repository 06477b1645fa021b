"""Madelung decomposition and residuals of the hydrodynamic evolution equations.

A wavefunction psi = sqrt(rho) exp(i S / hbar) is split into the density rho,
the unwrapped phase action S, the osmotic velocity u = (hbar/2m) d ln rho / dx
and the current velocity v = (dS/dx)/m.  The derivative fields are computed
from spectral derivatives of psi itself (u + i v = (hbar/m) psi'/psi), which
stays spectrally accurate on the region where rho is above the floor; outside
that region the velocities are held constant and flagged via the valid mask.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid1D, PhysConstants, WaveFunction, derivative, observables

__all__ = [
    "HydroFields",
    "PhaseUnwrapError",
    "decompose",
    "pin_phase",
    "drifts",
    "drift_reconstruction_error",
    "continuity_residual",
    "hjm_residual",
    "residual_norms",
    "velocity_moments",
    "chain_report",
    "momentum_split_error",
]


class PhaseUnwrapError(RuntimeError):
    """Phase advances by more than pi per grid cell: resolution inadequate."""


@dataclass(frozen=True)
class HydroFields:
    """Hydrodynamic fields of one state.

    u, v, du (= du/dx) and the probability current j = rho*v are meaningful
    where valid is True (rho above the floor); outside they are constant
    extensions of the last valid value.
    """

    grid: Grid1D
    constants: PhysConstants
    rho: np.ndarray
    S: np.ndarray
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    j: np.ndarray
    valid: np.ndarray
    center_index: int


def _extend_constant(values: np.ndarray, lo: int, hi: int) -> np.ndarray:
    out = values.copy()
    out[:lo] = values[lo]
    out[hi:] = values[hi - 1]
    return out


def decompose(wf: WaveFunction, rho_floor: float = 1e-14) -> HydroFields:
    """Split a wavefunction into (rho, S, u, v) plus derived fields.

    S is unwrapped along the grid and anchored so that its value at the grid
    point nearest <q> equals hbar times the principal argument of psi there;
    use pin_phase() to move the additive constant when comparing against a
    model phase.
    """
    if rho_floor <= 0.0:
        raise ValueError("rho_floor must be positive")
    grid, psi, c = wf.grid, wf.psi, wf.constants
    rho = np.abs(psi) ** 2
    obs_q = float(np.sum(grid.x * rho) * grid.dx)
    i_center = int(np.argmin(np.abs(grid.x - obs_q)))
    above = rho > rho_floor
    if not above[i_center]:
        raise ValueError("density below floor at the packet center")
    # contiguous valid run containing the center (states here are nodeless)
    lo = i_center
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = i_center
    while hi < grid.n_points - 1 and above[hi + 1]:
        hi += 1
    hi += 1  # exclusive
    valid = np.zeros(grid.n_points, dtype=bool)
    valid[lo:hi] = True

    phase = np.unwrap(np.angle(psi[lo:hi]))
    # re-anchor so the center keeps its principal value
    phase += np.angle(psi[i_center]) - phase[i_center - lo]
    jumps = np.abs(np.diff(phase))
    if jumps.size and np.max(jumps) >= np.pi * (1.0 - 1e-12):
        raise PhaseUnwrapError(
            f"max phase jump {np.max(jumps):.3f} rad per cell; refine the grid")
    S = np.empty(grid.n_points)
    S[lo:hi] = c.hbar * phase
    S[:lo] = S[lo]
    S[hi:] = S[hi - 1]

    dpsi = derivative(grid, psi, 1)
    d2psi = derivative(grid, psi, 2)
    ratio = np.zeros(grid.n_points, dtype=complex)
    ratio[valid] = dpsi[valid] / psi[valid]
    u = (c.hbar / c.mass) * ratio.real
    v = (c.hbar / c.mass) * ratio.imag
    u = _extend_constant(u, lo, hi)
    v = _extend_constant(v, lo, hi)
    # du/dx = (hbar/m) Re[psi''/psi - (psi'/psi)^2], spectrally accurate
    du = np.zeros(grid.n_points)
    du[valid] = (c.hbar / c.mass) * (d2psi[valid] / psi[valid]
                                     - ratio[valid] ** 2).real
    du = _extend_constant(du, lo, hi)
    # aliasing guard: the unwrapped phase must be consistent with v
    if hi - lo > 1:
        s_fd = np.diff(S[lo:hi]) / grid.dx
        v_mid = 0.5 * (v[lo:hi - 1] + v[lo + 1:hi])
        if np.max(np.abs(s_fd - c.mass * v_mid)) > 0.5 * np.pi * c.hbar / grid.dx:
            raise PhaseUnwrapError("unwrapped phase inconsistent with the current "
                                   "velocity; phase aliasing suspected")

    j = (c.hbar / c.mass) * np.imag(np.conj(psi) * dpsi)
    return HydroFields(grid=grid, constants=c, rho=rho, S=S, u=u, v=v, du=du,
                       j=j, valid=valid, center_index=i_center)


def pin_phase(h: HydroFields, value: float = 0.0) -> HydroFields:
    """Shift the additive gauge constant so S equals `value` at the center."""
    return replace(h, S=h.S + (value - h.S[h.center_index]))


def drifts(h: HydroFields) -> tuple[np.ndarray, np.ndarray]:
    """(forward, backward) drift fields: v +/- u."""
    return h.v + h.u, h.v - h.u


def drift_reconstruction_error(h: HydroFields, core_floor: float = 1e-6) -> float:
    """Max deviation of v_backward from v_forward - (hbar/m) d ln rho / dx.

    The log-density derivative is recomputed from the spectral derivative of
    rho, an independent route from the psi'/psi evaluation in decompose().
    Restricted to rho > core_floor * max(rho): at smaller densities the
    absolute spectral noise of drho/dx overwhelms the ratio.
    """
    c = h.constants
    core = h.rho > core_floor * np.max(h.rho)
    dlnrho = derivative(h.grid, h.rho, 1)[core] / h.rho[core]
    v_fwd, v_bwd = drifts(h)
    return float(np.max(np.abs(v_bwd[core] - (v_fwd[core] - (c.hbar / c.mass) * dlnrho))))


def continuity_residual(h: HydroFields, rho_dot: np.ndarray) -> np.ndarray:
    """Residual field of the continuity equation: rho_dot + d(rho v)/dx.

    rho_dot is supplied by the caller (e.g. centered difference of adjacent
    frames).  The current rho*v is differentiated spectrally; it inherits the
    smooth decay of psi, so no masking artifacts enter.
    """
    rho_dot = np.asarray(rho_dot, dtype=float)
    return rho_dot + derivative(h.grid, h.j, 1)


def hjm_residual(h: HydroFields, S_dot: np.ndarray, potential, t: float) -> np.ndarray:
    """Residual of the Hamilton-Jacobi-Madelung balance.

    Returns S_dot + (m/2) v^2 - (m/2) u^2 - (hbar/2) du/dx + Phi(x,t),
    meaningful on the valid region (zeroed outside).
    """
    c = h.constants
    S_dot = np.asarray(S_dot, dtype=float)
    res = (S_dot + 0.5 * c.mass * h.v ** 2 - 0.5 * c.mass * h.u ** 2
           - 0.5 * c.hbar * h.du + potential.phi(h.grid.x, t))
    return np.where(h.valid, res, 0.0)


def residual_norms(res: np.ndarray, h: HydroFields) -> tuple[float, float]:
    """(max-abs, L2) of a residual field over the valid region."""
    r = res[h.valid]
    if r.size == 0:
        return 0.0, 0.0
    return float(np.max(np.abs(r))), float(np.sqrt(np.sum(r ** 2) * h.grid.dx))


def velocity_moments(h: HydroFields) -> dict:
    """rho-weighted means and variances of the osmotic and current velocities."""
    w = h.rho[h.valid] * h.grid.dx
    wsum = np.sum(w)
    u, v = h.u[h.valid], h.v[h.valid]
    u_mean = float(np.sum(w * u) / wsum)
    v_mean = float(np.sum(w * v) / wsum)
    u_var = float(np.sum(w * (u - u_mean) ** 2) / wsum)
    v_var = float(np.sum(w * (v - v_mean) ** 2) / wsum)
    return {"u_mean": u_mean, "u_var": u_var, "v_mean": v_mean, "v_var": v_var}


def chain_report(wf: WaveFunction, h: HydroFields | None = None) -> dict:
    """Terms of the uncertainty chain (dq dp)^2 >= m^2 dq^2 du^2 >= hbar^2/4."""
    if h is None:
        h = decompose(wf)
    obs = observables(wf)
    mom = velocity_moments(h)
    c = wf.constants
    lhs = (obs.dq * obs.dp) ** 2
    mid = c.mass ** 2 * obs.dq ** 2 * mom["u_var"]
    return {"lhs": lhs, "mid": mid, "lower": c.hbar ** 2 / 4.0,
            "u_mean": mom["u_mean"], "dq": obs.dq, "dp": obs.dp}


def momentum_split_error(wf: WaveFunction, h: HydroFields | None = None) -> float:
    """Relative defect of dp^2 = m^2 (du^2 + dv^2)."""
    if h is None:
        h = decompose(wf)
    obs = observables(wf)
    mom = velocity_moments(h)
    c = wf.constants
    rhs = c.mass ** 2 * (mom["u_var"] + mom["v_var"])
    return float(abs(obs.dp ** 2 - rhs) / obs.dp ** 2)
