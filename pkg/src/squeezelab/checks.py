"""Invariant sweeps over trajectory records: the laboratory's self-checks.

These helpers assemble model states along a record and measure the chain
inequality, the momentum/anticommutator identities and the Hamilton-Jacobi-
Madelung residual.  The CLI invariant report and the acceptance suite are
both built on them.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid1D, PhysConstants, observables
from .hydro import chain_report, decompose, hjm_residual, pin_phase
from .profiles import StateProfile, assemble_state
from .dynamics import TrajectoryRecord

__all__ = [
    "frame_sweep",
    "hjm_center_residual",
    "model_phase_action",
]


def frame_sweep(profile: StateProfile, record: TrajectoryRecord, grid: Grid1D,
                times=None, n_frames: int = 25) -> dict:
    """Assemble states at sampled record times and collect invariant margins.

    Returns worst-case values over the sweep:
      chain_upper_margin   min of (dq dp)^2 - m^2 dq^2 du^2
      chain_lower_margin   min of m^2 dq^2 du^2 - hbar^2/4
      saturation_defect    max |m dq du - hbar/2|   (Gaussian saturates)
      identity_rel_err     max rel. defect of (dq dp)^2 = m^2 K + (m dq dq_dot)^2
      anticom_defect       max |<{Q,P}>/2 - m dq dq_dot| (abs, floor 1 scale)
      u_mean_max           max |<u>|
    """
    c = record.constants
    if times is None:
        times = np.linspace(record.t[0], record.t[-1], n_frames)
    out = {"chain_upper_margin": np.inf, "chain_lower_margin": np.inf,
           "saturation_defect": 0.0, "identity_rel_err": 0.0,
           "anticom_defect": 0.0, "u_mean_max": 0.0}
    K = profile.osmotic_moment
    for t in times:
        traj = record.state_at(float(t))
        wf = assemble_state(profile, traj, grid, c)
        h = decompose(wf)
        rep = chain_report(wf, h)
        obs = observables(wf)
        out["chain_upper_margin"] = min(out["chain_upper_margin"],
                                        rep["lhs"] - rep["mid"])
        out["chain_lower_margin"] = min(out["chain_lower_margin"],
                                        rep["mid"] - rep["lower"])
        out["saturation_defect"] = max(out["saturation_defect"],
                                       abs(np.sqrt(rep["mid"]) - 0.5 * c.hbar))
        L = c.mass * traj.dq * traj.dq_dot
        rhs = c.mass ** 2 * K + L ** 2
        lhs = (obs.dq * obs.dp) ** 2
        out["identity_rel_err"] = max(out["identity_rel_err"],
                                      abs(lhs - rhs) / rhs)
        out["anticom_defect"] = max(out["anticom_defect"],
                                    abs(obs.anticom - L) / max(1.0, abs(L)))
        out["u_mean_max"] = max(out["u_mean_max"], abs(rep["u_mean"]))
    return out


def model_phase_action(traj, x: float, constants: PhysConstants) -> float:
    """S(x) of the model state: m v x + (m/2)(x-q)^2 dq_dot/dq + S0."""
    return (constants.mass * traj.v_mean * x
            + 0.5 * constants.mass * (x - traj.q_mean) ** 2
            * traj.dq_dot / traj.dq + traj.S0)


def _taylor_state(record: TrajectoryRecord, node: int, tau: float):
    """State a small time tau away from a record node, built from the stored
    derivative channels (avoids spline noise between strided nodes)."""
    from .profiles import TrajectoryState

    r = record
    return TrajectoryState(
        q_mean=float(r.q_mean[node] + r.v_mean[node] * tau
                     + 0.5 * r.v_mean_dot[node] * tau ** 2),
        v_mean=float(r.v_mean[node] + r.v_mean_dot[node] * tau),
        dq=float(r.dq[node] + r.dq_dot[node] * tau
                 + 0.5 * r.dq_ddot[node] * tau ** 2),
        dq_dot=float(r.dq_dot[node] + r.dq_ddot[node] * tau),
        S0=float(r.S0[node] + r.S0_dot[node] * tau),
        t=float(r.t[node] + tau))


def hjm_center_residual(profile: StateProfile, record: TrajectoryRecord,
                        potential, grid: Grid1D, t: float, *,
                        delta: float = 1e-5, core_floor: float = 1e-6) -> float:
    """Hamilton-Jacobi-Madelung residual of the assembled states around time t.

    The check snaps to the record node nearest t.  S_dot comes from a
    centered difference of the decomposed phases of assembled frames at
    +/- delta around the node (states one Taylor step away, using the
    record's derivative channels), each pinned to the model phase value at a
    shared anchor point so the S0(t) evolution is included.  Returns the
    max-abs residual over the packet core.
    """
    c = record.constants
    node = int(np.argmin(np.abs(record.t - t)))
    t_node = float(record.t[node])
    mid = decompose(assemble_state(profile, _taylor_state(record, node, 0.0),
                                   grid, c))
    x_anchor = float(grid.x[mid.center_index])
    fields = []
    for tau in (-delta, delta):
        traj = _taylor_state(record, node, tau)
        h = decompose(assemble_state(profile, traj, grid, c))
        pin_value = model_phase_action(traj, x_anchor, c)
        # pin at the shared anchor index, not each frame's own center
        shift = pin_value - h.S[mid.center_index]
        fields.append(h.S + shift)
    S_dot = (fields[1] - fields[0]) / (2.0 * delta)
    res = hjm_residual(mid, S_dot, potential, t_node)
    core = mid.rho > core_floor * np.max(mid.rho)
    return float(np.max(np.abs(res[core])))
