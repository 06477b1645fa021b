"""Euler-Maruyama sampling of the diffusion underlying a coherent trajectory.

Paths follow dq = v_plus(q, t) dt + sqrt(hbar dt / m) N(0,1) with the
forward drift v_plus = [<v> + xi dq_dot] + G(xi)/dq evaluated along a
trajectory record.  The noise variance hbar dt/m is fixed by the diffusion
coefficient hbar/2m: it is the unique choice under which the Fokker-Planck
equation of the sampled process reproduces the quantum density (the drift
carries u = + (hbar/2m) d ln rho/dx, the diffusion term must cancel it in the
stationary balance).  Randomness comes from counter-based Philox streams keyed
by (seed, block index) over fixed-size path blocks, with normal variates by
inverse CDF; the ensemble is therefore reproducible and independent of how
blocks might be distributed over workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .dynamics import SCHEMA_HEADER, TrajectoryRecord
from .profiles import StateProfile

__all__ = [
    "EnsembleConfig",
    "PathEnsemble",
    "ExclusionError",
    "sample_forward",
    "ensemble_summary",
    "backward_consistency",
    "osmotic_uncertainty",
]

BLOCK_SIZE = 4096


class ExclusionError(RuntimeError):
    """More than the tolerated fraction of paths left the profile support."""


@dataclass(frozen=True)
class EnsembleConfig:
    n_paths: int
    dt: float
    seed: int
    t_span: tuple[float, float]
    output_stride: int = 50
    xi_max: float = 8.0
    max_excluded: float = 0.01

    def __post_init__(self):
        if self.n_paths < 100:
            raise ValueError("n_paths must be >= 100")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")


@dataclass
class PathEnsemble:
    """Path positions at the output times plus online statistics.

    positions[:, j] holds every path at times[j]; prev_positions[:, j] holds
    the same paths one Euler step earlier (nan in the first column), which is
    what the backward-drift estimator needs.  quad_variation accumulates
    sum (dq - v_plus dt)^2 over all alive path increments.
    """

    times: np.ndarray
    positions: np.ndarray
    prev_positions: np.ndarray
    alive: np.ndarray
    excluded_fraction: float
    quad_variation: float
    n_increments: int
    config: EnsembleConfig

    def diffusion_estimate(self) -> float:
        """Realized quadratic variation per unit time: estimates hbar/m
        (twice the diffusion coefficient hbar/2m)."""
        return self.quad_variation / (self.n_increments * self.config.dt)


def _drift(x, t_index, coeffs, profile):
    q, v, dq, dqd = (coeffs[j][t_index] for j in range(4))
    xi = (x - q) / dq
    return v + xi * dqd + profile.osmotic_shape(xi) / dq, xi


def sample_forward(profile: StateProfile, record: TrajectoryRecord,
                   cfg: EnsembleConfig) -> PathEnsemble:
    """Euler-Maruyama forward sampling along a recorded trajectory.

    Initial points are drawn from the packet density at t0 by inverse CDF of
    the profile shape.  Paths whose comoving coordinate exceeds xi_max are
    frozen and excluded from statistics; more than max_excluded of them is an
    error.
    """
    c = record.constants
    t0, t1 = cfg.t_span
    if not t1 > t0:
        raise ValueError("t_span must have positive length")
    n_steps = max(1, int(round((t1 - t0) / cfg.dt)))  # span quantized to whole steps
    ts = t0 + cfg.dt * np.arange(n_steps + 1)
    coeffs = record.channels_at(ts, ("q_mean", "v_mean", "dq", "dq_dot"))

    out_idx = [0] + [j for j in range(1, n_steps + 1)
                     if j % cfg.output_stride == 0 or j == n_steps]
    out_idx = sorted(set(out_idx))
    out_pos = {j: i for i, j in enumerate(out_idx)}
    n_out = len(out_idx)

    sigma = np.sqrt(c.hbar * cfg.dt / c.mass)
    n_blocks = (cfg.n_paths + BLOCK_SIZE - 1) // BLOCK_SIZE
    positions = np.empty((cfg.n_paths, n_out))
    prev_positions = np.full((cfg.n_paths, n_out), np.nan)
    alive_all = np.ones(cfg.n_paths, dtype=bool)
    qv_sum = 0.0
    n_inc = 0

    for b in range(n_blocks):
        lo = b * BLOCK_SIZE
        hi = min(lo + BLOCK_SIZE, cfg.n_paths)
        m = hi - lo
        rng = np.random.Generator(np.random.Philox(key=np.array(
            [cfg.seed, b], dtype=np.uint64)))

        def uniforms(size):
            u = rng.random(size)
            return np.where(u == 0.0, 0.5 / 2 ** 53, u)

        xi0 = profile.sample_xi(uniforms(m))
        x = coeffs[0][0] + coeffs[2][0] * xi0
        alive = np.ones(m, dtype=bool)
        positions[lo:hi, 0] = x
        x_prev = x.copy()
        for j in range(n_steps):
            drift, xi = _drift(x, j, coeffs, profile)
            newly_out = alive & (np.abs(xi) > cfg.xi_max)
            alive &= ~newly_out
            noise = sigma * ndtri(uniforms(m))
            step = drift * cfg.dt + noise
            x_prev = x.copy()
            x = np.where(alive, x + step, x)
            qv_sum += float(np.sum(noise[alive] ** 2))
            n_inc += int(np.count_nonzero(alive))
            if (j + 1) in out_pos:
                col = out_pos[j + 1]
                positions[lo:hi, col] = x
                prev_positions[lo:hi, col] = np.where(alive, x_prev, np.nan)
        alive_all[lo:hi] = alive

    excluded = 1.0 - float(np.count_nonzero(alive_all)) / cfg.n_paths
    ens = PathEnsemble(times=ts[out_idx], positions=positions,
                       prev_positions=prev_positions, alive=alive_all,
                       excluded_fraction=excluded, quad_variation=qv_sum,
                       n_increments=n_inc, config=cfg)
    if excluded > cfg.max_excluded:
        raise ExclusionError(f"{excluded:.2%} of paths left |xi| <= {cfg.xi_max}")
    return ens


def ensemble_summary(ens: PathEnsemble, record: TrajectoryRecord) -> dict:
    """Empirical vs model mean/std at every output time (CSV-ready columns)."""
    q_model, dq_model = record.channels_at(ens.times, ("q_mean", "dq"))
    pos = ens.positions[ens.alive]
    emp_mean = pos.mean(axis=0)
    emp_std = pos.std(axis=0, ddof=1)
    return {
        "t": ens.times,
        "empirical_mean": emp_mean,
        "empirical_std": emp_std,
        "model_mean": np.asarray(q_model),
        "model_std": np.asarray(dq_model),
        "excluded_fraction": np.full(ens.times.shape, ens.excluded_fraction),
    }


def summary_to_csv(path, summary: dict) -> None:
    cols = ("t", "empirical_mean", "empirical_std", "model_mean", "model_std",
            "excluded_fraction")
    rows = np.column_stack([summary[k] for k in cols])
    with open(path, "w") as fh:
        fh.write(SCHEMA_HEADER + "\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def backward_consistency(ens: PathEnsemble, profile: StateProfile,
                         record: TrajectoryRecord, *, n_bins: int = 30,
                         min_count: int = 100) -> dict:
    """Binned backward-drift estimate against v - u.

    For every stored frame (except the first) the conditional mean of the
    backward increment E[q(t) - q(t-dt) | q(t)] is estimated per position bin
    and compared with v_minus = v - u; deviations are reported in units of
    the per-bin CLT band, together with the worst case.
    """
    c = record.constants
    dt = ens.config.dt
    noise_std = np.sqrt(c.hbar * dt / c.mass)
    worst = 0.0
    frames = []
    for col in range(1, len(ens.times)):
        t = float(ens.times[col])
        ok = ens.alive & np.isfinite(ens.prev_positions[:, col])
        q_now = ens.positions[ok, col]
        inc = (q_now - ens.prev_positions[ok, col]) / dt
        q, v, dq, dqd = (float(a) for a in record.channels_at(
            t, ("q_mean", "v_mean", "dq", "dq_dot")))
        edges = np.linspace(q - 4.0 * dq, q + 4.0 * dq, n_bins + 1)
        which = np.digitize(q_now, edges) - 1
        rows = []
        for bin_i in range(n_bins):
            sel = which == bin_i
            n_b = int(np.count_nonzero(sel))
            if n_b < min_count:
                continue
            est = float(np.mean(inc[sel]))
            xi = (q_now[sel] - q) / dq
            v_minus = float(np.mean(v + xi * dqd - profile.osmotic_shape(xi) / dq))
            band = noise_std / (dt * np.sqrt(n_b))
            dev = abs(est - v_minus) / band
            worst = max(worst, dev)
            rows.append({"center": 0.5 * (edges[bin_i] + edges[bin_i + 1]),
                         "count": n_b, "estimate": est, "v_minus": v_minus,
                         "band_units": dev})
        frames.append({"t": t, "bins": rows})
    return {"max_band_units": worst, "frames": frames}


def osmotic_uncertainty(profile: StateProfile, dq: float,
                        ens: PathEnsemble | None = None,
                        frame: int = -1, record: TrajectoryRecord | None = None
                        ) -> dict:
    """m dq du by the exact profile route (m sqrt(K)) and, when an ensemble is
    given, from the spread of u evaluated at the sampled positions."""
    c = profile.constants
    exact = c.mass * np.sqrt(profile.osmotic_moment)
    out = {"exact": float(exact), "bound": 0.5 * c.hbar}
    if ens is not None:
        if record is None:
            raise ValueError("record required to locate the packet frame")
        t = float(ens.times[frame])
        q, dq_t = (float(a) for a in record.channels_at(t, ("q_mean", "dq")))
        xi = (ens.positions[ens.alive, frame] - q) / dq_t
        u = profile.osmotic_shape(xi) / dq_t
        du_emp = float(np.std(u, ddof=1))
        out["empirical"] = c.mass * dq_t * du_emp
        out["n_samples"] = int(np.count_nonzero(ens.alive))
    return out
