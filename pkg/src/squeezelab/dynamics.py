"""Coupled center/dispersion dynamics and feedback-potential synthesis.

The dynamical state is y = (<q>, <v>, dq, dq_dot, S0).  The center follows
the classical motion <v>' = -<dPhi/dx>/m.  Two laws for the dispersion are
shipped:

* "projected" (default): m dq dq'' = force_moment/dq^2 - <(x-<q>) dPhi/dx>,
  the first-moment projection of the momentum balance.  It reproduces the
  Ermakov equation in harmonic wells and the free-packet spreading law.
* "energy-balance": dq'' = 2/(m dq) [ -<Phi> + (m/2)<v>^2 - (m/2)<u^2> ],
  the literal mean Hamilton-Jacobi balance.  It has no stationary point in a
  static harmonic well (the right side is strictly negative there) and is
  retained only for fidelity studies; see README.

S0 evolves by the unique local closure that makes the Hamilton-Jacobi-
Madelung residual vanish at the packet center:

    S0' = -m <v>' <q> - (m/2)<v>^2 + (m/2) G(0)^2/dq^2
          + (hbar/2) G'(0)/dq^2 - Phi(<q>, t).

Records integrated with this closure invert exactly back to the potential, so
synthesize_potential reproduces Phi up to the documented additive gauge.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .grid import PhysConstants
from .potentials import PotentialModel, PotentialMoments
from .profiles import StateProfile, TrajectoryState

__all__ = [
    "DispersionLaw",
    "SingularDispersionError",
    "QuadratureError",
    "TrajectoryRecord",
    "potential_expectations",
    "trajectory_rhs",
    "integrate",
    "kinematic_record",
    "SynthesizedPotential",
    "synthesize_potential",
    "feedback_diagnostic",
    "ehrenfest_defect",
    "TRAJECTORY_COLUMNS",
]

DQ_FLOOR = 1e-6
SCHEMA_HEADER = "# squeezelab-schema v1"
TRAJECTORY_COLUMNS = ("t", "q_mean", "v_mean", "dq", "dq_dot", "S0", "phi_mean",
                      "uncertainty_product", "f", "g", "feedback_residual")


class DispersionLaw(str, enum.Enum):
    PROJECTED = "projected"
    ENERGY_BALANCE = "energy-balance"


class SingularDispersionError(RuntimeError):
    """Dispersion collapsed below the supported floor; integration halted."""


class QuadratureError(RuntimeError):
    """Profile quadrature did not converge under resolution doubling."""


def _quadrature_moments(profile: StateProfile, q_mean: float, dq: float,
                        potential: PotentialModel, t: float,
                        refine: int = 1) -> PotentialMoments:
    xi = profile.xi
    rho = profile.rho
    if refine > 1:
        xi = np.linspace(xi[0], xi[-1], refine * (xi.size - 1) + 1)
        rho = profile.density(xi)
    w = rho * (xi[1] - xi[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    x = q_mean + dq * xi
    g = np.asarray(potential.grad_phi(x, t), dtype=float)
    return PotentialMoments(
        phi_mean=float(np.asarray(potential.phi(x, t), dtype=float) @ w),
        grad_phi_mean=float(g @ w),
        torque=float(dq * ((xi * g) @ w)))


def potential_expectations(profile: StateProfile, traj: TrajectoryState,
                           potential: PotentialModel, t: float | None = None,
                           *, force_quadrature: bool = False,
                           verify: bool = False) -> PotentialMoments:
    """<Phi>, <dPhi/dx> and the torque <(x - <q>) dPhi/dx> over the packet.

    Polynomial-type potentials use exact profile moments unless
    force_quadrature is set; verify=True re-does the quadrature at doubled
    resolution and raises QuadratureError when the two disagree.
    """
    t = traj.t if t is None else t
    if not force_quadrature:
        closed = potential.profile_moments(profile, traj.q_mean, traj.dq, t)
        if closed is not None:
            return closed
    mom = _quadrature_moments(profile, traj.q_mean, traj.dq, potential, t)
    if verify:
        fine = _quadrature_moments(profile, traj.q_mean, traj.dq, potential, t, refine=2)
        for a, b, label in ((mom.phi_mean, fine.phi_mean, "phi_mean"),
                            (mom.grad_phi_mean, fine.grad_phi_mean, "grad_phi_mean"),
                            (mom.torque, fine.torque, "torque")):
            if abs(a - b) > 1e-6 * max(1.0, abs(a)):
                raise QuadratureError(
                    f"{label} changed by {abs(a - b):.3e} under resolution doubling")
    return mom


def _rhs(y: np.ndarray, t: float, profile: StateProfile, potential: PotentialModel,
         law: DispersionLaw, constants: PhysConstants,
         force_quadrature: bool = False) -> tuple[np.ndarray, PotentialMoments]:
    q, v, dq, dqd, _ = y
    if dq < DQ_FLOOR:
        raise SingularDispersionError(f"dq = {dq:.3e} at t = {t:.6f}")
    m = constants.mass
    hbar = constants.hbar
    if force_quadrature:
        mom = _quadrature_moments(profile, q, dq, potential, t)
    else:
        mom = potential.profile_moments(profile, q, dq, t)
        if mom is None:
            mom = _quadrature_moments(profile, q, dq, potential, t)
    v_dot = -mom.grad_phi_mean / m
    if law is DispersionLaw.PROJECTED:
        dqd_dot = (profile.force_moment / dq ** 2 - mom.torque) / (m * dq)
    else:
        dqd_dot = (2.0 / (m * dq)) * (-mom.phi_mean + 0.5 * m * v ** 2
                                      - 0.5 * m * profile.osmotic_moment / dq ** 2)
    phi_center = float(np.asarray(potential.phi(np.array([q]), t))[0])
    s0_dot = (-m * v_dot * q - 0.5 * m * v ** 2
              + 0.5 * m * profile.center_value ** 2 / dq ** 2
              + 0.5 * hbar * profile.center_slope / dq ** 2
              - phi_center)
    return np.array([v, v_dot, dqd, dqd_dot, s0_dot]), mom


def trajectory_rhs(traj: TrajectoryState, profile: StateProfile,
                   potential: PotentialModel, law: DispersionLaw = DispersionLaw.PROJECTED,
                   t: float | None = None,
                   constants: PhysConstants | None = None) -> np.ndarray:
    """Time derivatives (q', v', dq', dq_dot', S0') at one state."""
    c = constants if constants is not None else profile.constants
    y = np.array([traj.q_mean, traj.v_mean, traj.dq, traj.dq_dot, traj.S0])
    d, _ = _rhs(y, traj.t if t is None else t, profile, potential,
                DispersionLaw(law), c)
    return d


@dataclass
class TrajectoryRecord:
    """Time series of the dynamical state plus derived diagnostics.

    Treated as immutable after production; state_at() interpolates with
    cubic splines for consumers that need off-node values (PDE comparison,
    path sampling, potential synthesis).
    """

    t: np.ndarray
    q_mean: np.ndarray
    v_mean: np.ndarray
    dq: np.ndarray
    dq_dot: np.ndarray
    S0: np.ndarray
    v_mean_dot: np.ndarray
    dq_ddot: np.ndarray
    S0_dot: np.ndarray
    phi_mean: np.ndarray
    grad_phi_mean: np.ndarray
    uncertainty_product: np.ndarray
    f: np.ndarray
    g: np.ndarray
    feedback_residual: np.ndarray
    profile: StateProfile
    constants: PhysConstants
    law: DispersionLaw
    dq_reference: float
    complete: bool = True
    halt_reason: str = ""
    _splines: dict = field(default_factory=dict, repr=False)

    def _spline(self, name: str) -> CubicSpline:
        if name not in self._splines:
            self._splines[name] = CubicSpline(self.t, getattr(self, name))
        return self._splines[name]

    def _clamped(self, t):
        t = np.asarray(t, dtype=float)
        eps = 1e-9 * max(1.0, abs(self.t[-1]))
        if np.any(t < self.t[0] - eps) or np.any(t > self.t[-1] + eps):
            raise ValueError(f"t outside the recorded span [{self.t[0]}, {self.t[-1]}]")
        return np.clip(t, self.t[0], self.t[-1])

    def state_at(self, t: float) -> TrajectoryState:
        tc = float(self._clamped(t))
        return TrajectoryState(
            q_mean=float(self._spline("q_mean")(tc)),
            v_mean=float(self._spline("v_mean")(tc)),
            dq=float(self._spline("dq")(tc)),
            dq_dot=float(self._spline("dq_dot")(tc)),
            S0=float(self._spline("S0")(tc)),
            t=tc)

    def channels_at(self, t, names) -> list:
        """Vectorized spline evaluation of several channels at times t."""
        tc = self._clamped(t)
        return [self._spline(n)(tc) for n in names]

    def to_csv(self, path) -> None:
        rows = np.column_stack([getattr(self, name) for name in TRAJECTORY_COLUMNS])
        with open(path, "w") as fh:
            fh.write(SCHEMA_HEADER + "\n")
            fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _record_from_rows(ts, ys, derivs, moms, profile, constants, law,
                      potential) -> TrajectoryRecord:
    ts = np.asarray(ts)
    ys = np.asarray(ys)
    derivs = np.asarray(derivs)
    m = constants.mass
    hbar = constants.hbar
    dq0 = ys[0, 2]
    dq = ys[:, 2]
    dqd = ys[:, 3]
    f = -0.5 * np.log(dq / dq0)
    denom = 1.0 - 2.0 * f
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(np.abs(denom) > 1e-12,
                     (m / hbar) * (dqd / dq) / denom, np.nan)
    L = m * dq * dqd
    uncert = m ** 2 * profile.osmotic_moment + L ** 2
    grad_at_center = np.array(
        [float(np.asarray(potential.grad_phi(np.array([q]), t))[0])
         for q, t in zip(ys[:, 0], ts)])
    phi_mean = np.array([mm.phi_mean for mm in moms])
    grad_mean = np.array([mm.grad_phi_mean for mm in moms])
    shape_term = (m * profile.center_value * profile.center_slope
                  + 0.5 * hbar * profile.center_curvature) / dq ** 3
    residual = (grad_at_center - grad_mean) - shape_term
    return TrajectoryRecord(
        t=ts, q_mean=ys[:, 0], v_mean=ys[:, 1], dq=dq, dq_dot=dqd, S0=ys[:, 4],
        v_mean_dot=derivs[:, 1], dq_ddot=derivs[:, 3], S0_dot=derivs[:, 4],
        phi_mean=phi_mean, grad_phi_mean=grad_mean, uncertainty_product=uncert,
        f=f, g=g, feedback_residual=residual,
        profile=profile, constants=constants, law=law, dq_reference=float(dq0))


def integrate(initial: TrajectoryState, profile: StateProfile,
              potential: PotentialModel,
              law: DispersionLaw = DispersionLaw.PROJECTED, *,
              t_span: tuple[float, float], dt: float, record_stride: int = 1,
              constants: PhysConstants | None = None,
              verify_quadrature: bool = True,
              truncate_on_singularity: bool = False) -> TrajectoryRecord:
    """Fixed-step classical RK4 integration of the coupled dynamics.

    Records the state, its derivatives and the derived diagnostics every
    record_stride steps (plus the final point).  Raises
    SingularDispersionError when dq collapses and ValueError on non-finite
    state components; with truncate_on_singularity=True a collapse instead
    ends the run early and the partial record is returned with
    complete=False (used to document the energy-balance law's behaviour).
    """
    law = DispersionLaw(law)
    c = constants if constants is not None else profile.constants
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    t0, t1 = t_span
    if not t1 > t0:
        raise ValueError("t_span must have positive length")
    n_steps = max(1, int(round((t1 - t0) / dt)))  # span quantized to whole steps
    if verify_quadrature and potential.profile_moments(
            profile, initial.q_mean, initial.dq, t0) is None:
        potential_expectations(profile, initial, potential, t0,
                               force_quadrature=True, verify=True)

    y = np.array([initial.q_mean, initial.v_mean, initial.dq, initial.dq_dot,
                  initial.S0])
    ts_rec, ys_rec, d_rec, m_rec = [], [], [], []

    def record(t, y):
        d, mom = _rhs(y, t, profile, potential, law, c)
        ts_rec.append(t)
        ys_rec.append(y.copy())
        d_rec.append(d)
        m_rec.append(mom)

    record(t0, y)
    complete, halt_reason = True, ""
    for step in range(n_steps):
        t = t0 + step * dt
        try:
            k1, _ = _rhs(y, t, profile, potential, law, c)
            k2, _ = _rhs(y + 0.5 * dt * k1, t + 0.5 * dt, profile, potential, law, c)
            k3, _ = _rhs(y + 0.5 * dt * k2, t + 0.5 * dt, profile, potential, law, c)
            k4, _ = _rhs(y + dt * k3, t + dt, profile, potential, law, c)
            y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y_new)):
                raise ValueError(f"non-finite state at t = {t + dt:.6f}: {y_new}")
            if y_new[2] < DQ_FLOOR:
                raise SingularDispersionError(
                    f"dq = {y_new[2]:.3e} at t = {t + dt:.6f}")
        except SingularDispersionError as err:
            if not truncate_on_singularity:
                raise
            complete, halt_reason = False, str(err)
            if ts_rec[-1] < t:  # keep the last healthy state
                record(t, y)
            break
        y = y_new
        if (step + 1) % record_stride == 0 or step == n_steps - 1:
            record(t0 + (step + 1) * dt, y)

    rec = _record_from_rows(ts_rec, ys_rec, d_rec, m_rec, profile, c, law,
                            potential)
    rec.complete = complete
    rec.halt_reason = halt_reason
    return rec


def kinematic_record(profile: StateProfile, *, center, center_rate, center_accel,
                     dispersion, dispersion_rate, dispersion_accel,
                     t_span: tuple[float, float], dt: float,
                     constants: PhysConstants | None = None) -> TrajectoryRecord:
    """Record for a prescribed (not integrated) trajectory.

    center/center_rate/center_accel and the dispersion triple are callables
    of t.  S0 is integrated from the center closure with a zero potential
    reference, so a potential synthesized from this record satisfies
    Phi(<q>(t), t) = 0.
    """
    c = constants if constants is not None else profile.constants
    t0, t1 = t_span
    n_steps = int(round((t1 - t0) / dt))
    ts = t0 + dt * np.arange(n_steps + 1)
    m, hbar = c.mass, c.hbar

    def s0_rate(t):
        return (-m * center_accel(t) * center(t) - 0.5 * m * center_rate(t) ** 2
                + 0.5 * m * profile.center_value ** 2 / dispersion(t) ** 2
                + 0.5 * hbar * profile.center_slope / dispersion(t) ** 2)

    # composite Simpson accumulation of the S0 closure
    S0 = np.empty(n_steps + 1)
    S0[0] = 0.0
    for i in range(n_steps):
        a, b = ts[i], ts[i + 1]
        S0[i + 1] = S0[i] + (dt / 6.0) * (s0_rate(a) + 4.0 * s0_rate(0.5 * (a + b))
                                          + s0_rate(b))

    q = np.array([center(t) for t in ts])
    v = np.array([center_rate(t) for t in ts])
    a = np.array([center_accel(t) for t in ts])
    dq = np.array([dispersion(t) for t in ts])
    dqd = np.array([dispersion_rate(t) for t in ts])
    dqdd = np.array([dispersion_accel(t) for t in ts])
    if np.any(dq < DQ_FLOOR):
        raise SingularDispersionError("prescribed dispersion below the floor")
    s0d = np.array([s0_rate(t) for t in ts])

    dq0 = dq[0]
    f = -0.5 * np.log(dq / dq0)
    denom = 1.0 - 2.0 * f
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(np.abs(denom) > 1e-12, (m / hbar) * (dqd / dq) / denom, np.nan)
    uncert = m ** 2 * profile.osmotic_moment + (m * dq * dqd) ** 2
    zeros = np.zeros_like(ts)
    return TrajectoryRecord(
        t=ts, q_mean=q, v_mean=v, dq=dq, dq_dot=dqd, S0=S0,
        v_mean_dot=a, dq_ddot=dqdd, S0_dot=s0d,
        phi_mean=zeros, grad_phi_mean=-m * a, uncertainty_product=uncert,
        f=f, g=g, feedback_residual=zeros,
        profile=profile, constants=c, law=DispersionLaw.PROJECTED,
        dq_reference=float(dq0))


class SynthesizedPotential(PotentialModel):
    """Feedback potential inverted from the hydrodynamic balance of a record.

    Phi(x,t) = -dS/dt - (m/2) v^2 + (m/2) u^2 + (hbar/2) du/dx with the
    closed-form fields of the self-similar packet; the scalar coefficients
    are spline-interpolated in t from the record, the shape terms come from
    the profile, so evaluation is exact in x at any recorded time.
    """

    kind = "synthesized-table"
    static = False

    def __init__(self, profile: StateProfile, record: TrajectoryRecord):
        self.profile = profile
        self.record = record
        self.constants = record.constants
        self.t_span = (float(record.t[0]), float(record.t[-1]))

    def _coeffs(self, t: float):
        rec = self.record
        q, v, vdot, dq, dqd, dqdd, s0d = rec.channels_at(
            t, ("q_mean", "v_mean", "v_mean_dot", "dq", "dq_dot", "dq_ddot",
                "S0_dot"))
        return (float(q), float(v), float(vdot), float(dq), float(dqd),
                float(dqdd), float(s0d))

    def phi(self, x, t):
        q, v, vdot, dq, dqd, dqdd, s0d = self._coeffs(t)
        m, hbar = self.constants.mass, self.constants.hbar
        x = np.asarray(x, dtype=float)
        rel = x - q
        beta = dqd / dq
        beta_dot = dqdd / dq - beta ** 2
        dtS = m * vdot * x + 0.5 * m * rel ** 2 * beta_dot - m * rel * v * beta + s0d
        vfield = v + rel * beta
        xi = rel / dq
        G = self.profile.osmotic_shape(xi)
        Gp = self.profile.osmotic_shape_d1(xi)
        u = G / dq
        du = Gp / dq ** 2
        return -dtS - 0.5 * m * vfield ** 2 + 0.5 * m * u ** 2 + 0.5 * hbar * du

    def grad_phi(self, x, t):
        q, v, vdot, dq, dqd, dqdd, s0d = self._coeffs(t)
        m, hbar = self.constants.mass, self.constants.hbar
        x = np.asarray(x, dtype=float)
        rel = x - q
        xi = rel / dq
        G = self.profile.osmotic_shape(xi)
        Gp = self.profile.osmotic_shape_d1(xi)
        Gpp = self.profile.osmotic_shape_d2(xi)
        return (-m * vdot - m * rel * dqdd / dq
                + (m * G * Gp + 0.5 * hbar * Gpp) / dq ** 3)


def synthesize_potential(profile: StateProfile,
                         record: TrajectoryRecord) -> SynthesizedPotential:
    """Build the time-interpolated feedback potential from a trajectory record.

    The record must be dense enough (dt <= 1e-2) for the coefficient splines
    to carry the full accuracy of the closed-form fields.
    """
    steps = np.diff(record.t)
    if np.max(steps) > 1e-2 + 1e-12:
        raise ValueError("record too sparse for synthesis; need dt <= 1e-2")
    return SynthesizedPotential(profile, record)


def feedback_diagnostic(profile: StateProfile, traj: TrajectoryState,
                        potential: PotentialModel, t: float | None = None,
                        moments: PotentialMoments | None = None,
                        constants: PhysConstants | None = None) -> float:
    """Residual of the feedback relation at the packet center.

    r = [dPhi/dx|_<q> - <dPhi/dx>] - [(m/2) d(u^2)/dx + (hbar/2) d2u/dx2]|_0,
    with the u-terms expressed through the profile shape functions.
    """
    c = constants if constants is not None else profile.constants
    t = traj.t if t is None else t
    if moments is None:
        moments = potential_expectations(profile, traj, potential, t)
    grad_center = float(np.asarray(potential.grad_phi(np.array([traj.q_mean]), t))[0])
    shape_term = (c.mass * profile.center_value * profile.center_slope
                  + 0.5 * c.hbar * profile.center_curvature) / traj.dq ** 3
    return (grad_center - moments.grad_phi_mean) - shape_term


def ehrenfest_defect(record: TrajectoryRecord) -> float:
    """Max deviation of <v>(t) from <v>(0) - integral of <dPhi/dx>/m dt.

    The integral uses composite Simpson over the recorded nodes, an
    independent route from the RK4 update, so this measures the integrator's
    consistency with the classical motion.
    """
    m = record.constants.mass
    integral = cumulative_simpson(-record.grad_phi_mean / m, x=record.t, initial=0.0)
    return float(np.max(np.abs(record.v_mean - (record.v_mean[0] + integral))))
