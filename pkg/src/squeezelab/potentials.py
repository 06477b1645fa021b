"""External potentials: evaluable Phi(x,t) with gradients and profile moments.

Every potential provides phi(x, t) and grad_phi(x, t) on arrays.  Kinds whose
shape is polynomial in x additionally expose closed-form expectations over a
unit-variance profile (profile_moments), which the trajectory integrator uses
in its inner loop; the generic quadrature route in dynamics.potential_
expectations remains the reference implementation and the two are cross
checked in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .grid import PhysConstants

__all__ = [
    "PotentialMoments",
    "PotentialModel",
    "HarmonicPotential",
    "TimeHarmonicPotential",
    "PolynomialPotential",
    "free_potential",
    "quench_potential",
    "validate_gradient",
]


@dataclass(frozen=True)
class PotentialMoments:
    """Expectations over the packet: <Phi>, <dPhi/dx> and the dispersion torque
    <(x - <q>) dPhi/dx>."""

    phi_mean: float
    grad_phi_mean: float
    torque: float


class PotentialModel:
    """Base interface; subclasses set `kind` and implement phi/grad_phi."""

    kind = "abstract"
    static = False  # True when phi(x, t) does not depend on t

    def phi(self, x, t):
        raise NotImplementedError

    def grad_phi(self, x, t):
        raise NotImplementedError

    def phi_at(self, x: float, t: float) -> float:
        """Scalar evaluation (hot path of the trajectory integrator)."""
        return float(np.asarray(self.phi(np.array([x]), t))[0])

    def grad_phi_at(self, x: float, t: float) -> float:
        return float(np.asarray(self.grad_phi(np.array([x]), t))[0])

    def profile_moments(self, profile, q_mean: float, dq: float, t: float):
        """Closed-form PotentialMoments for a normalized unit-variance profile,
        or None when only the quadrature route applies."""
        return None


@dataclass(frozen=True)
class HarmonicPotential(PotentialModel):
    """Phi = (m omega^2 / 2)(x - center)^2."""

    omega: float
    constants: PhysConstants = PhysConstants()
    center: float = 0.0
    kind = "harmonic"
    static = True

    def phi(self, x, t=0.0):
        return 0.5 * self.constants.mass * self.omega ** 2 * (np.asarray(x) - self.center) ** 2

    def grad_phi(self, x, t=0.0):
        return self.constants.mass * self.omega ** 2 * (np.asarray(x) - self.center)

    def profile_moments(self, profile, q_mean, dq, t=0.0):
        k = self.constants.mass * self.omega ** 2
        d = q_mean - self.center
        # <xi> = 0 and <xi^2> = 1 for normalized profiles
        return PotentialMoments(phi_mean=0.5 * k * (d ** 2 + dq ** 2),
                                grad_phi_mean=k * d,
                                torque=k * dq ** 2)


@dataclass(frozen=True)
class TimeHarmonicPotential(PotentialModel):
    """Harmonic well with time-dependent angular frequency omega(t)."""

    omega_fn: object  # callable t -> omega
    constants: PhysConstants = PhysConstants()
    center: float = 0.0
    kind = "time-harmonic"
    static = False

    def _k(self, t):
        return self.constants.mass * float(self.omega_fn(t)) ** 2

    def phi(self, x, t):
        return 0.5 * self._k(t) * (np.asarray(x) - self.center) ** 2

    def grad_phi(self, x, t):
        return self._k(t) * (np.asarray(x) - self.center)

    def profile_moments(self, profile, q_mean, dq, t):
        k = self._k(t)
        d = q_mean - self.center
        return PotentialMoments(phi_mean=0.5 * k * (d ** 2 + dq ** 2),
                                grad_phi_mean=k * d,
                                torque=k * dq ** 2)


def quench_potential(omega_before: float, omega_after: float, switch_time: float = 0.0,
                     constants: PhysConstants = PhysConstants()) -> TimeHarmonicPotential:
    """Sudden frequency quench omega_before -> omega_after at switch_time."""
    def omega(t, _b=omega_before, _a=omega_after, _s=switch_time):
        return _a if t >= _s else _b
    return TimeHarmonicPotential(omega_fn=omega, constants=constants)


@dataclass(frozen=True)
class PolynomialPotential(PotentialModel):
    """Phi = sum_j coeffs[j] x^j (ascending order; empty tuple = free particle)."""

    coeffs: tuple = ()
    kind = "polynomial"
    static = True
    _grad_coeffs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_grad_coeffs",
                           tuple(j * c[j] for j in range(1, len(c))))

    def phi(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        if not self.coeffs:
            return np.zeros_like(x)
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def grad_phi(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        if not self._grad_coeffs:
            return np.zeros_like(x)
        return np.polynomial.polynomial.polyval(x, self._grad_coeffs)

    def profile_moments(self, profile, q_mean, dq, t=0.0):
        if len(self.coeffs) > profile.moments.size:
            return None  # degree beyond the precomputed <xi^k> table
        mu = profile.moments

        def poly_mean(coeffs, extra_xi_power=0):
            # <x^j xi^p> with x = q_mean + dq xi, expanded binomially
            total = 0.0
            for j, cj in enumerate(coeffs):
                if cj == 0.0:
                    continue
                s = sum(comb(j, i) * q_mean ** (j - i) * dq ** i * mu[i + extra_xi_power]
                        for i in range(j + 1))
                total += cj * s
            return total

        return PotentialMoments(
            phi_mean=poly_mean(self.coeffs),
            grad_phi_mean=poly_mean(self._grad_coeffs),
            torque=dq * poly_mean(self._grad_coeffs, extra_xi_power=1))


def free_potential() -> PolynomialPotential:
    return PolynomialPotential(())


def validate_gradient(potential: PotentialModel, xs, ts, rel_tol: float = 1e-6,
                      h: float = 1e-6) -> float:
    """Max relative deviation of grad_phi from a central difference of phi.

    Raises ValueError when the deviation exceeds rel_tol (the PotentialModel
    invariant).
    """
    xs = np.asarray(xs, dtype=float)
    worst = 0.0
    for t in np.atleast_1d(ts):
        g = np.asarray(potential.grad_phi(xs, t), dtype=float)
        fd = (np.asarray(potential.phi(xs + h, t)) - np.asarray(potential.phi(xs - h, t))) / (2 * h)
        scale = max(np.max(np.abs(g)), 1.0)
        worst = max(worst, float(np.max(np.abs(g - fd)) / scale))
    if worst > rel_tol:
        raise ValueError(f"gradient inconsistent with phi: rel. deviation {worst:.3e}")
    return worst
