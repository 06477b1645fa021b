"""Closed-form reference solutions used to cross-check the integrators.

For quadratic Hamiltonians the variance dynamics closes exactly, so these
formulas are valid for any profile through its osmotic moment K:

    harmonic well:  (dq^2)'' = 4 E - 4 omega^2 dq^2  with the dispersion
    energy E = (dq_dot^2 + K/dq^2 + omega^2 dq^2)/2 conserved, giving an
    oscillation of dq^2 at frequency 2 omega;
    free particle:  dq^2(t) = dq0^2 + 2 dq0 dq_dot0 t + (K/dq0^2 + dq_dot0^2) t^2.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "harmonic_center",
    "harmonic_dispersion_sq",
    "free_dispersion_sq",
    "quench_dispersion_sq",
    "gouy_phase_free",
]


def harmonic_center(t, q0: float, v0: float, omega: float):
    """Classical center motion q(t) in a static harmonic well."""
    t = np.asarray(t, dtype=float)
    return q0 * np.cos(omega * t) + (v0 / omega) * np.sin(omega * t)


def harmonic_dispersion_sq(t, dq0: float, dq_dot0: float, K: float,
                           omega: float):
    """dq^2(t) in a static harmonic well for a self-similar packet."""
    t = np.asarray(t, dtype=float)
    spread0 = K / dq0 ** 2 + dq_dot0 ** 2  # Delta p0^2 / m^2
    return (dq0 ** 2 * np.cos(omega * t) ** 2
            + (dq0 * dq_dot0 / omega) * np.sin(2.0 * omega * t)
            + (spread0 / omega ** 2) * np.sin(omega * t) ** 2)


def free_dispersion_sq(t, dq0: float, dq_dot0: float, K: float):
    """dq^2(t) for free evolution."""
    t = np.asarray(t, dtype=float)
    return dq0 ** 2 + 2.0 * dq0 * dq_dot0 * t + (K / dq0 ** 2 + dq_dot0 ** 2) * t ** 2


def quench_dispersion_sq(t, omega_before: float, omega_after: float,
                         hbar: float = 1.0, mass: float = 1.0):
    """dq^2(t >= 0) after a sudden quench from the ground state of omega_before.

    Initial values dq0^2 = hbar/(2 m omega_before), dq_dot0 = 0 and the
    Gaussian K = (hbar/2m)^2 substituted into the harmonic closed form.
    """
    dq0 = np.sqrt(hbar / (2.0 * mass * omega_before))
    K = (0.5 * hbar / mass) ** 2
    return harmonic_dispersion_sq(t, dq0, 0.0, K, omega_after)


def gouy_phase_free(t, dq0: float, hbar: float = 1.0, mass: float = 1.0):
    """S0(t) of the freely spreading packet started at (dq0, dq_dot=0)."""
    t = np.asarray(t, dtype=float)
    return -0.5 * hbar * np.arctan(hbar * t / (2.0 * mass * dq0 ** 2))
