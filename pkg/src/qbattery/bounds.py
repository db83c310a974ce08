"""Upper envelopes on incoherent (classical) charging protocols.

The per-collision excitation rate sin^2(f theta)/theta is maximised over the
swap angle by a universal constant (about 0.7246, reached near 1.1656); from
it follow the closed-form oscillator envelope, the transcendental spin
envelope, the full-charge times, and the loss-corrected envelope obtained by
integrating the damped rate inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "SwapRateOptimum",
    "golden_section_max",
    "optimal_swap_rate",
    "oscillator_energy_bound",
    "oscillator_power_bound",
    "spin_jz_envelope",
    "spin_energy_bound",
    "spin_full_charge_time",
    "spin_power_cap",
    "lossy_energy_bound",
    "lossy_energy_bound_curve",
]

GOLDEN_TOL = 1e-12
BISECTION_TOL = 1e-10
RK4_STEP = 1e-3

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(func, a: float, b: float, tol: float = GOLDEN_TOL) -> float:
    """Argmax of a unimodal function on [a, b] to interval width tol."""
    c = b - (b - a) * _INVPHI
    d = a + (b - a) * _INVPHI
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INVPHI
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INVPHI
            fd = func(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class SwapRateOptimum:
    """Maximum of sin^2(x)/x on (0, pi) and the angle attaining it.

    The best per-collision excitation rate on a transition of amplitude f is
    rate * f, reached at swap angle angle / f.
    """

    rate: float
    angle: float

    def angle_for_amplitude(self, amplitude: float) -> float:
        return self.angle / amplitude


@lru_cache(maxsize=1)
def optimal_swap_rate() -> SwapRateOptimum:
    """Golden-section maximisation of sin^2(x)/x on (0, pi).

    Value comparisons localise the argmax only to sqrt(eps) ~ 1e-8, so the
    result is polished by bisecting the sign change of the derivative
    x sin(2x) - sin^2(x), pinning the stationary point to ~1e-13.
    """
    x = golden_section_max(lambda t: math.sin(t) ** 2 / t, 1e-9, math.pi)
    slope = lambda t: t * math.sin(2.0 * t) - math.sin(t) ** 2
    lo, hi = x - 1e-6, x + 1e-6
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    return SwapRateOptimum(rate=math.sin(x) ** 2 / x, angle=x)


def oscillator_energy_bound(omega_tau, energy: float = 1.0):
    """Best incoherent mean energy of an oscillator battery at time tau:
    E R (Omega tau) (1 + R Omega tau / 4)."""
    r = optimal_swap_rate().rate
    tau = np.asarray(omega_tau, dtype=float)
    out = energy * r * tau * (1.0 + r * tau / 4.0)
    return float(out) if np.isscalar(omega_tau) else out


def oscillator_power_bound(omega_tau, energy: float = 1.0):
    """Matching cap on the cumulative power: E Omega R (1 + R Omega tau / 4)."""
    r = optimal_swap_rate().rate
    tau = np.asarray(omega_tau, dtype=float)
    out = energy * r * (1.0 + r * tau / 4.0)
    return float(out) if np.isscalar(omega_tau) else out


def _spin_lhs(jz: float, j: float) -> float:
    """arctan[(2Jz+1) / (2 f(j, Jz))], continuously extended to pi/2 at Jz=j."""
    gap = j * (j + 1.0) - jz * (jz + 1.0)
    if gap <= 0.0:
        return math.pi / 2.0
    return math.atan((2.0 * jz + 1.0) / (2.0 * math.sqrt(gap)))


def spin_jz_envelope(omega_tau: float, j: float) -> float:
    """Upper envelope of <Jz> for incoherent charging of a spin-j battery.

    Solves arctan[(2Jz+1)/(2 f(j,Jz))] - arctan[(1-2j)/(2 f(j,-j))] =
    R Omega tau for Jz by bisection on [-j, j]; the result saturates at j.
    The subtracted constant is the left side at the initial condition
    Jz(0) = -j, which makes the envelope start at -j and dominate every
    discrete protocol.
    """
    if omega_tau < 0:
        raise ValueError(f"omega_tau must be nonnegative, got {omega_tau}")
    target = optimal_swap_rate().rate * omega_tau + _spin_lhs(-j, j)
    if target <= _spin_lhs(-j, j):
        return -j
    if target >= math.pi / 2.0:
        return j
    lo, hi = -j, j
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _spin_lhs(mid, j) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spin_energy_bound(omega_tau, j: float, energy: float = 1.0):
    """Best incoherent spin-battery energy relative to the ground state:
    E (Jz_envelope + j)."""
    if np.isscalar(omega_tau):
        return energy * (spin_jz_envelope(float(omega_tau), j) + j)
    return np.array([energy * (spin_jz_envelope(float(t), j) + j) for t in omega_tau])


def spin_full_charge_time(j: float) -> float:
    """Minimum Omega tau for a full incoherent charge of a spin-j battery:
    [arctan((2j+1)/2) - arctan((1-2j)/2)] / R, approaching pi/R for large j."""
    if j < 0.5:
        raise ValueError(f"spin quantum number must be at least 1/2, got {j}")
    r = optimal_swap_rate().rate
    return (math.atan((2.0 * j + 1.0) / 2.0) - math.atan((1.0 - 2.0 * j) / 2.0)) / r


def spin_power_cap(j: float, energy: float = 1.0) -> float:
    """Cap on the average power of a full incoherent charge: 2 E j Omega R / pi."""
    return 2.0 * energy * j * optimal_swap_rate().rate / math.pi


def _lossy_rate(value: float, rate: float, gamma: float) -> float:
    return rate * (1.0 - gamma) * math.sqrt(value + 1.0) - (2.0 / math.pi) * gamma * value


def _rk4_advance(value: float, span: float, rate: float, gamma: float, max_step: float) -> float:
    steps = max(1, math.ceil(span / max_step))
    h = span / steps
    for _ in range(steps):
        k1 = _lossy_rate(value, rate, gamma)
        k2 = _lossy_rate(value + 0.5 * h * k1, rate, gamma)
        k3 = _lossy_rate(value + 0.5 * h * k2, rate, gamma)
        k4 = _lossy_rate(value + h * k3, rate, gamma)
        value += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return value


def lossy_energy_bound(omega_tau: float, gamma: float, energy: float = 1.0) -> float:
    """Incoherent envelope for an oscillator battery with attenuation gamma
    between collisions, from RK4 integration (step 1e-3) of

        dE/dtau = R (1-gamma) sqrt(E + 1) - (2/pi) gamma E,  E(0) = 0.

    The waiting time itself is not counted in tau.  Reduces to the closed
    form at gamma = 0.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"damping parameter must lie in [0, 1), got {gamma}")
    if omega_tau < 0:
        raise ValueError(f"omega_tau must be nonnegative, got {omega_tau}")
    r = optimal_swap_rate().rate
    return energy * _rk4_advance(0.0, omega_tau, r, gamma, RK4_STEP)


def lossy_energy_bound_curve(omega_taus: np.ndarray, gamma: float, energy: float = 1.0) -> np.ndarray:
    """lossy_energy_bound on an increasing time grid, in one integration pass."""
    taus = np.asarray(omega_taus, dtype=float)
    if np.any(np.diff(taus) < 0):
        raise ValueError("time grid must be nondecreasing")
    r = optimal_swap_rate().rate
    out = np.empty_like(taus)
    value, prev = 0.0, 0.0
    for i, t in enumerate(taus):
        if t > prev:
            value = _rk4_advance(value, t - prev, r, gamma, RK4_STEP)
            prev = t
        out[i] = energy * value
    return out
