"""Exact collision channel, bosonic damping, and per-step generators.

A collision is a partial swap between the battery ladder and a resonant
two-level unit, generated by the exchange coupling A (x) |e><g| + h.c. for a
swap angle theta.  Because the coupling conserves the total excitation
number, the joint unitary decomposes into 2x2 rotation blocks and every
matrix element is a closed-form sine/cosine of f(n)*theta.  No matrix
exponential is ever taken; applying a channel costs O(d^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    BatteryKind,
    BatteryModel,
    QubitState,
    qubit_density,
    transition_amplitudes,
)

__all__ = [
    "CollisionOperators",
    "KrausSet",
    "collision_operators",
    "collision_kraus",
    "collision_applier",
    "apply_collision",
    "incoherent_population_step",
    "apply_damping",
    "damping_population_matrix",
    "state_support",
    "lowering_operator",
    "dissipator",
    "generator_exact",
    "generator_dissipator_form",
    "generator_small_theta",
]

DAMPING_SERIES_RESIDUAL = 1e-16


@dataclass(frozen=True)
class CollisionOperators:
    """Closed-form blocks <x|U|y> of one collision unitary.

    cos_ground[n]  = cos(f(n) theta)      (unit stays in |g>; f(0) := 0)
    cos_excited[n] = cos(f(n+1) theta)    (unit stays in |e>; f(d) := 0)
    sin_step[n-1]  = sin(f(n) theta)      (one quantum exchanged, n-1 <-> n)

    The battery-lowering block is i<e|U|g> and carries sin_step on entries
    (n-1, n); its transpose is the raising block i<g|U|e>.  Unitarity of the
    underlying swap gives cos_ground^2 + raising*lowering = 1 and
    cos_excited^2 + lowering*raising = 1.
    """

    cos_ground: np.ndarray
    cos_excited: np.ndarray
    sin_step: np.ndarray

    @property
    def dim(self) -> int:
        return self.cos_ground.shape[0]

    def ground_matrix(self) -> np.ndarray:
        return np.diag(self.cos_ground)

    def excited_matrix(self) -> np.ndarray:
        return np.diag(self.cos_excited)

    def lowering_matrix(self) -> np.ndarray:
        return np.diag(self.sin_step, k=1)

    def raising_matrix(self) -> np.ndarray:
        return np.diag(self.sin_step, k=-1)

    def unitarity_defect(self) -> float:
        d = self.dim
        sin2 = np.concatenate(([0.0], self.sin_step ** 2))
        ground = np.abs(self.cos_ground ** 2 + sin2 - 1.0)
        sin2_up = np.concatenate((self.sin_step ** 2, [0.0]))
        excited = np.abs(self.cos_excited ** 2 + sin2_up - 1.0)
        return float(max(ground.max(), excited.max()))


def collision_operators(model: BatteryModel, theta: float) -> CollisionOperators:
    """Build the collision blocks for a swap angle theta >= 0."""
    if not math.isfinite(theta):
        raise ValueError(f"swap angle must be finite, got {theta}")
    f = transition_amplitudes(model)
    f_from_zero = np.concatenate(([0.0], f))          # f(n), n = 0..d-1
    f_to_top = np.concatenate((f, [0.0]))             # f(n+1), n = 0..d-1
    return CollisionOperators(
        cos_ground=np.cos(f_from_zero * theta),
        cos_excited=np.cos(f_to_top * theta),
        sin_step=np.sin(f * theta),
    )


@dataclass(frozen=True)
class KrausSet:
    """Kraus operators of one battery channel; sum M^dag M must be identity."""

    operators: tuple

    def completeness_defect(self) -> float:
        d = self.operators[0].shape[0]
        acc = np.zeros((d, d), dtype=complex)
        for m in self.operators:
            acc += m.conj().T @ m
        return float(np.max(np.abs(acc - np.eye(d))))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        for m in self.operators:
            out += m @ rho @ m.conj().T
        return out


def _qubit_branches(qubit: QubitState) -> list:
    """Eigen-decomposition of the unit state as (weight, <g|psi>, <e|psi>).

    Incoherent units use the energy eigenbasis directly, which also fixes the
    degenerate case q = 1/2, c = 0.  Zero-weight branches are dropped.
    """
    if qubit.is_incoherent:
        branches = [(qubit.q, 1.0 + 0j, 0.0 + 0j), (1.0 - qubit.q, 0.0 + 0j, 1.0 + 0j)]
    else:
        weights, vectors = np.linalg.eigh(qubit_density(qubit))
        branches = [
            (max(float(weights[i]), 0.0), complex(vectors[0, i]), complex(vectors[1, i]))
            for i in range(2)
        ]
    return [(w, a, b) for (w, a, b) in branches if w > 1e-15]


def _branch_bands(ops: CollisionOperators, weight: float, a: complex, b: complex) -> list:
    """Two banded Kraus operators for one unit eigenvector a|g> + b|e>.

    Returned as (diagonal, band, offset) with offset +1 (superdiagonal,
    battery-lowering) or -1 (subdiagonal, battery-raising).
    """
    root = math.sqrt(weight)
    # <g|U|psi> = a cos_ground - i b (raising block)
    m_ground = (root * a * ops.cos_ground, -1j * root * b * ops.sin_step, -1)
    # <e|U|psi> = -i a (lowering block) + b cos_excited
    m_excited = (root * b * ops.cos_excited, -1j * root * a * ops.sin_step, +1)
    return [m_ground, m_excited]


def _band_to_matrix(diag: np.ndarray, band: np.ndarray, offset: int) -> np.ndarray:
    return np.diag(diag.astype(complex)) + np.diag(band.astype(complex), k=offset)


def collision_kraus(model: BatteryModel, qubit: QubitState, theta: float) -> KrausSet:
    """Kraus set of one collision, from the eigen-decomposition of the unit.

    An incoherent unit yields four operators (two diagonal, two single-band);
    a pure unit yields two mixed-band operators.
    """
    ops = collision_operators(model, theta)
    mats = []
    for weight, a, b in _qubit_branches(qubit):
        for diag, band, offset in _branch_bands(ops, weight, a, b):
            mats.append(_band_to_matrix(diag, band, offset))
    return KrausSet(tuple(mats))


def collision_applier(model: BatteryModel, qubit: QubitState, theta: float):
    """Precompute one collision channel and return a function applying it in
    O(d^2).

    Every Kraus operator is diagonal plus one off-diagonal band, so the whole
    channel collapses to seven coefficient kernels acting on index-shifted
    copies of rho, independent of the number of Kraus operators.
    """
    ops = collision_operators(model, theta)
    d = ops.dim
    k00 = np.zeros((d, d), dtype=complex)
    kpp = np.zeros((d - 1, d - 1), dtype=complex)
    kmm = np.zeros((d - 1, d - 1), dtype=complex)
    k0p = np.zeros((d, d - 1), dtype=complex)
    kp0 = np.zeros((d - 1, d), dtype=complex)
    k0m = np.zeros((d, d - 1), dtype=complex)
    km0 = np.zeros((d - 1, d), dtype=complex)
    for branch in _qubit_branches(qubit):
        for diag, band, offset in _branch_bands(ops, *branch):
            k00 += np.outer(diag, diag.conj())
            if not np.any(band):
                continue
            if offset == +1:
                kpp += np.outer(band, band.conj())
                k0p += np.outer(diag, band.conj())
                kp0 += np.outer(band, diag.conj())
            else:
                kmm += np.outer(band, band.conj())
                k0m += np.outer(diag, band.conj())
                km0 += np.outer(band, diag.conj())

    def apply(rho: np.ndarray, support: int | None = None) -> np.ndarray:
        """Apply the channel; `support` restricts work to the top-left
        support x support block when the state is known to vanish outside."""
        w = d if support is None else min(max(support, 1), d)
        if w == d:
            out = k00 * rho
        else:
            out = np.zeros_like(rho, dtype=complex)
            out[:w, :w] = k00[:w, :w] * rho[:w, :w]
        out[: w - 1, : w - 1] += kpp[: w - 1, : w - 1] * rho[1:w, 1:w]
        out[1:w, 1:w] += kmm[: w - 1, : w - 1] * rho[: w - 1, : w - 1]
        out[:w, : w - 1] += k0p[:w, : w - 1] * rho[:w, 1:w]
        out[: w - 1, :w] += kp0[: w - 1, :w] * rho[1:w, :w]
        out[:w, 1:w] += k0m[:w, : w - 1] * rho[:w, : w - 1]
        out[1:w, :w] += km0[: w - 1, :w] * rho[: w - 1, :w]
        return out

    return apply


def apply_collision(
    rho: np.ndarray, model: BatteryModel, qubit: QubitState, theta: float
) -> np.ndarray:
    """One collision applied to a battery density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"state shape {rho.shape} does not match dim {model.dim}")
    return collision_applier(model, qubit, theta)(rho)


def incoherent_population_step(
    populations: np.ndarray, model: BatteryModel, q: float, theta: float
) -> np.ndarray:
    """Rate-equation update for a diagonal battery hit by an incoherent unit.

    p'(n) = P0(n) p(n) + P-(n+1) p(n+1) + P+(n-1) p(n-1) with
    P-(n) = q sin^2(f(n) theta) and P+(n) = (1-q) sin^2(f(n+1) theta);
    boundary terms use f(0) = f(d) = 0.
    """
    p = np.asarray(populations, dtype=float)
    if p.shape != (model.dim,):
        raise ValueError(f"population shape {p.shape} does not match dim {model.dim}")
    sin2 = np.sin(transition_amplitudes(model) * theta) ** 2
    down = q * np.concatenate(([0.0], sin2))            # P-(n)
    up = (1.0 - q) * np.concatenate((sin2, [0.0]))      # P+(n)
    out = (1.0 - down - up) * p
    out[:-1] += down[1:] * p[1:]
    out[1:] += up[:-1] * p[:-1]
    return np.clip(out, 0.0, None)


def _require_bosonic(model: BatteryModel):
    if model.kind is BatteryKind.SPIN:
        raise ValueError("damping channel applies to oscillator or uniform-ladder batteries only")


@lru_cache(maxsize=16)
def _damping_coefficients(dim: int, gamma: float) -> np.ndarray:
    """c[m, n] = sqrt(C(m, n) gamma^n (1-gamma)^(m-n)) for n <= m, else 0."""
    lgamma = np.vectorize(math.lgamma)
    m = np.arange(dim)[:, None].astype(float)
    n = np.arange(dim)[None, :].astype(float)
    mask = n <= m
    log_binom = lgamma(m + 1.0) - lgamma(n + 1.0) - lgamma(np.where(mask, m - n, 0.0) + 1.0)
    if gamma > 0.0:
        log_c2 = log_binom + n * math.log(gamma) + (m - n) * math.log1p(-gamma)
    else:
        log_c2 = np.where(n > 0, -np.inf, 0.0)
    return np.where(mask, np.exp(0.5 * log_c2), 0.0)


@lru_cache(maxsize=16)
def _damping_tails(dim: int, gamma: float) -> np.ndarray:
    """tails[m, n] = weight of losing more than n quanta from level m.

    Computed by summing the binomial weights from the right, so the series
    truncation test is free of cancellation.
    """
    c2 = _damping_coefficients(dim, gamma) ** 2
    tails = np.zeros_like(c2)
    tails[:, :-1] = np.cumsum(c2[:, :0:-1], axis=1)[:, ::-1]
    return tails


@lru_cache(maxsize=16)
def damping_population_matrix(dim: int, gamma: float) -> np.ndarray:
    """Binomial attenuation map on populations: p' = B p with
    B[k, m] = C(m, k) (1-gamma)^k gamma^(m-k) for k <= m."""
    c = _damping_coefficients(dim, gamma)
    b = np.zeros((dim, dim))
    for m in range(dim):
        b[m::-1, m] = c[m, : m + 1] ** 2     # column index n = quanta lost, k = m - n
    return b


def state_support(state: np.ndarray, cutoff: float = 1e-21) -> int:
    """Number of leading levels carrying population above cutoff.

    Positivity bounds every coherence by the geometric mean of its diagonal
    entries, so the whole matrix lives in the leading support x support
    block up to terms of order sqrt(cutoff).
    """
    diag = np.asarray(state)
    if diag.ndim == 2:
        diag = np.diagonal(diag)
    occupied = np.nonzero(diag.real > cutoff)[0]
    return int(occupied[-1]) + 1 if occupied.size else 1


def _dense_damping(state: np.ndarray, gamma: float, dim: int, support: int | None) -> np.ndarray:
    coeff = _damping_coefficients(dim, gamma)
    tails = _damping_tails(dim, gamma)
    w = dim if support is None else min(max(support, 1), dim)
    out = np.zeros_like(state, dtype=complex)
    diag = np.abs(np.diagonal(state).real[:w])
    for n in range(w):
        v = coeff[n:w, n]
        out[: w - n, : w - n] += (v[:, None] * state[n:w, n:w]) * v[None, :]
        if float(tails[:w, n] @ diag) < DAMPING_SERIES_RESIDUAL:
            break
    return out


def apply_damping(state: np.ndarray, gamma: float, model: BatteryModel) -> np.ndarray:
    """Attenuation channel losing a fraction gamma of each excitation.

    Density matrices go through the Kraus series a^n exp(-kappa t0 n/2); the
    series is truncated once the residual weight drops below 1e-16.  Diagonal
    states follow the equivalent binomial law.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"damping parameter must lie in [0, 1), got {gamma}")
    _require_bosonic(model)
    state = np.asarray(state)
    if gamma == 0.0:
        return state.copy()
    if state.ndim == 1:
        return damping_population_matrix(model.dim, gamma) @ state
    if state.shape != (model.dim, model.dim):
        raise ValueError(f"state shape {state.shape} does not match dim {model.dim}")
    return _dense_damping(state, gamma, model.dim, None)


def lowering_operator(model: BatteryModel) -> np.ndarray:
    """Ladder operator A with <n-1|A|n> = f(n)."""
    return np.diag(transition_amplitudes(model).astype(complex), k=1)


def dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """D[M] rho = M rho M^dag - {M^dag M, rho}/2."""
    gram = op.conj().T @ op
    return op @ rho @ op.conj().T - 0.5 * (gram @ rho + rho @ gram)


def generator_exact(model: BatteryModel, qubit: QubitState, theta: float):
    """Per-step generator L with L rho = (collision channel - identity) rho."""

    def generator(rho: np.ndarray) -> np.ndarray:
        return apply_collision(rho, model, qubit, theta) - np.asarray(rho, dtype=complex)

    return generator


def generator_dissipator_form(model: BatteryModel, qubit: QubitState, theta: float):
    """Same generator written as the coherence-weighted sum of dissipators.

    The incoherent part carries q (D[stay-g] + D[lower]) + (1-q) (D[stay-e] +
    D[raise]); the coherent part carries the two mixed jump/dephasing
    dissipators of a pure unit.  A partially coherent unit is the convex
    combination with weight c.
    """
    ops = collision_operators(model, theta)
    stay_g = ops.ground_matrix().astype(complex)
    stay_e = ops.excited_matrix().astype(complex)
    lower = ops.lowering_matrix().astype(complex)
    raise_ = ops.raising_matrix().astype(complex)
    q, c, alpha = qubit.q, qubit.c, qubit.alpha
    phase = np.exp(1j * alpha)
    coh_down = math.sqrt(q) * lower + 1j * math.sqrt(1.0 - q) * phase * stay_e
    coh_up = math.sqrt(1.0 - q) * raise_ + 1j * math.sqrt(q) * np.conj(phase) * stay_g

    def generator(rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        inc = q * (dissipator(stay_g, rho) + dissipator(lower, rho))
        inc += (1.0 - q) * (dissipator(stay_e, rho) + dissipator(raise_, rho))
        if c == 0.0:
            return inc
        coh = dissipator(coh_down, rho) + dissipator(coh_up, rho)
        return c * coh + (1.0 - c) * inc

    return generator


def generator_small_theta(model: BatteryModel, qubit: QubitState, theta: float):
    """Second-order expansion: theta^2 pump/decay dissipators plus, for
    coherent units, a first-order driving commutator of strength
    c sqrt(q(1-q)) theta."""
    low = lowering_operator(model)
    high = low.conj().T
    q, c, alpha = qubit.q, qubit.c, qubit.alpha
    drive = c * math.sqrt(q * (1.0 - q)) * theta
    drive_op = np.exp(-1j * alpha) * low + np.exp(1j * alpha) * high

    def generator(rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        out = theta ** 2 * (q * dissipator(low, rho) + (1.0 - q) * dissipator(high, rho))
        if drive != 0.0:
            out += -1j * drive * (drive_op @ rho - rho @ drive_op)
        return out

    return generator
