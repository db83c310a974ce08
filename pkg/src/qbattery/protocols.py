"""Charging schedules, the simulation loop, driving limits, and the
advantage-onset search.

A schedule is a finite list of (swap angle, unit state) pairs applied in
order, optionally interleaved with an attenuation channel of strength gamma
after every collision.  Runs on purely incoherent schedules starting from a
diagonal state use the rate-equation fast path on populations; anything else
evolves the full density matrix.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bounds import golden_section_max, lossy_energy_bound_curve, optimal_swap_rate
from .channels import (
    _dense_damping,
    collision_applier,
    damping_population_matrix,
    incoherent_population_step,
    state_support,
)
from .core import (
    BatteryKind,
    BatteryModel,
    QubitState,
    StateInvariantWarning,
    TruncationWarning,
    ground_density,
    ground_populations,
    ladder_amplitude,
    transition_amplitudes,
    validate_state,
)
from .observables import RecordBuilder, SimulationRecord, mean_energy

__all__ = [
    "ScheduleStep",
    "Schedule",
    "AdvantageOnset",
    "fixed_schedule",
    "full_swap_schedule",
    "run_protocol",
    "greedy_schedule_step",
    "run_greedy",
    "driving_limit_oscillator",
    "driving_limit_spin",
    "find_advantage_onset",
]

POLICIES = ("fixed", "fullswap", "greedy-cum", "greedy-trans", "adaptive")
TOP_LEVEL_WARN = 1e-6
GREEDY_MIN_GAIN = 1e-12
GREEDY_PROBES = 40


class ScheduleStep(NamedTuple):
    theta: float
    qubit: QubitState


@dataclass(frozen=True)
class Schedule:
    """Ordered collisions plus the inter-collision damping strength."""

    steps: tuple
    gamma: float = 0.0
    policy: str = "fixed"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}, expected one of {POLICIES}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"damping parameter must lie in [0, 1), got {self.gamma}")
        for step in self.steps:
            if not (math.isfinite(step.theta) and step.theta > 0.0):
                raise ValueError(f"swap angles must be positive and finite, got {step.theta}")

    @property
    def total_angle(self) -> float:
        return float(sum(step.theta for step in self.steps))

    @property
    def is_incoherent(self) -> bool:
        return all(step.qubit.is_incoherent for step in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


def fixed_schedule(
    theta: float, qubit: QubitState, n_steps: int, gamma: float = 0.0
) -> Schedule:
    """n_steps identical collisions at a constant swap angle."""
    if n_steps < 0:
        raise ValueError(f"number of steps must be nonnegative, got {n_steps}")
    return Schedule(tuple(ScheduleStep(theta, qubit) for _ in range(n_steps)), gamma, "fixed")


def full_swap_schedule(model: BatteryModel, n_swaps: int, gamma: float = 0.0) -> Schedule:
    """Deterministic ladder climb with excited units: step k swaps one full
    quantum on the k-th transition, theta_k = pi / (2 f(k)), keeping the
    battery in a pure level state."""
    if not 1 <= n_swaps <= model.capacity:
        raise ValueError(f"full swap supports 1..{model.capacity} steps, got {n_swaps}")
    excited = QubitState(q=0.0)
    steps = tuple(
        ScheduleStep(math.pi / (2.0 * ladder_amplitude(model, k)), excited)
        for k in range(1, n_swaps + 1)
    )
    return Schedule(steps, gamma, "fullswap")


def _wants_population_path(schedule: Schedule, initial_state) -> bool:
    if not schedule.is_incoherent:
        return False
    if initial_state is None:
        return True
    state = np.asarray(initial_state)
    if state.ndim == 1:
        return True
    off_diagonal = state - np.diag(np.diagonal(state))
    return bool(np.max(np.abs(off_diagonal)) == 0.0)


def run_protocol(
    model: BatteryModel,
    schedule: Schedule,
    initial_state: np.ndarray | None = None,
    *,
    record_distributions: bool = False,
    skip_final_damping: bool = False,
    force_dense: bool = False,
) -> SimulationRecord:
    """Run a schedule and record the per-step observables.

    Damping (if gamma > 0) acts once after every collision, including the
    last unless skip_final_damping is set; the recorded time counts
    collision angles only.
    """
    population_path = not force_dense and _wants_population_path(schedule, initial_state)
    if population_path:
        state = ground_populations(model) if initial_state is None else _as_populations(initial_state)
        damp = None
        if schedule.gamma > 0.0:
            if model.kind is BatteryKind.SPIN:
                raise ValueError("damping is not defined for the spin battery")
            damp = damping_population_matrix(model.dim, schedule.gamma)
    else:
        state = ground_density(model) if initial_state is None else np.asarray(initial_state, dtype=complex)
        if state.ndim == 1:
            state = np.diag(state.astype(complex))

    builder = RecordBuilder(model, state, keep_distributions=record_distributions)
    truncation_flagged = False
    appliers: dict = {}
    support = state_support(state) if not population_path else model.dim
    for index, (theta, qubit) in enumerate(schedule.steps):
        last = index == len(schedule.steps) - 1
        if population_path:
            state = incoherent_population_step(state, model, qubit.q, theta)
            if damp is not None and not (last and skip_final_damping):
                state = damp @ state
        else:
            key = (theta, qubit)
            if key not in appliers:
                appliers[key] = collision_applier(model, qubit, theta)
            support = min(support + 1, model.dim)
            state = appliers[key](state, support)
            if schedule.gamma > 0.0 and not (last and skip_final_damping):
                state = _dense_damping(state, schedule.gamma, model.dim, support)
            support = state_support(state)
        builder.add_step(theta, state)
        if not truncation_flagged and builder.last_top_population > TOP_LEVEL_WARN:
            warnings.warn(
                f"top ladder level holds population {builder.last_top_population:.2e} "
                f"at step {index + 1}; the truncated battery is saturating",
                TruncationWarning,
                stacklevel=2,
            )
            truncation_flagged = True
    diagnostics = validate_state(state)
    # trace roundoff accumulates at a few eps per collision; scale the
    # single-application tolerance with the number of steps before warning
    trace_tol = max(1e-12, 1e-15 * max(len(schedule.steps), 1))
    drifted = (
        diagnostics.trace_error >= trace_tol
        or diagnostics.hermiticity_error >= 1e-12
        or diagnostics.min_eigenvalue < -1e-10
    )
    if drifted:
        warnings.warn(
            f"final state violates invariants: trace error {diagnostics.trace_error:.2e}, "
            f"hermiticity {diagnostics.hermiticity_error:.2e}, "
            f"min eigenvalue {diagnostics.min_eigenvalue:.2e}",
            StateInvariantWarning,
            stacklevel=2,
        )
    return builder.build()


def _as_populations(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 1:
        return state.real.astype(float)
    return np.diagonal(state).real.astype(float)


def _incoherent_energy_gain(
    populations: np.ndarray, model: BatteryModel, q: float, thetas: np.ndarray
) -> np.ndarray:
    """Mean energy gain of one incoherent collision, per candidate angle."""
    f = transition_amplitudes(model)
    f_up = np.concatenate((f, [0.0]))
    f_down = np.concatenate(([0.0], f))
    occupied = populations > 1e-16
    p = populations[occupied]
    up = np.sin(np.outer(f_up[occupied], thetas)) ** 2
    down = np.sin(np.outer(f_down[occupied], thetas)) ** 2
    return model.energy * (p @ ((1.0 - q) * up - q * down))


def greedy_schedule_step(
    populations: np.ndarray,
    model: BatteryModel,
    q: float,
    *,
    objective: str = "cumulative",
    tau_so_far: float = 0.0,
    energy_so_far: float = 0.0,
) -> float | None:
    """Swap angle maximising the chosen power objective for the next
    incoherent collision, or None when no step improves it.

    The search probes a coarse bracket grid plus the first-lobe and
    full-swap angles of every occupied transition, then refines the best
    bracket by golden section.  Ties go to the smaller angle.
    """
    if objective not in ("cumulative", "transient"):
        raise ValueError(f"objective must be 'cumulative' or 'transient', got {objective!r}")
    populations = np.asarray(populations, dtype=float)
    cap = math.pi * math.sqrt(model.dim)
    candidates = [cap * (i + 1) / GREEDY_PROBES for i in range(GREEDY_PROBES)]
    best_angle = optimal_swap_rate().angle
    f = transition_amplitudes(model)
    for level in np.nonzero(populations > 1e-16)[0]:
        if level < model.capacity:
            amp = f[level]
            candidates.append(min(best_angle / amp, cap))
            candidates.append(min(math.pi / (2.0 * amp), cap))
    thetas = np.unique(np.asarray(candidates))

    def score(angles: np.ndarray) -> np.ndarray:
        gains = _incoherent_energy_gain(populations, model, q, angles)
        if objective == "transient":
            return gains / angles
        return (energy_so_far + gains) / (tau_so_far + angles)

    values = score(thetas)
    best = int(np.argmax(values))          # first occurrence wins: smaller theta
    lo = thetas[best - 1] if best > 0 else 1e-9
    hi = thetas[best + 1] if best + 1 < len(thetas) else cap
    theta = golden_section_max(lambda t: float(score(np.array([t]))[0]), lo, hi, tol=1e-10)
    if float(score(np.array([theta]))[0]) < values[best]:
        theta = float(thetas[best])
    gain = float(_incoherent_energy_gain(populations, model, q, np.array([theta]))[0])
    if gain <= GREEDY_MIN_GAIN * model.energy:
        return None
    if objective == "cumulative" and tau_so_far > 0.0:
        if (energy_so_far + gain) / (tau_so_far + theta) <= energy_so_far / tau_so_far:
            return None
    return float(theta)


def run_greedy(
    model: BatteryModel,
    q: float = 0.0,
    *,
    objective: str = "cumulative",
    horizon: float,
    gamma: float = 0.0,
    max_steps: int | None = None,
    record_distributions: bool = False,
) -> tuple[SimulationRecord, Schedule]:
    """Charge adaptively with incoherent units, greedily maximising the
    cumulative or transient power one collision at a time."""
    if model.kind is BatteryKind.SPIN and gamma > 0.0:
        raise ValueError("damping is not defined for the spin battery")
    qubit = QubitState(q=q)
    damp = damping_population_matrix(model.dim, gamma) if gamma > 0.0 else None
    populations = ground_populations(model)
    builder = RecordBuilder(model, populations, keep_distributions=record_distributions)
    steps = []
    while builder.tau < horizon and (max_steps is None or len(steps) < max_steps):
        theta = greedy_schedule_step(
            populations,
            model,
            q,
            objective=objective,
            tau_so_far=builder.tau,
            energy_so_far=builder.last_energy,
        )
        if theta is None:
            break
        populations = incoherent_population_step(populations, model, q, theta)
        if damp is not None:
            populations = damp @ populations
        builder.add_step(theta, populations)
        steps.append(ScheduleStep(theta, qubit))
    policy = "greedy-cum" if objective == "cumulative" else "greedy-trans"
    return builder.build(), Schedule(tuple(steps), gamma, policy)


def driving_limit_oscillator(model: BatteryModel, omega_tau: float) -> tuple[float, np.ndarray]:
    """Ideal coherent charging of the oscillator battery in the vanishing
    swap-angle limit: a displaced vacuum with mean energy E (Omega tau)^2 / 4
    and Poissonian level distribution of mean (Omega tau / 2)^2.

    The distribution is truncated to the model dimension (not renormalised).
    """
    if model.kind is not BatteryKind.OSCILLATOR:
        raise ValueError("the displaced-vacuum driving limit applies to the oscillator battery")
    lam = (omega_tau / 2.0) ** 2
    energy = model.energy * lam
    n = np.arange(model.dim, dtype=float)
    if lam == 0.0:
        dist = np.zeros(model.dim)
        dist[0] = 1.0
    else:
        lgamma = np.vectorize(math.lgamma)
        dist = np.exp(-lam + n * math.log(lam) - lgamma(n + 1.0))
    return energy, dist


def driving_limit_spin(model: BatteryModel, omega_tau: float) -> float:
    """Ideal coherent charging of the spin battery: a rotation by Omega tau,
    with energy E j (1 - cos Omega tau) relative to the ground state; full
    charge at Omega tau = pi."""
    if model.kind is not BatteryKind.SPIN:
        raise ValueError("the rotation driving limit applies to the spin battery")
    return model.energy * model.spin_j * (1.0 - math.cos(omega_tau))


@dataclass(frozen=True)
class AdvantageOnset:
    """First time a fixed-angle coherent run beats the incoherent envelope.

    tau_ad is None when no crossing occurs within the search horizon.
    """

    theta: float
    gamma: float
    tau_ad: float | None


def find_advantage_onset(
    theta: float,
    gamma: float,
    model: BatteryModel,
    horizon: float = 60.0,
    *,
    qubit: QubitState | None = None,
) -> AdvantageOnset:
    """Run the fixed-angle coherent protocol (q = 1/2, c = 1) with damping
    gamma and return the first collision time at which its mean energy
    strictly exceeds the loss-corrected incoherent envelope."""
    if model.kind is not BatteryKind.OSCILLATOR:
        raise ValueError("the advantage-onset search compares against the oscillator envelope")
    if qubit is None:
        qubit = QubitState(q=0.5, c=1.0, alpha=0.0)
    n_steps = int(math.floor(horizon / theta + 1e-9))
    taus = theta * np.arange(1, n_steps + 1)
    envelope = lossy_energy_bound_curve(taus, gamma, model.energy)
    collide = collision_applier(model, qubit, theta)
    state = ground_density(model)
    support = 1
    for k in range(n_steps):
        support = min(support + 1, model.dim)
        state = collide(state, support)
        if gamma > 0.0:
            state = _dense_damping(state, gamma, model.dim, support)
        support = state_support(state)
        if mean_energy(state, model) > envelope[k]:
            return AdvantageOnset(theta, gamma, float(taus[k]))
    return AdvantageOnset(theta, gamma, None)
