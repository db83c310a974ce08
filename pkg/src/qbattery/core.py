"""Battery and charging-unit data model for collisional charging runs.

A battery is a uniform energy ladder with d levels and a model-dependent
transition amplitude f(n) linking levels n-1 and n:

    oscillator      f(n) = sqrt(n)
    spin-j          f(n) = sqrt(n (d - n)),  d = 2j + 1
    uniform ladder  f(n) = 1

Level energies are always reported relative to the ground state, i.e. level n
sits at n * energy.  For the spin battery this absorbs the constant +E*j
offset of the axial-spin Hamiltonian; the offset is never stored in a state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BatteryKind",
    "BatteryModel",
    "QubitState",
    "StateDiagnostics",
    "TruncationWarning",
    "StateInvariantWarning",
    "InvariantViolationError",
    "ladder_amplitude",
    "transition_amplitudes",
    "qubit_density",
    "validate_state",
    "ground_density",
    "ground_populations",
]

TRACE_TOL = 1e-12
HERMITICITY_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
POPULATION_FLOOR = -1e-14


class TruncationWarning(UserWarning):
    """Population has reached the top ladder level; results are truncated."""


class StateInvariantWarning(UserWarning):
    """A state drifted outside its numerical invariants (trace, positivity)."""


class InvariantViolationError(RuntimeError):
    """A record or state broke a numerical invariant badly enough to abort."""


class BatteryKind(enum.Enum):
    OSCILLATOR = "oscillator"
    SPIN = "spin"
    UNIFORM_LADDER = "uniform"


@dataclass(frozen=True)
class BatteryModel:
    """Finite energy ladder with kind-dependent transition amplitudes.

    dim is the number of levels (>= 2).  energy is the quantum per level in
    arbitrary units (default 1).  spin_j is set for spin batteries only and
    satisfies dim = 2*spin_j + 1 exactly.
    """

    kind: BatteryKind
    dim: int
    energy: float = 1.0
    spin_j: float | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"battery needs at least two levels, got dim={self.dim}")
        if not self.energy > 0:
            raise ValueError(f"energy quantum must be positive, got {self.energy}")
        if self.kind is BatteryKind.SPIN:
            if self.spin_j is None:
                raise ValueError("spin battery requires spin_j")
            two_j = 2 * self.spin_j
            if abs(two_j - round(two_j)) > 1e-12 or self.spin_j <= 0:
                raise ValueError(f"spin_j must be a positive half-integer, got {self.spin_j}")
            if self.dim != round(two_j) + 1:
                raise ValueError(f"spin battery needs dim = 2j+1 = {round(two_j) + 1}, got {self.dim}")
        elif self.spin_j is not None:
            raise ValueError(f"spin_j is only meaningful for spin batteries, got kind={self.kind}")

    @classmethod
    def oscillator(cls, dim: int, energy: float = 1.0) -> "BatteryModel":
        return cls(BatteryKind.OSCILLATOR, dim, energy)

    @classmethod
    def spin(cls, j: float, energy: float = 1.0) -> "BatteryModel":
        return cls(BatteryKind.SPIN, int(round(2 * j)) + 1, energy, spin_j=j)

    @classmethod
    def uniform_ladder(cls, dim: int, energy: float = 1.0) -> "BatteryModel":
        return cls(BatteryKind.UNIFORM_LADDER, dim, energy)

    @property
    def level_energies(self) -> np.ndarray:
        """Energies of levels 0..dim-1 relative to the ground state."""
        return self.energy * np.arange(self.dim, dtype=float)

    @property
    def capacity(self) -> int:
        """Number of quanta a fully charged battery holds."""
        return self.dim - 1


def ladder_amplitude(model: BatteryModel, n: int) -> float:
    """Transition amplitude f(n) coupling levels n-1 and n, for 1 <= n <= dim-1."""
    if not 1 <= n <= model.dim - 1:
        raise ValueError(f"transition index n={n} outside ladder 1..{model.dim - 1}")
    if model.kind is BatteryKind.OSCILLATOR:
        return math.sqrt(n)
    if model.kind is BatteryKind.SPIN:
        return math.sqrt(n * (model.dim - n))
    return 1.0


def transition_amplitudes(model: BatteryModel) -> np.ndarray:
    """Vector of f(n) for n = 1..dim-1."""
    n = np.arange(1, model.dim, dtype=float)
    if model.kind is BatteryKind.OSCILLATOR:
        return np.sqrt(n)
    if model.kind is BatteryKind.SPIN:
        return np.sqrt(n * (model.dim - n))
    return np.ones(model.dim - 1)


@dataclass(frozen=True)
class QubitState:
    """Charging unit: ground population q, coherence fraction c, phase alpha.

    c = 0 is an incoherent (classical) unit, c = 1 a pure superposition.
    """

    q: float
    c: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"ground population q must lie in [0, 1], got {self.q}")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"coherence fraction c must lie in [0, 1], got {self.c}")
        if not 0.0 <= self.alpha < 2.0 * math.pi:
            raise ValueError(f"phase alpha must lie in [0, 2*pi), got {self.alpha}")

    @property
    def is_incoherent(self) -> bool:
        return self.c == 0.0

    def density(self) -> np.ndarray:
        return qubit_density(self)


def qubit_density(qubit: QubitState) -> np.ndarray:
    """2x2 density matrix of the unit in the (|g>, |e>) basis."""
    q, c, alpha = qubit.q, qubit.c, qubit.alpha
    off = c * math.sqrt(q * (1.0 - q)) * np.exp(-1j * alpha)
    return np.array([[q, off], [np.conj(off), 1.0 - q]], dtype=complex)


@dataclass(frozen=True)
class StateDiagnostics:
    """Deviations of a state from the density-matrix invariants."""

    trace_error: float
    hermiticity_error: float
    min_eigenvalue: float

    @property
    def ok(self) -> bool:
        return (
            self.trace_error < TRACE_TOL
            and self.hermiticity_error < HERMITICITY_TOL
            and self.min_eigenvalue >= EIGENVALUE_FLOOR
        )


def validate_state(state: np.ndarray) -> StateDiagnostics:
    """Diagnostics for a density matrix (2-D) or population vector (1-D)."""
    state = np.asarray(state)
    if state.ndim == 1:
        return StateDiagnostics(
            trace_error=abs(float(np.sum(state.real)) - 1.0),
            hermiticity_error=float(np.max(np.abs(state.imag))) if np.iscomplexobj(state) else 0.0,
            min_eigenvalue=float(np.min(state.real)),
        )
    if state.ndim != 2 or state.shape[0] != state.shape[1]:
        raise ValueError(f"state must be a vector or square matrix, got shape {state.shape}")
    herm = float(np.max(np.abs(state - state.conj().T)))
    trace_err = abs(float(np.trace(state).real) - 1.0)
    eigs = np.linalg.eigvalsh((state + state.conj().T) / 2.0)
    return StateDiagnostics(trace_err, herm, float(eigs[0]))


def ground_density(model: BatteryModel) -> np.ndarray:
    rho = np.zeros((model.dim, model.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def ground_populations(model: BatteryModel) -> np.ndarray:
    p = np.zeros(model.dim)
    p[0] = 1.0
    return p
