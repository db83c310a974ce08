"""Collisional charging of finite quantum batteries.

Simulates a bounded energy ladder (truncated oscillator, large spin, or
uniform ladder) charged by a stream of resonant two-level units, computes
the classical (incoherent) power envelopes and their loss-corrected
versions, and locates where coherent protocols overtake them.
"""

from .core import (
    BatteryKind,
    BatteryModel,
    QubitState,
    StateDiagnostics,
    StateInvariantWarning,
    TruncationWarning,
    ground_density,
    ground_populations,
    ladder_amplitude,
    qubit_density,
    transition_amplitudes,
    validate_state,
)
from .channels import (
    CollisionOperators,
    KrausSet,
    apply_collision,
    apply_damping,
    collision_applier,
    collision_kraus,
    collision_operators,
    damping_population_matrix,
    dissipator,
    generator_dissipator_form,
    generator_exact,
    generator_small_theta,
    incoherent_population_step,
    lowering_operator,
    state_support,
)
from .observables import (
    SimulationRecord,
    cumulative_power,
    ergotropy,
    mean_energy,
    passive_energy,
    purity,
    top_level_population,
    transient_power,
)
from .bounds import (
    SwapRateOptimum,
    lossy_energy_bound,
    optimal_swap_rate,
    oscillator_energy_bound,
    oscillator_power_bound,
    spin_energy_bound,
    spin_full_charge_time,
    spin_jz_envelope,
    spin_power_cap,
)
from .protocols import (
    AdvantageOnset,
    Schedule,
    ScheduleStep,
    driving_limit_oscillator,
    driving_limit_spin,
    find_advantage_onset,
    fixed_schedule,
    full_swap_schedule,
    greedy_schedule_step,
    run_greedy,
    run_protocol,
)

__version__ = "0.1.0"
