"""Closed-loop control of quantum expectation values.

Model drift in a finite-dimensional system, diagnose coefficient changes
from observed shifts in <Theta> and <H>, and compile corrective resonant
two-level pulse sequences.
"""
from ._kernels import BACKEND
from .control import (
    Pulse,
    PulseSequence,
    ResonanceTable,
    apply_sequence,
    compile_correction,
    compile_state_prep,
    compose,
    lemma_demonstration,
    resonance_table,
    two_level_rotation,
)
from .diagnose import DriftDiagnosis, solve_drift, solve_drift_blind
from .drift import (
    DriftSchedule,
    EnergyPairExchange,
    EpsilonSpec,
    PairDrift,
    apply_energy_pair_exchange,
    apply_pair_drift,
    next_drift,
)
from .functions import ScalarFunction, get_function
from .loop import ControllerConfig, EpochLog, LoopResult, run_closed_loop
from .measure import EstimatorReport, exact_expectation, sample_estimate
from .spectral import (
    SpectralDecomposition,
    apply_scalar_function,
    commutator,
    eigendecompose,
    random_hermitian,
    unitary_from_generator,
)
from .system import (
    ENERGY,
    THETA,
    MixtureModel,
    QuantumSystem,
    State,
    build_system,
    change_basis,
    degeneracy_groups,
    eq6_discrepancy,
    evolve_free,
    expectation,
    heisenberg_rate,
    mixture_weights,
    random_state,
    random_system,
)

__version__ = "0.1.0"
