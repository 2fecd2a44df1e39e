"""Sampling laboratory for interfering binary trees with a hidden spin."""

__version__ = "0.1.0"

from .model import (
    DecoupledParams,
    ModelConfig,
    StepAmplitudes,
    config_from_probabilities,
    decouple,
    benchmark_config,
    recouple,
    solve_basis,
    solve_rotation_angle,
    validate_unitarity,
)
from .outcomes import Event, Events, OutcomeDistribution
from .oracle import (
    brute_force_distribution,
    exact_observable_expectation,
    leaf_amplitude,
    matrix_product_distribution,
)
from .circuit import build_circuit, circuit_unitary, decompose, sample_events_statevector, statevector_run
from .samplers import (
    enumerate_two_qubit_distribution,
    naive_mcmc_distribution,
    naive_mcmc_sample,
    qica_sample,
    two_qubit_sample,
)
