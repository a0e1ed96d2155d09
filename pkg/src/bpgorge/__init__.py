"""Statevector simulation and landscape statistics for barren plateau and
cost concentration studies of parameterized quantum circuits."""

from .circuit import (
    CircuitSplit,
    ControlledPhase,
    FixedUnitary,
    ParameterizedCircuit,
    Rotation,
    build_hea,
    build_rotation_layers,
    hea_slot,
    layer_slot,
    split_at,
    unitary,
)
from .cost import CostSpec, TrainingPair, evaluate, evaluate_batch, hea_zz_cost
from .landscapes import AnalyticLandscape, Kind, classify_quadrant, eval_landscape, eval_landscape_gradient, landscape_oracles
from .shiftgrad import (
    FixedOffset,
    RandomPair,
    central_difference,
    gradient,
    max_distance,
    partial_derivative,
    sample_differences,
)
from .statevector import Observable, PauliString, StateVector, expectation, prepare_product_state
from .stats import ensemble_stats, fit_decay, gorge_depth, tail_probability

__version__ = "0.1.0"
