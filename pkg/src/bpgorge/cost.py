"""Linear cost functions ``C(theta) = sum_i a_i <psi_i| U(theta)^dag O_i U(theta) |psi_i>``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import ParameterizedCircuit, apply_batch, build_hea
from .statevector import Observable, StateVector, expectation_batch, prepare_product_state, z_string

# amplitudes held in memory per chunk of the batched evaluator
CHUNK_AMPLITUDES = 1 << 22

PSI0_ANGLE = np.pi / 8


@dataclass(frozen=True)
class TrainingPair:
    weight: float
    state: StateVector
    observable: Observable


@dataclass(frozen=True)
class CostSpec:
    circuit: ParameterizedCircuit
    pairs: tuple[TrainingPair, ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if not self.pairs:
            raise ValueError("a cost needs at least one training pair")
        n = self.circuit.num_qubits
        for i, p in enumerate(self.pairs):
            if p.state.num_qubits != n or p.observable.num_qubits != n:
                raise ValueError(f"training pair {i} does not act on {n} qubits")

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    @property
    def num_parameters(self) -> int:
        return self.circuit.num_parameters

    def bound(self) -> float:
        """``sum_i |a_i| * ||O_i||``, an upper bound on ``|C(theta)|``."""
        return float(sum(abs(p.weight) * p.observable.norm_bound for p in self.pairs))

    def scaled(self, factor: float) -> "CostSpec":
        return CostSpec(
            self.circuit,
            tuple(TrainingPair(factor * p.weight, p.state, p.observable) for p in self.pairs),
        )

    def with_observable(self, observable: Observable) -> "CostSpec":
        return CostSpec(
            self.circuit,
            tuple(TrainingPair(p.weight, p.state, observable) for p in self.pairs),
        )


def _evaluate_rows(spec: CostSpec, params: np.ndarray) -> np.ndarray:
    total = np.zeros(params.shape[0])
    for pair in spec.pairs:
        out = apply_batch(spec.circuit, params, pair.state.amplitudes)
        total += pair.weight * expectation_batch(out, pair.observable)
    return total


def _check_params(spec: CostSpec, params: np.ndarray) -> None:
    m = spec.num_parameters
    if params.ndim != 2 or params.shape[1] != m:
        raise ValueError(f"expected parameter vectors of length {m}, got shape {params.shape}")
    bad = ~np.all(np.isfinite(params), axis=1)
    if np.any(bad):
        raise ValueError(f"non-finite parameters in ensemble member {int(np.argmax(bad))}")


def evaluate(spec: CostSpec, params) -> float:
    params = np.asarray(params, dtype=float)
    if params.ndim != 1:
        raise ValueError("evaluate takes a single parameter vector")
    params = params[None, :]
    _check_params(spec, params)
    return float(_evaluate_rows(spec, params)[0])


def evaluate_batch(spec: CostSpec, ensemble) -> np.ndarray:
    """Costs for each row of ``ensemble`` (shape (N, m)), chunked to bound memory.

    Every row goes through the same per-row arithmetic as :func:`evaluate`,
    so the two agree bit for bit.
    """
    ensemble = np.asarray(ensemble, dtype=float)
    if ensemble.ndim == 1:
        ensemble = ensemble[None, :]
    if ensemble.shape[0] == 0:
        raise ValueError("empty ensemble")
    _check_params(spec, ensemble)
    chunk = max(1, CHUNK_AMPLITUDES >> spec.num_qubits)
    out = np.empty(ensemble.shape[0])
    for start in range(0, ensemble.shape[0], chunk):
        stop = start + chunk
        out[start:stop] = _evaluate_rows(spec, ensemble[start:stop])
    return out


def hea_zz_cost(
    num_qubits: int,
    depth: int,
    observable: Observable | None = None,
    max_qubits: int | None = None,
) -> CostSpec:
    """HEA of the given depth on ``|psi0>^n`` with ``psi0 = exp(-i pi/8 Y)|0>``, measuring Z0 Z1."""
    circuit = build_hea(num_qubits, depth, max_qubits=max_qubits)
    state = prepare_product_state(num_qubits, PSI0_ANGLE, max_qubits=max_qubits)
    if observable is None:
        observable = z_string(num_qubits, (0, 1))
    return CostSpec(circuit, (TrainingPair(1.0, state, observable),))


def single_pair_cost(
    circuit: ParameterizedCircuit, state: StateVector, observable: Observable, weight: float = 1.0
) -> CostSpec:
    return CostSpec(circuit, (TrainingPair(weight, state, observable),))


def costs_from_pairs(circuit: ParameterizedCircuit, pairs: Sequence[tuple[float, StateVector, Observable]]):
    return CostSpec(circuit, tuple(TrainingPair(float(a), s, o) for a, s, o in pairs))
