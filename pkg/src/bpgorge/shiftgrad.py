"""Parameter-shift derivatives and cost-difference ensembles."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .cost import CostSpec, evaluate, evaluate_batch
from .seeding import stream, uniform_parameters

FD_STEP = 1e-5


@dataclass(frozen=True)
class FixedOffset:
    """Second point at ``theta_A + length * direction``."""

    length: float
    direction: np.ndarray = field(compare=False)

    def __post_init__(self):
        direction = np.asarray(self.direction, dtype=float)
        if self.length < 0:
            raise ValueError(f"offset length must be non-negative, got {self.length}")
        if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
            raise ValueError("offset direction must be a unit vector")
        object.__setattr__(self, "direction", direction)

    @classmethod
    def along(cls, length: float, m: int, j: int) -> "FixedOffset":
        e = np.zeros(m)
        e[j] = 1.0
        return cls(length, e)

    @property
    def name(self) -> str:
        return "fixed_offset"


@dataclass(frozen=True)
class RandomPair:
    """Second point drawn independently and uniformly."""

    @property
    def name(self) -> str:
        return "random_pair"


DifferenceMode = Union[FixedOffset, RandomPair]


@dataclass
class DifferenceEnsemble:
    mode: DifferenceMode
    values: np.ndarray
    seed: int
    theta_a: np.ndarray | None = None
    theta_b: np.ndarray | None = None

    def __len__(self):
        return len(self.values)


def max_distance(m: int) -> float:
    """Largest minimal-image distance on the m-torus with period 2 pi per axis."""
    return float(np.pi * np.sqrt(m))


def torus_distance(a, b) -> np.ndarray:
    d = np.mod(np.asarray(b, dtype=float) - np.asarray(a, dtype=float), 2 * np.pi)
    d = np.minimum(d, 2 * np.pi - d)
    return np.sqrt(np.sum(d * d, axis=-1))


def _check_index(spec: CostSpec, j: int) -> None:
    if not 0 <= j < spec.num_parameters:
        raise IndexError(f"parameter index {j} out of range for m = {spec.num_parameters}")


def partial_derivative(spec: CostSpec, params, j: int) -> float:
    """Exact ``dC/dtheta_j = [C(theta + pi/2 e_j) - C(theta - pi/2 e_j)] / 2``."""
    _check_index(spec, j)
    return float(partial_derivative_batch(spec, np.asarray(params, dtype=float)[None, :], j)[0])


def partial_derivative_batch(spec: CostSpec, thetas, j: int) -> np.ndarray:
    _check_index(spec, j)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    plus = thetas.copy()
    plus[:, j] += np.pi / 2
    minus = thetas.copy()
    minus[:, j] -= np.pi / 2
    return (evaluate_batch(spec, plus) - evaluate_batch(spec, minus)) / 2


def gradient(spec: CostSpec, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    m = spec.num_parameters
    if params.shape != (m,):
        raise ValueError(f"expected {m} parameters, got shape {params.shape}")
    if m == 0:
        return np.zeros(0)
    shifts = np.eye(m) * (np.pi / 2)
    plus = evaluate_batch(spec, params + shifts)
    minus = evaluate_batch(spec, params - shifts)
    return (plus - minus) / 2


def central_difference(spec: CostSpec, params, j: int, step: float = FD_STEP) -> float:
    """Second-order central stencil ``[C(theta + h e_j) - C(theta - h e_j)] / 2h``."""
    _check_index(spec, j)
    params = np.asarray(params, dtype=float)
    plus = params.copy()
    plus[j] += step
    minus = params.copy()
    minus[j] -= step
    return (evaluate(spec, plus) - evaluate(spec, minus)) / (2 * step)


def verify_psr_identity(spec: CostSpec, params, j: int, step: float = FD_STEP) -> float:
    """Absolute gap between the shift-rule derivative and a central difference."""
    return abs(partial_derivative(spec, params, j) - central_difference(spec, params, j, step))


def sample_differences(
    spec: CostSpec,
    mode: DifferenceMode,
    ensemble_size: int,
    seed: int,
    *key,
    keep_points: bool = False,
) -> DifferenceEnsemble:
    """Seeded ensemble of cost differences ``C(theta_B) - C(theta_A)``.

    ``theta_A`` is uniform on the torus; ``theta_B`` is either the fixed
    offset point or an independent uniform draw.
    """
    if ensemble_size < 2:
        raise ValueError("ensemble_size must be >= 2")
    m = spec.num_parameters
    rng = stream(seed, "differences", *key)
    theta_a = uniform_parameters(rng, ensemble_size, m)
    if isinstance(mode, FixedOffset):
        if mode.direction.shape != (m,):
            raise ValueError(f"offset direction has length {mode.direction.shape}, expected {m}")
        theta_b = theta_a + mode.length * mode.direction
    elif isinstance(mode, RandomPair):
        theta_b = uniform_parameters(rng, ensemble_size, m)
    else:
        raise TypeError(f"unknown difference mode {mode!r}")
    values = evaluate_batch(spec, theta_b) - evaluate_batch(spec, theta_a)
    if keep_points:
        return DifferenceEnsemble(mode, values, seed, theta_a, theta_b)
    return DifferenceEnsemble(mode, values, seed)


def gradient_samples(spec: CostSpec, j: int, ensemble_size: int, seed: int, *key) -> np.ndarray:
    """Shift-rule partial derivatives at uniform random points."""
    rng = stream(seed, "gradient", *key)
    thetas = uniform_parameters(rng, ensemble_size, spec.num_parameters)
    return partial_derivative_batch(spec, thetas, j)


def coupled_shift_samples(
    spec: CostSpec, j: int, ensemble_size: int, seed: int, *key
) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives at ``theta`` and pi-offset differences starting at ``theta - pi/2 e_j``.

    Both arrays come from the same uniform ``theta`` stream, so the shift rule
    makes ``diff == 2 * grad`` up to rounding.
    """
    _check_index(spec, j)
    rng = stream(seed, "coupled", *key)
    thetas = uniform_parameters(rng, ensemble_size, spec.num_parameters)
    grads = partial_derivative_batch(spec, thetas, j)
    start = thetas.copy()
    start[:, j] -= np.pi / 2
    end = start.copy()
    end[:, j] += np.pi
    diffs = evaluate_batch(spec, end) - evaluate_batch(spec, start)
    return grads, diffs
