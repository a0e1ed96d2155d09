"""Closed-form toy landscapes for the four plateau/gorge combinations.

``GLOBAL``: 1 - prod_j cos^2(theta_j / 2). Plateau and gorge.
``LOCAL``: 1 - (1/n) sum_j cos^2(theta_j / 2). Neither.
``GORGE_NO_PLATEAU``: 0.9 GLOBAL - 0.1 sin^2(S / 2), S = sum_j theta_j.
``PLATEAU_NO_GORGE``: 0 / 0.5 / 1 steps in the wrapped partial sum
``x = wrap(sum_{j < n/2} theta_j)``: 0 for |x| <= pi/4, 1 for |x| >= pi/2.

The oscillatory term and the step argument use plain sums of angles so every
landscape is 2 pi periodic in each coordinate; at n = 2 they coincide with
the ``(1/n) sum`` and ``(2/n) sum`` normalisations often drawn for
cross-sections.

All functions accept ``theta`` of shape (n,) or (N, n).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .circuit import ParameterizedCircuit, Rotation
from .cost import CostSpec, TrainingPair
from .seeding import stream, uniform_parameters
from .statevector import Observable, PauliString, StateVector
from .stats import DecayFit, EnsembleStats, TailEstimate, ensemble_stats, fit_decay, tail_probability

# rows drawn per chunk when sampling a landscape
_ROWS = 1 << 16


class Kind(str, enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"
    GORGE_NO_PLATEAU = "gorge_no_plateau"
    PLATEAU_NO_GORGE = "plateau_no_gorge"


@dataclass(frozen=True)
class AnalyticLandscape:
    kind: Kind
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind is Kind.PLATEAU_NO_GORGE and self.n % 2:
            raise ValueError("the step landscape needs an even n")


@dataclass(frozen=True)
class LandscapeOracles:
    mean: float
    gradient_variance: float | None
    tail_center: float | None = None
    tail_threshold: float | None = None
    tail_probability: float | None = None
    note: str = ""


def wrap_angle(x):
    """Reduce to the principal interval (-pi, pi]; values already inside are returned unchanged."""
    x = np.asarray(x, dtype=float)
    return np.where((x > -np.pi) & (x <= np.pi), x, np.pi - np.mod(np.pi - x, 2 * np.pi))


def _theta(l: AnalyticLandscape, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != l.n:
        raise ValueError(f"expected {l.n} angles, got shape {theta.shape}")
    return theta


def step_argument(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    half = theta.shape[-1] // 2
    return wrap_angle(np.sum(theta[..., :half], axis=-1))


def _step(absx):
    # closed at both outer branches: |x| <= pi/4 -> 0, |x| >= pi/2 -> 1
    return np.where(absx >= np.pi / 2, 1.0, np.where(absx > np.pi / 4, 0.5, 0.0))


def eval_landscape(l: AnalyticLandscape, theta):
    theta = _theta(l, theta)
    c2 = np.cos(theta / 2) ** 2
    if l.kind is Kind.GLOBAL:
        out = 1 - np.prod(c2, axis=-1)
    elif l.kind is Kind.LOCAL:
        out = 1 - np.mean(c2, axis=-1)
    elif l.kind is Kind.GORGE_NO_PLATEAU:
        osc = np.sin(np.sum(theta, axis=-1) / 2) ** 2
        out = 0.9 * (1 - np.prod(c2, axis=-1)) - 0.1 * osc
    else:
        out = _step(np.abs(step_argument(theta)))
    return out if np.ndim(out) else float(out)


def _leave_one_out_product(c2: np.ndarray) -> np.ndarray:
    # prod_{j != k} c2_j without dividing by possibly-zero entries
    left = np.cumprod(np.concatenate([np.ones(c2.shape[:-1] + (1,)), c2[..., :-1]], axis=-1), axis=-1)
    right = np.flip(
        np.cumprod(np.concatenate([np.ones(c2.shape[:-1] + (1,)), np.flip(c2, -1)[..., :-1]], axis=-1), axis=-1),
        -1,
    )
    return left * right


def eval_landscape_gradient(l: AnalyticLandscape, theta, return_flag: bool = False):
    """Analytic gradient.

    For the step landscape the gradient is zero; with ``return_flag`` a boolean
    (array) marks points sitting exactly on a breakpoint, where the derivative
    does not exist and the zero is only a placeholder.
    """
    theta = _theta(l, theta)
    flag = np.zeros(theta.shape[:-1], dtype=bool)
    if l.kind is Kind.GLOBAL:
        grad = 0.5 * np.sin(theta) * _leave_one_out_product(np.cos(theta / 2) ** 2)
    elif l.kind is Kind.LOCAL:
        grad = np.sin(theta) / (2 * l.n)
    elif l.kind is Kind.GORGE_NO_PLATEAU:
        g_global = 0.5 * np.sin(theta) * _leave_one_out_product(np.cos(theta / 2) ** 2)
        g_osc = 0.5 * np.sin(np.sum(theta, axis=-1, keepdims=True))
        grad = 0.9 * g_global - 0.1 * np.broadcast_to(g_osc, theta.shape)
    else:
        grad = np.zeros_like(theta)
        absx = np.abs(step_argument(theta))
        flag = np.isclose(absx, np.pi / 4, rtol=0, atol=1e-15) | np.isclose(
            absx, np.pi / 2, rtol=0, atol=1e-15
        )
    if return_flag:
        return grad, (bool(flag) if np.ndim(flag) == 0 else flag)
    return grad


def landscape_oracles(l: AnalyticLandscape) -> LandscapeOracles:
    """Closed-form mean, per-parameter gradient variance and tail facts."""
    n = l.n
    if l.kind is Kind.GLOBAL:
        return LandscapeOracles(mean=1 - 2.0**-n, gradient_variance=(1 / 8) * (3 / 8) ** (n - 1))
    if l.kind is Kind.LOCAL:
        return LandscapeOracles(mean=0.5, gradient_variance=1 / (8 * n * n))
    if l.kind is Kind.GORGE_NO_PLATEAU:
        return LandscapeOracles(
            mean=0.9 * (1 - 2.0**-n) - 0.05,
            gradient_variance=None,
            note="no closed form; the oscillatory term keeps the gradient variance from vanishing",
        )
    return LandscapeOracles(
        mean=5 / 8,
        gradient_variance=0.0,
        tail_center=5 / 8,
        tail_threshold=0.5,
        tail_probability=0.25,
    )


def cross_section(l: AnalyticLandscape, ts) -> np.ndarray:
    """Values along the diagonal ``theta = t * (1, ..., 1)``."""
    ts = np.asarray(ts, dtype=float)
    return eval_landscape(l, ts[:, None] * np.ones(l.n))


def circuit_realization(kind: Kind | str, n: int) -> CostSpec:
    """R_y(theta_j) on each qubit of |0...0> with a global or local projector cost.

    Global: ``O = 1 - |0..0><0..0| = 1 - prod_j (1 + Z_j)/2``.
    Local: ``O = 1/2 - (1/2n) sum_j Z_j``.
    """
    kind = Kind(kind)
    circuit = ParameterizedCircuit(n, tuple(Rotation(PauliString(((q, "Y"),)), q) for q in range(n)))
    if kind is Kind.GLOBAL:
        terms = [(1.0, PauliString())]
        scale = -(0.5**n)
        for mask in range(2**n):
            ops = tuple((q, "Z") for q in range(n) if (mask >> q) & 1)
            terms.append((scale, PauliString(ops)))
    elif kind is Kind.LOCAL:
        terms = [(0.5, PauliString())] + [(-0.5 / n, PauliString(((q, "Z"),))) for q in range(n)]
    else:
        raise ValueError(f"{kind.value} has no circuit realization")
    return CostSpec(circuit, (TrainingPair(1.0, StateVector.zero(n), Observable(n, terms)),))


# ------------------------------------------------------------- sampling


def _chunks(l: AnalyticLandscape, count: int, seed: int, key):
    rng = stream(seed, "landscape", l.kind.value, l.n, *key)
    for start in range(0, count, _ROWS):
        yield uniform_parameters(rng, min(_ROWS, count - start), l.n)


def sample_values(l: AnalyticLandscape, count: int, seed: int, *key) -> np.ndarray:
    return np.concatenate([eval_landscape(l, t) for t in _chunks(l, count, seed, ("values",) + key)])


def sample_gradients(l: AnalyticLandscape, count: int, seed: int, *key) -> np.ndarray:
    """Analytic gradients at ``count`` uniform points, shape (count, n)."""
    return np.concatenate(
        [eval_landscape_gradient(l, t) for t in _chunks(l, count, seed, ("gradients",) + key)]
    )


def gradient_variance(l: AnalyticLandscape, count: int, seed: int, *key) -> EnsembleStats:
    """Largest per-component gradient variance."""
    grads = sample_gradients(l, count, seed, *key)
    per = [ensemble_stats(grads[:, k]) for k in range(l.n)]
    return max(per, key=lambda st: st.variance)


def tail_estimate(l: AnalyticLandscape, delta: float, count: int, seed: int, *key) -> TailEstimate:
    """Tail probability ``P(|C - E[C]| >= delta)`` about the closed-form mean."""
    return tail_probability(sample_values(l, count, seed, *key), landscape_oracles(l).mean, delta)


@dataclass(frozen=True)
class QuadrantReport:
    kind: Kind
    barren_plateau: str
    narrow_gorge: str
    gradient_points: tuple[tuple[int, float, float], ...]
    tail_points: tuple[tuple[int, float, float], ...]
    gradient_fit: DecayFit | None
    tail_fit: DecayFit | None

    @property
    def labels(self) -> tuple[str, str]:
        return self.barren_plateau, self.narrow_gorge


def _decays(points) -> tuple[str, DecayFit | None]:
    positive = [p for p in points if p[1] > 0]
    if len(positive) < 3:
        return "no", None
    fit = fit_decay(positive)
    return ("yes" if fit.exponential else "no"), fit


def classify_quadrant(
    kind: Kind | str,
    gradient_ns=(2, 4, 6, 8, 10),
    gradient_samples: int = 10**5,
    tail_ns=(2, 4, 6, 8),
    tail_samples: int = 10**6,
    delta: float = 0.5,
    seed: int = 0,
) -> QuadrantReport:
    """Plateau and gorge labels from sampled gradient variances and cost tails.

    Plateau: "yes-trivially" when every sampled gradient vanishes, otherwise
    whether the largest per-component variance decays exponentially in n.
    Gorge: whether the tail probability at ``delta`` about the mean decays
    exponentially in n; a tail that is zero at most sizes counts as no decay.
    """
    kind = Kind(kind)
    grad_pts = []
    for n in gradient_ns:
        st = gradient_variance(AnalyticLandscape(kind, n), gradient_samples, seed)
        grad_pts.append((n, st.variance, st.variance_std_error))
    if all(v == 0 for _, v, _ in grad_pts):
        bp, grad_fit = "yes-trivially", None
    else:
        bp, grad_fit = _decays(grad_pts)
    tail_pts = []
    for n in tail_ns:
        est = tail_estimate(AnalyticLandscape(kind, n), delta, tail_samples, seed)
        tail_pts.append((n, est.empirical_probability, est.std_error))
    gorge, tail_fit = _decays(tail_pts)
    return QuadrantReport(kind, bp, gorge, tuple(grad_pts), tuple(tail_pts), grad_fit, tail_fit)
