"""Ensemble statistics and the landscape diagnostics built on them.

Variances are unbiased sample variances with delete-one jackknife standard
errors. Decay fits are weighted least squares of ``log(value)`` against
``n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import stats as sps

# exponential classification thresholds
R2_THRESHOLD = 0.95
CONFIDENCE = 0.95


@dataclass(frozen=True)
class EnsembleStats:
    count: int
    mean: float
    variance: float
    variance_std_error: float
    mean_std_error: float
    min: float
    max: float

    @classmethod
    def exact(cls, variance: float, mean: float = 0.0) -> "EnsembleStats":
        """A known (closed-form) variance with zero standard error."""
        return cls(np.iinfo(np.int64).max, mean, variance, 0.0, 0.0, np.nan, np.nan)


def ensemble_stats(samples) -> EnsembleStats:
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError(f"need at least 2 samples for a variance, got {n}")
    mean = float(np.mean(x))
    y = x - mean
    s1 = np.sum(y)
    s2 = np.sum(y * y)
    variance = float((s2 - s1 * s1 / n) / (n - 1))
    variance = max(variance, 0.0)
    if n > 2:
        loo_sum = s1 - y
        loo = (s2 - y * y - loo_sum * loo_sum / (n - 1)) / (n - 2)
        dev = loo - loo.mean()
        var_se = float(np.sqrt((n - 1) / n * np.sum(dev * dev)))
    else:
        var_se = float("nan")
    return EnsembleStats(
        count=n,
        mean=mean,
        variance=variance,
        variance_std_error=var_se,
        mean_std_error=float(np.sqrt(variance / n)),
        min=float(np.min(x)),
        max=float(np.max(x)),
    )


StatsLike = Union[EnsembleStats, float]


def _as_stats(value: StatsLike) -> EnsembleStats:
    return value if isinstance(value, EnsembleStats) else EnsembleStats.exact(float(value))


# ------------------------------------------------------------------ tails


@dataclass(frozen=True)
class TailEstimate:
    threshold: float
    center: float
    empirical_probability: float
    chebyshev_bound: float
    std_error: float
    count: int

    @property
    def consistent(self) -> bool:
        """Empirical tail within 3 binomial standard errors of the Chebyshev bound."""
        return self.empirical_probability <= self.chebyshev_bound + 3 * self.std_error


def tail_probability(samples, center: float, threshold: float) -> TailEstimate:
    """Fraction of samples with ``|x - center| >= threshold`` and its Chebyshev bound.

    The bound uses the mean squared deviation about ``center``, which equals
    the variance when ``center`` is the mean and stays a valid bound otherwise.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    x = np.asarray(samples, dtype=float).ravel()
    dev = np.abs(x - center)
    p = float(np.mean(dev >= threshold))
    second = float(np.mean(dev * dev))
    return TailEstimate(
        threshold=float(threshold),
        center=float(center),
        empirical_probability=p,
        chebyshev_bound=second / threshold**2,
        std_error=float(np.sqrt(p * (1 - p) / x.size)),
        count=x.size,
    )


# ----------------------------------------------------------- inequalities


@dataclass(frozen=True)
class InequalityReport:
    """``lhs <= rhs`` checked with a statistical allowance ``tolerance``."""

    name: str
    lhs: float
    rhs: float
    tolerance: float
    holds: bool

    @property
    def slack_ratio(self) -> float:
        if self.lhs == 0:
            return float("inf") if self.rhs > 0 else 1.0
        return self.rhs / self.lhs


def _combined(a: float, b: float) -> float:
    a = 0.0 if not np.isfinite(a) else a
    b = 0.0 if not np.isfinite(b) else b
    return float(np.hypot(a, b))


def check_difference_bound(
    grad_variances: Sequence[StatsLike] | StatsLike,
    diff_stats: StatsLike,
    m: int,
    length: float,
) -> InequalityReport:
    """``Var(dC) <= m^2 L^2 F`` with ``F`` the largest supplied gradient variance."""
    if not isinstance(grad_variances, (list, tuple)):
        grad_variances = [grad_variances]
    if not grad_variances or m < 1:
        raise ValueError("need at least one gradient variance and m >= 1")
    grads = [_as_stats(g) for g in grad_variances]
    diff = _as_stats(diff_stats)
    worst = max(grads, key=lambda g: g.variance)
    scale = m * m * length * length
    lhs = diff.variance
    rhs = scale * worst.variance
    tol = 3 * _combined(diff.variance_std_error, scale * worst.variance_std_error)
    return InequalityReport("difference_bound", lhs, rhs, tol, bool(lhs <= rhs + tol))


def check_shift_bound(diff_stats: StatsLike, grad_stats: StatsLike, mode=None) -> InequalityReport:
    """``Var(dC/dtheta_j) <= Var(C(theta + pi e_j) - C(theta)) / 4``.

    ``mode``, when given, must be the pi offset along a coordinate axis.
    """
    if mode is not None:
        from .shiftgrad import FixedOffset

        if not isinstance(mode, FixedOffset):
            raise ValueError("the shift bound needs fixed-offset differences")
        axis = np.flatnonzero(mode.direction)
        if abs(mode.length - np.pi) > 1e-12 or axis.size != 1 or mode.direction[axis[0]] != 1.0:
            raise ValueError("the shift bound needs an offset of pi along one coordinate")
    diff = _as_stats(diff_stats)
    grad = _as_stats(grad_stats)
    lhs = grad.variance
    rhs = diff.variance / 4
    tol = 3 * _combined(grad.variance_std_error, diff.variance_std_error / 4)
    tol = max(tol, 1e-12 * max(abs(lhs), abs(rhs)))
    return InequalityReport("shift_bound", lhs, rhs, tol, bool(lhs <= rhs + tol))


# -------------------------------------------------------------- decay fits


@dataclass(frozen=True)
class DecayFit:
    """Fit of ``value ~ A * b**(-n)``.

    ``exponential`` requires b > 1 with its confidence interval excluding 1,
    ``r_squared`` above :data:`R2_THRESHOLD`, and the exponential model
    fitting at least as well as a power law ``value ~ A * n**(-k)``.
    """

    points: tuple[tuple[float, float, float], ...]
    log_slope: float
    log_slope_ci: tuple[float, float]
    intercept: float
    r_squared: float
    power_law_r_squared: float

    @property
    def base(self) -> float:
        return float(np.exp(-self.log_slope))

    @property
    def base_ci(self) -> tuple[float, float]:
        lo, hi = self.log_slope_ci
        return float(np.exp(-hi)), float(np.exp(-lo))

    @property
    def exponential(self) -> bool:
        return bool(
            self.log_slope_ci[1] < 0
            and self.r_squared > R2_THRESHOLD
            and self.r_squared >= self.power_law_r_squared
        )

    @property
    def classification(self) -> str:
        return "exponential" if self.exponential else "non-exponential"

    def slopes_overlap(self, other: "DecayFit") -> bool:
        a_lo, a_hi = self.log_slope_ci
        b_lo, b_hi = other.log_slope_ci
        return bool(a_lo <= b_hi and b_lo <= a_hi)


def _wls(x, y, w):
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = np.sum(w * (x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - intercept - slope * x
    ss_res = float(np.sum(w * resid**2))
    ss_tot = float(np.sum(w * (y - ym) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, intercept, ss_res, sxx, r2


def fit_decay(points, confidence: float = CONFIDENCE) -> DecayFit:
    """Weighted least squares of ``log(value)`` on ``n``.

    ``points`` are ``(n, value, std_error)`` triples. Weights are
    ``(value / std_error)**2`` when every error is positive and finite,
    otherwise uniform. The slope's standard error is scaled by the reduced
    chi-square when that exceeds one (and always for unweighted fits).
    """
    pts = [(float(n), float(v), float(e) if e is not None else float("nan")) for n, v, e in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points to fit a decay, got {len(pts)}")
    if any(v <= 0 or not np.isfinite(v) for _, v, _ in pts):
        raise ValueError("decay fits need strictly positive values")
    x = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    e = np.array([p[2] for p in pts])
    y = np.log(v)
    weighted = bool(np.all(np.isfinite(e)) and np.all(e > 0))
    w = (v / e) ** 2 if weighted else np.ones_like(y)
    slope, intercept, ss_res, sxx, r2 = _wls(x, y, w)
    dof = len(pts) - 2
    chi2_red = ss_res / dof if dof > 0 else 0.0
    scale = max(1.0, chi2_red) if weighted else chi2_red
    se = float(np.sqrt(scale / sxx))
    t = float(sps.t.ppf(0.5 + confidence / 2, dof))
    if np.all(x > 0):
        _, _, _, _, r2_pow = _wls(np.log(x), y, w)
    else:
        r2_pow = float("-inf")
    return DecayFit(
        points=tuple(pts),
        log_slope=float(slope),
        log_slope_ci=(float(slope - t * se), float(slope + t * se)),
        intercept=float(intercept),
        r_squared=float(r2),
        power_law_r_squared=float(r2_pow),
    )


# ------------------------------------------------------------------ gorges


@dataclass(frozen=True)
class GorgeDepth:
    mean_cost: float
    best_found_min: float
    depth: float
    label: str


def gorge_depth(
    cost_samples, best_found_min: float, concentrated: bool | None = None, tol: float = 1e-12
) -> GorgeDepth:
    """Depth of the best known minimum below the sampled mean, plus a landscape label.

    ``concentrated`` should come from a decay fit of the cost variance or a
    fixed-threshold tail over ``n``; without it only an exactly flat sample
    counts as concentrated.
    """
    x = np.asarray(cost_samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("need at least one cost sample")
    mean = float(np.mean(x))
    depth = mean - float(best_found_min)
    if abs(depth) <= tol:
        depth = 0.0
    if concentrated is None:
        concentrated = bool(np.ptp(x) <= tol)
    if concentrated and depth > tol:
        label = "narrow gorge"
    elif concentrated:
        label = "concentrated-no-gorge"
    else:
        label = "neither"
    return GorgeDepth(mean, float(best_found_min), depth, label)
