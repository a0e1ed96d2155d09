"""Seeded scaling sweeps over (n, D) grids and their tabular output.

Every grid cell draws from its own substream keyed on (seed, n, D, quantity),
so results do not depend on the order or process in which cells run.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import landscapes as ls
from .circuit import build_rotation_layers, layer_slot
from .cost import CostSpec, PSI0_ANGLE, TrainingPair, hea_zz_cost
from .expressibility import MAX_TWIRL_QUBITS, expressibility_report
from .seeding import stream, uniform_parameters
from .shiftgrad import (
    FixedOffset,
    RandomPair,
    central_difference,
    coupled_shift_samples,
    gradient_samples,
    max_distance,
    partial_derivative,
    sample_differences,
)
from .statevector import MAX_QUBITS, Observable, prepare_product_state, z_string
from .stats import (
    DecayFit,
    EnsembleStats,
    InequalityReport,
    check_shift_bound,
    check_difference_bound,
    ensemble_stats,
    fit_decay,
)

EXPERIMENTS = ("gradvar", "diffvar", "compare", "layerdep", "landscape", "expressibility", "psr-check")
MODES = ("random_pair", "fixed_offset")
OBSERVABLES = ("zz", "identity")
FORMATS = ("csv", "json")
POSITIONS = ("first", "middle", "last")
FIELDS = ("n", "D", "quantity", "value", "std_error", "ensemble_size", "seed")
WORKERS_ENV = "BPGORGE_WORKERS"


class ConfigError(ValueError):
    """Invalid settings; ``key`` names the offending setting when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


# ----------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n_list: tuple[int, ...] = (2, 4, 6, 8, 10, 12)
    depth_list: tuple[int, ...] = (5, 20, 60, 100)
    ensemble_size: int = 2000
    seed: int = 0
    selector: str = "0"
    mode: str = "random_pair"
    offset_length: float = 1.0
    observable: str = "zz"
    kinds: tuple[str, ...] = tuple(k.value for k in ls.Kind)
    section: bool = False
    section_points: int = 65
    delta: float = 0.5
    haar_samples: int = 0
    format: str = "csv"
    out: str | None = None
    max_qubits: int = MAX_QUBITS

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        if not self.n_list:
            raise ConfigError("n_list must not be empty", key="n_list")
        if not self.depth_list:
            raise ConfigError("depth_list must not be empty", key="depth_list")
        if self.ensemble_size < 2:
            raise ConfigError(f"ensemble_size must be >= 2, got {self.ensemble_size}", key="ensemble_size")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer", key="seed")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}", key="mode")
        if self.observable not in OBSERVABLES:
            raise ConfigError(f"observable must be one of {', '.join(OBSERVABLES)}", key="observable")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}", key="format")
        if self.offset_length < 0:
            raise ConfigError("offset_length must be non-negative", key="offset_length")
        if self.delta <= 0:
            raise ConfigError("delta must be positive", key="delta")
        if any(d < 1 for d in self.depth_list):
            raise ConfigError("depths must be >= 1", key="depth_list")
        lowest = 1 if self.experiment in ("landscape", "expressibility") else 2
        if any(n < lowest for n in self.n_list):
            raise ConfigError(f"{self.experiment} needs n >= {lowest}", key="n_list")
        if any(n > self.max_qubits for n in self.n_list):
            raise ConfigError(f"n = {max(self.n_list)} exceeds max_qubits = {self.max_qubits}", key="n_list")
        if self.experiment == "expressibility" and max(self.n_list) > MAX_TWIRL_QUBITS:
            raise ConfigError(f"expressibility is limited to n <= {MAX_TWIRL_QUBITS}", key="n_list")
        if self.experiment == "expressibility" and self.ensemble_size < 100:
            raise ConfigError("expressibility needs ensemble_size >= 100", key="ensemble_size")
        for k in self.kinds:
            if k not in {x.value for x in ls.Kind}:
                raise ConfigError(f"unknown landscape kind {k!r}", key="kinds")
        try:
            parse_selector(self.selector)
        except ConfigError as exc:
            raise ConfigError(str(exc), key="selector") from None
        return self


def parse_int_list(text: str) -> tuple[int, ...]:
    """``"2,4,6"``, ``"2..10"`` or ``"2..12:2"`` (inclusive ranges)."""
    out: list[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if ".." in part:
            lo, _, rest = part.partition("..")
            hi, _, step = rest.partition(":")
            step_v = int(step) if step else 1
            if step_v < 1:
                raise ValueError(f"bad step in {part!r}")
            out.extend(range(int(lo), int(hi) + 1, step_v))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("empty list")
    return tuple(out)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _optional_str(text: str) -> str | None:
    return text or None


PARSERS: dict[str, Callable[[str], object]] = {
    "experiment": str,
    "n_list": parse_int_list,
    "n": parse_int_list,
    "depth_list": parse_int_list,
    "depth": parse_int_list,
    "ensemble_size": int,
    "ensemble": int,
    "seed": int,
    "selector": str,
    "mode": str,
    "offset_length": float,
    "observable": str,
    "kinds": _parse_str_list,
    "section": _parse_bool,
    "section_points": int,
    "delta": float,
    "haar_samples": int,
    "format": str,
    "out": _optional_str,
    "max_qubits": int,
}
ALIASES = {"n": "n_list", "depth": "depth_list", "ensemble": "ensemble_size"}


class ConfigValues(dict):
    """Parsed settings plus the ``source:line`` each one came from."""

    def __init__(self):
        super().__init__()
        self.origin: dict[str, str] = {}


def parse_config_text(text: str, source: str = "<config>") -> ConfigValues:
    """``key = value`` lines; ``#`` starts a comment. Errors name ``source:line``."""
    values = ConfigValues()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        where = f"{source}:{lineno}"
        if not sep or not key:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key not in PARSERS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            parsed = PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key}: {exc}") from None
        name = ALIASES.get(key, key)
        if name in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[name] = parsed
        values.origin[name] = where
    return values


def load_config(path: str) -> ConfigValues:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, path)


def make_config(experiment: str, file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """File values, then overrides (flags win); ``experiment`` always wins."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    merged["experiment"] = experiment
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
    try:
        return ExperimentConfig(**merged).validate()
    except ConfigError as exc:
        origin = getattr(file_values, "origin", {})
        flagged = exc.key in (overrides or {}) and overrides[exc.key] is not None
        if exc.key in origin and not flagged:
            raise ConfigError(f"{origin[exc.key]}: {exc}", exc.key) from None
        raise


# -------------------------------------------------------------- selectors


def parse_selector(text: str) -> tuple[str, tuple]:
    """``"all"``, layer positions (``"first,last"``) or slot indices (``"0,5"``)."""
    parts = _parse_str_list(str(text))
    if not parts:
        raise ConfigError("empty parameter selector")
    if parts == ("all",):
        return "all", ()
    if all(p in POSITIONS for p in parts):
        return "positions", parts
    try:
        idx = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad parameter selector {text!r}") from None
    if any(i < 0 for i in idx):
        raise ConfigError("parameter indices must be non-negative")
    return "indices", idx


def resolve_selector(spec: CostSpec, text: str) -> list[tuple[str, int]]:
    """``(label, slot)`` pairs; distinct labels may share a slot (e.g. D = 1)."""
    kind, items = parse_selector(text)
    m = spec.num_parameters
    if kind == "all":
        return [(f"j={j}", j) for j in range(m)]
    if kind == "positions":
        return [(p, layer_slot(spec.circuit, p)) for p in items]
    for j in items:
        if j >= m:
            raise ConfigError(f"parameter index {j} out of range for m = {m}")
    return [(f"j={j}", j) for j in items]


# ---------------------------------------------------------------- records


@dataclass(frozen=True)
class ScalingRecord:
    n: int
    D: int
    quantity: str
    value: float
    std_error: float
    ensemble_size: int
    seed: int

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in FIELDS}


def sort_records(records: Iterable[ScalingRecord]) -> list[ScalingRecord]:
    return sorted(records, key=lambda r: (r.n, r.D, r.quantity))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(records: Sequence[ScalingRecord], fmt: str) -> str:
    if not records:
        raise ValueError("no records to emit")
    rows = sort_records(records)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FIELDS)
        for r in rows:
            writer.writerow([_fmt(getattr(r, f)) for f in FIELDS])
        return buf.getvalue()
    if fmt == "json":
        doc = [{k: _json_value(v) for k, v in r.as_dict().items()} for r in rows]
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(records: Sequence[ScalingRecord], fmt: str = "csv", path: str | None = None) -> str:
    """Write records as CSV or JSON (UTF-8); ``path=None`` writes to stdout."""
    text = render(records, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return text
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None
    return text


def read_records(path: str) -> list[ScalingRecord]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        out.append(ScalingRecord(
            int(row["n"]), int(row["D"]), str(row["quantity"]),
            float("nan") if row["value"] is None else float(row["value"]),
            float("nan") if row["std_error"] is None else float(row["std_error"]),
            int(row["ensemble_size"]), int(row["seed"]),
        ))
    return out


# ------------------------------------------------------------- execution


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _map_cells(fn, cells: list) -> list:
    workers = min(worker_count(), len(cells))
    if workers <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def _observable(cfg: ExperimentConfig, n: int) -> Observable:
    if cfg.observable == "identity":
        return Observable.identity(n)
    return z_string(n, (0, 1)) if n >= 2 else z_string(n, (0,))


def cell_cost(cfg: ExperimentConfig, n: int, depth: int) -> CostSpec:
    """The scaling-study cost: HEA on a tilted product input measuring Z0 Z1."""
    return hea_zz_cost(n, depth, observable=_observable(cfg, n), max_qubits=cfg.max_qubits)


def _record(cfg, n, depth, quantity, value, se, count=None) -> ScalingRecord:
    return ScalingRecord(n, depth, quantity, float(value), float(se),
                         cfg.ensemble_size if count is None else int(count), cfg.seed)


def _grad_stats(cfg: ExperimentConfig, spec: CostSpec, n: int, depth: int, label: str, j: int) -> EnsembleStats:
    return ensemble_stats(gradient_samples(spec, j, cfg.ensemble_size, cfg.seed, n, depth, f"grad_var[{label}]"))


def _grad_cell(args) -> list[ScalingRecord]:
    cfg, n, depth = args
    spec = cell_cost(cfg, n, depth)
    out = []
    for label, j in resolve_selector(spec, cfg.selector):
        st = _grad_stats(cfg, spec, n, depth, label, j)
        out.append(_record(cfg, n, depth, f"grad_var[{label}]", st.variance, st.variance_std_error))
    return out


def _mode(cfg: ExperimentConfig, m: int):
    if cfg.mode == "random_pair":
        return RandomPair()
    return FixedOffset(cfg.offset_length, np.full(m, 1 / np.sqrt(m)))


def _diff_stats(cfg: ExperimentConfig, spec: CostSpec, n: int, depth: int) -> EnsembleStats:
    ens = sample_differences(spec, _mode(cfg, spec.num_parameters), cfg.ensemble_size, cfg.seed, n, depth, "diff_var")
    return ensemble_stats(ens.values)


def _diff_cell(args) -> list[ScalingRecord]:
    cfg, n, depth = args
    spec = cell_cost(cfg, n, depth)
    st = _diff_stats(cfg, spec, n, depth)
    return [
        _record(cfg, n, depth, "diff_var", st.variance, st.variance_std_error),
        _record(cfg, n, depth, "diff_mean", st.mean, st.mean_std_error),
    ]


def _grid(cfg: ExperimentConfig) -> list[tuple]:
    return [(cfg, n, d) for n in cfg.n_list for d in cfg.depth_list]


def _flatten(parts) -> list[ScalingRecord]:
    return sort_records(r for part in parts for r in part)


def run_gradvar(cfg: ExperimentConfig) -> list[ScalingRecord]:
    """Shift-rule gradient variance for the selected parameters on every (n, D) cell."""
    return _flatten(_map_cells(_grad_cell, _grid(cfg)))


def run_diffvar(cfg: ExperimentConfig) -> list[ScalingRecord]:
    """Variance (and mean) of cost differences in the configured mode on every cell."""
    return _flatten(_map_cells(_diff_cell, _grid(cfg)))


def run_layerdep(cfg: ExperimentConfig) -> list[ScalingRecord]:
    """Gradient variance for one parameter per selected layer position."""
    kind, _ = parse_selector(cfg.selector)
    if kind != "positions":
        cfg = replace(cfg, selector="first,middle,last")
    return run_gradvar(cfg)


def series(records: Iterable[ScalingRecord], quantity: str, depth: int) -> list[tuple[int, float, float]]:
    return [(r.n, r.value, r.std_error) for r in sort_records(records) if r.quantity == quantity and r.D == depth]


def fit_series(points) -> DecayFit | None:
    positive = [p for p in points if p[1] > 0]
    return fit_decay(positive) if len(positive) >= 3 else None


def layer_fits(records: Sequence[ScalingRecord]) -> dict[tuple[int, str], DecayFit | None]:
    out = {}
    for depth in sorted({r.D for r in records}):
        for q in sorted({r.quantity for r in records if r.D == depth}):
            out[(depth, q)] = fit_series(series(records, q, depth))
    return out


# ----------------------------------------------------------------- compare


@dataclass(frozen=True)
class SeriesComparison:
    depth: int
    gradient_fit: DecayFit | None
    difference_fit: DecayFit | None

    @property
    def gradient_class(self) -> str:
        return self.gradient_fit.classification if self.gradient_fit else "non-exponential"

    @property
    def difference_class(self) -> str:
        return self.difference_fit.classification if self.difference_fit else "non-exponential"

    @property
    def classes_match(self) -> bool:
        return self.gradient_class == self.difference_class

    @property
    def slopes_overlap(self) -> bool | None:
        if self.gradient_fit is None or self.difference_fit is None:
            return None
        return self.gradient_fit.slopes_overlap(self.difference_fit)


@dataclass(frozen=True)
class CompareReport:
    records: list[ScalingRecord]
    comparisons: list[SeriesComparison]
    inequalities: list[tuple[int, int, InequalityReport]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.classes_match for c in self.comparisons) and all(r.holds for _, _, r in self.inequalities)

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.comparisons:
            base = lambda f: f"{f.base:.4g}" if f else "-"  # noqa: E731
            lines.append(
                f"D={c.depth}: gradient {c.gradient_class} (b={base(c.gradient_fit)}), "
                f"differences {c.difference_class} (b={base(c.difference_fit)}), "
                f"match={'yes' if c.classes_match else 'NO'}, slopes overlap={c.slopes_overlap}"
            )
        bad = [(n, d, r) for n, d, r in self.inequalities if not r.holds]
        lines.append(f"inequalities checked: {len(self.inequalities)}, violated: {len(bad)}")
        for n, d, r in bad:
            lines.append(f"  n={n} D={d} {r.name}: {r.lhs:.6g} > {r.rhs:.6g} + {r.tolerance:.3g}")
        return lines


def compare_series(depth: int, grad_points, diff_points) -> SeriesComparison:
    return SeriesComparison(depth, fit_series(grad_points), fit_series(diff_points))


def _compare_cell(args) -> tuple[list[ScalingRecord], list[InequalityReport]]:
    cfg, n, depth = args
    spec = cell_cost(cfg, n, depth)
    m = spec.num_parameters
    selected = resolve_selector(spec, cfg.selector)
    recs, grads = [], []
    for label, j in selected:
        st = _grad_stats(cfg, spec, n, depth, label, j)
        grads.append(st)
        recs.append(_record(cfg, n, depth, f"grad_var[{label}]", st.variance, st.variance_std_error))
    worst = max(grads, key=lambda s: s.variance)
    recs.append(_record(cfg, n, depth, "grad_var_max", worst.variance, worst.variance_std_error))
    diff = _diff_stats(cfg, spec, n, depth)
    recs.append(_record(cfg, n, depth, "diff_var", diff.variance, diff.variance_std_error))
    recs.append(_record(cfg, n, depth, "diff_mean", diff.mean, diff.mean_std_error))

    length = max_distance(m) if cfg.mode == "random_pair" else cfg.offset_length
    t1 = check_difference_bound(grads, diff, m, length)
    recs.append(_record(cfg, n, depth, "diff_bound_lhs", t1.lhs, diff.variance_std_error))
    recs.append(_record(cfg, n, depth, "diff_bound_rhs", t1.rhs, m * m * length * length * worst.variance_std_error))

    j = selected[0][1]
    g, d = coupled_shift_samples(spec, j, cfg.ensemble_size, cfg.seed, n, depth, "shift_bound")
    gs, ds = ensemble_stats(g), ensemble_stats(d)
    l2 = check_shift_bound(ds, gs, FixedOffset.along(np.pi, m, j))
    recs.append(_record(cfg, n, depth, "shift_grad_var", l2.lhs, gs.variance_std_error))
    recs.append(_record(cfg, n, depth, "shift_diff_var_quarter", l2.rhs, ds.variance_std_error / 4))
    return recs, [t1, l2]


def run_compare(cfg: ExperimentConfig) -> CompareReport:
    """Gradient and difference sweeps on one grid, their decay fits, and the
    per-cell inequalities relating them."""
    cells = _grid(cfg)
    results = _map_cells(_compare_cell, cells)
    records = _flatten(r for r, _ in results)
    inequalities = [(n, d, rep) for (_, n, d), (_, reps) in zip(cells, results) for rep in reps]
    comparisons = [
        compare_series(d, series(records, "grad_var_max", d), series(records, "diff_var", d))
        for d in cfg.depth_list
    ]
    return CompareReport(records, comparisons, inequalities)


def compare_landscape(kind, n_list, ensemble_size: int, seed: int) -> SeriesComparison:
    """The same comparison on a closed-form landscape (gradient of coordinate 0
    against random-pair differences)."""
    grad_pts, diff_pts = [], []
    for n in n_list:
        land = ls.AnalyticLandscape(kind, n)
        g = ensemble_stats(ls.sample_gradients(land, ensemble_size, seed, "compare")[:, 0])
        a = ls.sample_values(land, ensemble_size, seed, "compare-a")
        b = ls.sample_values(land, ensemble_size, seed, "compare-b")
        d = ensemble_stats(b - a)
        grad_pts.append((n, g.variance, g.variance_std_error))
        diff_pts.append((n, d.variance, d.variance_std_error))
    return compare_series(0, grad_pts, diff_pts)


# --------------------------------------------------------------- landscape


def run_landscape(cfg: ExperimentConfig) -> list[ScalingRecord]:
    """Sampled gradient variance, mean and tail probability per kind and n,
    with closed-form values alongside; ``section`` emits diagonal cross-sections."""
    out = []
    for kind in cfg.kinds:
        for n in cfg.n_list:
            if kind == ls.Kind.PLATEAU_NO_GORGE.value and n % 2:
                raise ConfigError(f"{kind} needs even n, got {n}")
            land = ls.AnalyticLandscape(kind, n)
            if cfg.section:
                ts = np.linspace(0.0, 2 * np.pi, cfg.section_points)
                vals = ls.cross_section(land, ts)
                for k, (t, v) in enumerate(zip(ts, vals)):
                    out.append(ScalingRecord(n, 0, f"{kind}.section.{k:04d}@{t:.6f}", float(v), 0.0,
                                             cfg.section_points, cfg.seed))
                continue
            g = ls.gradient_variance(land, cfg.ensemble_size, cfg.seed)
            vals = ls.sample_values(land, cfg.ensemble_size, cfg.seed)
            st = ensemble_stats(vals)
            orc = ls.landscape_oracles(land)
            tail = ls.tail_estimate(land, cfg.delta, cfg.ensemble_size, cfg.seed)
            rec = lambda q, v, se: ScalingRecord(n, 0, f"{kind}.{q}", float(v), float(se),  # noqa: E731
                                                 cfg.ensemble_size, cfg.seed)
            out += [
                rec("grad_var", g.variance, g.variance_std_error),
                rec("mean", st.mean, st.mean_std_error),
                rec("cost_var", st.variance, st.variance_std_error),
                rec("tail", tail.empirical_probability, tail.std_error),
                rec("tail_chebyshev", tail.chebyshev_bound, 0.0),
                rec("mean_exact", orc.mean, 0.0),
            ]
            if orc.gradient_variance is not None:
                out.append(rec("grad_var_exact", orc.gradient_variance, 0.0))
    return sort_records(out)


# ---------------------------------------------------------- expressibility


def expressibility_cost(n: int, depth: int, observable: str = "zz") -> CostSpec:
    """HEA cost for n >= 2; for one qubit, ``depth`` rotation layers measuring Z."""
    if n >= 2:
        obs = Observable.identity(n) if observable == "identity" else z_string(n, (0, 1))
        return hea_zz_cost(n, depth, observable=obs)
    circuit = build_rotation_layers(1, depth)
    obs = Observable.identity(1) if observable == "identity" else z_string(1, (0,))
    return CostSpec(circuit, (TrainingPair(1.0, prepare_product_state(1, PSI0_ANGLE), obs),))


def _expr_cell(args) -> list[ScalingRecord]:
    cfg, n, depth = args
    spec = expressibility_cost(n, depth, cfg.observable)
    label, j = resolve_selector(spec, cfg.selector)[0]
    haar = cfg.haar_samples or cfg.ensemble_size
    rep = expressibility_report(spec, j, cfg.ensemble_size, cfg.seed, haar, key=(n, depth))
    grad = ensemble_stats(gradient_samples(spec, j, cfg.ensemble_size, cfg.seed, n, depth, "expr-grad"))
    return [
        _record(cfg, n, depth, "epsilon_O", rep.epsilon_o[0].value, rep.epsilon_o[0].std_error),
        _record(cfg, n, depth, "epsilon_rho", rep.epsilon_rho[0].value, rep.epsilon_rho[0].std_error),
        _record(cfg, n, depth, "haar_grad_var", rep.haar_variance.variance,
                rep.haar_variance.variance_std_error, haar),
        _record(cfg, n, depth, "bound_rhs", rep.bound_rhs, rep.bound_std_error),
        _record(cfg, n, depth, f"grad_var[{label}]", grad.variance, grad.variance_std_error),
    ]


def run_expressibility(cfg: ExperimentConfig) -> list[ScalingRecord]:
    """Expressibility of both circuit sides, the Haar gradient variance, the
    resulting variance bound and the measured gradient variance per cell."""
    return _flatten(_map_cells(_expr_cell, _grid(cfg)))


# --------------------------------------------------------------- psr-check


def _psr_cell(args) -> list[ScalingRecord]:
    cfg, n, depth = args
    spec = cell_cost(cfg, n, depth)
    rng = stream(cfg.seed, n, depth, "psr_max_abs_error")
    thetas = uniform_parameters(rng, cfg.ensemble_size, spec.num_parameters)
    slots = rng.integers(0, spec.num_parameters, size=cfg.ensemble_size)
    gaps = np.array([
        abs(partial_derivative(spec, th, int(j)) - central_difference(spec, th, int(j)))
        for th, j in zip(thetas, slots)
    ])
    return [_record(cfg, n, depth, "psr_max_abs_error", gaps.max(), 0.0),
            _record(cfg, n, depth, "psr_mean_abs_error", gaps.mean(), gaps.std(ddof=1) / np.sqrt(len(gaps)))]


def run_psr_check(cfg: ExperimentConfig) -> list[ScalingRecord]:
    """Largest gap between shift-rule and central-difference derivatives over
    ``ensemble_size`` random (theta, j) draws per cell."""
    return _flatten(_map_cells(_psr_cell, _grid(cfg)))


RUNNERS = {
    "gradvar": run_gradvar,
    "diffvar": run_diffvar,
    "layerdep": run_layerdep,
    "landscape": run_landscape,
    "expressibility": run_expressibility,
    "psr-check": run_psr_check,
}
