"""Benchmark harness: repeated descent runs summarised per oracle call.

An experiment pits several estimator configurations against one problem
family under a shared oracle-call budget.  Every trial records the raw
oracle response per call; the harness aligns the running best onto a
common call grid (carrying the last value forward between calls) and
reports the median with the interquartile band across trials.

Outputs are written deterministically: the CSV is sorted, floats are
printed with repr-faithful precision, and the SVG plot is assembled
from the same aggregated numbers with no timestamps or random ids, so
a rerun of the same spec reproduces both files byte for byte.

Method groups can run in parallel worker processes; the cap comes from
the ``SQGRAD_MAX_WORKERS`` environment variable and defaults to the
CPU count.  Seeds are derived per (method, trial), so the schedule of
workers cannot change any result.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from xml.etree import ElementTree as ET

import numpy as np

from .descent import DescentConfig, Schedule, Trajectory, _run_group, derive_rng, derive_seed
from .errors import ConfigError, EmptyInputError
from .estimators import make_estimator
from .oracles import ProblemSpec, parse_problem

__all__ = [
    "MethodSpec",
    "ExperimentSpec",
    "AggregateSeries",
    "ExperimentResult",
    "load_experiment_spec",
    "load_descent_config",
    "run_experiment",
    "aggregate",
    "call_grid",
    "emit_csv",
    "parse_csv",
    "emit_plot",
    "write_outputs",
]

ENV_MAX_WORKERS = "SQGRAD_MAX_WORKERS"

CSV_HEADER = ("method", "oracle_calls", "median", "p25", "p75")


@dataclass(frozen=True)
class MethodSpec:
    """One estimator entry in an experiment; label defaults to the
    estimator name and is what the CSV and legend show."""

    estimator: str
    eta: float
    schedule: str = "constant"
    label: str | None = None

    @property
    def display(self) -> str:
        return self.label if self.label else self.estimator


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    problem: str
    budget: int
    n_trials: int
    methods: tuple[MethodSpec, ...]
    base_seed: int = 0
    direction: str = "maximize"
    x0: float = 0.5
    clamp: float = 1e-4
    grid_points: int = 512

    def __post_init__(self):
        if int(self.budget) < 1:
            raise ConfigError("budget must be a positive call count")
        if int(self.n_trials) < 1:
            raise ConfigError("n_trials must be at least 1")
        if int(self.grid_points) < 2:
            raise ConfigError("grid_points must be at least 2")
        if not self.methods:
            raise ConfigError("an experiment needs at least one method")
        labels = [m.display for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError("method labels must be unique within an experiment")


@dataclass
class AggregateSeries:
    """Percentile summary of one method's running best on the grid."""

    label: str
    estimator: str
    oracle_calls: np.ndarray
    median: np.ndarray
    p25: np.ndarray
    p75: np.ndarray


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    grid: np.ndarray
    series: list[AggregateSeries] = field(default_factory=list)


def _take(raw: dict, key: str, default=None, required: bool = False):
    if required and key not in raw:
        raise ConfigError(f"missing required field {key!r}")
    return raw.pop(key, default)


def _method_from_dict(raw: dict) -> MethodSpec:
    raw = dict(raw)
    spec = MethodSpec(
        estimator=str(_take(raw, "estimator", required=True)),
        eta=float(_take(raw, "eta", required=True)),
        schedule=str(_take(raw, "schedule", "constant")),
        label=_take(raw, "label"),
    )
    if raw:
        raise ConfigError(f"unknown method fields: {sorted(raw)}")
    Schedule(spec.schedule, spec.eta)  # fail early on bad schedules
    make_estimator(spec.estimator)
    return spec


def load_experiment_spec(path) -> ExperimentSpec:
    """Read an experiment description from JSON.

    Required: name, problem, budget, n_trials, methods (each with
    estimator and eta).  Optional: base_seed, direction, x0, clamp,
    grid_points, per-method schedule and label.  Unknown fields are
    rejected rather than ignored.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read experiment spec {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("experiment spec must be a JSON object")
    methods_raw = _take(raw, "methods", required=True)
    if not isinstance(methods_raw, list):
        raise ConfigError("methods must be a JSON array")
    spec = ExperimentSpec(
        name=str(_take(raw, "name", required=True)),
        problem=str(_take(raw, "problem", required=True)),
        budget=int(_take(raw, "budget", required=True)),
        n_trials=int(_take(raw, "n_trials", required=True)),
        methods=tuple(_method_from_dict(m) for m in methods_raw),
        base_seed=int(_take(raw, "base_seed", 0)),
        direction=str(_take(raw, "direction", "maximize")),
        x0=float(_take(raw, "x0", 0.5)),
        clamp=float(_take(raw, "clamp", 1e-4)),
        grid_points=int(_take(raw, "grid_points", 512)),
    )
    if raw:
        raise ConfigError(f"unknown experiment fields: {sorted(raw)}")
    parse_problem(spec.problem)
    return spec


def load_descent_config(path) -> tuple[DescentConfig, ProblemSpec]:
    """Read a single-run descent description from JSON."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read descent config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("descent config must be a JSON object")
    problem = parse_problem(str(_take(raw, "problem", required=True)))
    x0 = _take(raw, "x0", 0.5)
    config = DescentConfig(
        estimator=str(_take(raw, "estimator", required=True)),
        steps=int(_take(raw, "steps", required=True)),
        schedule=Schedule(
            str(_take(raw, "schedule", "constant")),
            float(_take(raw, "eta", required=True)),
        ),
        direction=str(_take(raw, "direction", "minimize")),
        x0=tuple(x0) if isinstance(x0, list) else float(x0),
        clamp=float(_take(raw, "clamp", 1e-4)),
        seed=int(_take(raw, "seed", 0)),
        snapshot_every=_take(raw, "snapshot_every"),
    )
    if raw:
        raise ConfigError(f"unknown descent fields: {sorted(raw)}")
    return config, problem


def call_grid(budget: int, grid_points: int = 512) -> np.ndarray:
    """Distinct integer call counts from 1 to the budget, at most
    grid_points of them."""
    if budget < 1:
        raise ConfigError("budget must be positive")
    pts = np.linspace(1, budget, min(int(budget), int(grid_points)))
    return np.unique(np.rint(pts).astype(np.int64))


def aggregate(
    trajectories: list[Trajectory], grid: np.ndarray, label: str | None = None
) -> AggregateSeries:
    """Median and quartiles of the running best across trials.

    The running best is a step function of the call count; between
    recorded calls the last value is carried forward.  Percentiles are
    the linearly interpolated kind.
    """
    if not trajectories:
        raise EmptyInputError("no trajectories to aggregate")
    grid = np.asarray(grid, dtype=np.int64)
    rows = np.empty((len(trajectories), grid.shape[0]))
    for i, traj in enumerate(trajectories):
        if traj.estimator != trajectories[0].estimator:
            raise ConfigError("cannot aggregate across different estimators")
        idx = np.searchsorted(traj.calls, grid, side="right") - 1
        if np.any(idx < 0) or grid[-1] > traj.calls[-1]:
            raise ConfigError("grid extends beyond the recorded calls")
        rows[i] = traj.best[idx]
    p25, med, p75 = np.percentile(rows, [25.0, 50.0, 75.0], axis=0, method="linear")
    return AggregateSeries(
        label=label if label else trajectories[0].estimator,
        estimator=trajectories[0].estimator,
        oracle_calls=grid.copy(),
        median=med,
        p25=p25,
        p75=p75,
    )


def _method_trajectories(spec: ExperimentSpec, mi: int) -> list[Trajectory]:
    """All trials of one method.  Oracle instances for randomized
    problems derive from (base_seed, 1, trial) only, so every method
    faces the same sequence of instances; noise streams derive from
    (base_seed, 2, method, trial)."""
    method = spec.methods[mi]
    problem = parse_problem(spec.problem)
    est = make_estimator(method.estimator)
    steps = int(spec.budget) // est.queries_per_sample
    if steps < 1:
        raise ConfigError(
            f"budget {spec.budget} cannot fund one step of {method.estimator}"
        )
    configs = [
        DescentConfig(
            estimator=method.estimator,
            steps=steps,
            schedule=Schedule(method.schedule, method.eta),
            direction=spec.direction,
            x0=spec.x0,
            clamp=spec.clamp,
            seed=derive_seed(spec.base_seed, 2, mi, trial),
        )
        for trial in range(int(spec.n_trials))
    ]
    if problem.randomized:
        oracles = [
            problem.make(derive_rng(spec.base_seed, 1, trial))
            for trial in range(int(spec.n_trials))
        ]
    else:
        shared = problem.make(derive_rng(spec.base_seed, 1, 0))
        oracles = [shared] * int(spec.n_trials)
    return _run_group(configs, oracles)


def _worker_cap() -> int:
    raw = os.environ.get(ENV_MAX_WORKERS, "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{ENV_MAX_WORKERS} must be an integer") from exc
        if cap < 1:
            raise ConfigError(f"{ENV_MAX_WORKERS} must be at least 1")
        return cap
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every method of the experiment and aggregate per method.

    The unit of parallelism is the method group; results are assembled
    in spec order, so the output does not depend on the worker count.
    """
    grid = call_grid(int(spec.budget), int(spec.grid_points))
    workers = min(_worker_cap(), len(spec.methods))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(_method_trajectories, [spec] * len(spec.methods), range(len(spec.methods))))
    else:
        groups = [_method_trajectories(spec, mi) for mi in range(len(spec.methods))]
    series = [
        aggregate(trajs, grid, label=m.display)
        for m, trajs in zip(spec.methods, groups)
    ]
    return ExperimentResult(spec=spec, grid=grid, series=series)


# ---------- serialisation ----------


def emit_csv(series: list[AggregateSeries], path) -> None:
    """Write aggregated series as CSV, sorted by (method, calls)."""
    rows = []
    for s in series:
        for j in range(s.oracle_calls.shape[0]):
            rows.append(
                (
                    s.label,
                    int(s.oracle_calls[j]),
                    float(s.median[j]),
                    float(s.p25[j]),
                    float(s.p75[j]),
                )
            )
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for label, calls, med, p25, p75 in rows:
            writer.writerow(
                (label, calls, f"{med:.17g}", f"{p25:.17g}", f"{p75:.17g}")
            )


def parse_csv(path) -> list[AggregateSeries]:
    """Read emit_csv output back; series come out sorted by label."""
    by_label: dict[str, list[tuple[int, float, float, float]]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header in {path}: {header}")
        for row in reader:
            if len(row) != 5:
                raise ConfigError(f"malformed CSV row: {row}")
            label, calls, med, p25, p75 = row
            by_label.setdefault(label, []).append(
                (int(calls), float(med), float(p25), float(p75))
            )
    out = []
    for label in sorted(by_label):
        entries = sorted(by_label[label])
        arr = np.asarray(entries, dtype=float)
        out.append(
            AggregateSeries(
                label=label,
                estimator=label,
                oracle_calls=arr[:, 0].astype(np.int64),
                median=arr[:, 1],
                p25=arr[:, 2],
                p75=arr[:, 3],
            )
        )
    return out


# ---------- plotting ----------

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#17becf",
)

_W, _H = 880.0, 560.0
_ML, _MR, _MT, _MB = 72.0, 232.0, 40.0, 58.0


def _is_single_query(estimator: str) -> bool:
    head = estimator.partition(":")[0]
    return head in ("esg", "encoded_esg")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _path_data(xs: np.ndarray, ys: np.ndarray) -> str:
    parts = [f"{'M' if i == 0 else 'L'}{_fmt(x)},{_fmt(y)}" for i, (x, y) in enumerate(zip(xs, ys))]
    return " ".join(parts)


def emit_plot(series: list[AggregateSeries], path, title: str | None = None) -> None:
    """Write a deterministic SVG of medians with interquartile bands.

    Single-query gradient methods draw solid, everything else dashed.
    Legend text is the series label verbatim.
    """
    if not series:
        raise EmptyInputError("nothing to plot")
    x_max = max(float(s.oracle_calls[-1]) for s in series)
    x_min = 0.0
    y_lo = min(float(np.min(s.p25)) for s in series)
    y_hi = max(float(np.max(s.p75)) for s in series)
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return _ML + (v - x_min) / (x_max - x_min) * (_W - _ML - _MR)

    def sy(v):
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    root = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": f"{_W:.0f}",
            "height": f"{_H:.0f}",
            "viewBox": f"0 0 {_W:.0f} {_H:.0f}",
        },
    )
    ET.SubElement(root, "rect", {"x": "0", "y": "0", "width": f"{_W:.0f}",
                                 "height": f"{_H:.0f}", "fill": "white"})
    axes = ET.SubElement(root, "g", {"stroke": "#333333", "stroke-width": "1"})
    ET.SubElement(axes, "line", {"x1": _fmt(sx(x_min)), "y1": _fmt(sy(y_lo)),
                                 "x2": _fmt(sx(x_max)), "y2": _fmt(sy(y_lo))})
    ET.SubElement(axes, "line", {"x1": _fmt(sx(x_min)), "y1": _fmt(sy(y_lo)),
                                 "x2": _fmt(sx(x_min)), "y2": _fmt(sy(y_hi))})

    ticks = ET.SubElement(root, "g", {
        "font-family": "sans-serif", "font-size": "12", "fill": "#333333"})
    for tv in np.linspace(x_min, x_max, 6):
        px = sx(tv)
        ET.SubElement(axes, "line", {"x1": _fmt(px), "y1": _fmt(sy(y_lo)),
                                     "x2": _fmt(px), "y2": _fmt(sy(y_lo) + 5)})
        t = ET.SubElement(ticks, "text", {"x": _fmt(px), "y": _fmt(sy(y_lo) + 20),
                                          "text-anchor": "middle"})
        t.text = f"{tv:g}"
    for tv in np.linspace(y_lo, y_hi, 6):
        py = sy(tv)
        ET.SubElement(axes, "line", {"x1": _fmt(sx(x_min) - 5), "y1": _fmt(py),
                                     "x2": _fmt(sx(x_min)), "y2": _fmt(py)})
        t = ET.SubElement(ticks, "text", {"x": _fmt(sx(x_min) - 9), "y": _fmt(py + 4),
                                          "text-anchor": "end"})
        t.text = f"{tv:.4g}"

    xl = ET.SubElement(ticks, "text", {
        "x": _fmt((sx(x_min) + sx(x_max)) / 2), "y": _fmt(_H - 14),
        "text-anchor": "middle"})
    xl.text = "oracle calls"
    yl = ET.SubElement(ticks, "text", {
        "x": "18", "y": _fmt((sy(y_lo) + sy(y_hi)) / 2),
        "text-anchor": "middle",
        "transform": f"rotate(-90 18 {_fmt((sy(y_lo) + sy(y_hi)) / 2)})"})
    yl.text = "best oracle value"
    if title:
        tt = ET.SubElement(ticks, "text", {
            "x": _fmt((sx(x_min) + sx(x_max)) / 2), "y": "24",
            "text-anchor": "middle", "font-size": "15"})
        tt.text = title

    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        solid = _is_single_query(s.estimator)
        px = sx(s.oracle_calls.astype(float))
        band_x = np.concatenate([px, px[::-1]])
        band_y = np.concatenate([sy(s.p75), sy(s.p25)[::-1]])
        ET.SubElement(root, "path", {
            "class": "band", "d": _path_data(band_x, band_y) + " Z",
            "fill": color, "fill-opacity": "0.16", "stroke": "none"})
        line = {
            "class": "median", "d": _path_data(px, sy(s.median)),
            "fill": "none", "stroke": color,
            "stroke-width": "2.2" if solid else "1.6"}
        if not solid:
            line["stroke-dasharray"] = "7 4"
        ET.SubElement(root, "path", line)

    legend = ET.SubElement(root, "g", {
        "font-family": "sans-serif", "font-size": "13", "fill": "#222222"})
    lx = _W - _MR + 18
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        solid = _is_single_query(s.estimator)
        ly = _MT + 16 + 24 * i
        seg = {"x1": _fmt(lx), "y1": _fmt(ly), "x2": _fmt(lx + 34), "y2": _fmt(ly),
               "stroke": color, "stroke-width": "2.2" if solid else "1.6"}
        if not solid:
            seg["stroke-dasharray"] = "7 4"
        ET.SubElement(legend, "line", seg)
        t = ET.SubElement(legend, "text", {"x": _fmt(lx + 42), "y": _fmt(ly + 4)})
        t.text = s.label

    tree = ET.ElementTree(root)
    ET.indent(tree)
    tree.write(path, encoding="unicode", xml_declaration=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("\n")


def write_outputs(result: ExperimentResult, out_dir) -> tuple[str, str]:
    """Write <name>.csv and <name>.svg under out_dir; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(str(out_dir), result.spec.name)
    csv_path, svg_path = base + ".csv", base + ".svg"
    emit_csv(result.series, csv_path)
    emit_plot(result.series, svg_path, title=result.spec.name)
    return csv_path, svg_path
