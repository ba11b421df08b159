"""Benchmark harness: repeated seeded runs, boxplot statistics, scaling fits, CSV/SVG output."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .classical import AnnealSchedule, brute_force, check_validity, simulated_annealing
from .encodings import PceConfig, pce_min_qubits, sqoe_assign
from .errors import CapabilityError, ConfigurationError
from .farm import FarmProblem, layout_power
from .optimizers import OptimizerConfig, RunResult, sgd_optimize_sqoe, simplex_optimize_pce, warm_start
from .presets import DEFAULT_LAMBDA, load_preset
from .qubo import MAX_EXACT_SITES, QuboMatrix, assemble_qubo, to_ising
from .sim import MAX_QUBITS

METHODS = ("pce", "sqoe", "exact", "anneal")
STAT_FIELDS = ("min", "q1", "median", "q3", "max")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a preset over several grid sizes and one method.

    ``groups`` lists the method parameter (``k`` for PCE, ``q`` for SQOE)
    per group; an entry is either one value used for every size or a
    sequence with one value per entry of ``sizes``.
    """

    preset: str
    sizes: tuple[int, ...]
    method: str
    groups: tuple = (None,)
    samples: int = 64
    seed: int = 0
    shots: int | None = None
    warm_start: bool = True
    lam: float = DEFAULT_LAMBDA
    workers: int = 1
    optimizer: dict = field(default_factory=dict)
    anneal_sweeps: int = 2000
    output_dir: str = "bench_out"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.samples < 1:
            raise ConfigurationError("samples must be at least 1")
        if not self.sizes:
            raise ConfigurationError("at least one grid size is needed")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        groups = tuple(tuple(g) if isinstance(g, (list, tuple)) else g for g in self.groups)
        for g in groups:
            if isinstance(g, tuple) and len(g) != len(self.sizes):
                raise ConfigurationError(f"group {g} needs one value per size {self.sizes}")
        if self.method in ("pce", "sqoe") and any(g is None for g in groups):
            raise ConfigurationError(f"method {self.method} needs a parameter for every group")
        object.__setattr__(self, "groups", groups)

    def param(self, group: int, size_index: int):
        g = self.groups[group]
        return g[size_index] if isinstance(g, tuple) else g

    def group_label(self, group: int) -> str:
        prefix = {"pce": "k", "sqoe": "q"}.get(self.method, self.method)
        return f"{prefix}{group}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        d["groups"] = [list(g) if isinstance(g, tuple) else g for g in self.groups]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        data["sizes"] = tuple(data.get("sizes", ()))
        data["groups"] = tuple(data.get("groups", (None,)))
        return cls(**data)

    def digest(self) -> str:
        blob = json.dumps({k: v for k, v in self.to_dict().items() if k not in ("workers", "output_dir")},
                          sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:10]


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class CellReport:
    """All runs for one (size, group) cell."""

    size: int
    group: int
    param: object
    runs: list[RunResult]
    max_turbines: int

    @property
    def trimmed(self) -> list[RunResult]:
        return [r for r in self.runs if r.turbines == self.max_turbines]

    @property
    def invalid_count(self) -> int:
        return len(self.runs) - len(self.trimmed)

    @property
    def mean_time(self) -> float:
        return float(np.mean([r.wall_time for r in self.runs]))


@dataclass
class BenchReport:
    config: ExperimentConfig
    cells: list[CellReport]


def box_stats(values: Sequence[float]) -> dict[str, float]:
    if len(values) == 0:
        return {k: math.nan for k in STAT_FIELDS}
    q = np.percentile(np.asarray(values, dtype=float), [0, 25, 50, 75, 100])
    return dict(zip(STAT_FIELDS, (float(v) for v in q)))


def _check_capability(config: ExperimentConfig, problem: FarmProblem, param) -> None:
    n = problem.n_sites
    if config.method == "exact" and n > MAX_EXACT_SITES:
        raise CapabilityError(f"exact search is capped at {MAX_EXACT_SITES} sites; L={problem.grid.side_count} has {n}")
    if config.method == "pce":
        qubits = pce_min_qubits(n, int(param))
        if qubits > MAX_QUBITS:
            raise CapabilityError(f"PCE with k={param} needs {qubits} qubits for N={n}; limit is {MAX_QUBITS}")
    if config.method == "sqoe" and int(param) < 1:
        raise CapabilityError("SQOE needs at least one qubit")


def run_single(config: ExperimentConfig, problem: FarmProblem, param, seed: int,
               q: QuboMatrix | None = None) -> RunResult:
    q = q or assemble_qubo(problem)
    if config.method in ("exact", "anneal"):
        rep = brute_force(q) if config.method == "exact" else simulated_annealing(
            q, AnnealSchedule(sweeps=config.anneal_sweeps), seed)
        return RunResult(rep.layout, rep.cost, rep.cost, layout_power(problem, rep.layout), rep.turbines,
                         check_validity(problem, rep.layout).valid, rep.evaluations,
                         rep.wall_time, [], config.method, seed)
    opt = OptimizerConfig(seed=seed, shots=config.shots, **config.optimizer)
    model = to_ising(q)
    if config.method == "pce":
        n = problem.n_sites
        return simplex_optimize_pce(model, PceConfig(pce_min_qubits(n, int(param)), int(param)), opt, problem)
    cfg = sqoe_assign(problem.n_sites, int(param), step_scale=opt.step_scale)
    theta0 = frozen = None
    if config.warm_start:
        theta0, frozen = warm_start(problem, cfg)
    return sgd_optimize_sqoe(model, cfg, opt, problem, theta0, frozen)


def run_benchmark(config: ExperimentConfig) -> BenchReport:
    """Run ``samples`` seeded repetitions for every (size, group) cell.

    Capability checks for every cell happen before any run starts.
    """
    problems = [load_preset(config.preset, L, config.lam) for L in config.sizes]
    for si, problem in enumerate(problems):
        for gi in range(len(config.groups)):
            _check_capability(config, problem, config.param(gi, si))
    cells = []
    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
        for si, problem in enumerate(problems):
            q = assemble_qubo(problem)
            for gi in range(len(config.groups)):
                param = config.param(gi, si)
                seeds = [config.seed + i for i in range(config.samples)]
                runs = list(pool.map(lambda s: run_single(config, problem, param, s, q), seeds))
                cells.append(CellReport(config.sizes[si], gi, param, runs, problem.max_turbines))
    return BenchReport(config, cells)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float


def fit_scaling(points: Sequence[tuple[float, float]]) -> ScalingFit:
    """Least-squares slope of ``log t`` against ``log N``."""
    pts = [(float(n), float(t)) for n, t in points]
    if len({n for n, _ in pts}) < 2:
        raise ConfigurationError("scaling fit needs at least two distinct problem sizes")
    if any(n <= 0 or t <= 0 for n, t in pts):
        raise ConfigurationError("scaling fit needs positive sizes and times")
    x = np.log([n for n, _ in pts])
    y = np.log([t for _, t in pts])
    slope, intercept = np.polyfit(x, y, 1)
    return ScalingFit(float(slope), float(intercept))


def scaling_table(report: BenchReport) -> list[dict]:
    """One row per group: values used per size, label, fitted exponent."""
    cfg = report.config
    rows = []
    for gi in range(len(cfg.groups)):
        cells = [c for c in report.cells if c.group == gi]
        values = ", ".join(str(c.param) for c in cells) if cfg.method in ("pce", "sqoe") else "-"
        fit = fit_scaling([(c.size**2, c.mean_time) for c in cells]) if len(cells) > 1 else None
        rows.append({
            "farm": cfg.preset,
            "method": cfg.method,
            "values": values,
            "group": cfg.group_label(gi) if cfg.method in ("pce", "sqoe") else "-",
            "exponent": fit.exponent if fit else math.nan,
        })
    return rows


def format_scaling_table(rows: Sequence[dict]) -> str:
    head = f"{'farm':<12} {'method':<7} {'values':<16} {'group':<6} {'exponent':>8}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r['farm']:<12} {r['method']:<7} {r['values']:<16} {r['group']:<6} {r['exponent']:>8.2f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _output_dir(path: str | Path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from exc
    return out


BOXPLOT_HEADER = ("L", "method", "param", *STAT_FIELDS, "invalid_count")


def emit_outputs(report: BenchReport, kind: str = "boxplot", svg: bool = False,
                 output_dir: str | Path | None = None) -> list[Path]:
    """Write the data files for ``kind`` ("boxplot" or "scaling"); returns the paths written.

    Run and boxplot files hold only seeded results and are byte-stable for a
    fixed config; wall times go to separate timing files.
    """
    cfg = report.config
    out = _output_dir(output_dir or cfg.output_dir)
    stem = f"{cfg.preset}_{cfg.method}_{cfg.digest()}"
    written: list[Path] = []
    if kind == "boxplot":
        raw_rows, trim_rows, run_rows = [], [], []
        for c in report.cells:
            raw = box_stats([r.power for r in c.runs])
            trim = box_stats([r.power for r in c.trimmed])
            raw_rows.append([c.size, cfg.method, c.param, *raw.values(), c.invalid_count])
            trim_rows.append([c.size, cfg.method, c.param, *trim.values(), c.invalid_count])
            for r in c.runs:
                run_rows.append([c.size, c.param, r.seed, r.cost, r.power, r.turbines, int(bool(r.valid)),
                                 "".join(map(str, r.layout))])
        paths = {
            "raw": out / f"{stem}_boxplot_raw.csv",
            "trimmed": out / f"{stem}_boxplot_trimmed.csv",
            "runs": out / f"{stem}_runs.csv",
        }
        _write_csv(paths["raw"], BOXPLOT_HEADER, raw_rows)
        _write_csv(paths["trimmed"], BOXPLOT_HEADER, trim_rows)
        _write_csv(paths["runs"], ("L", "param", "seed", "cost", "power", "turbines", "valid", "layout"), run_rows)
        written += paths.values()
        if svg:
            p = out / f"{stem}_boxplot.svg"
            p.write_text(boxplot_svg(report), encoding="utf-8")
            written.append(p)
    elif kind == "scaling":
        rows = [[cfg.group_label(c.group), c.size**2, c.mean_time] for c in report.cells]
        p = out / f"{stem}_scaling.csv"
        _write_csv(p, ("group", "N", "mean_s"), rows)
        fits = scaling_table(report)
        q = out / f"{stem}_scaling_fit.csv"
        _write_csv(q, ("farm", "method", "values", "group", "exponent"), [list(r.values()) for r in fits])
        written += [p, q]
        if svg:
            s = out / f"{stem}_scaling.svg"
            series = {}
            for c in report.cells:
                series.setdefault(cfg.group_label(c.group), []).append((c.size**2, c.mean_time))
            s.write_text(line_svg(series, "N", "mean seconds", log=True), encoding="utf-8")
            written.append(s)
    else:
        raise ConfigurationError(f"unknown output kind {kind!r}")
    manifest = out / f"{stem}_manifest.json"
    manifest.write_text(json.dumps({
        "config": cfg.to_dict(),
        "seeds": [cfg.seed + i for i in range(cfg.samples)],
        "version": __version__,
        "files": sorted(p.name for p in written),
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return written + [manifest]


# ---------------------------------------------------------------------------
# minimal SVG rendering

_W, _H, _PAD = 640, 400, 50


def _scale(lo: float, hi: float, a: float, b: float):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _svg(body: list[str], title: str) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">\n'
            f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>\n'
            + "\n".join(body) + "\n</svg>\n")


def boxplot_svg(report: BenchReport) -> str:
    stats = []
    for c in report.cells:
        for label, runs in (("raw", c.runs), ("trim", c.trimmed)):
            s = box_stats([r.power for r in runs])
            stats.append((f"L{c.size} {c.param} {label}", s))
    finite = [v for _, s in stats for v in s.values() if not math.isnan(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    y = _scale(lo, hi, _H - _PAD, _PAD)
    step = (_W - 2 * _PAD) / max(1, len(stats))
    body = []
    for i, (label, s) in enumerate(stats):
        cx = _PAD + step * (i + 0.5)
        body.append(f'<text x="{cx:.1f}" y="{_H - 15}" font-size="9" text-anchor="middle">{label}</text>')
        if math.isnan(s["min"]):
            continue
        w = step * 0.3
        body.append(f'<line x1="{cx:.1f}" y1="{y(s["min"]):.1f}" x2="{cx:.1f}" y2="{y(s["max"]):.1f}" stroke="black"/>')
        body.append(f'<rect x="{cx - w:.1f}" y="{y(s["q3"]):.1f}" width="{2 * w:.1f}" '
                    f'height="{max(0.5, y(s["q1"]) - y(s["q3"])):.1f}" fill="#9cf" stroke="black"/>')
        body.append(f'<line x1="{cx - w:.1f}" y1="{y(s["median"]):.1f}" x2="{cx + w:.1f}" '
                    f'y2="{y(s["median"]):.1f}" stroke="red"/>')
    return _svg(body, f"{report.config.preset} {report.config.method} power")


def line_svg(series: dict[str, list[tuple[float, float]]], xlabel: str, ylabel: str, log: bool = False) -> str:
    tf = (lambda v: math.log10(v) if v > 0 else math.nan) if log else float
    pts = [(tf(x), tf(yv)) for s in series.values() for x, yv in s]
    pts = [p for p in pts if not any(math.isnan(v) for v in p)] or [(0.0, 0.0)]
    xs = _scale(min(p[0] for p in pts), max(p[0] for p in pts), _PAD, _W - _PAD)
    ys = _scale(min(p[1] for p in pts), max(p[1] for p in pts), _H - _PAD, _PAD)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    body = [f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle" font-size="11">{xlabel}</text>',
            f'<text x="12" y="{_H / 2}" font-size="11" transform="rotate(-90 12 {_H / 2})">{ylabel}</text>']
    for i, (name, s) in enumerate(series.items()):
        coords = " ".join(f"{xs(tf(x)):.1f},{ys(tf(yv)):.1f}" for x, yv in s
                          if not math.isnan(tf(x)) and not math.isnan(tf(yv)))
        color = colors[i % len(colors)]
        body.append(f'<polyline points="{coords}" fill="none" stroke="{color}"/>')
        body.append(f'<text x="{_W - _PAD}" y="{_PAD + 14 * i}" font-size="10" fill="{color}">{name}</text>')
    return _svg(body, f"{ylabel} vs {xlabel}")


def heatmap_svg(data: np.ndarray, title: str = "") -> str:
    """Grey-scale raster; NaN cells stay white."""
    finite = data[np.isfinite(data)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    rows, cols = data.shape
    cell = min((_W - 2 * _PAD) / cols, (_H - 2 * _PAD) / rows)
    body = []
    for i in range(rows):
        for j in range(cols):
            v = data[i, j]
            if not np.isfinite(v):
                continue
            g = int(255 * (1 - (v - lo) / ((hi - lo) or 1.0)))
            body.append(f'<rect x="{_PAD + j * cell:.2f}" y="{_PAD + i * cell:.2f}" width="{cell:.2f}" '
                        f'height="{cell:.2f}" fill="rgb({g},{g},{g})"/>')
    return _svg(body, title)
