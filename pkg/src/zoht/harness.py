"""Experiment front-end: grid-searched, multi-seed solver runs with CSV
trace emission and self-contained SVG convergence charts.

Cells (algorithm, eta, seed) are independent and deterministic per cell,
so results do not depend on scheduling or worker count. CSV bodies carry
no timestamps and print floats with repr precision, so re-running a spec
reproduces them byte for byte.
"""

import os
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import RNG_DESCRIPTION
from .solvers import SolverConfig, run_solver
from .theory import EPS_IC_TYPO_NOTE
from .vr import LAW_P_SAGA
from .zo import ZoEstimatorConfig

# CLI tokens for the solver line-up.
ALGO_TOKENS = {
    "fgzoht": "fgzoht",
    "szoht": "szoht",
    "vr": "vr-szht",
    "saga": "pm-szht",
    "sarah": "sarah-szht",
    # full names accepted too
    "pm-szht": "pm-szht",
    "vr-szht": "vr-szht",
    "sarah-szht": "sarah-szht",
}

SVG_FLOOR = 1e-16


@dataclass
class ExperimentSpec:
    problem: object                 # a FunctionOracle instance
    algorithms: list
    k: int
    zo: ZoEstimatorConfig
    eta_grid: list
    seeds: list
    izo_budget: int
    m: int = None
    p: int = 1
    law: str = LAW_P_SAGA
    record_every: int = 1
    select: str = "final"           # best-eta rule: "final" | "min"
    problem_name: str = "problem"

    def __post_init__(self):
        if not self.algorithms or not self.eta_grid or not self.seeds:
            raise ValueError("need at least one algorithm, one eta, one seed")
        bad = [a for a in self.algorithms if a not in ALGO_TOKENS]
        if bad:
            raise ValueError("unknown algorithm token(s) %s" % bad)
        if self.select not in ("final", "min"):
            raise ValueError("select must be 'final' or 'min'")


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    traces: dict                    # (token, eta, seed) -> RunTrace
    best_eta: dict                  # token -> eta
    curves: dict = field(default_factory=dict)  # axis -> token -> (grid, mean, std)

    def diverged_cells(self):
        return sorted(key for key, tr in self.traces.items() if tr.diverged)


def _solver_config(spec, token, eta, seed):
    algo = ALGO_TOKENS[token]
    return SolverConfig(
        algorithm=algo,
        eta=eta,
        k=spec.k,
        zo=spec.zo,
        izo_budget=spec.izo_budget,
        seed=seed,
        m=spec.m if algo in ("vr-szht", "sarah-szht") else None,
        p=spec.p if algo == "pm-szht" else None,
        law=spec.law,
        record_every=spec.record_every,
    )


def _run_cell(args):
    problem, cfg = args
    return run_solver(problem, cfg)


def step_resample(x_points, y_points, grid):
    """Previous-value (step) interpolation onto a common grid; grid
    points before the first sample clamp to the first value."""
    idx = np.searchsorted(x_points, grid, side="right") - 1
    return np.asarray(y_points)[np.clip(idx, 0, len(y_points) - 1)]


def _aggregate(traces, axis):
    """(grid, mean, std) across seeds on the union of recorded axis
    values."""
    grids = [tr.column(axis) for tr in traces]
    grid = np.unique(np.concatenate(grids))
    resampled = np.stack(
        [step_resample(g, tr.column("fval"), grid) for g, tr in zip(grids, traces)]
    )
    return grid, resampled.mean(axis=0), resampled.std(axis=0)


def _eta_score(spec, traces):
    """Grid-search metric: mean final fval ("final") or the minimum of
    the seed-averaged curve ("min")."""
    if spec.select == "final":
        return float(np.mean([tr.rows[-1][2] for tr in traces]))
    _, mean_curve, _ = _aggregate(traces, "izo")
    return float(mean_curve.min())


def select_best_eta(scores):
    """Pure selection rule: lowest score wins, ties break toward the
    smaller eta. ``scores`` maps eta -> mean objective."""
    if not scores:
        raise ValueError("no candidate etas")
    best = min(scores.values())
    return min(eta for eta, s in scores.items() if s == best)


def run_experiment(spec, workers=1):
    """Execute every (algorithm, eta, seed) cell, pick each algorithm's
    best eta (ties to the smaller eta), and aggregate mean +- std curves
    on common IZO and NHT grids. Divergent cells are kept, flagged, and
    excluded from selection only if every seed diverged."""
    cells = [
        (token, eta, seed)
        for token in spec.algorithms
        for eta in spec.eta_grid
        for seed in spec.seeds
    ]
    jobs = [(spec.problem, _solver_config(spec, *cell)) for cell in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_cell, jobs))
    else:
        outs = [_run_cell(job) for job in jobs]
    traces = dict(zip(cells, outs))

    best_eta = {}
    for token in spec.algorithms:
        scores = {}
        for eta in spec.eta_grid:
            group = [traces[(token, eta, seed)] for seed in spec.seeds]
            if all(tr.diverged for tr in group):
                continue
            scores[eta] = _eta_score(spec, group)
        if not scores:  # every eta diverged; fall back to the smallest
            scores = {min(spec.eta_grid): np.inf}
        best_eta[token] = select_best_eta(scores)

    curves = {"izo": {}, "nht": {}}
    for token in spec.algorithms:
        group = [traces[(token, best_eta[token], seed)] for seed in spec.seeds]
        for axis in ("izo", "nht"):
            curves[axis][token] = _aggregate(group, axis)
    return ExperimentResult(spec=spec, traces=traces, best_eta=best_eta, curves=curves)


# -- CSV emission -------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def emit_csv(result, out_dir):
    """Write per-cell raw traces, per-algorithm aggregate curves at the
    best eta, and a key=value meta file. Returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    spec = result.spec
    paths = []
    for (token, eta, seed), tr in sorted(result.traces.items()):
        name = "raw_%s_eta%s_seed%d.csv" % (token, _fmt(eta), seed)
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("izo,nht,fval,nnz\n")
            for izo, nht, fval, nz in tr.rows:
                fh.write("%d,%d,%s,%d\n" % (izo, nht, _fmt(fval), nz))
        paths.append(path)
    for token in spec.algorithms:
        grid, mean, std = result.curves["izo"][token]
        path = os.path.join(out_dir, "agg_%s.csv" % token)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("izo,mean_fval,std_fval\n")
            for x, m_, s_ in zip(grid, mean, std):
                fh.write("%d,%s,%s\n" % (x, _fmt(m_), _fmt(s_)))
        paths.append(path)
    meta_path = os.path.join(out_dir, "meta.txt")
    with open(meta_path, "w", encoding="utf-8") as fh:
        fh.write("problem=%s\n" % spec.problem_name)
        fh.write("n=%d\nd=%d\n" % (spec.problem.n, spec.zo.d))
        fh.write("algorithms=%s\n" % ",".join(spec.algorithms))
        fh.write("eta_grid=%s\n" % ",".join(_fmt(e) for e in spec.eta_grid))
        fh.write("seeds=%s\n" % ",".join(str(s) for s in spec.seeds))
        fh.write("izo_budget=%d\n" % spec.izo_budget)
        fh.write("k=%d\nq=%d\nmu=%s\ns2=%d\n"
                 % (spec.k, spec.zo.q, _fmt(spec.zo.mu), spec.zo.s2))
        if spec.m is not None:
            fh.write("m=%d\n" % spec.m)
        fh.write("p=%d\nlaw=%s\n" % (spec.p, spec.law))
        fh.write("select=%s\n" % spec.select)
        fh.write("rng=%s\n" % RNG_DESCRIPTION)
        fh.write("note=%s\n" % EPS_IC_TYPO_NOTE)
        for token in spec.algorithms:
            fh.write("best_eta_%s=%s\n" % (token, _fmt(result.best_eta[token])))
        fh.write("diverged_cells=%s\n"
                 % ";".join("%s,eta%s,seed%d" % key for key in result.diverged_cells()))
    paths.append(meta_path)
    return paths


def parse_trace_csv(path):
    """Inverse of the raw-trace writer: rows of (izo, nht, fval, nnz)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "izo,nht,fval,nnz":
            raise ValueError("unexpected header %r in %s" % (header, path))
        for line in fh:
            izo, nht, fval, nz = line.strip().split(",")
            rows.append((int(izo), int(nht), float(fval), int(nz)))
    return rows


# -- SVG emission -------------------------------------------------------------

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

_W, _H, _PAD = 720, 480, 64


def _log_floor(values):
    clipped = np.maximum(np.asarray(values, dtype=float), SVG_FLOOR)
    return clipped, bool(np.any(np.asarray(values) < SVG_FLOOR))


def emit_svg(result, axis, out_dir):
    """One static SVG 1.1 chart for the given axis ("izo" or "nht"):
    log-scaled objective, one mean polyline per algorithm with a
    translucent +-1 std band. Returns the written path."""
    if axis not in ("izo", "nht"):
        raise ValueError("axis must be 'izo' or 'nht'")
    os.makedirs(out_dir, exist_ok=True)
    curves = result.curves[axis]
    floored_any = False

    x_max = max(float(grid[-1]) for grid, _, _ in curves.values()) or 1.0
    y_lo, y_hi = np.inf, -np.inf
    prepared = {}
    for token, (grid, mean, std) in curves.items():
        lo, fl1 = _log_floor(mean - std)
        hi, fl2 = _log_floor(mean + std)
        mid, fl3 = _log_floor(mean)
        floored_any = floored_any or fl1 or fl2 or fl3
        prepared[token] = (np.asarray(grid, float), mid, lo, hi)
        y_lo = min(y_lo, float(np.min(lo)))
        y_hi = max(y_hi, float(np.max(hi)))
    ly_lo, ly_hi = np.log10(y_lo), np.log10(y_hi)
    if ly_hi - ly_lo < 1e-9:
        ly_lo, ly_hi = ly_lo - 0.5, ly_hi + 0.5

    def px(x):
        return _PAD + (x / x_max) * (_W - 2 * _PAD)

    def py(v):
        frac = (np.log10(v) - ly_lo) / (ly_hi - ly_lo)
        return _H - _PAD - frac * (_H - 2 * _PAD)

    def polyline(xs, ys):
        return " ".join("%.2f,%.2f" % (px(x), py(y)) for x, y in zip(xs, ys))

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        'width="%d" height="%d">' % (_W, _H),
        '<rect width="100%" height="100%" fill="white"/>',
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
        % (_PAD, _H - _PAD, _W - _PAD, _H - _PAD),
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
        % (_PAD, _PAD, _PAD, _H - _PAD),
        '<text x="%d" y="%d" font-size="13" text-anchor="middle">%s</text>'
        % (_W // 2, _H - _PAD // 3, axis.upper()),
        '<text x="%d" y="%d" font-size="13" text-anchor="middle" '
        'transform="rotate(-90 16 %d)">objective (log)</text>'
        % (16, _H // 2, _H // 2),
    ]
    # y tick labels at decade marks
    for exp in range(int(np.floor(ly_lo)), int(np.ceil(ly_hi)) + 1):
        v = 10.0 ** exp
        if not (y_lo <= v <= y_hi):
            continue
        parts.append(
            '<line x1="%d" y1="%.2f" x2="%d" y2="%.2f" stroke="#ddd"/>'
            % (_PAD, py(v), _W - _PAD, py(v))
        )
        parts.append(
            '<text x="%d" y="%.2f" font-size="11" text-anchor="end">1e%d</text>'
            % (_PAD - 6, py(v) + 4, exp)
        )
    for x in np.linspace(0, x_max, 5):
        parts.append(
            '<text x="%.2f" y="%d" font-size="11" text-anchor="middle">%d</text>'
            % (px(x), _H - _PAD + 16, int(x))
        )

    for idx, (token, (grid, mid, lo, hi)) in enumerate(sorted(prepared.items())):
        color = PALETTE[idx % len(PALETTE)]
        band = (
            polyline(grid, hi)
            + " "
            + polyline(grid[::-1], lo[::-1])
        )
        parts.append(
            '<polygon points="%s" fill="%s" fill-opacity="0.15" stroke="none"/>'
            % (band, color)
        )
        parts.append(
            '<polyline points="%s" fill="none" stroke="%s" stroke-width="1.8"/>'
            % (polyline(grid, mid), color)
        )
        parts.append(
            '<rect x="%d" y="%d" width="12" height="12" fill="%s"/>'
            % (_W - _PAD - 130, _PAD + 18 * idx, color)
        )
        parts.append(
            '<text x="%d" y="%d" font-size="12">%s</text>'
            % (_W - _PAD - 112, _PAD + 18 * idx + 10, token)
        )
    if floored_any:
        parts.append(
            '<text x="%d" y="%d" font-size="11" fill="#a00">'
            "warning: values floored at %g for log scale</text>"
            % (_PAD, _PAD - 8, SVG_FLOOR)
        )
    parts.append("</svg>")
    path = os.path.join(out_dir, "fval_vs_%s.svg" % axis)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
    return path


def validate_svg(text):
    """Minimal schema gate used by the test suite: well-formed XML, an
    svg 1.1 root, and no script elements."""
    root = ET.fromstring(text)
    if not root.tag.endswith("svg"):
        raise ValueError("root element is not svg")
    if root.get("version") != "1.1":
        raise ValueError("svg version must be 1.1")
    for el in root.iter():
        if el.tag.endswith("script"):
            raise ValueError("svg must be static (script element found)")
    return True
