"""End-to-end optimizers over a black-box finite-sum oracle, all of the
form: estimate a gradient from function values only, take a descent step,
keep the k largest-magnitude coordinates. Five estimators are wired in:

  szoht       one random component per step, one zeroth-order estimate
  fgzoht      full (all-component) zeroth-order estimate per step
  pm-szht     memory table with probabilistic refresh (SAGA family)
  vr-szht     snapshot anchor refreshed every m inner steps (SVRG family)
  sarah-szht  recursive difference estimate (biased after the first step)

Accounting rules (asserted exactly by the test suite): a single estimate
costs q+1 IZO (q probes plus one shared base value), a full estimate
n(q+1), a coupled pair 2(q+1); every threshold application is one NHT.
The budget check precedes every gradient estimate, and trace function
values are measured through the uncounted oracle handle (no IZO charge).
"""

import time
from dataclasses import dataclass

import numpy as np

from .core import QueryCounters, nnz, spawn_stream
from .ht import hard_threshold
from .vr import (
    LAW_P_SAGA,
    ExactComponentEstimator,
    ZoComponentEstimator,
    init_gradient_memory,
    memory_update,
    pm_gradient,
    sarah_init,
    sarah_step,
    svrg_gradient,
    take_snapshot,
)
from .zo import ZoEstimatorConfig, zo_full_gradient, zo_gradient

ALGORITHMS = ("fgzoht", "szoht", "pm-szht", "vr-szht", "sarah-szht")

# Abort when the objective exceeds DIVERGENCE_FACTOR * (1 + F(theta0)).
DIVERGENCE_FACTOR = 1e12


@dataclass
class SolverConfig:
    algorithm: str
    eta: float
    k: int
    zo: ZoEstimatorConfig
    izo_budget: int
    seed: int
    m: int = None                  # inner-loop length (vr / sarah)
    p: int = None                  # memory update rate (pm)
    law: str = LAW_P_SAGA          # memory update-set law (pm)
    record_every: int = 1
    anchor: str = "last"           # vr epoch hand-off: "last" | "random-inner"
    sarah_first_step_raw: bool = False
    shared_directions: bool = False
    theta0: np.ndarray = None      # default: zero vector (trivially k-sparse)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError("unknown algorithm %r" % self.algorithm)
        if not self.eta >= 0:
            raise ValueError("eta must be >= 0")
        if not 0 <= self.k <= self.zo.d:
            raise ValueError("need 0 <= k <= d")
        if self.algorithm in ("vr-szht", "sarah-szht") and (self.m is None or self.m < 1):
            raise ValueError("%s needs m >= 1" % self.algorithm)
        if self.anchor not in ("last", "random-inner"):
            raise ValueError("anchor must be 'last' or 'random-inner'")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class RunTrace:
    """Per-run time series and exact accounting metadata.

    rows: (izo, nht, fval, theta_nnz) tuples, strictly increasing in izo;
    the counters plus the iteration/epoch/update tallies close the IZO
    identity for each solver exactly.
    """

    rows: list
    final_theta: np.ndarray
    config: SolverConfig
    wall_time: float
    izo: int
    nht: int
    diverged: bool = False
    iterations: int = 0
    epochs: int = 0
    inner_steps: int = 0
    memory_updates: int = 0

    def column(self, name):
        idx = {"izo": 0, "nht": 1, "fval": 2, "nnz": 3}[name]
        return np.array([row[idx] for row in self.rows])


class _Run:
    """Shared loop plumbing: streams, counters, trace rows, divergence
    guard, and the budget gate."""

    def __init__(self, oracle, cfg):
        if cfg.izo_budget < oracle.n * (cfg.zo.q + 1):
            raise ValueError(
                "izo_budget %d below one full pass n(q+1) = %d"
                % (cfg.izo_budget, oracle.n * (cfg.zo.q + 1))
            )
        if cfg.p is not None and not 1 <= cfg.p <= oracle.n:
            raise ValueError("need 1 <= p <= n")
        self.oracle = oracle
        self.cfg = cfg
        self.counters = QueryCounters()
        self.dir_rng = spawn_stream(cfg.seed, "directions")
        self.idx_rng = spawn_stream(cfg.seed, "indices")
        self.mem_rng = spawn_stream(cfg.seed, "memory-sets")
        self.theta = (
            np.zeros(cfg.zo.d) if cfg.theta0 is None else np.array(cfg.theta0, float)
        )
        if self.theta.shape != (cfg.zo.d,):
            raise ValueError("theta0 shape mismatch")
        self.rows = []
        self.steps_done = 0
        self.diverged = False
        f0 = oracle.mean_value(self.theta)
        if not np.isfinite(f0):
            raise ValueError("objective is non-finite at the initial point")
        self.guard_level = DIVERGENCE_FACTOR * (1.0 + abs(f0))
        self.rows.append((0, 0, f0, nnz(self.theta)))
        self.start = time.perf_counter()

    def budget_left(self):
        return self.counters.izo < self.cfg.izo_budget and not self.diverged

    def sample_index(self):
        return int(self.idx_rng.integers(self.oracle.n))

    def descend(self, grad):
        """Gradient step + threshold (1 NHT); records and guards."""
        self.theta = hard_threshold(
            self.theta - self.cfg.eta * grad, self.cfg.k, self.counters
        ).vector
        self._after_step()

    def _after_step(self):
        self.steps_done += 1
        fval = self.oracle.mean_value(self.theta)
        if not np.isfinite(fval) or fval > self.guard_level:
            # abort; the offending value is not recorded (rows keep only
            # finite objective values)
            self.diverged = True
            return
        if self.steps_done % self.cfg.record_every == 0:
            self.rows.append(
                (self.counters.izo, self.counters.nht, fval, nnz(self.theta))
            )

    def finish(self, **tallies):
        fval = self.oracle.mean_value(self.theta)
        if np.isfinite(fval) and fval <= self.guard_level and (
            not self.rows or self.rows[-1][0] < self.counters.izo
        ):
            self.rows.append(
                (self.counters.izo, self.counters.nht, fval, nnz(self.theta))
            )
        return RunTrace(
            rows=self.rows,
            final_theta=self.theta,
            config=self.cfg,
            wall_time=time.perf_counter() - self.start,
            izo=self.counters.izo,
            nht=self.counters.nht,
            diverged=self.diverged,
            **tallies,
        )


def run_szoht(oracle, cfg):
    """One uniformly random component estimate per iteration (q+1 IZO,
    1 NHT)."""
    run = _Run(oracle, cfg)
    iterations = 0
    while run.budget_left():
        i = run.sample_index()
        est = zo_gradient(
            lambda th, i=i: oracle.component(i, th),
            run.theta, cfg.zo, run.dir_rng, run.counters,
        )
        run.descend(est.gradient)
        iterations += 1
    return run.finish(iterations=iterations)


def run_fgzoht(oracle, cfg):
    """Full zeroth-order gradient per iteration (n(q+1) IZO, 1 NHT)."""
    run = _Run(oracle, cfg)
    iterations = 0
    while run.budget_left():
        est = zo_full_gradient(oracle, run.theta, cfg.zo, run.dir_rng, run.counters)
        run.descend(est.gradient)
        iterations += 1
    return run.finish(iterations=iterations)


def run_pm_szht(oracle, cfg):
    """Memory-table solver: refresh a random row set, then take one
    three-term step. Init fills the table with a full pass (n(q+1) IZO);
    each iteration costs (|J|+1)(q+1) IZO and 1 NHT."""
    if cfg.p is None:
        raise ValueError("pm-szht needs the memory update rate p")
    run = _Run(oracle, cfg)
    estimator = ZoComponentEstimator(
        oracle, cfg.zo, run.dir_rng, run.counters, cfg.shared_directions
    )
    mem = init_gradient_memory(estimator, run.theta, cfg.p, cfg.law)
    iterations = 0
    while run.budget_left():
        memory_update(mem, run.theta, estimator, run.mem_rng)
        i = run.sample_index()
        grad = pm_gradient(mem, run.theta, i, estimator)
        run.descend(grad)
        iterations += 1
    return run.finish(iterations=iterations, memory_updates=mem.total_updates)


def run_vr_szht(oracle, cfg):
    """Snapshot solver: refresh the anchor full gradient each epoch
    (n(q+1) IZO), then m inner steps of 2(q+1) IZO and 1 NHT each. The
    next anchor is the last inner iterate by default; "random-inner"
    hands off a uniformly random one instead."""
    run = _Run(oracle, cfg)
    estimator = ZoComponentEstimator(
        oracle, cfg.zo, run.dir_rng, run.counters, cfg.shared_directions
    )
    epochs = inner_steps = 0
    while run.budget_left():
        snap = take_snapshot(estimator, run.theta)
        epochs += 1
        inner_iterates = []
        for _ in range(cfg.m):
            if not run.budget_left():
                break
            i = run.sample_index()
            grad = svrg_gradient(snap, run.theta, i, estimator)
            run.descend(grad)
            snap.age += 1
            inner_steps += 1
            inner_iterates.append(run.theta)
        if cfg.anchor == "random-inner" and inner_iterates:
            run.theta = inner_iterates[int(run.idx_rng.integers(len(inner_iterates)))]
    return run.finish(epochs=epochs, inner_steps=inner_steps)


def run_sarah_szht(oracle, cfg):
    """Recursive-difference solver. Each epoch: full estimate (n(q+1)
    IZO), a first step reusing it, then m-1 recursion steps of 2(q+1)
    IZO. Every step thresholds (sparsity invariant) unless
    sarah_first_step_raw restores the unthresholded first step. The
    epoch output is the iterate at a uniformly random inner index."""
    run = _Run(oracle, cfg)
    estimator = ZoComponentEstimator(
        oracle, cfg.zo, run.dir_rng, run.counters, cfg.shared_directions
    )
    epochs = inner_steps = 0
    while run.budget_left():
        state = sarah_init(estimator, run.theta)
        epochs += 1
        epoch_iterates = [run.theta]
        if cfg.sarah_first_step_raw:
            run.theta = run.theta - cfg.eta * state.g_prev
            run._after_step()
        else:
            run.descend(state.g_prev)
        inner_steps += 1
        epoch_iterates.append(run.theta)
        for _ in range(1, cfg.m):
            if not run.budget_left():
                break
            i = run.sample_index()
            grad, state = sarah_step(state, run.theta, i, estimator)
            run.descend(grad)
            inner_steps += 1
            epoch_iterates.append(run.theta)
        pick = int(run.idx_rng.integers(len(epoch_iterates)))
        run.theta = epoch_iterates[pick]
    return run.finish(epochs=epochs, inner_steps=inner_steps)


_RUNNERS = {
    "szoht": run_szoht,
    "fgzoht": run_fgzoht,
    "pm-szht": run_pm_szht,
    "vr-szht": run_vr_szht,
    "sarah-szht": run_sarah_szht,
}


def run_solver(oracle, cfg):
    """Dispatch on cfg.algorithm."""
    return _RUNNERS[cfg.algorithm](oracle, cfg)


def expected_izo(oracle_n, trace):
    """Closed-form IZO count implied by the per-iteration rules and the
    trace's tallies; equals trace.izo exactly for every solver."""
    cfg = trace.config
    unit = cfg.zo.q + 1
    algo = cfg.algorithm
    if algo == "szoht":
        return trace.iterations * unit
    if algo == "fgzoht":
        return trace.iterations * oracle_n * unit
    if algo == "pm-szht":
        return (oracle_n + trace.iterations + trace.memory_updates) * unit
    if algo == "vr-szht":
        return trace.epochs * oracle_n * unit + trace.inner_steps * 2 * unit
    if algo == "sarah-szht":
        return (
            trace.epochs * oracle_n * unit
            + (trace.inner_steps - trace.epochs) * 2 * unit
        )
    raise ValueError(algo)


def gradient_squared_decomposition(
    oracle,
    theta,
    cfg,
    samples,
    seed,
    estimator="szoht",
    exact=False,
    snapshot=None,
    shared_directions=False,
):
    """Monte Carlo split of a gradient estimator's second moment at theta
    into (variance, squared-mean) parts: E||g||^2 = Var + ||E g||^2 with
    both terms estimated from ``samples`` independent realizations.

    ``estimator`` selects among the five constructions; ``exact`` swaps
    the zeroth-order source for exact component gradients (diagnostic
    mode). Snapshot/memory/recursion states are built once at theta (or
    use the supplied ``snapshot``), then held fixed across samples.
    Refused below 100 samples.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    theta = np.asarray(theta, dtype=np.float64)
    dir_rng = spawn_stream(seed, "directions")
    idx_rng = spawn_stream(seed, "indices")
    scratch = QueryCounters()
    if exact:
        source = ExactComponentEstimator(oracle)
    else:
        source = ZoComponentEstimator(oracle, cfg, dir_rng, scratch, shared_directions)

    if estimator == "svrg" and snapshot is None:
        snapshot = take_snapshot(source, theta)
    memory = state = None
    if estimator == "pm":
        memory = init_gradient_memory(source, theta, p=1, law=LAW_P_SAGA)
    if estimator == "sarah":
        state = sarah_init(source, theta)

    def draw():
        if estimator == "fgzoht":
            return source.full(theta)
        i = int(idx_rng.integers(oracle.n))
        if estimator == "szoht":
            return source.estimate(i, theta)
        if estimator == "svrg":
            return svrg_gradient(snapshot, theta, i, source)
        if estimator == "pm":
            return pm_gradient(memory, theta, i, source)
        if estimator == "sarah":
            g, _ = sarah_step(state, theta, i, source)
            return g
        raise ValueError("unknown estimator %r" % estimator)

    draws = np.stack([draw() for _ in range(samples)])
    mean_g = draws.mean(axis=0)
    second_moment = float(np.mean(np.sum(draws ** 2, axis=1)))
    grad_norm_sq = float(mean_g @ mean_g)
    variance = max(second_moment - grad_norm_sq, 0.0)
    return variance, grad_norm_sq
