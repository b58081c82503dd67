"""Variance-reduced gradient constructors: the per-component memory table
with probabilistic refresh laws, the snapshot (anchor + full gradient)
estimator, and the recursive-difference estimator.

All three are generic over the inner per-component gradient source: the
zeroth-order estimator for real runs, or exact gradients for test stubs,
which is what makes exhaustive enumeration oracles feasible in tests.
"""

from dataclasses import dataclass

import numpy as np

from .core import random_subset
from .zo import zo_gradient, sample_directions

LAW_P_SAGA = "p-saga"
LAW_SVRG_VARIANT = "svrg-variant"
UPDATE_LAWS = (LAW_P_SAGA, LAW_SVRG_VARIANT)


class ZoComponentEstimator:
    """Zeroth-order per-component gradient source. Each single estimate
    costs q + 1 IZO; a coupled pair costs 2(q + 1)."""

    def __init__(self, oracle, cfg, rng, counters, shared_directions=False):
        self.oracle = oracle
        self.cfg = cfg
        self.rng = rng
        self.counters = counters
        self.shared_directions = shared_directions

    def estimate(self, i, theta):
        f = lambda th, i=i: self.oracle.component(i, th)
        return zo_gradient(f, theta, self.cfg, self.rng, self.counters).gradient

    def estimate_pair(self, i, theta_a, theta_b):
        """Estimates of grad f_i at two points. Directions are independent
        draws by default; with shared_directions the same direction set is
        reused, so identical points cancel exactly."""
        f = lambda th, i=i: self.oracle.component(i, th)
        if self.shared_directions:
            dirs = sample_directions(self.cfg.d, self.cfg.s2, self.cfg.q, self.rng)
            ga = zo_gradient(f, theta_a, self.cfg, self.rng, self.counters, directions=dirs)
            gb = zo_gradient(f, theta_b, self.cfg, self.rng, self.counters, directions=dirs)
        else:
            ga = zo_gradient(f, theta_a, self.cfg, self.rng, self.counters)
            gb = zo_gradient(f, theta_b, self.cfg, self.rng, self.counters)
        return ga.gradient, gb.gradient

    def full(self, theta):
        """Mean over all components, fresh directions each: n(q+1) IZO."""
        total = np.zeros(self.cfg.d)
        for i in range(self.oracle.n):
            total += self.estimate(i, theta)
        return total / self.oracle.n


class ExactComponentEstimator:
    """Exact-gradient stub with the same surface; charges no IZO
    (first-order information is outside the query model)."""

    def __init__(self, oracle):
        self.oracle = oracle

    def estimate(self, i, theta):
        return self.oracle.component_gradient(i, theta)

    def estimate_pair(self, i, theta_a, theta_b):
        return (
            self.oracle.component_gradient(i, theta_a),
            self.oracle.component_gradient(i, theta_b),
        )

    def full(self, theta):
        return self.oracle.mean_gradient(theta)


@dataclass
class GradientMemory:
    """Stored per-component gradient table with its running mean.

    Under either update law each index is refreshed with marginal
    probability p/n per iteration: the size-p-subset law draws J uniform
    over size-p subsets; the all-or-nothing law draws J = [n] with
    probability p/n and J = {} otherwise.
    """

    table: np.ndarray          # (n, d) stored estimates
    mean: np.ndarray           # maintained running average of the rows
    p: int
    law: str
    updates_since_sync: int = 0
    total_updates: int = 0

    def __post_init__(self):
        if self.law not in UPDATE_LAWS:
            raise ValueError("unknown update law %r" % self.law)
        if not 1 <= self.p <= self.table.shape[0]:
            raise ValueError("need 1 <= p <= n")

    @property
    def n(self):
        return self.table.shape[0]

    def resync_mean(self):
        self.mean = self.table.mean(axis=0)
        self.updates_since_sync = 0


def init_gradient_memory(estimator, theta, p, law):
    """Fill the table with one full pass at theta (n(q+1) IZO for the
    zeroth-order source)."""
    n = estimator.oracle.n
    table = np.stack([estimator.estimate(j, theta) for j in range(n)])
    mem = GradientMemory(table=table, mean=table.mean(axis=0), p=p, law=law)
    return mem


def draw_update_set(mem, rng):
    """Random index set J per the memory's law."""
    if mem.law == LAW_P_SAGA:
        return random_subset(rng, mem.n, mem.p)
    if rng.uniform() < mem.p / mem.n:
        return np.arange(mem.n)
    return np.empty(0, dtype=np.intp)


def memory_update(mem, theta, estimator, rng):
    """Draw J and replace the stored rows j in J with fresh estimates at
    theta (|J|(q+1) IZO). The mean is maintained incrementally and
    resynced from the table every n refreshes. Returns J."""
    chosen = draw_update_set(mem, rng)
    for j in chosen:
        fresh = estimator.estimate(int(j), theta)
        mem.mean = mem.mean + (fresh - mem.table[j]) / mem.n
        mem.table[j] = fresh
        mem.updates_since_sync += 1
        mem.total_updates += 1
    if mem.updates_since_sync >= mem.n:
        mem.resync_mean()
    return chosen


def pm_gradient(mem, theta, i_r, estimator):
    """Three-term memory estimate: fresh estimate of grad f_{i_r} at
    theta, minus the stored row, plus the table mean (q+1 IZO)."""
    if not 0 <= i_r < mem.n:
        raise ValueError("component index out of range")
    return estimator.estimate(i_r, theta) - mem.table[i_r] + mem.mean


@dataclass
class SvrgSnapshot:
    anchor: np.ndarray
    anchor_grad: np.ndarray   # full-gradient estimate at the anchor
    age: int = 0


def take_snapshot(estimator, theta):
    """Anchor the snapshot estimator at theta (n(q+1) IZO)."""
    return SvrgSnapshot(anchor=np.array(theta), anchor_grad=estimator.full(theta))


def svrg_gradient(snap, theta, i_t, estimator):
    """Estimate of grad f_{i_t} at theta, minus the same component at the
    anchor, plus the anchor full gradient (2(q+1) IZO)."""
    g_theta, g_anchor = estimator.estimate_pair(i_t, theta, snap.anchor)
    return g_theta - g_anchor + snap.anchor_grad


@dataclass
class SarahState:
    g_prev: np.ndarray
    theta_prev: np.ndarray


def sarah_init(estimator, theta):
    """Epoch start: the recursion is seeded with the full estimate at the
    anchor (n(q+1) IZO)."""
    return SarahState(g_prev=estimator.full(theta), theta_prev=np.array(theta))


def sarah_step(state, theta, i_t, estimator):
    """One recursion step (2(q+1) IZO):
    g = est f_{i_t}(theta) - est f_{i_t}(theta_prev) + g_prev.
    Returns (g, advanced state). Unlike the memory and snapshot
    estimators, the recursion is biased after the first inner step."""
    g_theta, g_prev_pt = estimator.estimate_pair(i_t, theta, state.theta_prev)
    g = g_theta - g_prev_pt + state.g_prev
    return g, SarahState(g_prev=g, theta_prev=np.array(theta))
