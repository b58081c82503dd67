"""Shared numeric plumbing: dense-vector helpers, seeded RNG streams,
query counters, and the black-box finite-sum oracle.

Vectors are plain 1-D float64 numpy arrays throughout. Support / nnz use
exact ``|v_i| > 0`` (hard thresholding produces exact zeros, so the
sparsity constraint stays exactly checkable).
"""

import numpy as np

# Named substreams derived from a single user seed. Identical
# (seed, stream) pairs reproduce the same draw sequence; distinct
# streams from one seed never share state. Generator: numpy PCG64
# keyed by SeedSequence(seed, spawn_key=(stream index,)).
STREAM_IDS = {
    "data-gen": 0,
    "directions": 1,
    "indices": 2,
    "memory-sets": 3,
}

RNG_DESCRIPTION = "numpy PCG64, SeedSequence(seed, spawn_key=(stream,))"


def spawn_stream(seed, stream_id):
    """Return an independent np.random.Generator for the named substream."""
    if stream_id not in STREAM_IDS:
        raise ValueError(
            "unknown stream_id %r (expected one of %s)"
            % (stream_id, sorted(STREAM_IDS))
        )
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAM_IDS[stream_id],))
    return np.random.Generator(np.random.PCG64(ss))


def random_subset(rng, n, m):
    """Uniformly random size-m subset of [0, n), sorted ascending."""
    if not 0 <= m <= n:
        raise ValueError("subset size %d out of range for n=%d" % (m, n))
    idx = rng.choice(n, size=m, replace=False)
    idx.sort()
    return idx


# -- dense-vector helpers ---------------------------------------------------
# add/sub/scale/dot are numpy's own operators (mismatched 1-D lengths
# raise ValueError natively); only the support-aware pieces live here.

def support(v):
    """Indices with exactly nonzero entries, strictly increasing."""
    return np.flatnonzero(v)


def nnz(v):
    return int(np.count_nonzero(v))


def restrict_to(v, indices):
    """Zero all coordinates outside ``indices``; returns a new vector."""
    out = np.zeros_like(v)
    out[indices] = v[indices]
    return out


def norm2(v):
    return float(np.linalg.norm(v))


def norm_inf(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


class QueryCounters:
    """Mutable per-run oracle accounting.

    izo counts single component evaluations f_i; nht counts
    hard-thresholding applications. Both are monotone during a run.
    """

    __slots__ = ("izo", "nht")

    def __init__(self, izo=0, nht=0):
        self.izo = int(izo)
        self.nht = int(nht)

    def add_izo(self, k=1):
        self.izo += int(k)

    def add_nht(self, k=1):
        self.nht += int(k)

    def __repr__(self):
        return "QueryCounters(izo=%d, nht=%d)" % (self.izo, self.nht)


class FunctionOracle:
    """Finite-sum objective F(theta) = (1/n) sum_i f_i(theta), accessed by
    value queries only.

    Subclasses implement ``component``; they may also provide
    ``component_gradient`` (used by first-order baselines and test stubs)
    and set ``minimizer`` when a ground-truth parameter is known.

    Counted entry points (``eval_component`` / ``eval_mean``) charge the
    supplied QueryCounters; the raw methods are the uncounted handle used
    for out-of-band measurement (e.g. trace function values).
    """

    n = None          # component count, set by subclass
    minimizer = None  # optional known parameter for diagnostics

    def component(self, i, theta):
        raise NotImplementedError

    def component_gradient(self, i, theta):
        raise NotImplementedError(
            "%s does not expose exact gradients" % type(self).__name__
        )

    def mean_value(self, theta):
        """F(theta), uncounted. Subclasses may vectorize."""
        return sum(self.component(i, theta) for i in range(self.n)) / self.n

    def mean_gradient(self, theta):
        g = self.component_gradient(0, theta).copy()
        for i in range(1, self.n):
            g += self.component_gradient(i, theta)
        return g / self.n

    def eval_component(self, i, theta, counters):
        """f_i(theta); charges 1 IZO."""
        if counters is not None:
            counters.izo += 1
        return self.component(i, theta)

    def eval_mean(self, theta, counters=None):
        """F(theta); charges n IZO when counters are supplied."""
        if counters is not None:
            counters.izo += self.n
        return self.mean_value(theta)

    def has_exact_gradients(self):
        return type(self).component_gradient is not FunctionOracle.component_gradient
