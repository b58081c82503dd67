"""Hard-thresholding operator: keep the k largest-magnitude coordinates,
zero the rest. Not non-expansive; the expansivity ratio against a sparse
target is bounded by 1 + 2*sqrt(kstar)/sqrt(k - kstar) (see theory.alpha).
"""

from dataclasses import dataclass

import numpy as np

from .core import nnz


@dataclass
class HtResult:
    vector: np.ndarray   # thresholded output
    kept: np.ndarray     # indices retained (sorted, only nonzero entries)


def hard_threshold(v, k, counters=None):
    """Top-k magnitude projection.

    Ties at the k-th magnitude keep the lower index (stable order on
    descending |v_i|), so the result is deterministic. k = 0 yields the
    zero vector. Charges 1 NHT when counters are supplied.
    """
    d = v.shape[0]
    if not 0 <= k <= d:
        raise ValueError("sparsity k=%d out of range for d=%d" % (k, d))
    if counters is not None:
        counters.nht += 1
    out = np.zeros_like(v)
    if k > 0:
        order = np.argsort(-np.abs(v), kind="stable")[:k]
        keep = order[v[order] != 0.0]
        out[keep] = v[keep]
        keep = np.sort(keep)
    else:
        keep = np.empty(0, dtype=np.intp)
    return HtResult(vector=out, kept=keep)


def expansivity_ratio(v, target, k):
    """||H_k(v) - target||^2 / ||v - target||^2 for a sparse target.

    Requires k > nnz(target) (the bound blows up at k = kstar) and
    v != target (zero denominator). Diagnostic only; no NHT charged.
    """
    kstar = nnz(target)
    if k <= kstar:
        raise ValueError("need k > nnz(target); got k=%d, nnz=%d" % (k, kstar))
    num = float(np.sum((hard_threshold(v, k).vector - target) ** 2))
    den = float(np.sum((v - target) ** 2))
    if den == 0.0:
        raise ValueError("v equals target; ratio undefined")
    return num / den
