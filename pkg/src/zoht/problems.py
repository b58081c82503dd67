"""Concrete objectives: ridge regression (synthetic generator and CSV
loader) and a universal sparse-perturbation attack loss against a
pluggable black-box classifier, with a shipped linear-softmax surrogate.
"""

import csv
import warnings

import numpy as np

from .core import FunctionOracle


class RidgeProblem(FunctionOracle):
    """f_i(theta) = (x_i . theta - y_i)^2 + (lam/2) ||theta||^2.

    Exact per-component gradients 2 (x_i . theta - y_i) x_i + lam * theta
    are exposed for first-order baselines and test stubs.
    """

    def __init__(self, X, y, lam, standardized=False, theta_star=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (n, d) and y must be (n,)")
        if lam < 0:
            raise ValueError("lambda must be >= 0")
        self.X = X
        self.y = y
        self.lam = float(lam)
        self.standardized = bool(standardized)
        self.n, self.d = X.shape
        self.minimizer = None if theta_star is None else np.asarray(theta_star, float)

    def component(self, i, theta):
        r = float(self.X[i] @ theta) - self.y[i]
        return r * r + 0.5 * self.lam * float(theta @ theta)

    def component_gradient(self, i, theta):
        r = float(self.X[i] @ theta) - self.y[i]
        return 2.0 * r * self.X[i] + self.lam * theta

    def mean_value(self, theta):
        r = self.X @ theta - self.y
        return float(r @ r) / self.n + 0.5 * self.lam * float(theta @ theta)

    def mean_gradient(self, theta):
        r = self.X @ theta - self.y
        return (2.0 / self.n) * (self.X.T @ r) + self.lam * theta

    def rho_bounds(self):
        """(rho_minus, rho_plus) proxy: extreme eigenvalues of
        (2/n) X^T X + lam I. A conservative stand-in for the restricted
        constants, which are intractable to compute exactly.
        """
        hess = (2.0 / self.n) * (self.X.T @ self.X) + self.lam * np.eye(self.d)
        eigs = np.linalg.eigvalsh(hess)
        return float(eigs[0]), float(eigs[-1])


def standardize_columns(X):
    """Center each column and scale to unit sample std (n-1 denominator).
    Constant columns are left at zero with a warning.
    """
    X = np.array(X, dtype=np.float64)
    mean = X.mean(axis=0)
    X -= mean
    std = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    constant = std == 0.0
    if np.any(constant):
        warnings.warn(
            "constant column(s) %s left at zero after centering"
            % np.flatnonzero(constant).tolist()
        )
        std = np.where(constant, 1.0, std)
    return X / std


def ridge_synthetic(n, d, lam, rng, sparse_kstar=None, standardize=True):
    """Synthetic ridge instance: rows x_i uniform in the unit l2 ball
    (normal direction times U^(1/d) radius), generating model from a
    standard normal, targets y_i = x_i . theta_star, then columns
    standardized. Pass ``sparse_kstar`` to zero all but that many random
    coordinates of the generating model, and ``standardize=False`` to
    keep y = X theta_star exact (sparse-recovery diagnostics).
    """
    if n < 1 or d < 1:
        raise ValueError("need n, d >= 1")
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    radii = rng.uniform(size=n) ** (1.0 / d)
    X = directions * radii[:, None]
    theta_star = rng.standard_normal(d)
    if sparse_kstar is not None:
        if not 0 <= sparse_kstar <= d:
            raise ValueError("sparse_kstar out of range")
        keep = rng.choice(d, size=sparse_kstar, replace=False)
        sparse = np.zeros(d)
        sparse[keep] = theta_star[keep]
        theta_star = sparse
    y = X @ theta_star
    if standardize:
        X = standardize_columns(X)
    return RidgeProblem(X, y, lam, standardized=standardize, theta_star=theta_star)


def ridge_from_csv(path, target_column, lam):
    """Load a ridge instance from a headered all-numeric CSV.

    Feature columns are standardized; the target column is used as-is.
    Parse failures report the offending row and column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty file: %s" % path)
        header = [h.strip() for h in header]
        if target_column not in header:
            raise ValueError(
                "target column %r not found; available: %s" % (target_column, header)
            )
        target_idx = header.index(target_column)
        rows = []
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    "row %d has %d cells, expected %d" % (row_num, len(row), len(header))
                )
            parsed = []
            for col, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        "non-numeric cell at row %d, column %r: %r"
                        % (row_num, header[col], cell)
                    )
            rows.append(parsed)
    if not rows:
        raise ValueError("no data rows in %s" % path)
    data = np.asarray(rows, dtype=np.float64)
    y = data[:, target_idx]
    X = np.delete(data, target_idx, axis=1)
    return RidgeProblem(standardize_columns(X), y, lam, standardized=True)


# -- black-box attack objective ----------------------------------------------

PIXEL_LO, PIXEL_HI = -0.5, 0.5


class BlackBoxClassifier:
    """Score oracle over flattened images in [-0.5, 0.5]^d: exposes only
    log-probabilities, never gradients."""

    num_classes = None

    def log_probs(self, x):
        raise NotImplementedError


class LinearSoftmaxClassifier(BlackBoxClassifier):
    """Fixed random-weight linear scorer with log-softmax outputs."""

    def __init__(self, weights, bias):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.num_classes = self.weights.shape[0]

    def log_probs(self, x):
        scores = self.weights @ x + self.bias
        return scores - _logsumexp(scores)


def _logsumexp(v):
    m = np.max(v)
    return m + np.log(np.sum(np.exp(v - m)))


def surrogate_classifier(d_image, num_classes, rng):
    """Deterministic-per-seed linear-softmax stand-in for a pretrained
    network."""
    weights = rng.standard_normal((num_classes, d_image))
    bias = 0.1 * rng.standard_normal(num_classes)
    return LinearSoftmaxClassifier(weights, bias)


class CwAttackProblem(FunctionOracle):
    """Universal sparse-perturbation objective: for each image,
    f_i(theta) = max(F_true(clip(x_i + theta)) - max_other F_j(...), 0).

    Driving the hinge to zero flips the prediction, so the solvers'
    descent orientation applies directly. Values are always >= 0.
    """

    def __init__(self, images, labels, classifier):
        images = np.asarray(images, dtype=np.float64)
        if images.ndim != 2:
            raise ValueError("images must be (n, d)")
        if np.any(images < PIXEL_LO) or np.any(images > PIXEL_HI):
            raise ValueError("images must lie in [%g, %g]" % (PIXEL_LO, PIXEL_HI))
        labels = np.asarray(labels, dtype=np.intp)
        if labels.shape != (images.shape[0],):
            raise ValueError("labels must be (n,)")
        if np.any(labels < 0) or np.any(labels >= classifier.num_classes):
            raise ValueError("label out of range")
        self.images = images
        self.labels = labels
        self.classifier = classifier
        self.n, self.d = images.shape

    def component(self, i, theta):
        return cw_loss(self, i, theta)

    def attacked_image(self, i, theta):
        return np.clip(self.images[i] + theta, PIXEL_LO, PIXEL_HI)


def cw_loss(problem, i, theta):
    """Hinge margin of the true class over the best other class at the
    clipped perturbed image."""
    x = problem.attacked_image(i, theta)
    lp = np.asarray(problem.classifier.log_probs(x), dtype=np.float64)
    if not np.all(np.isfinite(lp)):
        raise ArithmeticError("classifier returned non-finite log-probs")
    true = problem.labels[i]
    others = np.delete(lp, true)
    return max(float(lp[true] - np.max(others)), 0.0)


def attack_surrogate_problem(n, d_image, num_classes, rng):
    """Random images labeled by the surrogate's own prediction, so every
    hinge starts at the classifier's decision margin (> 0 generically)."""
    classifier = surrogate_classifier(d_image, num_classes, rng)
    images = rng.uniform(PIXEL_LO, PIXEL_HI, size=(n, d_image))
    labels = np.array(
        [int(np.argmax(classifier.log_probs(images[i]))) for i in range(n)]
    )
    return CwAttackProblem(images, labels, classifier)
