"""Closed-form constants and admissibility conditions for the solver
family: the hard-thresholding expansivity factor, the second-moment
envelope constants of the sparse-direction estimator, the plain-solver
(k, q) restrictions, learning-rate intervals for each variance-reduced
solver, query-complexity estimates, and numeric system-error diagnostics.

Every function is a direct evaluation of a published closed form; nothing
here runs an optimizer. One transcription note: the epsilon constant for
the off-support block is computed with denominator (d - 1), matching the
on-support constant by symmetry (the source displays a bare "-1", an
evident misprint). Emitted metadata flags this whenever the constant is
used (see harness).
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import norm_inf, support
from .ht import hard_threshold

EPS_IC_TYPO_NOTE = "eps_Ic uses (d-1) denominator (misprint correction)"


@dataclass
class TheoryParams:
    d: int
    n: int
    q: int
    s2: int
    k: int
    kstar: int
    rho_minus: float
    rho_plus: float
    mu: float
    p: int = None   # memory update rate, where applicable
    m: int = None   # inner-loop length, where applicable

    def __post_init__(self):
        if not 1 <= self.s2 <= self.d:
            raise ValueError("need 1 <= s2 <= d")
        if self.kstar < 0 or self.k < self.kstar:
            raise ValueError("need k >= kstar >= 0")
        if not (self.rho_plus >= self.rho_minus > 0):
            raise ValueError("need rho_plus >= rho_minus > 0")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.q < 1 or self.n < 1:
            raise ValueError("q and n must be >= 1")
        if self.p is not None and not 1 <= self.p <= self.n:
            raise ValueError("need 1 <= p <= n")
        if self.m is not None and self.m < 1:
            raise ValueError("need m >= 1")

    @property
    def s(self):
        """Sparsity level of the smoothness assumption: 2k + kstar."""
        return 2 * self.k + self.kstar

    @property
    def kappa(self):
        return self.rho_plus / self.rho_minus


@dataclass
class EtaInterval:
    lo: float
    hi: float
    nonempty: bool
    discriminant: float
    # Defining quadratic a*eta^2 + b*eta + c and its roots (when real),
    # exposed for residual checks; the interval may cap hi away from a root.
    coeffs: tuple = None
    roots: tuple = None


def alpha(k, kstar):
    """Hard-thresholding expansivity factor 1 + 2*sqrt(kstar)/sqrt(k - kstar)."""
    if not k > kstar >= 0:
        raise ValueError("need k > kstar >= 0, got k=%d kstar=%d" % (k, kstar))
    return 1.0 + 2.0 * math.sqrt(kstar) / math.sqrt(k - kstar)


@dataclass
class EpsilonConstants:
    eps_mu: float
    eps_I: float
    eps_Ic: float
    eps_abs: float


def epsilon_constants(tp):
    """Second-moment envelope constants of the sparse-direction estimator.

    With s = 2k + kstar:
        eps_mu  = rho_plus^2 * s * d
        eps_I   = (2d / (q (s2+2))) * ((s-1)(s2-1)/(d-1) + 3) + 2
        eps_Ic  = (2d / (q (s2+2))) * (s (s2-1) / (d-1))
        eps_abs = (2d rho_plus^2 s s2 / q) * ((s-1)(s2-1)/(d-1) + 1)
                  + rho_plus^2 * s * d
    """
    if tp.d < 2:
        raise ValueError("need d >= 2 (formulas divide by d - 1)")
    d, q, s2, s = tp.d, tp.q, tp.s2, tp.s
    rp2 = tp.rho_plus ** 2
    lead = 2.0 * d / (q * (s2 + 2))
    eps_mu = rp2 * s * d
    eps_I = lead * ((s - 1) * (s2 - 1) / (d - 1) + 3.0) + 2.0
    eps_Ic = lead * (s * (s2 - 1) / (d - 1))
    eps_abs = (2.0 * d * rp2 * s * s2 / q) * ((s - 1) * (s2 - 1) / (d - 1) + 1.0) + rp2 * s * d
    return EpsilonConstants(eps_mu, eps_I, eps_Ic, eps_abs)


def szoht_conditions(tp):
    """(k_lower, k_upper, q_lower) admissibility bounds of the plain
    single-estimate solver. The k interval may well be empty; that is the
    point the variance-reduced variants address.
    """
    kappa = tp.kappa
    kstar = tp.kstar
    eps_I = epsilon_constants(tp).eps_I
    k_lower = (
        kstar
        * (4.0 * eps_I + 1.0) ** 2
        * kappa ** 4
        * (1.0 - 1.0 / (kappa ** 2 * (4.0 * eps_I + 1.0)))
    )
    k_upper = (tp.d - kstar) / 2.0
    if kstar == 0:
        q_lower = 0.0
    elif tp.s2 == 1:
        q_lower = 8.0 * kappa ** 2 * tp.d / math.sqrt(tp.d / kstar + 1.0)
    else:
        d, s2 = tp.d, tp.s2
        inner = (
            9.0 * kappa ** 2 * (9.0 * kappa ** 2 - 1.0)
            + 0.5
            - 0.5 / kstar
            + 1.5 * (d - 1) / (kstar * (s2 - 1))
        )
        q_lower = (
            16.0 * d * (s2 - 1) * kstar * kappa ** 2 / ((s2 + 2) * (d - 1))
        ) * (18.0 * kappa ** 2 - 1.0 + 2.0 * math.sqrt(inner))
    return k_lower, k_upper, q_lower


def _solve_downward_quadratic(a, b, c):
    """Roots of a*x^2 + b*x + c = 0 with a > 0, returned as (disc, lo, hi);
    lo/hi are nan when the discriminant is negative."""
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return disc, math.nan, math.nan
    root = math.sqrt(disc)
    return disc, (-b - root) / (2.0 * a), (-b + root) / (2.0 * a)


def pm_eta_interval(tp, eps_I=None):
    """Learning-rate interval for the memory-table solver.

    Derived from the quadratic A eta^2 - 2 alpha eta + C < 0 with
    A = 48 eps_I alpha rho_plus + rho_minus and C = 1 - p/n + 2/rho_minus;
    empty whenever the discriminant 4 alpha^2 - 4 A C is nonpositive.
    The upper endpoint is relaxed to 1/(48 eps_I rho_plus) when that cap
    exceeds the upper root.
    """
    if tp.p is None:
        raise ValueError("memory update rate p is required for this interval")
    if eps_I is None:
        eps_I = epsilon_constants(tp).eps_I
    a = alpha(tp.k, tp.kstar)
    big_a = 48.0 * eps_I * a * tp.rho_plus + tp.rho_minus
    big_c = 1.0 - tp.p / tp.n + 2.0 / tp.rho_minus
    disc, root_lo, root_hi = _solve_downward_quadratic(big_a, -2.0 * a, big_c)
    if disc > 0:
        lo = root_lo
        hi = max(root_hi, 1.0 / (48.0 * eps_I * tp.rho_plus))
        nonempty = lo <= hi
    else:
        lo = hi = math.nan
        nonempty = False
    return EtaInterval(
        lo=lo, hi=hi, nonempty=nonempty, discriminant=disc,
        coeffs=(big_a, -2.0 * a, big_c),
        roots=None if disc < 0 else (root_lo, root_hi),
    )


def vrszht_eta_interval(tp, eps_I=None):
    """(interval, recommended_eta) for the snapshot solver.

    Quadratic: (48 eps_I alpha rho_minus rho_plus + rho_minus^2) eta^2
               - alpha rho_minus eta + (alpha - 1) < 0,
    upper endpoint capped at 1/(48 eps_I rho_plus). The recommendation is
    the quadratic's vertex alpha rho_minus / (2 * leading), returned even
    when the interval is empty.
    """
    if eps_I is None:
        eps_I = epsilon_constants(tp).eps_I
    a = alpha(tp.k, tp.kstar)
    rm, rp = tp.rho_minus, tp.rho_plus
    lead = 48.0 * eps_I * a * rm * rp + rm ** 2
    recommended = a * rm / (2.0 * lead)
    disc, root_lo, root_hi = _solve_downward_quadratic(lead, -a * rm, a - 1.0)
    if disc >= 0:
        lo = root_lo
        hi = min(root_hi, 1.0 / (48.0 * eps_I * rp))
        nonempty = lo <= hi
    else:
        lo = hi = math.nan
        nonempty = False
    interval = EtaInterval(
        lo=lo, hi=hi, nonempty=nonempty, discriminant=disc,
        coeffs=(lead, -a * rm, a - 1.0),
        roots=None if disc < 0 else (root_lo, root_hi),
    )
    return interval, recommended


def sarah_eta_interval(tp, eps_I=None):
    """Learning-rate interval for the recursive-estimate solver:
    roots of (48 eps_I alpha rho_plus + alpha rho_minus) eta^2
             - alpha eta + (alpha - 1).
    """
    if eps_I is None:
        eps_I = epsilon_constants(tp).eps_I
    a = alpha(tp.k, tp.kstar)
    lead = 48.0 * eps_I * a * tp.rho_plus + a * tp.rho_minus
    disc, root_lo, root_hi = _solve_downward_quadratic(lead, -a, a - 1.0)
    nonempty = disc >= 0
    return EtaInterval(
        lo=root_lo, hi=root_hi, nonempty=nonempty, discriminant=disc,
        coeffs=(lead, -a, a - 1.0),
        roots=None if disc < 0 else (root_lo, root_hi),
    )


def complexity_estimate(tp, target_eps):
    """(zo_queries, ht_ops) with unit constants:
    zo = (n + kappa^3/(kappa^2 + 1)) * log(1/eps), ht = log(1/eps).
    For plot overlays and reports only.
    """
    if not 0 < target_eps <= 1:
        raise ValueError("target_eps must lie in (0, 1]")
    log_factor = math.log(1.0 / target_eps)
    kappa = tp.kappa
    zo_queries = (tp.n + kappa ** 3 / (kappa ** 2 + 1.0)) * log_factor
    return zo_queries, log_factor


def system_error_terms(oracle, tp, theta, eta=None):
    """Numeric evaluation of the non-vanishing error terms of the
    convergence bounds at a given iterate, each addend labeled.

    Requires an oracle with a known minimizer and exact component
    gradients (synthetic problems). The restricted index set is the union
    of the top-2k-magnitude support of the mean gradient at the
    minimizer, the minimizer's support, and theta's support. The
    memory-decay sum is closed at its stationary limit (geometric sum
    -> n/p); p defaults to n and eta to the snapshot-solver
    recommendation when unset.
    """
    if oracle.minimizer is None:
        raise ValueError("oracle must expose a known minimizer")
    if not oracle.has_exact_gradients():
        raise ValueError("oracle must expose exact component gradients")
    theta = np.asarray(theta, dtype=np.float64)
    theta_star = np.asarray(oracle.minimizer, dtype=np.float64)
    eps = epsilon_constants(tp)
    a = alpha(tp.k, tp.kstar)
    if eta is None:
        _, eta = vrszht_eta_interval(tp, eps.eps_I)
    p = tp.p if tp.p is not None else tp.n

    grad_star = oracle.mean_gradient(theta_star)
    support_set = np.union1d(
        np.union1d(hard_threshold(grad_star, min(2 * tp.k, tp.d)).kept,
                   support(theta_star)),
        support(theta),
    )
    mask = np.zeros(tp.d, dtype=bool)
    mask[support_set.astype(np.intp)] = True

    comp_on = comp_off = comp_inf_sq = 0.0
    for i in range(oracle.n):
        g_theta = oracle.component_gradient(i, theta)
        g_star = oracle.component_gradient(i, theta_star)
        comp_on += float(np.sum(g_theta[mask] ** 2))
        comp_off += float(np.sum(g_theta[~mask] ** 2))
        comp_inf_sq += norm_inf(g_star) ** 2
    comp_on /= oracle.n
    comp_off /= oracle.n
    comp_inf_sq /= oracle.n

    mu2 = tp.mu ** 2
    stationary_memory = (2.0 / p) * (
        (eps.eps_I + 1.0) * comp_on + eps.eps_Ic * comp_off + eps.eps_abs * mu2
    )
    report = {
        "mu_full_gradient_bias": a * tp.n ** 2 * eps.eps_mu * mu2 / tp.rho_minus ** 2,
        "mu_absolute": 6.0 * a * eps.eps_abs * mu2,
        # stationary memory decay keeps gradient terms even at mu = 0
        "memory_decay_stationary": 6.0 * eta ** 2 * a * stationary_memory,
        "target_gradient_linf": math.sqrt(tp.s)
        * norm_inf(grad_star)
        * float(np.linalg.norm(theta - theta_star)),
        "target_component_grads": eta ** 2
        * 3.0
        * a
        * ((4.0 * eps.eps_I * tp.s + 2.0) + eps.eps_Ic * (tp.d - tp.k))
        * comp_inf_sq,
    }
    if tp.m is not None:
        beta = (1.0 + eta ** 2 * tp.rho_minus ** 2) * a
        if beta == 1.0:
            geo = float(tp.m)
        else:
            geo = (beta ** tp.m - 1.0) / (beta - 1.0)
        report["snapshot_epoch_mu"] = geo * a * (
            72.0 * eta ** 2 * eps.eps_abs * mu2
            + tp.n ** 2 * eps.eps_mu * mu2 / tp.rho_minus ** 2
        )
    report["eta_used"] = eta
    return report
