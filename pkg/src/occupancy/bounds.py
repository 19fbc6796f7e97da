"""Finite-sample upper bounds on occupancy probabilities.

Every bound returns a :class:`~occupancy.reports.BoundReport`. Expectations
over ``(X_{n+1}, L_n)`` are taken against an exact
:class:`~occupancy.exact.JointLocalTimeLaw` for Markov drivers; for path-hook
drivers an empirical table is used and the report is flagged ``estimated``.

The integral ``int_0^eps nu(u/2) u^r (1-u/2)^(m-r) du`` is evaluated exactly:
writing ``nu(u/2) = sum_k 1{u <= 2 p_k}`` turns it into a sum of regularized
incomplete beta functions, with the infinite remainder expanded in power tails.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from .alphabet import (MOMENT_TOL, SlowlyVaryingFn, _head_size, _series_tail,
                       counting_function, log_binom)
from .exact import JointLocalTimeLaw, model_joint_law
from .markov import finite_chain_threshold, minorization_constants, start_constant
from .reports import BoundReport, Condition
from .special import incomplete_gamma_lower

GRID_POINTS = 64
GRID_LOW = 1e-12
JUMP_NUDGE = 1e-12
ENVELOPE_DECADES = 12


def c_of_r(r):
    """``1/e`` for ``r = 0`` and ``e (1 + r) / sqrt(pi)`` for ``r >= 1``."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    return math.exp(-1.0) if r == 0 else math.e * (1 + r) / math.sqrt(math.pi)


def integral_terms(P, ms, r, eps, tol=MOMENT_TOL):
    """``2^(1+r) binom(m, r) int_0^eps nu(u/2) u^r (1-u/2)^(m-r) du`` per ``m``."""
    ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    if np.any(ms <= r):
        raise ValueError("need m > r")
    if eps <= 0:
        return np.zeros(len(ms))
    a, b = r + 1.0, (ms - r + 1.0)
    half = eps / 2.0
    n_big = counting_function(P, min(half, 1.0))
    total = n_big * special.betainc(a, b, half)
    if P.is_finite:
        small = P.probs[n_big:]
        if len(small):
            total = total + special.betainc(a, b[:, None], small[None, :]).sum(axis=1)
        return 4.0 ** (1 + r) / (ms + 1.0) * total
    e = (ms - r).astype(float)
    K = max(_head_size(P, int(e.max())), n_big)
    if K > n_big:
        p = P.pmf(np.arange(n_big + 1, K + 1))
        rows = max(1, (1 << 22) // len(p))
        for lo in range(0, len(ms), rows):
            total[lo:lo + rows] += special.betainc(a, b[lo:lo + rows, None], p[None, :]).sum(axis=1)
    out = 4.0 ** (1 + r) / (ms + 1.0) * total
    tail = _series_tail(P, r, e, K, lambda j: 1.0 / (r + 1.0 + j), tol * 1e-3)
    return out + 4.0 ** (1 + r) * np.exp(log_binom(ms, r)) * tail


def dgp_iid_bound(P, n, r, eps):
    """Counting-function bound on ``P{L_n = r}`` for iid letters from ``P``.

    ``c(r) nu(eps) / n + 2^(1+r) binom(n, r) int_0^eps nu(u/2) u^r (1-u/2)^(n-r) du``,
    valid for ``0 <= r <= n - 1`` and ``0 <= eps <= 1``.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    cond = Condition("0 <= r <= n-1", 0 <= r <= n - 1, None)
    if not cond.satisfied:
        return BoundReport("iid-counting-bound", None, (cond,), {"n": n, "r": r})
    nu = counting_function(P, eps)
    a_term = c_of_r(r) * nu / n
    b_term = float(integral_terms(P, [n], r, eps)[0])
    return BoundReport("iid-counting-bound", a_term + b_term, (cond,),
                       {"a_term": a_term, "b_term": b_term, "epsilon": eps, "n": n, "r": r})


def default_eps_grid(model):
    """Log grid on ``[1e-12, 1]`` plus the jump points of every finite ``nu``."""
    grid = set(np.logspace(math.log10(GRID_LOW), 0.0, GRID_POINTS).tolist())
    if all(P.is_finite for P in model.letters):
        grid.add(0.0)
        for P in model.letters:
            for p in P.probs:
                if p < 1.0:
                    grid.add(float(p))
                    grid.add(min(1.0, float(p) * (1.0 + JUMP_NUDGE)))
    return sorted(grid)


def _resolve_law(model, n, law):
    if law is not None:
        return law
    if model.is_markov:
        return model_joint_law(model, n)
    from .montecarlo import empirical_joint_law
    return empirical_joint_law(model, n, replicas=20_000, seed=0)


def _range_condition(n, r):
    return Condition("0 <= r <= n-1", 0 <= r <= n - 1, None)


def theorem_bound(model, n, r, eps_grid=None, law=None):
    """General regime bound: ``P{L_n = r} sup_a sum_k p_{a,k}^(1+r)`` plus the
    minimum over the ``eps`` grid of ``a^{n,r}(eps) + b^{n,r}(eps)``.
    """
    cond = _range_condition(n, r)
    if not cond.satisfied:
        return BoundReport("regime-counting-bound", None, (cond,), {"n": n, "r": r})
    law = _resolve_law(model, n, law)
    if eps_grid is None:
        eps_grid = default_eps_grid(model)
    m = np.arange(r + 1, n + 1)
    weights = [law.table[a, r + 1:] for a in range(model.n_states)]
    inv_m = [float(np.sum(w / m)) for w in weights]
    sup_power = max(P.power_tail(1.0 + r, 0) for P in model.letters)
    first = float(law.local_time_pmf()[r]) * sup_power

    best = (math.inf, None, None, None)
    for eps in eps_grid:
        if eps == 0.0 and not all(P.is_finite for P in model.letters):
            continue
        a_term = c_of_r(r) * sum(counting_function(P, eps) * inv_m[a]
                                 for a, P in enumerate(model.letters))
        if a_term + first >= best[0]:
            continue
        b_term = 0.0
        for a, P in enumerate(model.letters):
            keep = weights[a] > 0
            if keep.any() and eps > 0:
                b_term += float(np.sum(weights[a][keep] * integral_terms(P, m[keep], r, eps)))
        total = first + a_term + b_term
        if total < best[0]:
            best = (total, eps, a_term, b_term)
    value, eps_star, a_term, b_term = best
    return BoundReport(
        "regime-counting-bound", value, (cond,),
        {"first_term": first, "a_term": a_term, "b_term": b_term,
         "epsilon_star": eps_star, "grid_size": len(eps_grid), "n": n, "r": r},
        estimated=law.estimated)


def shared_letter_coeffs(P, n, r, eps):
    """Coefficients ``C_{r,m}(eps)`` for ``m = r..n`` when every regime uses ``P``."""
    head = P.power_tail(1.0 + r, 0)
    if n == r:
        return np.array([head])
    m = np.arange(r + 1, n + 1)
    rest = c_of_r(r) * counting_function(P, eps) / m + integral_terms(P, m, r, eps)
    return np.concatenate([[head], rest])


def shared_letter_bound(model, n, r, eps, law=None):
    """``sum_m C_{r,m}(eps) P{L_n = m}`` for models whose regimes share one law."""
    P = model.letters[0]
    if any(Q != P for Q in model.letters):
        raise ValueError("all regimes must share the same letter distribution")
    law = _resolve_law(model, n, law)
    coeffs = shared_letter_coeffs(P, n, r, eps)
    value = float(np.sum(coeffs * law.local_time_pmf()[r:]))
    return BoundReport("shared-letter-bound", value, (Condition("0 <= r <= n", 0 <= r <= n),),
                       {"epsilon": eps, "C_rr": float(coeffs[0]), "n": n, "r": r},
                       estimated=law.estimated)


def finite_support_bound(model, n, r, law=None):
    """``C'_{r,r} P{L_n = r} + sum_{m > r} c(r) M / m P{L_n = m}`` for supports in ``1..M``."""
    if not all(P.is_finite for P in model.letters):
        raise ValueError("needs finite letter supports")
    law = _resolve_law(model, n, law)
    M = max(P.support_size for P in model.letters)
    pmf = law.local_time_pmf()
    head = max(P.power_tail(1.0 + r, 0) for P in model.letters)
    m = np.arange(r + 1, n + 1)
    value = head * float(pmf[r]) + c_of_r(r) * M * float(np.sum(pmf[r + 1:] / m))
    return BoundReport("finite-support-bound", value, (Condition("0 <= r <= n", 0 <= r <= n),),
                       {"M": M, "C_rr": head, "n": n, "r": r}, estimated=law.estimated)


# -- regular variation ----------------------------------------------------


def c1(alpha, r):
    """``c(r) + 4^(1+r)/r! (1+r)^(1+r-alpha) gamma(1+r-alpha, 1/2)``."""
    return c_of_r(r) + 4.0 ** (1 + r) / math.factorial(r) * (1 + r) ** (1 + r - alpha) \
        * incomplete_gamma_lower(1 + r - alpha, 0.5)


def c2(alpha, r, p_sup, ell):
    if r == 0:
        return 1.0
    return min(1.0, p_sup ** (r + 1) * r ** alpha * ell(r) + r ** (-r))


def c3(alpha, r, ell):
    return c1(alpha, r) * (r + 1) ** (-(1 - alpha)) * ell(r + 1)


def envelope_grid():
    k = np.arange(0, 3 * ENVELOPE_DECADES + 1)
    return 10.0 ** (-k / 3.0)


def check_envelope(model, alpha, ell):
    """Verify ``nu(a, eps) <= eps^-alpha ell(1/eps)`` for every regime.

    Zipf laws with matching index and a constant ``ell >= c**alpha`` are
    certified analytically; everything else is checked on a log grid (three
    points per decade down to ``1e-12``) plus every jump point of finite laws.
    Raises ``ValueError`` naming the first failing ``eps``.
    """
    for a, P in enumerate(model.letters):
        if (P.kind == "zipf" and ell.is_constant and alpha >= P.params["alpha"]
                and ell.c >= P.normalizer ** P.params["alpha"] * (1 - 1e-12)):
            continue
        pts = list(envelope_grid())
        if P.is_finite:
            pts += [float(p) for p in P.probs]
        for eps in pts:
            if counting_function(P, eps) > eps ** (-alpha) * ell(1.0 / eps) * (1 + 1e-12):
                raise ValueError(f"envelope fails for regime {a} at eps={eps!r}")


def rv_bound(model, n, r, alpha, ell, law=None, check=True):
    """Regular-variation bound
    ``c1 E[1{L_n > r} L_n^-(1-alpha) ell(L_n)] + c2 P{L_n = r}``.

    Inapplicable when ``alpha = 1`` and ``r = 0`` (the constant ``c1`` is
    infinite) or when ``ell`` is increasing.
    """
    conds = (
        Condition("0 <= r <= n-1", 0 <= r <= n - 1),
        Condition("not (alpha = 1 and r = 0)", not (alpha == 1 and r == 0)),
        Condition("ell nonincreasing", ell.nonincreasing),
    )
    if not all(c.satisfied for c in conds):
        return BoundReport("regular-variation-bound", None, conds, {"n": n, "r": r, "alpha": alpha})
    if check:
        check_envelope(model, alpha, ell)
    law = _resolve_law(model, n, law)
    k1 = c1(alpha, r)
    k2 = c2(alpha, r, max(P.p_sup for P in model.letters), ell)
    expectation = law.expect(lambda a, m: m ** (-(1.0 - alpha)) * ell(m), r=r)
    p_r = float(law.local_time_pmf()[r])
    return BoundReport("regular-variation-bound", k1 * expectation + k2 * p_r, conds,
                       {"c1": k1, "c2": k2, "expectation": expectation, "P_L_eq_r": p_r,
                        "n": n, "r": r, "alpha": alpha}, estimated=law.estimated)


def rv_finite_sample_thresholds(r, consts, eps):
    lam, t0, pm = consts.lam, consts.t0, consts.pi_min
    first = finite_chain_threshold(r, consts)
    second = (2 * t0 + lam * (1 - pm)) / (lam * (pm - eps)) if eps < pm else math.inf
    return first, second


def rv_finite_sample_bound(model, n, r, alpha, ell, eps, consts=None, check=True):
    """Explicit bound ``H(n, eps)`` for a finite ergodic driver.

    ``eps`` must lie in ``(0, pi_min)`` and ``n`` must exceed both thresholds;
    otherwise the report is inapplicable and lists the thresholds. The report
    also carries the large-``n`` envelope
    ``eps^-(1-alpha) c1 n^-(1-alpha) ell(n)``.
    """
    model.require_markov("the finite-sample regular-variation bound")
    if consts is None:
        consts = minorization_constants(model.chain)
    th1, th2 = rv_finite_sample_thresholds(r, consts, eps)
    threshold = max(th1, th2)
    conds = (
        Condition("0 < eps < pi_min", 0 < eps < consts.pi_min, consts.pi_min),
        Condition("n > threshold", n > threshold, threshold),
        Condition("not (alpha = 1 and r = 0)", not (alpha == 1 and r == 0)),
        Condition("ell nonincreasing", ell.nonincreasing),
    )
    comps = {"threshold": threshold, "threshold_r": th1, "threshold_eps": th2,
             "n": n, "r": r, "alpha": alpha, "epsilon": eps}
    if not all(c.satisfied for c in conds):
        return BoundReport("regular-variation-finite-sample", None, conds, comps)
    if check:
        check_envelope(model, alpha, ell)
    lam, t0, pm = consts.lam, consts.t0, consts.pi_min
    C = start_constant(model.initial, consts)
    k1 = c1(alpha, r)
    k2 = c2(alpha, r, max(P.p_sup for P in model.letters), ell)
    k3 = c3(alpha, r, ell)
    main = k1 * (n * eps) ** (-(1 - alpha)) * ell(n * eps)
    exp_r = k2 * C * math.exp(-(n / 2) * (lam * pm / t0 - (2 + (r + 1) * lam / t0) / n) ** 2)
    exp_eps = k3 * C * math.exp(-(n / 2) * (lam * (pm - eps) / t0 - (2 + lam / t0) / n) ** 2)
    comps.update({"c1": k1, "c2": k2, "c3": k3, "C": C, "main_term": main,
                  "exp_term_r": exp_r, "exp_term_eps": exp_eps,
                  "envelope": eps ** (-(1 - alpha)) * k1 * n ** (-(1 - alpha)) * ell(n)})
    return BoundReport("regular-variation-finite-sample", main + exp_r + exp_eps, conds, comps)


BOUND_NAMES = ("iid-counting-bound", "chain-exponential-bound", "regime-counting-bound",
               "shared-letter-bound", "finite-support-bound", "regular-variation-bound",
               "regular-variation-finite-sample")

__all__ = ["c_of_r", "incomplete_gamma_lower", "integral_terms", "dgp_iid_bound",
           "default_eps_grid", "theorem_bound", "shared_letter_coeffs", "shared_letter_bound",
           "finite_support_bound", "c1", "c2", "c3", "check_envelope", "rv_bound",
           "rv_finite_sample_bound", "rv_finite_sample_thresholds", "JointLocalTimeLaw",
           "SlowlyVaryingFn", "BOUND_NAMES"]
