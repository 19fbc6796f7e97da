"""Regular-variation limits of occupancy probabilities.

Under a regularly varying letter profile ``nu(a, eps) ~ C(a) eps**-alpha ell(1/eps)``
the probability ``P{cal L_n = r}`` decays like a normalizing sequence
``h_{alpha,r}(n)``:

* ``alpha = 0``: ``n**-1 ell0(n)`` with ``ell0`` the small-mass factor;
* ``alpha = 1, r = 0``: ``int_n^inf u**-1 ell(u) du``;
* otherwise ``n**-(1-alpha) ell(n)``.

The ratio ``P{cal L_n = r} / h(n)`` tends to ``sum_a pi_a**alpha F(a, r)``.
Convergence is slow, so diagnostics report the full ratio sequence and the
checks on it are trend checks.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .alphabet import RVProfile, SlowlyVaryingFn, occupancy_weights, rv_profile
from .exact import exact_regime_pmf, model_joint_law
from .markov import stationary_distribution

ZERO_CONSTANT = 1e-12
DEFAULT_BAND = 0.15


def normalizer_mode(alpha, r):
    if alpha == 0.0:
        return "alpha=0"
    if alpha == 1.0 and r == 0:
        return "alpha=1,r=0"
    return "power"


def h_norm(alpha, r, ell, x):
    """``h_{alpha,r}(x)`` for ``x >= 1``.

    ``ell`` is the small-mass factor ``ell0`` when ``alpha = 0`` and the
    counting-function factor otherwise. Raises ``ValueError`` when
    ``alpha = 1, r = 0`` and ``int_x^inf u**-1 ell(u) du`` diverges.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if r < 0:
        raise ValueError("r must be nonnegative")
    x = float(x)
    if x < 1.0:
        raise ValueError("h is defined for x >= 1")
    mode = normalizer_mode(alpha, r)
    if mode == "alpha=0":
        return ell(x) / x
    if mode == "alpha=1,r=0":
        val = ell.tail_integral(x)
        if not math.isfinite(val):
            raise ValueError(f"int_x^inf ell(u)/u du diverges for {ell!r}")
        return val
    return x ** (-(1.0 - alpha)) * ell(x)


def h_norm_array(alpha, r, ell, xs):
    return np.array([h_norm(alpha, r, ell, x) for x in np.atleast_1d(xs)])


def F_constant(profile, r):
    """Per-regime limit constant: ``D`` at ``alpha = 0``, ``C`` at ``alpha = 1, r = 0``,
    ``C alpha Gamma(r + 1 - alpha) / r!`` otherwise."""
    a = profile.alpha
    mode = normalizer_mode(a, r)
    if mode == "alpha=0":
        if profile.D is None:
            raise ValueError("alpha = 0 needs the small-mass constant D")
        return profile.D
    if mode == "alpha=1,r=0":
        return profile.C
    return profile.C * a * math.gamma(r + 1.0 - a) / math.factorial(r)


def _profile_ell(profile):
    return profile.ell0 if profile.alpha == 0.0 else profile.ell


@dataclass
class LimitReport:
    """Limit constant, the normalizer used, and the observed ``(n, ratio)`` pairs.

    ``alpha`` and ``ell`` identify the normalizer. ``companion`` is
    ``sum_a pi_a**alpha``, the limit of ``E[1{L_n > r} h(L_n)] / h(n)``;
    ``flagged`` marks a constant too close to zero for a relative band to
    mean anything.
    """

    constant: float
    normalizer: str
    mode: str
    diagnostics: list = field(default_factory=list)
    companion: float | None = None
    companion_diagnostics: list = field(default_factory=list)
    band: float = DEFAULT_BAND
    errors: list = field(default_factory=list)
    alpha: float | None = None
    ell: SlowlyVaryingFn | None = None

    def __post_init__(self):
        if self.constant < 0:
            raise ValueError("limit constants are nonnegative")
        ns = [n for n, _ in self.diagnostics]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("diagnostic n values must be strictly increasing")

    @property
    def flagged(self):
        return self.constant < ZERO_CONSTANT

    @property
    def ratios(self):
        return [q for _, q in self.diagnostics]

    def deviations(self):
        return [abs(q - self.constant) for q in self.ratios]

    def relative_deviation(self):
        """Relative distance of the last ratio from the constant."""
        if not self.diagnostics or self.flagged:
            return None
        return abs(self.ratios[-1] - self.constant) / self.constant

    def trend_ok(self):
        """Last ratio closer to the constant than the first."""
        d = self.deviations()
        return len(d) >= 2 and d[-1] < d[0]

    def monotone(self):
        d = self.deviations()
        return all(b < a for a, b in zip(d, d[1:]))

    def within_band(self):
        rel = self.relative_deviation()
        return rel is not None and rel < self.band

    def csv_rows(self):
        return [(n, q, self.constant, self.band) for n, q in self.diagnostics]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "ratio", "limit", "band"])
        for n, q, c, b in self.csv_rows():
            w.writerow([n, format(q, ".17g"), format(c, ".17g"), b])
        return buf.getvalue()


def _envelope_profile(P, alpha, ell):
    """Profile of ``P`` judged against an envelope ``eps**-alpha ell(1/eps)``.

    Returns the law's own profile when the envelope matches it, and a
    zero-constant profile when the law's counting function is negligible
    against the envelope.
    """
    own = rv_profile(P)
    if alpha is None or (alpha == own.alpha and (ell is None or ell == _profile_ell(own))):
        return own
    if own.degenerate or own.alpha < alpha:
        ell = ell or SlowlyVaryingFn.constant()
        if alpha == 0.0:
            return RVProfile(0.0, ell, 0.0, ell0=ell, D=0.0, degenerate=True)
        return RVProfile(alpha, ell, 0.0, degenerate=True)
    raise ValueError(f"{P!r} is not dominated by the envelope with alpha={alpha}")


def letter_limit_check(P, r, schedule, alpha=None, ell=None, band=0.10):
    """Ratios ``binom(n, r) sum_k p_k**(1+r) (1-p_k)**(n-r) / h_{alpha,r}(n)``.

    By default ``(alpha, ell)`` come from the law's own profile. Passing an
    envelope that the law is negligible against yields limit constant 0.
    """
    prof = _envelope_profile(P, alpha, ell)
    ell_h = ell if ell is not None else _profile_ell(prof)
    mode = normalizer_mode(prof.alpha, r)
    ns = np.asarray(sorted(schedule), dtype=np.int64)
    vals = occupancy_weights(P, r, ns)
    h = h_norm_array(prof.alpha, r, ell_h, ns)
    diag = [(int(n), float(v / hv)) for n, v, hv in zip(ns, vals, h)]
    return LimitReport(constant=float(F_constant(prof, r)), normalizer=_describe(prof.alpha, r, ell_h),
                       mode=mode, diagnostics=diag, companion=1.0, band=band,
                       alpha=prof.alpha, ell=ell_h)


def _describe(alpha, r, ell):
    mode = normalizer_mode(alpha, r)
    if mode == "alpha=0":
        return f"x^-1 * {ell!r}"
    if mode == "alpha=1,r=0":
        return f"int_x^inf u^-1 {ell!r} du"
    return f"x^-{1 - alpha:g} * {ell!r}"


def model_limit(model, r, profiles=None):
    """``sum_a pi_a**alpha F(a, r)`` and its companion ``sum_a pi_a**alpha``.

    ``profiles`` defaults to each regime's own profile; all regimes must share
    one index ``alpha`` and one slowly varying factor.
    """
    model.require_markov("the model limit")
    if profiles is None:
        profiles = [rv_profile(P) for P in model.letters]
    if len(profiles) != model.n_states:
        raise ValueError("need one profile per regime")
    alphas = {p.alpha for p in profiles}
    if len(alphas) != 1:
        raise ValueError(f"regimes have different indices {sorted(alphas)}; one common alpha is required")
    alpha = alphas.pop()
    ells = {repr(_profile_ell(p)) for p in profiles if not p.degenerate}
    if len(ells) > 1:
        raise ValueError("regimes must share one slowly varying factor")
    ell = next((_profile_ell(p) for p in profiles if not p.degenerate), _profile_ell(profiles[0]))
    pi = stationary_distribution(model.chain)
    weights = pi ** alpha
    constant = float(sum(w * F_constant(p, r) for w, p in zip(weights, profiles)))
    return LimitReport(constant=constant, normalizer=_describe(alpha, r, ell),
                       mode=normalizer_mode(alpha, r), companion=float(weights.sum()),
                       alpha=alpha, ell=ell)


def convergence_diagnostic(model, r, schedule, method="exact", profiles=None, band=DEFAULT_BAND,
                           replicas=100_000, seed=0, workers=1):
    """Ratios ``P{cal L_n = r} / h(n)`` along ``schedule``.

    ``method="exact"`` uses the joint local-time DP and also records the
    companion ratios ``E[1{L_n > r} h(L_n)] / h(n)``. ``method="mc"``
    uses Monte Carlo estimates and stores ``(n, stderr / h(n))`` in
    :attr:`LimitReport.errors`.
    """
    report = model_limit(model, r, profiles)
    report.band = band
    alpha, ell = report.alpha, report.ell
    for n in sorted(schedule):
        h = h_norm(alpha, r, ell, n)
        if method == "exact":
            law = model_joint_law(model, n)
            p = exact_regime_pmf(model, n, r, law)
            comp = law.expect(lambda a, m: h_norm_array(alpha, r, ell, m), r=r) / h
            report.companion_diagnostics.append((n, comp))
        elif method == "mc":
            from .montecarlo import estimate_pmf
            est = estimate_pmf(model, n, r, replicas, seed, workers)
            p = est.mean
            report.errors.append((n, est.stderr / h))
        else:
            raise ValueError(f"unknown method {method!r}")
        report.diagnostics.append((n, p / h))
    return report
