"""Letter distributions on the positive integers.

Every supported law has nonincreasing masses ``p_1 >= p_2 >= ...``, which makes
the counting function ``nu(eps) = #{k : p_k >= eps}`` available in closed form
and lets infinite sums be split into an explicit head and an analytic tail.
Tail sums of powers ``sum_{k>K} p_k**s`` are exact per kind (Hurwitz zeta for
``zipf``, geometric series for ``geometric``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SUM_TOL = 1e-12
MOMENT_TOL = 1e-12
_CHUNK = 1 << 22

KINDS = ("finite", "zipf", "geometric")


@dataclass(frozen=True)
class SlowlyVaryingFn:
    """``c`` (constant) or ``c * log(x)**beta`` for ``x >= e``, held at ``c`` below ``e``."""

    c: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("slowly varying functions must be positive")

    @classmethod
    def constant(cls, c=1.0):
        return cls(c, 0.0)

    @classmethod
    def logpow(cls, c, beta):
        return cls(c, beta)

    @property
    def is_constant(self):
        return self.beta == 0.0

    @property
    def nonincreasing(self):
        return self.beta <= 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.c * np.log(np.maximum(x, math.e)) ** self.beta
        return float(out) if out.ndim == 0 else out

    def tail_integral(self, x):
        """``int_x^inf u**-1 ell(u) du``; ``inf`` when it diverges."""
        if self.beta >= -1.0:
            return math.inf
        top = -(self.beta + 1.0)
        if x >= math.e:
            return self.c * math.log(x) ** (self.beta + 1.0) / top
        return self.c * (1.0 - math.log(x)) + self.c / top

    def to_dict(self):
        if self.is_constant:
            return {"family": "constant", "c": self.c}
        return {"family": "logpow", "c": self.c, "beta": self.beta}

    @classmethod
    def from_dict(cls, d):
        if d["family"] == "constant":
            return cls.constant(d.get("c", 1.0))
        if d["family"] == "logpow":
            return cls.logpow(d.get("c", 1.0), d["beta"])
        raise ValueError(f"unknown slowly varying family {d['family']!r}")


@dataclass(frozen=True)
class RVProfile:
    """Regular-variation profile ``nu(eps) ~ C eps**-alpha ell(1/eps)``.

    ``ell0`` and ``D`` describe the small-mass function and are set only when
    ``alpha == 0``. ``degenerate`` marks laws whose counting function stays
    bounded; ``oscillating`` marks laws whose ratios only converge in
    logarithmic mean.
    """

    alpha: float
    ell: SlowlyVaryingFn
    C: float
    ell0: SlowlyVaryingFn | None = None
    D: float | None = None
    degenerate: bool = False
    oscillating: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.C < 0:
            raise ValueError("C must be nonnegative")
        if self.alpha == 0.0 and (self.ell0 is None or self.D is None or self.D < 0):
            raise ValueError("alpha = 0 profiles need ell0 and D >= 0")


class LetterDistribution:
    """A probability law on ``{1, 2, ...}`` with nonincreasing masses.

    Use the constructors :meth:`finite`, :meth:`zipf`, :meth:`geometric` and
    :meth:`uniform`.
    """

    __slots__ = ("kind", "params", "_probs", "_c")

    def __init__(self, kind, **params):
        if kind not in KINDS:
            raise ValueError(f"unknown distribution kind {kind!r}")
        self.kind = kind
        self._probs = None
        self._c = None
        if kind == "finite":
            p = np.asarray(params["probs"], dtype=float)
            if p.ndim != 1 or p.size == 0 or np.any(p < 0):
                raise ValueError("finite law needs a nonempty list of nonnegative masses")
            if abs(p.sum() - 1.0) > SUM_TOL:
                raise ValueError(f"masses sum to {p.sum()!r}, not 1")
            p = np.sort(p[p > 0])[::-1].copy()
            p.setflags(write=False)
            self._probs = p
            params = {"probs": tuple(p.tolist())}
        elif kind == "zipf":
            alpha = float(params["alpha"])
            if not 0.0 < alpha < 1.0:
                raise ValueError("zipf index alpha must lie in (0, 1)")
            self._c = 1.0 / float(special.zeta(1.0 / alpha, 1.0))
            params = {"alpha": alpha}
        else:
            q = float(params["q"])
            if not 0.0 < q < 1.0:
                raise ValueError("geometric ratio q must lie in (0, 1)")
            params = {"q": q}
        self.params = params

    @classmethod
    def finite(cls, probs):
        return cls("finite", probs=probs)

    @classmethod
    def uniform(cls, size):
        return cls("finite", probs=np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls):
        return cls("finite", probs=[1.0])

    @classmethod
    def zipf(cls, alpha):
        return cls("zipf", alpha=alpha)

    @classmethod
    def geometric(cls, q):
        return cls("geometric", q=q)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        if kind == "uniform":
            return cls.uniform(int(d["size"]))
        return cls(kind, **d)

    def to_dict(self):
        if self.kind == "finite":
            return {"kind": "finite", "probs": list(self.params["probs"])}
        return {"kind": self.kind, **self.params}

    def __repr__(self):
        if self.kind == "finite":
            return f"LetterDistribution.finite({list(self._probs)})"
        (k, v), = self.params.items()
        return f"LetterDistribution.{self.kind}({k}={v})"

    def __eq__(self, other):
        return isinstance(other, LetterDistribution) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self))

    # -- masses -----------------------------------------------------------

    @property
    def normalizer(self):
        """The zipf constant ``c`` in ``p_k = c k**(-1/alpha)``."""
        return self._c

    @property
    def support_size(self):
        return len(self._probs) if self.kind == "finite" else None

    @property
    def is_finite(self):
        return self.kind == "finite"

    @property
    def probs(self):
        if self.kind != "finite":
            raise ValueError("only finite laws expose their full mass list")
        return self._probs

    @property
    def p_sup(self):
        return float(self.pmf(1))

    def pmf(self, k):
        """Mass of letter ``k`` (vectorized; zero off the support)."""
        k = np.asarray(k, dtype=float)
        if self.kind == "finite":
            idx = k.astype(np.int64) - 1
            ok = (idx >= 0) & (idx < len(self._probs))
            out = np.where(ok, self._probs[np.clip(idx, 0, len(self._probs) - 1)], 0.0)
        elif self.kind == "zipf":
            out = np.where(k >= 1, self._c * np.maximum(k, 1.0) ** (-1.0 / self.params["alpha"]), 0.0)
        else:
            q = self.params["q"]
            out = np.where(k >= 1, (1.0 - q) * q ** (np.maximum(k, 1.0) - 1.0), 0.0)
        return float(out) if out.ndim == 0 else out

    def _count(self, eps, strict):
        """Number of letters with mass ``>= eps`` (``> eps`` when strict)."""
        hit = (lambda p: p > eps) if strict else (lambda p: p >= eps)
        if self.kind == "finite":
            return int(np.count_nonzero(hit(self._probs)))
        if eps <= 0:
            return math.inf
        if self.kind == "zipf":
            a = self.params["alpha"]
            guess = math.floor((self._c / eps) ** a) if eps < self._c else 0
        else:
            q = self.params["q"]
            guess = math.floor(1 + math.log(eps / (1 - q)) / math.log(q)) if eps < 1 - q else 0
        k = max(int(guess), 0)
        while hit(self.pmf(k + 1)):
            k += 1
        while k > 0 and not hit(self.pmf(k)):
            k -= 1
        return k

    def power_tail(self, s, K):
        """``sum_{k > K} p_k**s`` for ``s >= 1`` and integer ``K >= 0``."""
        if self.kind == "finite":
            return float(np.sum(self._probs[K:] ** s))
        if self.kind == "zipf":
            a = self.params["alpha"]
            return float(self._c ** s * special.zeta(s / a, K + 1.0))
        q = self.params["q"]
        return float((1.0 - q) ** s * q ** (s * K) / (1.0 - q ** s))

    def sample(self, rng, size):
        if self.kind == "finite":
            cum = np.cumsum(self._probs)
            cum[-1] = 1.0
            k = np.searchsorted(cum, rng.random(size), side="right") + 1
            return np.minimum(k, len(self._probs))
        if self.kind == "zipf":
            return rng.zipf(1.0 / self.params["alpha"], size)
        return rng.geometric(1.0 - self.params["q"], size)


# -- counting function and sums -------------------------------------------


def counting_function(P, eps):
    """``nu(eps) = #{k : p_k >= eps}``.

    ``eps = 0`` is allowed for finite laws only and returns the support size.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if eps == 0.0 and not P.is_finite:
        raise ValueError(f"nu(0) is infinite for {P!r}")
    return P._count(eps, strict=False)


def small_mass(P, eps):
    """``sum_k p_k 1{p_k <= eps}`` via closed-form tail sums."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if eps == 0.0:
        return 0.0
    return P.power_tail(1.0, P._count(eps, strict=True))


def large_mass(P, eps):
    """``sum_k p_k 1{p_k > eps}`` summed explicitly over the head."""
    K = P._count(eps, strict=True) if eps > 0 else P.support_size
    if K is math.inf or K is None:
        raise ValueError("infinitely many letters above eps")
    return float(np.sum(P.pmf(np.arange(1, K + 1)))) if K else 0.0


def _head_size(P, emax):
    """Smallest ``K`` with ``emax * p_{K+1} <= 1/2``: beyond it the binomial
    expansion of ``(1 - p)**emax`` alternates with shrinking terms."""
    if P.is_finite:
        return P.support_size
    if emax <= 0:
        return 0
    return P._count(0.5 / emax, strict=True)


def _series_tail(P, r, e, K, coef, tol):
    """``sum_j coef(j) (-1)^j binom(e, j) T_{1+r+j}(K)`` summed until the terms
    (which alternate and shrink) fall below ``tol`` (a scalar or one value per ``e``)."""
    out = np.zeros(len(e))
    emax = int(e.max()) if len(e) else 0
    for j in range(emax + 1):
        T = P.power_tail(1.0 + r + j, K)
        term = coef(j) * special.binom(e, j) * T
        out += term if j % 2 == 0 else -term
        if np.all(np.abs(term) <= tol) or T == 0.0:
            break
    return out


def moment_sums(P, r, ms, tol=MOMENT_TOL):
    """Vectorized ``sum_k p_k**(1+r) (1 - p_k)**(m - r)`` over an array of ``m``.

    ``tol`` is an absolute tolerance, either scalar or one value per ``m``.

    Infinite laws are summed explicitly up to the head size for ``max(m)`` and
    the remainder is expanded in powers of ``p`` using exact power tails.
    """
    ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    if np.any(ms < r) or r < 0:
        raise ValueError("need m >= r >= 0")
    e = (ms - r).astype(float)
    if len(ms) == 0:
        return np.zeros(0)
    K = _head_size(P, int(e.max()))
    out = np.zeros(len(ms))
    if K:
        p = P.probs if P.is_finite else P.pmf(np.arange(1, K + 1))
        with np.errstate(divide="ignore"):
            logq = np.log1p(-np.minimum(p, 1.0))
        lead = p ** (1.0 + r)
        rows = max(1, _CHUNK // len(p))
        for lo in range(0, len(ms), rows):
            ee = e[lo:lo + rows, None]
            # (1 - p)**0 is 1 even when p == 1
            with np.errstate(invalid="ignore"):
                expo = np.where(ee == 0, 0.0, ee * logq)
            out[lo:lo + rows] = np.sum(lead * np.exp(expo), axis=1)
    if not P.is_finite:
        out += _series_tail(P, r, e, K, lambda j: 1.0, np.asarray(tol) * 1e-3)
    return out


def moment_sum(P, r, m, tol=MOMENT_TOL):
    """``sum_k p_k**(1+r) (1 - p_k)**(m - r)`` to within ``tol``."""
    return float(moment_sums(P, r, [m], tol)[0])


def log_binom(m, r):
    m = np.asarray(m, dtype=float)
    return special.gammaln(m + 1) - special.gammaln(r + 1) - special.gammaln(m - r + 1)


def occupancy_weights(P, r, ms, tol=MOMENT_TOL):
    """``binom(m, r) * moment_sum(P, r, m)`` for each ``m``, combined in log space.

    The tolerance applies to the weight, so the moment sum is computed to
    ``tol / binom(m, r)``.
    """
    lb = log_binom(np.atleast_1d(ms), r)
    s = moment_sums(P, r, ms, np.maximum(tol * np.exp(-lb), 1e-300))
    with np.errstate(divide="ignore"):
        return np.where(s > 0, np.exp(lb + np.log(np.where(s > 0, s, 1.0))), 0.0)


# -- regular variation ----------------------------------------------------


def geometric_small_mass_log_mean(P, depth=40):
    """Logarithmic mean of ``small_mass(eps) / eps`` over one lattice period.

    The ratio has no limit for geometric laws: it runs from ``q/(1-q)`` up to
    ``1/(1-q)`` between consecutive masses. Averaged over ``log eps`` it
    settles on a constant, computed here by quadrature over the period
    ``(p_{depth+1}, p_depth]``.
    """
    from scipy.integrate import quad

    if P.kind != "geometric":
        raise ValueError("defined for geometric laws only")
    lo, hi = math.log(P.pmf(depth + 1)), math.log(P.pmf(depth))
    # small_mass is constant on (p_{depth+1}, p_depth): the tail from depth+1 on
    tail = P.power_tail(1.0, depth)
    val, _ = quad(lambda t: tail / math.exp(t), lo, hi, epsabs=0, epsrel=1e-13)
    return val / (hi - lo)


def rv_profile(P):
    """Regular-variation profile with every constant pushed into ``C`` (and ``D``).

    * zipf(alpha): ``ell == 1``, ``C = c**alpha``.
    * geometric(q): index 0, ``ell(x) = log(x) / log(1/q)``, ``C = 1``; the
      small-mass factor ``ell0`` is the logarithmic-mean constant
      ``1/log(1/q)`` and ``D = 1`` (see :func:`geometric_small_mass_log_mean`).
    * finite: index 0 with bounded ``nu``; degenerate, ``C = D = 0``.
    """
    if P.kind == "zipf":
        a = P.params["alpha"]
        return RVProfile(alpha=a, ell=SlowlyVaryingFn.constant(1.0), C=P.normalizer ** a)
    if P.kind == "geometric":
        q = P.params["q"]
        base = 1.0 / math.log(1.0 / q)
        return RVProfile(alpha=0.0, ell=SlowlyVaryingFn.logpow(base, 1.0), C=1.0,
                         ell0=SlowlyVaryingFn.constant(base), D=1.0, oscillating=True)
    return RVProfile(alpha=0.0, ell=SlowlyVaryingFn.logpow(1.0, 1.0), C=0.0,
                     ell0=SlowlyVaryingFn.constant(1.0), D=0.0, degenerate=True)
