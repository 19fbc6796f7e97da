"""Seeded, parallel Monte Carlo for occupancy quantities.

Replicas are grouped into fixed-size blocks and block ``b`` draws from its
own Philox stream keyed by ``(seed, b)``. The block size depends only on
``n``, so the stream used by every replica is fixed by ``(seed, replica
index)`` no matter how many workers run. Only the driver is simulated in
full; the occupancy count of the next letter is drawn from its exact
conditional law (see :func:`_pair_stats`). Per-replica values are gathered in
block order and reduced with numpy's pairwise summation, which makes the
result bit-identical across worker counts.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from ._rng import make_rng
from .alphabet import counting_function
from .exact import JointLocalTimeLaw

MIN_REPLICAS = 100
BLOCK_CELLS = 1 << 22
MAX_BLOCK = 8192
WORKERS_ENV = "OCCUPANCY_WORKERS"


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def block_size(n):
    return int(min(MAX_BLOCK, max(1, BLOCK_CELLS // (n + 1))))


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    replicas: int
    seed: int
    target: str

    def __post_init__(self):
        if self.stderr < 0 or self.replicas < 1:
            raise ValueError("need stderr >= 0 and replicas >= 1")

    def interval(self, k=3.0):
        return self.mean - k * self.stderr, self.mean + k * self.stderr

    def covers(self, value, k=3.0):
        lo, hi = self.interval(k)
        return lo <= value <= hi

    def to_dict(self):
        return asdict(self)


def _pair_stats(model, rng, X, n):
    """Per-replica ``(X_{n+1}, L_n, cal L_n)`` from driver paths of length ``n+1``.

    Given the driver, the ``L_n`` earlier letters of regime ``X_{n+1}`` are iid
    and independent of ``K_{n+1}``, so ``cal L_n`` is drawn as
    ``Binomial(L_n, p_{K_{n+1}})`` after drawing ``K_{n+1}``. This has the same
    joint law as drawing all ``n + 1`` letters and counting matches.
    """
    a = X[:, n].astype(np.int64)
    L = (X[:, :n] == X[:, n:n + 1]).sum(axis=1)
    p = np.zeros(len(a))
    for s, P in enumerate(model.letters):
        mask = a == s
        if mask.any():
            p[mask] = P.pmf(P.sample(rng, int(mask.sum())))
    return a, L, rng.binomial(L, p)


def run_blocks(model, n, replicas, seed, reducer, workers=None):
    """Apply ``reducer(next_state, L, cal_L)`` to every block and concatenate
    the per-replica outputs in replica order."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if replicas < 1:
        raise ValueError("replicas must be positive")
    workers = default_workers() if workers is None else max(1, int(workers))
    B = block_size(n)
    n_blocks = -(-replicas // B)

    def one(b):
        size = min(B, replicas - b * B)
        rng = make_rng(seed, b)
        X = model.sample_driver(rng, n + 1, size)
        return reducer(*_pair_stats(model, rng, X, n))

    if workers == 1 or n_blocks == 1:
        parts = [one(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(n_blocks)))
    return np.concatenate(parts)


def _indicator_estimate(hits, seed, target):
    N = len(hits)
    p = int(np.count_nonzero(hits)) / N
    return MCEstimate(p, math.sqrt(p * (1.0 - p) / N), N, seed, target)


def _mean_estimate(vals, seed, target):
    N = len(vals)
    mean = float(np.sum(vals) / N)
    sd = float(np.std(vals, ddof=1)) if N > 1 else 0.0
    return MCEstimate(mean, sd / math.sqrt(N), N, seed, target)


def _check_replicas(replicas):
    if replicas < MIN_REPLICAS:
        raise ValueError(f"need at least {MIN_REPLICAS} replicas")


def estimate_pmf(model, n, r, replicas, seed, workers=None):
    """Indicator average of ``{cal L_n = r}``; this is also ``E M_{n,r}``."""
    _check_replicas(replicas)
    hits = run_blocks(model, n, replicas, seed, lambda a, L, cal: cal == r, workers)
    return _indicator_estimate(hits, seed, f"P(cal_L_{n}={r})")


def estimate_local_time_pmf(model, n, r, replicas, seed, workers=None):
    """Indicator average of ``{L_n = r}``."""
    _check_replicas(replicas)
    hits = run_blocks(model, n, replicas, seed, lambda a, L, cal: L == r, workers)
    return _indicator_estimate(hits, seed, f"P(L_{n}={r})")


def estimate_law(model, n, replicas, seed, workers=None):
    """Empirical law of ``cal L_n`` on ``0..n`` with Bernoulli standard errors."""
    _check_replicas(replicas)
    cal = run_blocks(model, n, replicas, seed, lambda a, L, c: c, workers)
    counts = np.bincount(cal, minlength=n + 1)
    p = counts / replicas
    return p, np.sqrt(p * (1.0 - p) / replicas)


FUNCTIONALS = ("count-over-local-time", "normalizer", "integral-kernel")


def _functional(model, r, g, params):
    if g == "count-over-local-time":
        eps = float(params["eps"])
        nus = np.array([counting_function(P, eps) for P in model.letters], dtype=float)

        def f(a, L, cal):
            out = np.zeros(len(L))
            keep = L > r
            out[keep] = nus[a[keep]] / L[keep]
            return out
        return f
    if g == "normalizer":
        from .asymptotics import h_norm
        alpha, ell = float(params["alpha"]), params["ell"]

        def f(a, L, cal):
            out = np.zeros(len(L))
            keep = L > r
            if keep.any():
                vals, inv = np.unique(L[keep], return_inverse=True)
                out[keep] = np.array([h_norm(alpha, r, ell, v) for v in vals])[inv]
            return out
        return f
    if g == "integral-kernel":
        u = float(params["u"])
        nus = np.array([counting_function(P, u / 2) for P in model.letters], dtype=float)

        def f(a, L, cal):
            out = np.zeros(len(L))
            keep = L > r
            Lk = L[keep]
            out[keep] = u ** r * nus[a[keep]] * special.binom(Lk, r) * (1 - u / 2) ** (Lk - r)
            return out
        return f
    raise ValueError(f"unknown functional {g!r}; expected one of {FUNCTIONALS}")


def estimate_functional(model, n, r, g, replicas, seed, workers=None, **params):
    """Average of ``g(X_{n+1}, L_n)`` restricted to ``{L_n > r}``.

    ``g`` is a tag:

    * ``"count-over-local-time"``: ``nu(X_{n+1}, eps) / L_n`` (needs ``eps``);
    * ``"normalizer"``: ``h_{alpha,r}(L_n)`` (needs ``alpha`` and ``ell``);
    * ``"integral-kernel"``: ``u**r nu(X_{n+1}, u/2) binom(L_n, r) (1-u/2)**(L_n-r)``
      (needs ``u``).
    """
    _check_replicas(replicas)
    f = _functional(model, r, g, params)
    vals = run_blocks(model, n, replicas, seed, f, workers)
    return _mean_estimate(vals, seed, f"{g}(n={n},r={r})")


def empirical_joint_law(model, n, replicas, seed, workers=None):
    """Frequency table of ``(X_{n+1}, L_n)``, flagged as estimated."""
    S = model.n_states
    codes = run_blocks(model, n, replicas, seed, lambda a, L, cal: a * (n + 1) + L, workers)
    table = np.bincount(codes, minlength=S * (n + 1)).reshape(S, n + 1) / replicas
    return JointLocalTimeLaw(table, n, estimated=True, replicas=replicas)
