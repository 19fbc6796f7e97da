"""Finite-state Markov chains: stationary laws, time reversal, minorization
constants, simulation, local times and the exponential bounds built on them.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from ._rng import make_rng
from .errors import BoundNotApplicable, CapExceeded, ErgodicityError
from .reports import BoundReport, Condition

ROW_TOL = 1e-12
POSITIVE = 1e-15
ENUMERATION_CAP = 20_000_000


def _positive_graph(matrix):
    return [np.flatnonzero(row > POSITIVE) for row in matrix]


def _bfs_levels(adj, start=0):
    levels = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in levels:
                levels[v] = levels[u] + 1
                queue.append(v)
    return levels


def _is_irreducible(matrix):
    n = len(matrix)
    fwd = _positive_graph(matrix)
    bwd = _positive_graph(matrix.T)
    return len(_bfs_levels(fwd)) == n and len(_bfs_levels(bwd)) == n


def _period(matrix):
    # gcd of level[u] + 1 - level[v] over all edges equals the period of an
    # irreducible chain
    adj = _positive_graph(matrix)
    levels = _bfs_levels(adj)
    diffs = [levels[u] + 1 - levels[int(v)] for u in levels for v in adj[u]]
    return reduce(math.gcd, (abs(d) for d in diffs), 0)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """A row-stochastic matrix over the states ``0..S-1``.

    Rows must sum to one within ``1e-12``. By default the chain must also be
    irreducible and aperiodic; pass ``require_ergodic=False`` to keep a
    non-ergodic kernel around (every derived quantity will still refuse it).
    """

    matrix: np.ndarray
    labels: tuple | None = None
    require_ergodic: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"transition matrix must be square and nonempty, got shape {m.shape}")
        if np.any(m < 0) or np.any(m > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        bad = np.abs(m.sum(axis=1) - 1.0) > ROW_TOL
        if np.any(bad):
            raise ValueError(f"rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.labels is not None:
            if len(self.labels) != m.shape[0]:
                raise ValueError("one label per state is required")
            object.__setattr__(self, "labels", tuple(self.labels))
        if self.require_ergodic:
            self.check_ergodic()

    @property
    def n_states(self):
        return self.matrix.shape[0]

    @property
    def irreducible(self):
        return _is_irreducible(self.matrix)

    @property
    def aperiodic(self):
        return _period(self.matrix) == 1

    def check_ergodic(self):
        if not self.irreducible:
            raise ErgodicityError("irreducible")
        if not self.aperiodic:
            raise ErgodicityError("aperiodic", f"transition matrix is periodic (period {_period(self.matrix)})")

    def power(self, t):
        return np.linalg.matrix_power(self.matrix, t)


def as_transition_matrix(Q):
    if isinstance(Q, TransitionMatrix):
        Q.check_ergodic()
        return Q
    return TransitionMatrix(Q)


@dataclass(frozen=True, eq=False)
class ChainConstants:
    """Stationary law and minorization constants of an ergodic chain."""

    pi: np.ndarray
    pi_min: float
    t0: int
    ell: float
    ell_hat: float
    lam: float

    @property
    def n_states(self):
        return len(self.pi)


@dataclass(frozen=True, eq=False)
class ChainPath:
    states: np.ndarray
    seed: int | None
    initial_law: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.int64)
        if s.ndim != 1 or len(s) < 1:
            raise ValueError("a path holds at least one state")
        if np.any(s < 0) or np.any(s >= len(self.initial_law)):
            raise ValueError("path contains an invalid state index")
        object.__setattr__(self, "states", s)

    def __len__(self):
        return len(self.states)


def _probability_vector(v, size, name="initial law"):
    v = np.asarray(v, dtype=float)
    if v.shape != (size,):
        raise ValueError(f"{name} must have length {size}")
    if np.any(v < 0) or abs(v.sum() - 1.0) > ROW_TOL:
        raise ValueError(f"{name} must be a probability vector")
    return v


def stationary_distribution(Q):
    """Solve ``pi Q = pi`` with ``sum(pi) = 1``.

    The balance equations are solved densely with one equation replaced by the
    normalization row.
    """
    Q = as_transition_matrix(Q)
    S = Q.n_states
    A = Q.matrix.T - np.eye(S)
    A[-1, :] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    return pi / pi.sum()


def reverse(Q, pi=None):
    """Time reversal ``Qhat(x, y) = pi(y) Q(y, x) / pi(x)``."""
    Q = as_transition_matrix(Q)
    if pi is None:
        pi = stationary_distribution(Q)
    pi = _probability_vector(pi, Q.n_states, "stationary law")
    if np.any(pi <= 0) or np.max(np.abs(pi @ Q.matrix - pi)) > ROW_TOL:
        raise ValueError("pi is not the stationary law of Q")
    rev = Q.matrix.T * pi[None, :] / pi[:, None]
    return TransitionMatrix(rev / rev.sum(axis=1, keepdims=True), labels=Q.labels)


def minorization_constants(Q, t0=None):
    """Constants ``(t0, ell, ell_hat, lam)`` with ``Q^t0 >= lam * uniform``.

    ``t0`` defaults to the smallest power whose entries are all positive; the
    search stops at ``S**2``. A caller-supplied ``t0`` must itself give a
    strictly positive power.
    """
    Q = as_transition_matrix(Q)
    S = Q.n_states
    pi = stationary_distribution(Q)
    Qhat = reverse(Q, pi)
    if t0 is None:
        P = np.eye(S)
        for t in range(1, S * S + 1):
            P = P @ Q.matrix
            if np.all(P > POSITIVE):
                t0 = t
                break
        else:
            raise CapExceeded(f"no strictly positive power Q^t for t <= {S * S}",
                              work=S * S, cap=S * S)
    else:
        t0 = int(t0)
        if t0 < 1 or not np.all(Q.power(t0) > POSITIVE):
            raise ValueError(f"Q^{t0} has zero entries")
    ell = float(Q.power(t0).min())
    ell_hat = float(Qhat.power(t0).min())
    lam = S * min(ell, ell_hat)
    return ChainConstants(pi=pi, pi_min=float(pi.min()), t0=t0, ell=ell,
                          ell_hat=ell_hat, lam=min(lam, 1.0))


def sample_chain(rng, Q, mu, length, size):
    """Draw ``size`` independent chains of ``length`` states, one per row."""
    cum = np.cumsum(Q, axis=1)
    cum[:, -1] = 1.0
    init = np.cumsum(mu)
    init[-1] = 1.0
    S = len(mu)
    out = np.empty((size, length), dtype=np.int8 if S < 128 else np.int64)
    u = rng.random((size, length))
    out[:, 0] = np.minimum(np.searchsorted(init, u[:, 0], side="right"), S - 1)
    if size == 1:
        rows = cum.tolist()
        x = int(out[0, 0])
        path = out[0]
        for i, ui in enumerate(u[0, 1:].tolist(), start=1):
            x = min(bisect_right(rows[x], ui), S - 1)
            path[i] = x
        return out
    # time-major layout keeps each step's gather and compare contiguous
    steps = np.empty((length, size), dtype=out.dtype)
    steps[0] = out[:, 0]
    uT = np.ascontiguousarray(u.T)
    cuts = [np.ascontiguousarray(cum[:, j]) for j in range(S - 1)]
    for i in range(1, length):
        prev = steps[i - 1]
        nxt = np.zeros(size, dtype=out.dtype)
        for c in cuts:
            nxt += uT[i] >= c[prev]
        steps[i] = nxt
    return np.ascontiguousarray(steps.T)


def simulate_path(Q, mu, n, seed):
    """Simulate ``X_1..X_n`` from initial law ``mu``; deterministic in ``seed``."""
    Q = as_transition_matrix(Q)
    mu = _probability_vector(mu, Q.n_states)
    if n < 1:
        raise ValueError("path length must be at least 1")
    states = sample_chain(make_rng(seed), Q.matrix, mu, n, 1)[0]
    return ChainPath(states=states.astype(np.int64), seed=seed, initial_law=mu)


def local_times(path, n):
    """Return ``(L_n(a) for every a, L_n)`` where ``L_n = L_n(X_{n+1})``."""
    states = path.states if isinstance(path, ChainPath) else np.asarray(path, dtype=np.int64)
    if n + 1 > len(states):
        raise ValueError(f"need a path of length n+1={n + 1}, got {len(states)}")
    size = len(path.initial_law) if isinstance(path, ChainPath) else int(states.max()) + 1
    counts = np.bincount(states[:n], minlength=size)
    return counts, int(counts[states[n]])


def concentration_bound(n, gamma, consts):
    """Deviation bound for a single local time.

    Bounds both ``P{L_n(a) - n pi_a >= n gamma}`` and the lower deviation by
    ``exp(-(n/2) (lam gamma / t0 - 2/n)^2)`` for ``n > 2 t0 / (lam gamma)``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    threshold = 2 * consts.t0 / (consts.lam * gamma)
    if not n > threshold:
        raise BoundNotApplicable(f"concentration bound needs n > {threshold:.17g}",
                                 threshold=threshold)
    return math.exp(-(n / 2) * (consts.lam * gamma / consts.t0 - 2 / n) ** 2)


def finite_chain_threshold(r, consts):
    lam, t0, pm = consts.lam, consts.t0, consts.pi_min
    return (2 * t0 + r * lam + lam * (1 - pm)) / (lam * pm)


def start_constant(mu, consts):
    """``min(|A|, max_a mu_a / pi_a)``; equal to one when ``mu = pi``."""
    mu = _probability_vector(mu, consts.n_states)
    return float(min(consts.n_states, np.max(mu / consts.pi)))


def finite_chain_bound(n, r, consts, mu):
    """Exponential upper bound on ``P_mu{L_n <= r}`` for a finite ergodic chain.

    Raises :class:`BoundNotApplicable` below the validity threshold. The report
    carries the constant ``C``, the threshold and the large-``n`` envelope
    ``C' exp(-n lam^2 pi_min^2 / (2 t0^2))``.
    """
    threshold = finite_chain_threshold(r, consts)
    if not n > threshold:
        raise BoundNotApplicable(
            f"finite-chain bound with r={r} needs n > {threshold:.17g}", threshold=threshold)
    lam, t0, pm = consts.lam, consts.t0, consts.pi_min
    C = start_constant(mu, consts)
    value = C * math.exp(-(n / 2) * (lam * pm / t0 - (2 + (r + 1) * lam / t0) / n) ** 2)
    c_prime = C * math.exp(lam * pm * (2 * t0 + (r + 1) * lam) / t0 ** 2)
    envelope = c_prime * math.exp(-n * lam ** 2 * pm ** 2 / (2 * t0 ** 2))
    return BoundReport(
        theorem="chain-exponential-bound",
        value=value,
        validity=(Condition("n > threshold", True, threshold),),
        components={"C": C, "C_prime": c_prime, "envelope": envelope,
                    "threshold": threshold, "n": n, "r": r},
    )


def enumerate_paths(Q, init, length):
    """All ``S**length`` paths as an int array with their probabilities.

    Exhaustive oracle; refuses when the path count exceeds the enumeration cap.
    """
    Q = np.asarray(Q.matrix if isinstance(Q, TransitionMatrix) else Q, dtype=float)
    S = Q.shape[0]
    if S ** length > ENUMERATION_CAP:
        raise CapExceeded(f"{S}^{length} paths exceed the enumeration cap {ENUMERATION_CAP}",
                          work=S ** length, cap=ENUMERATION_CAP)
    paths = np.arange(S, dtype=np.int64)[:, None]
    probs = np.asarray(init, dtype=float).copy()
    for _ in range(1, length):
        last = paths[:, -1]
        paths = np.concatenate([np.repeat(paths, S, axis=0),
                                np.tile(np.arange(S), len(paths))[:, None]], axis=1)
        probs = (probs[:, None] * Q[last]).ravel()
    return paths, probs


def reversal_identity(Q, mu, eta, f, n):
    """Evaluate both sides of the time-reversal identity for local times.

    ``lhs = E_mu[(eta/pi)(X_{n+1}) f(L_n)]`` is enumerated over paths of ``Q``
    and ``rhs = E_eta[(mu/pi)(Xhat_{n+1}) f(Lhat_{n+1}(Xhat_1) - 1)]`` over paths
    of the reversed chain started from ``eta``. ``f`` is tabulated on ``0..n``.
    """
    Q = as_transition_matrix(Q)
    S = Q.n_states
    mu = _probability_vector(mu, S)
    eta = _probability_vector(eta, S, "eta")
    f = np.asarray(f, dtype=float)
    if f.shape != (n + 1,):
        raise ValueError(f"f must be tabulated on 0..{n}")
    pi = stationary_distribution(Q)
    Qhat = reverse(Q, pi)

    paths, probs = enumerate_paths(Q, mu, n + 1)
    last = paths[:, n]
    L = (paths[:, :n] == last[:, None]).sum(axis=1)
    lhs = float(np.sum(probs * eta[last] / pi[last] * f[L]))

    rpaths, rprobs = enumerate_paths(Qhat, eta, n + 1)
    first = rpaths[:, 0]
    Lhat = (rpaths == first[:, None]).sum(axis=1) - 1
    rhs = float(np.sum(rprobs * mu[rpaths[:, n]] / pi[rpaths[:, n]] * f[Lhat]))
    return lhs, rhs
