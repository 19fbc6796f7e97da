"""Exact occupancy probabilities.

Three independent routes are provided:

* the iid closed form ``binom(n, r) sum_k p_k**(1+r) (1-p_k)**(n-r)``;
* for a Markov driver, the joint law of ``(X_{n+1}, L_n)`` by dynamic
  programming over (state, visit count), mixed against the per-regime iid
  terms to give ``P{cal L_n = r}``;
* brute-force enumeration of every driver path and letter assignment.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .alphabet import MOMENT_TOL, occupancy_weights
from .errors import CapExceeded
from .markov import ENUMERATION_CAP, _probability_vector, as_transition_matrix

DP_MAX_N = 20_000
DP_MAX_STATES = 4
DP_WORK_CAP = DP_MAX_STATES ** 3 * DP_MAX_N ** 2
EXACT_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class JointLocalTimeLaw:
    """``table[a, m] = P{X_{n+1} = a, L_n = m}`` for ``0 <= m <= n``.

    ``estimated`` is set when the table is an empirical frequency table.
    """

    table: np.ndarray
    n: int
    estimated: bool = False
    replicas: int | None = None

    @property
    def n_states(self):
        return self.table.shape[0]

    def local_time_pmf(self):
        """Law of ``L_n``."""
        return self.table.sum(axis=0)

    def next_state_law(self):
        """Law of ``X_{n+1}``."""
        return self.table.sum(axis=1)

    def expect(self, g, r=None):
        """``E[1{L_n > r} g(a, m)]`` with ``g`` vectorized over ``m``; all ``m`` if ``r`` is None."""
        m = np.arange(self.n + 1)
        mask = np.ones(self.n + 1, bool) if r is None else m > r
        return float(sum(np.sum(self.table[a, mask] * g(a, m[mask]))
                         for a in range(self.n_states)))


def _check_dp_cap(S, n):
    work = S ** 3 * n ** 2
    if work > DP_WORK_CAP:
        raise CapExceeded(
            f"exact DP with S={S}, n={n} exceeds the cap (n <= {DP_MAX_N} at S <= {DP_MAX_STATES}); "
            "use Monte Carlo instead", work=work, cap=DP_WORK_CAP)


def _visit_dp(Q, mu, n, a):
    """``f[x, c] = P{X_n = x, #{i <= n : X_i = a} = c}``."""
    S = len(mu)
    f = np.zeros((S, n + 2))
    f[:, 0] = mu
    f[a, 0] = 0.0
    f[a, 1] = mu[a]
    QT = Q.T.copy()
    for i in range(1, n):
        w = i + 2  # counts reachable after i+1 steps are 0..i+1
        g = QT @ f[:, :w]
        g[a, 1:w] = g[a, :w - 1].copy()
        g[a, 0] = 0.0
        f[:, :w] = g
    return f[:, :n + 1]


def local_time_law(Q, mu, n, a):
    """Law of the local time ``L_n(a)`` under initial law ``mu``."""
    Q = as_transition_matrix(Q)
    mu = _probability_vector(mu, Q.n_states)
    _check_dp_cap(Q.n_states, n)
    return _visit_dp(Q.matrix, mu, n, a).sum(axis=0)


def joint_local_time_law(Q, mu, n, workers=1):
    """Joint law of ``(X_{n+1}, L_n)`` by one forward DP per target state."""
    Q = as_transition_matrix(Q)
    S = Q.n_states
    mu = _probability_vector(mu, S)
    if n < 1:
        raise ValueError("n must be at least 1")
    _check_dp_cap(S, n)
    M = Q.matrix

    def target(a):
        return M[:, a] @ _visit_dp(M, mu, n, a)

    if workers > 1 and S > 1:
        with ThreadPoolExecutor(max_workers=min(workers, S)) as pool:
            rows = list(pool.map(target, range(S)))
    else:
        rows = [target(a) for a in range(S)]
    return JointLocalTimeLaw(np.vstack(rows), n)


def model_joint_law(model, n, workers=1):
    model.require_markov("exact computation")
    return joint_local_time_law(model.chain, model.initial, n, workers)


def iid_occupancy_pmf(P, n, r, tol=MOMENT_TOL):
    """``P{L_n = r}`` for iid letters: ``binom(n, r) sum_k p_k**(1+r) (1-p_k)**(n-r)``."""
    if not 0 <= r <= n:
        raise ValueError("need 0 <= r <= n")
    return float(occupancy_weights(P, r, [n], tol)[0])


def exact_regime_pmf(model, n, r, law=None, tol=EXACT_TOL):
    """``P{cal L_n = r}`` by mixing the joint law of ``(X_{n+1}, L_n)``.

    ``law`` may be passed in to reuse one DP across several ``r``.
    """
    if law is None:
        law = model_joint_law(model, n)
    if not 0 <= r <= n:
        return 0.0
    m = np.arange(r, n + 1)
    total = 0.0
    for a, P in enumerate(model.letters):
        w = law.table[a, r:]
        keep = w > 0
        if keep.any():
            total += float(np.sum(w[keep] * occupancy_weights(P, r, m[keep], tol)))
    return total


def exact_regime_law(model, n, law=None):
    """``P{cal L_n = r}`` for every ``r = 0..n``."""
    if law is None:
        law = model_joint_law(model, n)
    return np.array([exact_regime_pmf(model, n, r, law) for r in range(n + 1)])


def brute_force_regime_law(model, n):
    """``P{cal L_n = r}`` for all ``r`` by enumerating every driver path and
    every letter assignment. Independent of the DP route."""
    model.require_markov("enumeration")
    if not all(P.is_finite for P in model.letters):
        raise ValueError("enumeration needs finite letter supports")
    Q = model.chain.matrix
    eta = model.initial
    S = model.n_states
    probs = [np.asarray(P.probs) for P in model.letters]
    work = sum(len(p) for p in probs) ** (n + 1)
    if work > ENUMERATION_CAP:
        raise CapExceeded(f"{work} path/letter combinations exceed the enumeration cap",
                          work=work, cap=ENUMERATION_CAP)
    pmf = np.zeros(n + 1)
    for x in itertools.product(range(S), repeat=n + 1):
        px = eta[x[0]]
        for u, v in zip(x, x[1:]):
            px *= Q[u, v]
        if px == 0.0:
            continue
        sizes = [len(probs[s]) for s in x]
        combos = np.indices(sizes).reshape(n + 1, -1)
        w = np.full(combos.shape[1], px)
        for i, s in enumerate(x):
            w = w * probs[s][combos[i]]
        same_regime = np.array([s == x[n] for s in x[:n]])
        hits = ((combos[:n] == combos[n]) & same_regime[:, None]).sum(axis=0)
        pmf += np.bincount(hits, weights=w, minlength=n + 1)
    return pmf


def brute_force_regime_pmf(model, n, r):
    if not 0 <= r <= n:
        return 0.0
    return float(brute_force_regime_law(model, n)[r])
