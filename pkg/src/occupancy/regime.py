"""Regime-switching pair process ``Z_i = (X_i, K_i)``.

The driver ``X`` moves between regimes; given the whole driver path the letters
``K_i`` are independent with law ``P_{X_i}``. Letters of different regimes are
never identified: ``(a, k) != (b, k)`` whenever ``a != b``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._rng import make_rng
from .alphabet import LetterDistribution
from .errors import UnsupportedOperation
from .markov import (TransitionMatrix, _probability_vector, as_transition_matrix,
                     sample_chain, stationary_distribution)

# path hook: hook(rng, length, size) -> int array of shape (size, length)
PathHook = Callable[[np.random.Generator, int, int], np.ndarray]


@dataclass(frozen=True, eq=False)
class RegimeModel:
    """A driver over ``S`` regimes plus one letter law per regime.

    Exactly one of ``chain`` (Markov driver, with ``initial`` law) and ``hook``
    (an opaque path generator over ``n_states`` regimes) is set.
    """

    letters: tuple[LetterDistribution, ...]
    chain: TransitionMatrix | None = None
    initial: np.ndarray | None = None
    hook: PathHook | None = None

    @property
    def n_states(self):
        return len(self.letters)

    @property
    def is_markov(self):
        return self.chain is not None

    def require_markov(self, what="this operation"):
        if not self.is_markov:
            raise UnsupportedOperation(f"{what} needs a Markov driver")

    def sample_driver(self, rng, length, size):
        if self.is_markov:
            return sample_chain(rng, self.chain.matrix, self.initial, length, size)
        X = np.asarray(self.hook(rng, length, size))
        if X.shape != (size, length) or np.any(X < 0) or np.any(X >= self.n_states):
            raise ValueError("path hook returned an invalid driver block")
        return X

    def sample_letters(self, rng, X):
        K = np.zeros(X.shape, dtype=np.int64)
        for a, P in enumerate(self.letters):
            mask = X == a
            if mask.any():
                K[mask] = P.sample(rng, int(mask.sum()))
        return K

    def to_dict(self):
        if not self.is_markov:
            raise UnsupportedOperation("hook-driven models have no serial form")
        return {"driver": {"matrix": self.chain.matrix.tolist(),
                           "initial": self.initial.tolist()},
                "letters": {str(a): P.to_dict() for a, P in enumerate(self.letters)}}


@dataclass(frozen=True, eq=False)
class RegimePath:
    X: np.ndarray
    K: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.int64)
        K = np.asarray(self.K, dtype=np.int64)
        if X.shape != K.shape or X.ndim != 1:
            raise ValueError("X and K must be 1-D and of equal length")
        if np.any(X < 0) or np.any(K < 1):
            raise ValueError("regimes are >= 0 and letters >= 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "K", K)

    @classmethod
    def from_pairs(cls, pairs, seed=None):
        pairs = list(pairs)
        return cls([a for a, _ in pairs], [k for _, k in pairs], seed)

    def __len__(self):
        return len(self.X)

    @property
    def pairs(self):
        return list(zip(self.X.tolist(), self.K.tolist()))

    def csv_rows(self):
        """Rows ``(i, X_i, K_i)`` with 1-based ``i``."""
        return [(i + 1, int(x), int(k)) for i, (x, k) in enumerate(zip(self.X, self.K))]


@dataclass(frozen=True)
class OccupancyStats:
    L_n: int
    cal_L_n: int


def build_model(driver, letters, initial=None):
    """Assemble a :class:`RegimeModel`.

    ``driver`` is a transition matrix (array or :class:`TransitionMatrix`) or a
    ``(hook, n_states)`` pair. ``letters`` maps every regime to its law, as a
    sequence or as a ``{regime: law}`` mapping. ``initial`` defaults to the
    stationary law for Markov drivers.
    """
    if isinstance(driver, tuple) and callable(driver[0]):
        hook, S = driver
        chain = None
    else:
        chain = as_transition_matrix(driver)
        hook, S = None, chain.n_states
    if isinstance(letters, dict):
        missing = [a for a in range(S) if a not in letters and str(a) not in letters]
        if missing:
            raise ValueError(f"no letter distribution for regimes {missing}")
        extra = set(map(int, letters)) - set(range(S))
        if extra:
            raise ValueError(f"letter distributions for unknown regimes {sorted(extra)}")
        letters = [letters[a] if a in letters else letters[str(a)] for a in range(S)]
    letters = tuple(letters)
    if len(letters) != S:
        raise ValueError(f"driver has {S} regimes but {len(letters)} letter laws were given")
    if not all(isinstance(P, LetterDistribution) for P in letters):
        raise TypeError("letters must be LetterDistribution instances")
    if chain is not None:
        init = stationary_distribution(chain) if initial is None else _probability_vector(initial, S)
        return RegimeModel(letters=letters, chain=chain, initial=np.asarray(init, dtype=float))
    return RegimeModel(letters=letters, hook=hook)


def simulate(model, n, seed):
    """Draw ``Z_1..Z_n``; deterministic given ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    X = model.sample_driver(rng, n, 1)
    K = model.sample_letters(rng, X)
    return RegimePath(X[0], K[0], seed)


def occupancy_stats(path, n):
    """Counts of ``i <= n`` with ``X_i = X_{n+1}`` and with ``Z_i = Z_{n+1}``."""
    if n + 1 > len(path):
        raise ValueError(f"need a path of length n+1={n + 1}, got {len(path)}")
    same_x = path.X[:n] == path.X[n]
    same_z = same_x & (path.K[:n] == path.K[n])
    return OccupancyStats(int(same_x.sum()), int(same_z.sum()))


def conditional_occupancy(model, prefix, r):
    """Probability that ``Z_{n+1}`` has been seen exactly ``r`` times in the prefix.

    ``prefix`` is a :class:`RegimePath` or a sequence of ``(regime, letter)``
    pairs. Uses the one-step driver law from ``X_n``; ``r = 0`` gives the
    missing mass of the pair process.
    """
    model.require_markov("conditional occupancy")
    if not isinstance(prefix, RegimePath):
        prefix = RegimePath.from_pairs(prefix)
    n = len(prefix)
    if r > n:
        return 0.0
    counts = Counter(prefix.pairs)
    row = model.chain.matrix[prefix.X[-1]]
    total = 0.0
    for a, P in enumerate(model.letters):
        if row[a] == 0.0:
            continue
        seen = {k: c for (b, k), c in counts.items() if b == a}
        if r == 0:
            mass = 1.0 - sum(P.pmf(k) for k in seen)
        else:
            mass = sum(P.pmf(k) for k, c in seen.items() if c == r)
        total += row[a] * max(mass, 0.0)
    return total


def conditional_occupancy_all(model, prefix):
    """``M_{n,r}`` for every ``r = 0..n`` (sums to one)."""
    if not isinstance(prefix, RegimePath):
        prefix = RegimePath.from_pairs(prefix)
    return np.array([conditional_occupancy(model, prefix, r) for r in range(len(prefix) + 1)])


def letter_frequencies(path, regime, letters: Sequence[int]):
    """Empirical frequency of each letter among positions in ``regime``."""
    K = path.K[path.X == regime]
    return np.array([np.mean(K == k) if len(K) else np.nan for k in letters]), len(K)
