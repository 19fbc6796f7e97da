"""Acceptance suite: one test per criterion, run at the stated tolerances.

The conftest summary hook prints one PASS/FAIL line per criterion.
"""
import functools
import json
import subprocess
import sys
import time

import mpmath
import numpy as np
import pytest

from occupancy import LetterDistribution as L, SlowlyVaryingFn, build_model
from occupancy.asymptotics import convergence_diagnostic, letter_limit_check, model_limit
from occupancy.bounds import (dgp_iid_bound, finite_support_bound, rv_bound, rv_finite_sample_bound,
                              rv_finite_sample_thresholds, shared_letter_bound, theorem_bound)
from occupancy.exact import (brute_force_regime_law, exact_regime_pmf, iid_occupancy_pmf,
                             model_joint_law)
from occupancy.markov import (enumerate_paths, finite_chain_bound, finite_chain_threshold,
                              minorization_constants, reversal_identity, stationary_distribution)
from occupancy.montecarlo import estimate_pmf

M1 = [[0.9, 0.1], [0.2, 0.8]]
SLACK = 1e-12


def oracle_matrix():
    """Single-state and two-state models with letter supports of size 2 and 3."""
    u2, u3 = L.uniform(2), L.uniform(3)
    f2, f3 = L.finite([0.7, 0.3]), L.finite([0.5, 0.3, 0.2])
    models = {f"iid-{name}": build_model([[1.0]], [P])
              for name, P in (("u2", u2), ("u3", u3), ("f2", f2), ("f3", f3))}
    drivers = {"m1-stationary": (M1, None), "sticky-from-0": ([[0.6, 0.4], [0.3, 0.7]], [1.0, 0.0])}
    pairs = {"u2-u3": (u2, u3), "f2-f3": (f2, f3), "u3-u3": (u3, u3)}
    for dname, (Q, init) in drivers.items():
        for pname, letters in pairs.items():
            models[f"{dname}-{pname}"] = build_model(Q, list(letters), init)
    return models


MATRIX = oracle_matrix()


def test_criterion_1_dp_matches_enumeration():
    start = time.perf_counter()
    worst = 0.0
    cells = 0
    for name, model in MATRIX.items():
        for n in range(1, 7):
            brute = brute_force_regime_law(model, n)
            law = model_joint_law(model, n)
            for r in range(n + 1):
                worst = max(worst, abs(exact_regime_pmf(model, n, r, law) - brute[r]))
                cells += 1
    elapsed = time.perf_counter() - start
    assert cells == len(MATRIX) * 27
    assert worst <= 1e-12, worst
    assert elapsed < 30.0, elapsed


ORACLE_DPS = 200


@functools.lru_cache(maxsize=None)
def power_sums(P, top):
    """``sum_k p_k^s`` for ``s = 0..top`` at ``ORACLE_DPS`` digits, in closed form."""
    with mpmath.workdps(ORACLE_DPS):
        if P.kind == "finite":
            ps = [mpmath.mpf(float(p)) for p in P.probs]
            return [mpmath.fsum(p ** s for p in ps) for s in range(top + 1)]
        if P.kind == "zipf":
            a = mpmath.mpf(P.params["alpha"])
            c = 1 / mpmath.zeta(1 / a)
            return [None] + [c ** s * mpmath.zeta(s / a) for s in range(1, top + 1)]
        q = mpmath.mpf(P.params["q"])
        return [None] + [(1 - q) ** s / (1 - q ** s) for s in range(1, top + 1)]


def closed_form(P, n, r):
    """``binom(n, r) sum_k p_k^(1+r) (1-p_k)^(n-r)`` in high precision.

    ``(1-p)^(n-r)`` is expanded binomially, which turns the sum into finitely
    many power sums with closed forms; the working precision absorbs the
    cancellation.
    """
    sums = power_sums(P, 101)
    with mpmath.workdps(ORACLE_DPS):
        total = mpmath.fsum((-1) ** j * mpmath.binomial(n - r, j) * sums[1 + r + j]
                            for j in range(n - r + 1))
        return float(mpmath.binomial(n, r) * total)


def test_criterion_2_single_state_closed_form():
    laws = [L.uniform(3), L.finite([0.6, 0.25, 0.1, 0.05]), L.zipf(0.5), L.zipf(0.8),
            L.geometric(0.5), L.geometric(0.9)]
    worst = 0.0
    for P in laws:
        model = build_model([[1.0]], [P])
        law = model_joint_law(model, 100)
        assert law.table[0, 100] == pytest.approx(1.0)
        for n in range(1, 101):
            for r in range(min(n, 5) + 1):
                truth = closed_form(P, n, r)
                worst = max(worst, abs(iid_occupancy_pmf(P, n, r) - truth))
                if n == 100:
                    worst = max(worst, abs(exact_regime_pmf(model, n, r, law) - truth))
    assert worst <= 1e-10, worst


def _random_chain(rng, S, reversible):
    if reversible:
        W = rng.random((S, S)) + 0.05
        W = W + W.T
        return W / W.sum(axis=1, keepdims=True)
    Q = rng.dirichlet(np.ones(S), size=S)
    if rng.random() < 0.3:
        # sparse but ergodic: a cycle plus one self-loop
        Q = np.roll(np.eye(S), 1, axis=1)
        Q[0] = 0.5 * (Q[0] + np.eye(S)[0])
    return Q


def test_criterion_3_reversal_identity():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(50):
        reversible = i < 10
        S = int(rng.integers(2, 4))
        Q = _random_chain(rng, S, reversible)
        n = int(rng.integers(1, 7))
        f = rng.normal(size=n + 1)
        if reversible:
            pi = stationary_distribution(Q)
            mu = eta = pi
        else:
            mu, eta = rng.dirichlet(np.ones(S)), rng.dirichlet(np.ones(S))
        lhs, rhs = reversal_identity(Q, mu, eta, f, n)
        worst = max(worst, abs(lhs - rhs))
        if reversible:
            # stationary reversible case: L_n has the law of the start-state local time minus one
            paths, probs = enumerate_paths(Q, pi, n + 1)
            start_lt = (paths == paths[:, :1]).sum(axis=1) - 1
            worst = max(worst, abs(lhs - float(np.sum(probs * f[start_lt]))))
    assert worst <= 1e-12, worst


# includes the first valid n of every thresholded bound on M1 (33, 36, 39, 43, 65)
N_GRID = list(range(1, 13)) + [20, 33, 36, 39, 43, 50, 65, 100, 200, 500, 1000, 2000, 5000]


def _domination_cases():
    Z = L.zipf(0.5)
    cases = []
    for init in (None, [1.0, 0.0]):
        cases.append(("zipf", build_model(M1, [Z, Z], init), 0.5,
                      SlowlyVaryingFn.constant(Z.normalizer ** 0.5)))
        cases.append(("uniform", build_model(M1, [L.uniform(2), L.uniform(3)], init), 0.0,
                      SlowlyVaryingFn.constant(3.0)))
    return cases


def test_criterion_4_bound_domination():
    checked = {}
    failures = []

    def record(name, bound, exact, n, r, tag):
        checked[name] = checked.get(name, 0) + 1
        if not bound >= exact - SLACK:
            failures.append((tag, name, n, r, bound, exact))

    # iid counting bound on every regime law of the reference models, over an eps grid
    for P in (L.zipf(0.5), L.uniform(2), L.uniform(3)):
        eps_grid = [0.0, 0.01, 0.1, 0.3, 0.5, 1.0] if P.is_finite else [1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0]
        for n in N_GRID:
            for r in range(3):
                if r > n - 1:
                    continue
                exact = iid_occupancy_pmf(P, n, r)
                for eps in eps_grid:
                    record("iid-counting-bound", dgp_iid_bound(P, n, r, eps).value, exact, n, r, repr(P))

    for tag, model, alpha, ell in _domination_cases():
        consts = minorization_constants(model.chain)
        eps_fs = [consts.pi_min / 2, consts.pi_min / 4]
        for n in N_GRID:
            law = model_joint_law(model, n)
            lt = law.local_time_pmf()
            for r in range(3):
                if r > n - 1:
                    continue
                exact = exact_regime_pmf(model, n, r, law)
                if n > finite_chain_threshold(r, consts):
                    record("chain-exponential-bound", finite_chain_bound(n, r, consts, model.initial).value,
                           float(lt[:r + 1].sum()), n, r, tag)
                record("regime-counting-bound", theorem_bound(model, n, r, law=law).value, exact, n, r, tag)
                if tag == "zipf":
                    for eps in (1e-4, 1e-2, 0.1, 0.5):
                        record("shared-letter-bound", shared_letter_bound(model, n, r, eps, law=law).value,
                               exact, n, r, tag)
                else:
                    record("finite-support-bound", finite_support_bound(model, n, r, law=law).value,
                           exact, n, r, tag)
                record("regular-variation-bound", rv_bound(model, n, r, alpha, ell, law=law).value,
                       exact, n, r, tag)
                for eps in eps_fs:
                    if n > max(rv_finite_sample_thresholds(r, consts, eps)):
                        rep = rv_finite_sample_bound(model, n, r, alpha, ell, eps, consts)
                        record("regular-variation-finite-sample", rep.value, exact, n, r, tag)
    assert set(checked) == {"iid-counting-bound", "chain-exponential-bound", "regime-counting-bound",
                            "shared-letter-bound", "finite-support-bound", "regular-variation-bound",
                            "regular-variation-finite-sample"}, checked
    assert not failures, failures[:5]


def test_criterion_5_rate_agreement():
    Z = L.zipf(0.5)
    model = build_model(M1, [Z, Z])
    n = 10 ** 4
    limit = model_limit(model, 0).constant
    assert limit == pytest.approx(0.96313, abs=5e-6)
    exact = exact_regime_pmf(model, n, 0)
    ratio = exact / n ** -0.5
    assert 0.5 * limit <= ratio <= 1.5 * limit, ratio
    consts = minorization_constants(model.chain)
    eps = consts.pi_min / 2
    ell = SlowlyVaryingFn.constant(Z.normalizer ** 0.5)
    rep = rv_finite_sample_bound(model, n, 0, 0.5, ell, eps, consts)
    assert rep.applicable
    assert rep.value >= exact
    assert rep.components["envelope"] >= exact


def test_criterion_6_limit_trend():
    Z = L.zipf(0.5)
    model = build_model(M1, [Z, Z])
    start = time.perf_counter()
    for r in (0, 1):
        rep = convergence_diagnostic(model, r, [10 ** 2, 10 ** 3, 10 ** 4], method="exact")
        assert rep.monotone(), rep.diagnostics
        assert rep.relative_deviation() < 0.15, rep.diagnostics
        n, comp = rep.companion_diagnostics[-1]
        assert n == 10 ** 4
        assert abs(comp - rep.companion) / rep.companion < 0.10, (comp, rep.companion)
    assert time.perf_counter() - start < 180.0


SCHEDULE = [10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5]


@pytest.mark.parametrize("P", [L.zipf(0.5), L.geometric(0.5)], ids=["zipf-0.5", "geometric-0.5"])
def test_criterion_7_letter_limits(P):
    for r in (0, 1, 2):
        rep = letter_limit_check(P, r, SCHEDULE)
        assert rep.trend_ok(), rep.diagnostics
        assert rep.relative_deviation() < 0.10, rep.diagnostics


def test_criterion_7_mismatch_decays_to_zero():
    for P in (L.uniform(3), L.finite([0.5, 0.3, 0.2])):
        for r in (0, 1, 2):
            rep = letter_limit_check(P, r, SCHEDULE, alpha=0.5, ell=SlowlyVaryingFn.constant())
            assert rep.constant == 0.0 and rep.flagged
            q = rep.ratios
            assert all(b <= a for a, b in zip(q, q[1:])), q
            assert q[-1] < 1e-12, q


def test_criterion_8_monte_carlo_validity():
    model = build_model(M1, [L.uniform(2), L.uniform(3)])
    truth = exact_regime_pmf(model, 4, 1)
    covered = sum(estimate_pmf(model, 4, 1, 2000, seed).covers(truth, 2) for seed in range(200))
    assert covered >= 180, covered

    misses = []
    seed = 0
    for name, model in MATRIX.items():
        for n in range(1, 7):
            law = model_joint_law(model, n)
            for r in range(n + 1):
                seed += 1
                exact = exact_regime_pmf(model, n, r, law)
                est = estimate_pmf(model, n, r, 200_000, seed)
                if abs(est.mean - exact) > 4 * est.stderr:
                    misses.append((name, n, r, est.mean, est.stderr, exact))
    assert not misses, misses


CLI_MODEL = {"driver": {"matrix": M1},
             "letters": {"0": {"kind": "zipf", "alpha": 0.5}, "1": {"kind": "zipf", "alpha": 0.5}}}


def test_criterion_9_cli_determinism(tmp_path):
    cfg = tmp_path / "mc.json"
    cfg.write_text(json.dumps({"model": CLI_MODEL, "task": "mc",
                               "parameters": {"n": [10, 200, 3000], "r": [0, 1, 2],
                                              "replicas": 20000, "seed": 7}}))
    outputs = {}
    for workers in (1, 4, 8, 4):
        out = tmp_path / f"out-{len(outputs)}.csv"
        subprocess.run([sys.executable, "-m", "occupancy.cli", "run", "--config", str(cfg),
                        "--workers", str(workers), "--output", str(out)], check=True)
        outputs[len(outputs)] = out.read_bytes()
    assert len(set(outputs.values())) == 1
    assert outputs[0].count(b"\n") == 1 + 9
