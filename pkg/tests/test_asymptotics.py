import math

import numpy as np
import pytest

from occupancy import LetterDistribution as L, SlowlyVaryingFn
from occupancy.alphabet import RVProfile, rv_profile
from occupancy.asymptotics import (F_constant, LimitReport, convergence_diagnostic, h_norm,
                                   letter_limit_check, model_limit)
from occupancy.regime import build_model

ZIPF_C = 6 / math.pi ** 2
ONE = SlowlyVaryingFn.constant(1.0)


def test_h_power():
    assert h_norm(0.5, 0, ONE, 100) == pytest.approx(0.1)


def test_h_alpha_one_log_family():
    ell = SlowlyVaryingFn.logpow(1.0, -2.0)
    for x in (10.0, 1e3, 1e8):
        assert h_norm(1.0, 0, ell, x) == pytest.approx(1 / math.log(x))
    # ell(x) / ell_1(x) -> 0
    assert ell(1e12) / h_norm(1.0, 0, ell, 1e12) < ell(1e3) / h_norm(1.0, 0, ell, 1e3)


def test_h_alpha_one_divergent():
    with pytest.raises(ValueError):
        h_norm(1.0, 0, ONE, 10)


def test_h_alpha_zero():
    c = SlowlyVaryingFn.constant(2.5)
    for x in (1.0, 7.0, 1e5):
        assert h_norm(0.0, 0, c, x) == pytest.approx(2.5 / x)
        assert h_norm(0.0, 3, c, x) == pytest.approx(2.5 / x)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 0.5, 0.7, 1.0])
@pytest.mark.parametrize("r", [0, 1, 2])
def test_case_totality(alpha, r):
    ell = SlowlyVaryingFn.logpow(1.0, -2.0) if alpha == 1.0 else ONE
    prof = RVProfile(alpha, ell, 0.8, ell0=ONE if alpha == 0 else None, D=0.5 if alpha == 0 else None)
    assert math.isfinite(h_norm(alpha, r, ell, 50.0))
    assert F_constant(prof, r) >= 0


def test_F_values():
    assert F_constant(RVProfile(0.5, ONE, 1.0), 0) == pytest.approx(0.5 * math.sqrt(math.pi))
    assert F_constant(RVProfile(1.0, ONE, 0.3), 0) == 0.3
    C = ZIPF_C ** 0.5
    assert F_constant(RVProfile(0.5, ONE, C), 1) == pytest.approx(C * 0.5 * math.gamma(1.5))
    assert F_constant(RVProfile(0.5, ONE, C), 1) == pytest.approx(0.34549, abs=1e-5)
    assert F_constant(RVProfile(0.0, ONE, 1.0, ell0=ONE, D=0.7), 2) == 0.7


def test_letter_limit_zipf():
    rep = letter_limit_check(L.zipf(0.5), 0, [10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5])
    assert rep.constant == pytest.approx(0.69099, abs=1e-5)
    assert rep.monotone() and rep.relative_deviation() < 0.10


def test_letter_limit_geometric():
    rep = letter_limit_check(L.geometric(0.5), 0, [10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5])
    assert rep.constant == 1.0
    assert rep.trend_ok() and rep.relative_deviation() < 0.10


def test_letter_limit_degenerate():
    rep = letter_limit_check(L.uniform(5), 0, [10, 100, 1000], alpha=0.5, ell=ONE)
    assert rep.constant == 0.0 and rep.flagged
    assert rep.ratios[-1] < rep.ratios[0] and rep.ratios[-1] < 1e-12


def test_model_limit_m1(m1_zipf):
    rep = model_limit(m1_zipf, 0)
    assert rep.companion == pytest.approx(1.39385, abs=1e-5)
    assert rep.constant == pytest.approx(0.96313, abs=1e-5)
    assert model_limit(m1_zipf, 1).constant == pytest.approx(0.48157, abs=1e-5)


def test_model_limit_single_state():
    P = L.zipf(0.4)
    rep = model_limit(build_model([[1.0]], [P]), 2)
    assert rep.companion == 1.0
    assert rep.constant == pytest.approx(F_constant(rv_profile(P), 2))


def test_model_limit_mixed_index():
    model = build_model([[0.9, 0.1], [0.2, 0.8]], [L.zipf(0.5), L.zipf(0.3)])
    with pytest.raises(ValueError, match="alpha"):
        model_limit(model, 0)


def test_diagnostic_single_state_matches_letter_check():
    P = L.zipf(0.5)
    sched = [100, 1000, 10_000]
    diag = convergence_diagnostic(build_model([[1.0]], [P]), 0, sched)
    ref = letter_limit_check(P, 0, sched)
    np.testing.assert_allclose(diag.ratios, ref.ratios, rtol=1e-12)


def test_diagnostic_m1(m1_zipf):
    rep = convergence_diagnostic(m1_zipf, 0, [100, 1000])
    assert rep.trend_ok()
    comp = [q for _, q in rep.companion_diagnostics]
    assert abs(comp[-1] - rep.companion) < abs(comp[0] - rep.companion)


def test_diagnostic_mc(m1_zipf):
    rep = convergence_diagnostic(m1_zipf, 0, [2000], method="mc", replicas=20_000, seed=4)
    (_, ratio), (_, err) = rep.diagnostics[0], rep.errors[0]
    exact = convergence_diagnostic(m1_zipf, 0, [2000]).ratios[0]
    assert abs(ratio - exact) < 4 * err


def test_csv_output():
    rep = letter_limit_check(L.zipf(0.5), 0, [100, 1000])
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,ratio,limit,band"
    assert lines[1].startswith("100,")


def test_report_validates_order():
    with pytest.raises(ValueError):
        LimitReport(1.0, "x", "power", diagnostics=[(10, 1.0), (5, 1.0)])
