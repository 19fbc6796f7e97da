"""Unregularized incomplete gamma functions on top of scipy's regularized ones."""
import math

from scipy import special


def _check(t, x):
    if not t > 0:
        raise ValueError(f"gamma(t, x) diverges for t = {t} <= 0")
    if x < 0:
        raise ValueError("x must be nonnegative")


def incomplete_gamma_lower(t, x):
    """``gamma(t, x) = int_0^x u**(t-1) e**-u du`` for ``t > 0, x >= 0``."""
    _check(t, x)
    return float(special.gammainc(t, x)) * math.gamma(t)


def incomplete_gamma_upper(t, x):
    """``Gamma(t, x) = int_x^inf u**(t-1) e**-u du`` for ``t > 0, x >= 0``."""
    _check(t, x)
    return float(special.gammaincc(t, x)) * math.gamma(t)
