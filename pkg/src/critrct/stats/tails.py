"""Upper-tail probabilities of the chi-square, F and standard normal laws.

The chi-square and F tails go through the regularised incomplete gamma and beta
functions, evaluated by power series or by continued fraction (modified Lentz)
depending on which converges faster at the argument.
"""

from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 200_000


def _gamma_series(a, x):
    # P(a, x) by its power series; converges quickly for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"gamma series did not converge (a={a}, x={x})")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a, x):
    # Q(a, x) by continued fraction; converges quickly for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"gamma continued fraction did not converge (a={a}, x={x})")
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gamma_q(a, x):
    """Regularised upper incomplete gamma ``Q(a, x) = Gamma(a, x) / Gamma(a)``."""
    if a <= 0:
        raise ValueError(f"a must be positive, got {a!r}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cfrac(a, x)


def gamma_p(a, x):
    """Regularised lower incomplete gamma ``P(a, x)``."""
    if a <= 0:
        raise ValueError(f"a must be positive, got {a!r}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cfrac(a, x)


def _beta_cfrac(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"beta continued fraction did not converge (a={a}, b={b}, x={x})")


def beta_inc(a, b, x):
    """Regularised incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError(f"a and b must be positive, got {a!r}, {b!r}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cfrac(a, b, x) / a
    return 1.0 - front * _beta_cfrac(b, a, 1.0 - x) / b


def _check_df(df, name="df"):
    if not (df > 0 and math.isfinite(df)):
        raise ValueError(f"{name} must be a positive finite number, got {df!r}")


def chi2_tail(x, df):
    """``P(X > x)`` for ``X ~ chi-square(df)``."""
    _check_df(df)
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    return gamma_q(0.5 * df, 0.5 * x)


def f_tail(x, df1, df2):
    """``P(X > x)`` for ``X ~ F(df1, df2)``."""
    _check_df(df1, "df1")
    _check_df(df2, "df2")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return beta_inc(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * x))


def normal_tail(z, two_sided=False):
    """Upper tail ``P(Z > z)`` of the standard normal, or ``P(|Z| > |z|)``."""
    if two_sided:
        return math.erfc(abs(z) / math.sqrt(2.0))
    return 0.5 * math.erfc(z / math.sqrt(2.0))
