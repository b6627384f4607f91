"""One-sample t-test and the Student t CDF it needs.

The CDF is computed through the regularized incomplete beta function,
evaluated with a modified Lentz continued fraction. Everything is plain
floats; no statistics dependencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_FPMIN = 1e-300
_CF_EPS = 1e-15
_CF_MAX_ITER = 300


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p_two_sided: float
    mean: float
    sd: float
    n: int

    @property
    def p_one_sided(self) -> float:
        """P(T >= t): the right-tail value for a greater-than alternative."""
        return 1.0 - t_cdf(self.t, self.df)


def _betacf(a: float, b: float, x: float) -> float:
    # continued fraction for the incomplete beta, modified Lentz method
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge "
                          f"(a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x out of range: {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                     + a * math.log(x) + b * math.log1p(-x))
    # the continued fraction converges fast only below the distribution mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(x: float, df: int) -> float:
    """P(T <= x) for Student's t with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if x == 0.0:
        return 0.5
    if not math.isfinite(x):
        return 0.0 if x < 0 else 1.0
    if x < 0.0:
        return 1.0 - t_cdf(-x, df)
    tail = 0.5 * betainc_reg(0.5 * df, 0.5, df / (df + x * x))
    return 1.0 - tail


def t_one_sample(xs, mu0: float) -> TTestResult:
    """Two-sided one-sample t-test of mean(xs) against mu0.

    sd uses the n-1 denominator. Raises on n < 2 or zero variance.
    """
    data = [float(v) for v in xs]
    n = len(data)
    if n < 2:
        raise ValueError("need at least two observations")
    mean = sum(data) / n
    var = sum((v - mean) ** 2 for v in data) / (n - 1)
    sd = math.sqrt(var)
    if sd == 0.0:
        raise ValueError("zero variance")
    t = (mean - mu0) / (sd / math.sqrt(n))
    df = n - 1
    p = 2.0 * (1.0 - t_cdf(abs(t), df))
    return TTestResult(t=t, df=df, p_two_sided=min(p, 1.0),
                       mean=mean, sd=sd, n=n)
