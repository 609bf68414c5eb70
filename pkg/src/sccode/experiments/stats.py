"""Summary statistics and Welch's unequal-variance t-test.

The Student-t tail uses the regularized incomplete beta function::

    P(|T| > t) = I_x(nu/2, 1/2),   x = nu / (nu + t^2)

evaluated with the modified Lentz continued fraction (switching to the
symmetric form ``1 - I_{1-x}(b, a)`` when ``x > (a+1)/(a+b+2)`` so the
fraction converges quickly).
"""

import math

import numpy as np

from ..errors import ContractViolation, NumericDegeneracyError

_TINY = 1e-300


def mean_sem(values):
    """Mean and standard error of the mean (``n - 1`` sample variance)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ContractViolation("mean_sem of an empty sample")
    mean = float(v.mean())
    if v.size == 1:
        return mean, float("nan")
    return mean, float(v.std(ddof=1) / math.sqrt(v.size))


def _betacf(a, b, x, eps=1e-16, max_iter=10000):
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise NumericDegeneracyError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0`` and ``0 <= x <= 1``."""
    if a <= 0 or b <= 0:
        raise ContractViolation("betainc needs a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ContractViolation("betainc needs 0 <= x <= 1")
    if x == 0.0 or x == 1.0:
        return float(x)
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t, nu):
    """Two-sided tail probability ``P(|T| >= |t|)`` of Student's t with ``nu`` dof."""
    if nu <= 0:
        raise ContractViolation("degrees of freedom must be > 0")
    if math.isinf(t):
        return 0.0
    return betainc(nu / 2.0, 0.5, nu / (nu + t * t))


def welch_t_test(a, b):
    """Two-sided unpaired Welch t-test; returns ``(t, dof, p)``.

    Both groups need at least two samples.  With zero variance in both
    groups the result is ``p = 1`` for equal means and ``p = 0`` otherwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ContractViolation("welch_t_test needs at least two samples per group")
    ma, mb = float(a.mean()), float(b.mean())
    va, vb = float(a.var(ddof=1)) / a.size, float(b.var(ddof=1)) / b.size
    se2 = va + vb
    if se2 == 0.0:
        if ma == mb:
            return 0.0, float("nan"), 1.0
        return math.copysign(math.inf, ma - mb), float("nan"), 0.0
    t = (ma - mb) / math.sqrt(se2)
    dof = se2 * se2 / (va * va / (a.size - 1) + vb * vb / (b.size - 1))
    return t, dof, min(1.0, student_t_sf2(t, dof))
