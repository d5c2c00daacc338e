"""Welch t-test, Pearson correlation and ordinary least squares.

The test statistics are computed here directly; only the Student-t tail
probability comes from scipy.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats as _st


class StatisticsError(ValueError):
    pass


class TTest(NamedTuple):
    t: float
    p: float
    df: float


class Correlation(NamedTuple):
    r: float
    p: float


class LinearFit(NamedTuple):
    slope: float
    intercept: float


def _two_sided(t: float, df: float) -> float:
    return float(min(1.0, 2.0 * _st.t.sf(abs(t), df)))


def t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> TTest:
    """Welch's unequal-variance two-sample t-test (two-sided).

    Both samples constant: p = 1 when the means agree, else p = 0.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise StatisticsError("each sample needs at least 2 values")
    ma, mb = a.mean(), b.mean()
    va = a.var(ddof=1) / len(a)
    vb = b.var(ddof=1) / len(b)
    se2 = va + vb
    if se2 == 0:
        if ma == mb:
            return TTest(0.0, 1.0, float(len(a) + len(b) - 2))
        return TTest(math.copysign(math.inf, ma - mb), 0.0, float(len(a) + len(b) - 2))
    t = (ma - mb) / math.sqrt(se2)
    df = se2 ** 2 / (va ** 2 / (len(a) - 1) + vb ** 2 / (len(b) - 1))
    return TTest(float(t), _two_sided(t, df), float(df))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> Correlation:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    n = len(x)
    if n != len(y):
        raise StatisticsError("xs and ys differ in length")
    if n < 3:
        raise StatisticsError("need at least 3 pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise StatisticsError("correlation undefined for a constant variable")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return Correlation(r, 0.0)
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return Correlation(r, _two_sided(t, n - 2))


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    """Least-squares line ``y = slope * x + intercept``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) != len(y) or len(x) < 2:
        raise StatisticsError("need at least 2 paired values")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0:
        raise StatisticsError("fit undefined: xs have zero variance")
    slope = float(dx @ (y - y.mean())) / sxx
    return LinearFit(slope, float(y.mean() - slope * x.mean()))
