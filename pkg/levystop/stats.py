"""Statistics of Monte Carlo samples: means, standard errors, intervals"""

from typing import Sequence, Tuple

import numpy as _np
from scipy.stats import kstest as _kstest
from scipy.stats import norm as _norm


def mean_se(values: _np.ndarray) -> Tuple[float, float]:
    """Sample mean and standard error (sample std / sqrt(n))"""
    values = _np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        return float("nan"), float("nan")
    mean = float(values.mean())
    if n == 1:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / _np.sqrt(n))


def antithetic_mean_se(first: _np.ndarray, second: _np.ndarray) -> Tuple[float, float]:
    """Mean and standard error from antithetic pairs (first[i], second[i])"""
    return mean_se(0.5 * (_np.asarray(first) + _np.asarray(second)))


def combined_se(*errors: float) -> float:
    """Standard error of a sum/difference of independent estimates"""
    return float(_np.sqrt(_np.sum(_np.square(errors))))


def ratio_se(num: float, num_se: float, den: float, den_se: float) -> float:
    """Delta-method standard error of num/den for independent estimates"""
    return float(abs(num / den) * _np.hypot(num_se / num if num else 0.0, den_se / den))


def product_se(a: float, a_se: float, b: float, b_se: float) -> float:
    """Delta-method standard error of a*b for independent estimates"""
    return float(_np.hypot(a * b_se, b * a_se))


def confidence_interval(mean: float, std_error: float, level: float = 0.95) -> Tuple[float, float]:
    """Normal-approximation confidence interval"""
    z = _norm.ppf(0.5 + level / 2.0)
    return mean - z * std_error, mean + z * std_error


def within(estimate: float, target: float, std_error: float, n_se: float = 3.0, slack: float = 0.0) -> bool:
    """True when |estimate - target| <= n_se * std_error + slack"""
    return abs(estimate - target) <= n_se * std_error + slack


def flat_argmax(levels: Sequence[float], estimates: Sequence[float], errors: Sequence[float]) -> Tuple[float, Tuple[float, float]]:
    """Argmax of a profile plus the hull of levels within one SE of the max"""
    levels = _np.asarray(levels, dtype=float)
    estimates = _np.asarray(estimates, dtype=float)
    errors = _np.asarray(errors, dtype=float)
    best = int(_np.argmax(estimates))
    close = levels[estimates >= estimates[best] - errors[best]]
    return float(levels[best]), (float(close.min()), float(close.max()))


def ks_exponential(samples: _np.ndarray, rate: float) -> float:
    """Kolmogorov-Smirnov p-value of |samples| against Exp(rate)"""
    return float(_kstest(_np.abs(samples), "expon", args=(0.0, 1.0 / rate)).pvalue)
