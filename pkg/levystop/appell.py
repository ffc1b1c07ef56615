"""Appell functions of the running supremum at an exponential time.

Q_s is characterised by E_x[Q_s(X̄)] = x^s, where X̄ = sup_{t <= e_q} X_t.
For integer orders Q_n is a polynomial whose coefficients come from the
moments of X̄ through the reciprocal of its moment series

    sum_n Q_n(y) u^n / n! = exp(u y) / E[exp(u X̄)].

Fractional orders are evaluated from the Mellin representation

    Q_s(y) = 1/Gamma(-s) int_0^inf u^(-s-1) exp(-u y) / E[exp(-u X̄)] du,

continued to s > 0 by subtracting the first ceil(s) Taylor terms of the
integrand at u = 0.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Optional, Tuple

import numpy as _np
from numpy.polynomial import Polynomial as _Polynomial
from scipy.integrate import quad as _quad
from scipy.interpolate import CubicSpline as _CubicSpline
from scipy.optimize import bisect as _bisect
from scipy.special import gamma as _gamma
from scipy.special import logsumexp as _logsumexp

from .errors import DomainError, NumericalError, PreconditionError
from .fluctuation import ExtremaLaw, Side
from .i18n import t
from .models import LevyModel, check_power_moment
from .utils import is_integer

EXTRA_MOMENTS = 8
_SMALL_U = 0.02
_LARGE_U = 60.0
_GRID_U = (1e-8, 1e6)
_GRID_POINTS = 281
_CHUNK = 50_000
_SPLINE_ABOVE = 256
_DEEP_LOG = 10.0


@dataclass(frozen=True, eq=False)
class AppellFamily:
    """Appell functions Q_s, 0 < s <= nu, of the supremum law ``law``.

    ``moments[k]`` is E[X̄^k] for k <= ceil(nu) + 8.
    """

    law: ExtremaLaw
    nu: float
    moments: Tuple[float, ...]

    @property
    def m1(self) -> float:
        return self.moments[1]

    @property
    def std(self) -> float:
        return math.sqrt(max(self.moments[2] - self.moments[1] ** 2, 0.0))

    @cached_property
    def _series(self) -> _np.ndarray:
        """Coefficients b_k of 1 / E[exp(u X̄)] as a power series in u"""
        a = [m / math.factorial(k) for k, m in enumerate(self.moments)]
        b = [1.0]
        for k in range(1, len(a)):
            b.append(-sum(a[j] * b[k - j] for j in range(1, k + 1)))
        return _np.array(b)

    def polynomial(self, n: int) -> _Polynomial:
        if n < 0 or n >= len(self.moments):
            raise DomainError(t("errors.appell_order", s=n, nu=self.nu))
        b = self._series
        coef = _np.zeros(n + 1)
        for k in range(n + 1):
            coef[n - k] = math.factorial(n) / math.factorial(n - k) * b[k]
        return _Polynomial(coef)

    # -- Mellin transform of the law -------------------------------------

    @cached_property
    def _log_exponent(self) -> Optional[_CubicSpline]:
        """Spline of log(-log E[exp(-u X̄)]) against log u, empirical laws only"""
        if self.law.is_exact:
            return None
        grid = _np.linspace(math.log(_GRID_U[0]), math.log(_GRID_U[1]), _GRID_POINTS)
        return _CubicSpline(grid, _np.log(self._neg_log_mellin(_np.exp(grid))))

    def _neg_log_mellin(self, u: _np.ndarray) -> _np.ndarray:
        samples = self.law.require_samples()
        total = _np.zeros(u.size)
        for start in range(0, samples.size, _CHUNK):
            chunk = samples[start : start + _CHUNK]
            total += _np.expm1(-_np.multiply.outer(u, chunk)).sum(axis=1)
        out = -_np.log1p(total / samples.size)
        # log1p(mean - 1) is only accurate while the mean stays well above eps
        deep = ~(out < _DEEP_LOG)
        if deep.any():
            lse = _np.full(int(deep.sum()), -_np.inf)
            for start in range(0, samples.size, _CHUNK):
                chunk = samples[start : start + _CHUNK]
                lse = _np.logaddexp(lse, _logsumexp(-_np.multiply.outer(u[deep], chunk), axis=1))
            out[deep] = math.log(samples.size) - lse
        return out

    def mellin(self, u: Any) -> Any:
        """E[exp(-u X̄)], u >= 0"""
        if self.law.is_exact:
            return self.law.laplace(u)
        us = _np.atleast_1d(_np.asarray(u, dtype=float))
        out = _np.ones(us.size)
        small = (us > 0) & (us < _GRID_U[0])
        mid = (us >= _GRID_U[0]) & (us <= _GRID_U[1])
        large = us > _GRID_U[1]
        out[small] = _np.exp(-self.m1 * us[small])
        if mid.any():
            out[mid] = _np.exp(-_np.exp(self._log_exponent(_np.log(us[mid]))))
        if large.any():
            out[large] = _np.exp(-self._neg_log_mellin(us[large]))
        return float(out[0]) if _np.ndim(u) == 0 else out

    # -- evaluation ------------------------------------------------------

    def _check_order(self, s: float) -> None:
        if s <= -1.0 or s > self.nu + 1e-12:
            raise DomainError(t("errors.appell_order", s=s, nu=self.nu))

    def _fractional(self, s: float, y: float) -> float:
        n = max(int(math.ceil(s)), 0)
        polys = [self.polynomial(k) for k in range(n + EXTRA_MOMENTS + 1)]
        c = [(-1) ** k * polys[k](y) / math.factorial(k) for k in range(len(polys))]
        u_c = _SMALL_U / max(y, self.m1)
        u_max = _LARGE_U / y

        small = sum(c[k] * u_c ** (k - s) / (k - s) for k in range(n, len(c)))

        def integrand(log_u: float) -> float:
            u = math.exp(log_u)
            head = sum(c[k] * u**k for k in range(n))
            return u ** (-s) * (math.exp(-u * y) / self.mellin(u) - head)

        middle, _ = _quad(integrand, math.log(u_c), math.log(u_max), limit=200, epsabs=1e-13, epsrel=1e-11)
        tail = -sum(c[k] * u_max ** (k - s) / (s - k) for k in range(n))
        return float((small + middle + tail) / _gamma(-s))

    def __call__(self, s: float, y: Any) -> Any:
        return appell_eval(self, s, y)


def build_appell_family(law: ExtremaLaw, nu: float, model: Optional[LevyModel] = None) -> AppellFamily:
    """Appell functions up to order ``nu`` for a supremum law.

    When ``model`` is given its up-jump tail must have a finite nu-th moment.
    """
    if law.side is not Side.SUPREMUM:
        raise DomainError(t("errors.wrong_side", expected=Side.SUPREMUM.value))
    if not nu > 0:
        raise DomainError(t("errors.nu_positive", nu=nu))
    if model is not None:
        check = check_power_moment(model, nu)
        if not check:
            raise PreconditionError(t("errors.moment_condition", nu=nu))
    n_moments = int(math.ceil(nu)) + EXTRA_MOMENTS
    moments = tuple(law.moment(k) for k in range(n_moments + 1))
    return AppellFamily(law, float(nu), moments)


def appell_eval(fam: AppellFamily, s: float, y: Any) -> Any:
    """Q_s(y) for y > 0; arrays of y are accepted"""
    ys = _np.asarray(y, dtype=float)
    if _np.any(ys <= 0):
        raise DomainError(t("errors.y_positive", y=y))
    fam._check_order(s)
    if s == 0:
        values = _np.ones_like(ys)
    elif is_integer(s):
        values = fam.polynomial(int(round(s)))(ys)
    elif ys.size > _SPLINE_ABOVE:
        # sample clouds: interpolate between quadrature nodes
        lo, hi = float(ys.min()), float(ys.max())
        nodes = _np.geomspace(lo, max(hi, lo * (1.0 + 1e-9)), _SPLINE_ABOVE + 1)
        exact = [fam._fractional(s, v) for v in nodes]
        values = _CubicSpline(_np.log(nodes), exact)(_np.log(ys))
    else:
        values = _np.vectorize(lambda v: fam._fractional(s, v), otypes=[float])(ys)
    return float(values) if _np.ndim(values) == 0 else values


def _bracket(f: Callable[[float], float], start: float, factor: float, lower: float, upper: float) -> float:
    """Scales ``start`` by ``factor`` until f takes the sign of ``factor - 1``"""
    x = start
    want_positive = factor > 1
    while (f(x) > 0) != want_positive or (not want_positive and f(x) == 0):
        if x >= upper or x <= lower:
            raise NumericalError(t("errors.bracket_not_found", limit=upper))
        x = min(max(x * factor, lower), upper)
    return x


def appell_root(fam: AppellFamily) -> float:
    """The positive root a(nu) of Q_nu"""
    x_max = fam.m1 + 50.0 * fam.std

    def q_nu(y: float) -> float:
        return float(appell_eval(fam, fam.nu, y))

    hi = _bracket(q_nu, fam.m1, 2.0, 0.0, x_max)
    lo = _bracket(q_nu, fam.m1, 0.5, 1e-12 * fam.m1, x_max)
    return float(_bisect(q_nu, lo, hi, xtol=1e-12))
