"""q-scale functions of spectrally negative models.

W^(q) is the function on [0, inf), zero on the negative half-line, with

    int_0^inf exp(-lam x) W^(q)(x) dx = 1 / (psi(lam) - q),   lam > Phi(q)

and Z^(q)(x) = 1 + q int_0^x W^(q)(y) dy. For every catalog family
1/(psi - q) is a rational function, so W^(q) is a finite sum of
exponentials; a fixed-Talbot inversion is available as an independent
backend.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Tuple

import mpmath as _mp
import numpy as _np
import pandas as _pd
from numpy.polynomial import Polynomial as _Polynomial
from scipy.integrate import quad as _quad

from .errors import DomainError, NumericalError, UnsupportedModelError, UsageError
from .i18n import t
from .models import Family, LevyModel
from .utils import grow_until

TALBOT_NODES = 64
FD_STEP = 1e-5
ROOT_SEPARATION = 1e-10


class ScaleRepr(str, Enum):
    CLOSED_FORM_BM = "ClosedFormBM"
    CLOSED_FORM_RATIONAL = "ClosedFormRational"
    NUMERIC_INVERSION = "NumericInversion"


def phi(model: LevyModel, q: float) -> float:
    """Largest root Phi(q) of psi(lam) = q, q >= 0"""
    if q < 0:
        raise DomainError(t("errors.q_nonnegative", q=q))
    if not model.is_spectrally_negative:
        raise UnsupportedModelError(t("errors.needs_spectrally_negative"))
    if model.family is Family.BROWNIAN_DRIFT:
        mu, s2 = model.mu, model.sigma**2
        return (-mu + math.sqrt(mu * mu + 2.0 * s2 * q)) / s2
    if q == 0 and model.psi_prime(0.0) >= 0:
        return 0.0

    lam = grow_until(lambda l: model.psi(l) > q and model.psi_prime(l) > 0, 1.0, 1e12)
    # Newton from the right of a convex function never passes the largest root
    for _ in range(200):
        step = (model.psi(lam) - q) / model.psi_prime(lam)
        new = max(lam - step, 0.0)
        if abs(new - lam) <= 1e-15 * (1.0 + lam):
            lam = new
            break
        lam = new
    if abs(model.psi(lam) - q) > 1e-12 * (1.0 + q) * max(1.0, lam):
        raise NumericalError(t("errors.phi_not_converged", q=q))
    return float(lam)


class _FixedTalbot:
    """Fixed-Talbot inverse Laplace transform on a shared set of nodes"""

    def __init__(self, degree: int = TALBOT_NODES, dps: int = TALBOT_NODES):
        self.degree = degree
        self.dps = dps
        with _mp.workdps(dps):
            self.r = _mp.mpf(2 * degree) / 5
            self.delta = [_mp.mpc(self.r, 0)]
            self.gamma = [_mp.mpc(0.5, 0)]
            for k in range(1, degree):
                theta = k * _mp.pi / degree
                cot = _mp.cot(theta)
                self.delta.append(self.r * theta * (cot + 1j))
                self.gamma.append(1 + 1j * theta * (1 + cot**2) - 1j * cot)

    def __call__(self, transform: Any, x: float) -> float:
        with _mp.workdps(self.dps):
            x = _mp.mpf(x)
            total = _mp.fsum(
                _mp.exp(d) * transform(d / x) * g for d, g in zip(self.delta, self.gamma)
            )
            return float((self.r / self.degree * total / x).real)


@dataclass(frozen=True, eq=False)
class ScaleFunctionTable:
    """Evaluable W^(q), Z^(q) of a spectrally negative model.

    Closed-form tables hold the poles ``roots`` and residues ``weights`` of
    1/(psi - q); inversion tables evaluate each point by contour integration.
    """

    model: LevyModel
    q: float
    phi_q: float
    repr: ScaleRepr
    roots: _np.ndarray = field(default_factory=lambda: _np.zeros(0))
    weights: _np.ndarray = field(default_factory=lambda: _np.zeros(0))
    fd_step: float = FD_STEP
    _talbot: Optional[_FixedTalbot] = field(default=None, repr=False)

    @property
    def is_closed_form(self) -> bool:
        return self.repr is not ScaleRepr.NUMERIC_INVERSION

    @property
    def W0(self) -> float:
        """W^(q)(0): 1/d for bounded variation, 0 otherwise"""
        return 1.0 / self.model.drift if self.model.is_bounded_variation else 0.0

    # -- closed forms ----------------------------------------------------

    def _sum(self, x: _np.ndarray, power: int) -> _np.ndarray:
        terms = self.weights * self.roots**power * _np.exp(_np.multiply.outer(x, self.roots))
        return terms.sum(axis=-1)

    def _z_sum(self, x: _np.ndarray) -> _np.ndarray:
        rx = _np.multiply.outer(x, self.roots)
        zero = self.roots == 0
        safe = _np.where(zero, 1.0, self.roots)
        integral = _np.where(zero, _np.multiply.outer(x, _np.ones_like(self.roots)), _np.expm1(rx) / safe)
        return 1.0 + self.q * (self.weights * integral).sum(axis=-1)

    # -- inversion -------------------------------------------------------

    def _shift(self) -> float:
        return self.phi_q + 1.0

    def _invert_W(self, x: float) -> float:
        if x < 0:
            return 0.0
        if x == 0:
            return self.W0
        c = self._shift()
        model, q = self.model, self.q
        value = self._talbot(lambda s: 1 / (model.psi(s + c) - q), x)  # type: ignore[misc]
        return math.exp(c * x) * value

    def _invert_Z(self, x: float) -> float:
        if x <= 0:
            return 1.0
        c = self._shift()
        model, q = self.model, self.q

        def transform(s: Any) -> Any:
            lam = s + c
            psi = model.psi(lam)
            return psi / (lam * (psi - q))

        return math.exp(c * x) * self._talbot(transform, x)  # type: ignore[misc]

    def _fd(self, x: float, order: int) -> float:
        h = self.fd_step * (1.0 + abs(x))
        h = min(h, 0.5 * x)
        w = self._invert_W
        if order == 1:
            return (w(x + h) - w(x - h)) / (2.0 * h)
        return (w(x + h) - 2.0 * w(x) + w(x - h)) / (h * h)

    # -- public evaluation -----------------------------------------------

    def W(self, x: Any) -> Any:
        xs = _np.asarray(x, dtype=float)
        if self.is_closed_form:
            values = _np.where(xs < 0, 0.0, self._sum(_np.maximum(xs, 0.0), 0))
        else:
            values = _np.vectorize(self._invert_W, otypes=[float])(xs)
        return float(values) if values.ndim == 0 else values

    def Z(self, x: Any) -> Any:
        xs = _np.asarray(x, dtype=float)
        if self.is_closed_form:
            values = _np.where(xs < 0, 1.0, self._z_sum(_np.maximum(xs, 0.0)))
        else:
            values = _np.vectorize(self._invert_Z, otypes=[float])(xs)
        return float(values) if values.ndim == 0 else values

    def _derivative(self, x: Any, order: int) -> Any:
        xs = _np.asarray(x, dtype=float)
        if _np.any(xs <= 0):
            raise DomainError(t("errors.derivative_domain", x=x))
        if self.is_closed_form:
            values = self._sum(xs, order)
        else:
            values = _np.vectorize(lambda v: self._fd(v, order), otypes=[float])(xs)
        return float(values) if values.ndim == 0 else values

    def W_prime(self, x: Any) -> Any:
        return self._derivative(x, 1)

    def W_second(self, x: Any) -> Any:
        """Second derivative; finite differences on inversion tables are low-accuracy"""
        return self._derivative(x, 2)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "q": self.q,
            "phi_q": self.phi_q,
            "repr": self.repr.value,
            "roots": self.roots.tolist(),
            "weights": self.weights.tolist(),
        }


def _rational_parts(model: LevyModel, q: float) -> Tuple[_Polynomial, _Polynomial]:
    """Numerator and denominator of 1/(psi(lam) - q)"""
    quadratic = _Polynomial([-q, model.drift, 0.5 * model.sigma**2])
    if not model.has_jumps:
        return _Polynomial([1.0]), quadratic
    eta = model.eta_minus
    numerator = _Polynomial([eta, 1.0])
    return numerator, quadratic * numerator - _Polynomial([0.0, model.lambda_j])


def _partial_fractions(model: LevyModel, q: float) -> Tuple[_np.ndarray, _np.ndarray]:
    numerator, denominator = _rational_parts(model, q)
    denominator = denominator.trim()
    roots = denominator.roots()
    if _np.any(_np.abs(_np.imag(roots)) > 1e-9 * (1.0 + _np.abs(roots))):
        raise NumericalError(t("errors.complex_roots"))
    roots = _np.sort(_np.real(roots))
    scale = 1.0 + _np.abs(roots).max()
    if roots.size > 1 and _np.min(_np.diff(roots)) < ROOT_SEPARATION * scale:
        raise NumericalError(t("errors.repeated_roots"))
    weights = numerator(roots) / denominator.deriv()(roots)
    return roots, weights


def build_scale_table(model: LevyModel, q: float, method: Optional[str] = None) -> ScaleFunctionTable:
    """Scale functions of ``model`` at discount ``q``.

    ``method`` is None (closed form for every catalog family), "closed_form"
    or "inversion".
    """
    if not model.is_spectrally_negative:
        raise UnsupportedModelError(t("errors.needs_spectrally_negative"))
    if q < 0:
        raise DomainError(t("errors.q_nonnegative", q=q))
    q = float(q)
    phi_q = phi(model, q)
    if method == "inversion":
        return ScaleFunctionTable(model, q, phi_q, ScaleRepr.NUMERIC_INVERSION, _talbot=_FixedTalbot())
    if method not in (None, "closed_form"):
        raise UsageError(t("errors.unknown_scale_method", method=method))
    roots, weights = _partial_fractions(model, q)
    kind = ScaleRepr.CLOSED_FORM_BM if model.family is Family.BROWNIAN_DRIFT else ScaleRepr.CLOSED_FORM_RATIONAL
    return ScaleFunctionTable(model, q, phi_q, kind, roots, weights)


def eval_W(table: ScaleFunctionTable, x: Any) -> Any:
    return table.W(x)


def eval_Z(table: ScaleFunctionTable, x: Any) -> Any:
    return table.Z(x)


def eval_W_prime(table: ScaleFunctionTable, x: Any) -> Any:
    return table.W_prime(x)


def eval_W_second(table: ScaleFunctionTable, x: Any) -> Any:
    return table.W_second(x)


def scale_grid(table: ScaleFunctionTable, xs: Any) -> _pd.DataFrame:
    """Columns x, W, Z, W_prime; W_prime is NaN where x <= 0"""
    xs = _np.asarray(xs, dtype=float).ravel()
    prime = _np.full(xs.size, _np.nan)
    positive = xs > 0
    if positive.any():
        prime[positive] = table.W_prime(xs[positive])
    return _pd.DataFrame({"x": xs, "W": table.W(xs), "Z": table.Z(xs), "W_prime": prime})


def laplace_residual(table: ScaleFunctionTable, lam: float) -> float:
    """Relative error of int_0^X exp(-lam x) W(x) dx against 1/(psi(lam) - q).

    X = 40/(lam - Phi(q)); requires lam > Phi(q).
    """
    gap = lam - table.phi_q
    if gap <= 0:
        raise DomainError(t("errors.lambda_above_phi", lam=lam, phi=table.phi_q))
    upper = 40.0 / gap
    integral, _ = _quad(
        lambda x: math.exp(-lam * x) * table.W(x), 0.0, upper, limit=500, epsabs=0.0, epsrel=1e-11
    )
    target = 1.0 / (table.model.psi(lam) - table.q)
    return abs(integral - target) / abs(target)
