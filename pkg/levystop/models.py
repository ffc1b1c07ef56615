"""Catalog of Lévy process models and their Laplace exponents.

Every model is a Brownian motion with drift plus (optionally) compound
Poisson jumps with exponentially distributed sizes, so that

    psi(lam) = c*lam + sigma^2*lam^2/2
               + lambda_j*(p*eta_plus/(eta_plus - lam)
                           + (1 - p)*eta_minus/(eta_minus + lam) - 1)

with c = mu, or c = d for the bounded variation family.
"""

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy.special import gamma, gammaincc

from .errors import DomainError, ModelSpecError, UnsupportedModelError
from .i18n import t
from .utils import digest

STRIP_MARGIN = 1e-9

PARAM_NAMES = ("mu", "sigma", "lambda_j", "eta_plus", "eta_minus", "p", "d")


class Family(str, Enum):
    BROWNIAN_DRIFT = "BrownianDrift"
    JUMP_DIFFUSION_EXP = "JumpDiffusionExp"
    SPECTRALLY_NEGATIVE_CL = "SpectrallyNegativeCL"
    BOUNDED_VARIATION_SN = "BoundedVariationSN"


@dataclass(frozen=True)
class LevyModel:
    """A Lévy process from the closed catalog.

    Parameters
    ==========
    family: Family
        named family, fixes which parameters are free
    mu: float
        drift per unit time (all families except BoundedVariationSN)
    sigma: float
        Gaussian volatility per square-root time
    lambda_j: float
        jump intensity per unit time
    eta_plus, eta_minus: float
        rates of the exponential up and down jump sizes
    p: float
        probability that a jump is upward (JumpDiffusionExp only)
    d: float
        pure drift of BoundedVariationSN
    """

    family: Family
    mu: float = 0.0
    sigma: float = 0.0
    lambda_j: float = 0.0
    eta_plus: float = 1.0
    eta_minus: float = 1.0
    p: float = 0.0
    d: float = 0.0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "family", Family(self.family))
        except ValueError:
            raise ModelSpecError(t("errors.unknown_family", family=self.family))
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ModelSpecError(t("errors.param_not_number", name=name))
            if not math.isfinite(value):
                raise ModelSpecError(t("errors.param_not_finite", name=name))
            object.__setattr__(self, name, float(value))
        self._validate()

    def _validate(self) -> None:
        if self.sigma < 0:
            raise ModelSpecError(t("errors.negative_param", name="sigma"))
        if self.lambda_j < 0:
            raise ModelSpecError(t("errors.negative_param", name="lambda_j"))
        if self.eta_plus <= 0 or self.eta_minus <= 0:
            raise ModelSpecError(t("errors.nonpositive_eta"))
        if not 0.0 <= self.p <= 1.0:
            raise ModelSpecError(t("errors.bad_probability", p=self.p))

        family = self.family
        if family is Family.BROWNIAN_DRIFT and self.lambda_j != 0:
            raise ModelSpecError(t("errors.family_param", family=family.value, name="lambda_j"))
        if family in (Family.SPECTRALLY_NEGATIVE_CL, Family.BOUNDED_VARIATION_SN):
            if self.p != 0:
                raise ModelSpecError(t("errors.family_param", family=family.value, name="p"))
        if family is Family.BOUNDED_VARIATION_SN:
            if self.sigma != 0:
                raise ModelSpecError(t("errors.family_param", family=family.value, name="sigma"))
            if self.mu != 0:
                raise ModelSpecError(t("errors.family_param", family=family.value, name="mu"))
        elif self.d != 0:
            raise ModelSpecError(t("errors.family_param", family=family.value, name="d"))

        if self.sigma == 0:
            c = self.drift
            if (not self.has_down_jumps and c >= 0) or (not self.has_up_jumps and c <= 0):
                raise ModelSpecError(t("errors.monotone_paths"))

    # -- structure ---------------------------------------------------------

    @property
    def drift(self) -> float:
        """Linear coefficient of psi"""
        if self.family is Family.BOUNDED_VARIATION_SN:
            return self.d
        return self.mu

    @property
    def has_up_jumps(self) -> bool:
        return self.lambda_j > 0 and self.p > 0

    @property
    def has_down_jumps(self) -> bool:
        return self.lambda_j > 0 and self.p < 1

    @property
    def has_jumps(self) -> bool:
        return self.lambda_j > 0

    @property
    def is_spectrally_negative(self) -> bool:
        return not self.has_up_jumps

    @property
    def is_bounded_variation(self) -> bool:
        return self.sigma == 0

    @property
    def strip(self) -> Tuple[float, float]:
        """Open interval on which psi is finite"""
        lo = -self.eta_minus if self.has_down_jumps else -math.inf
        hi = self.eta_plus if self.has_up_jumps else math.inf
        return lo, hi

    @property
    def up_tail(self) -> Optional["ExponentialTail"]:
        if not self.has_up_jumps:
            return None
        return ExponentialTail(rate=self.eta_plus, mass=self.lambda_j * self.p)

    @property
    def mean(self) -> float:
        """E[X_1] = psi'(0)"""
        return float(self.psi_prime(0.0))

    # -- exponent ----------------------------------------------------------

    def psi(self, lam: Any) -> Any:
        """Laplace exponent without strip checks.

        Plain arithmetic only, so floats, arrays, complex numbers and mpmath
        numbers are all accepted.
        """
        value = self.drift * lam + 0.5 * self.sigma**2 * lam * lam
        if self.has_up_jumps:
            value = value + self.lambda_j * self.p * (
                self.eta_plus / (self.eta_plus - lam) - 1.0
            )
        if self.has_down_jumps:
            value = value + self.lambda_j * (1.0 - self.p) * (
                self.eta_minus / (self.eta_minus + lam) - 1.0
            )
        return value

    def psi_prime(self, lam: Any) -> Any:
        value = self.drift + self.sigma**2 * lam
        if self.has_up_jumps:
            value = value + self.lambda_j * self.p * self.eta_plus / (
                (self.eta_plus - lam) ** 2
            )
        if self.has_down_jumps:
            value = value - self.lambda_j * (1.0 - self.p) * self.eta_minus / (
                (self.eta_minus + lam) ** 2
            )
        return value

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family.value,
            "params": {name: getattr(self, name) for name in PARAM_NAMES},
        }

    @classmethod
    def from_dict(cls, payload: Any) -> "LevyModel":
        if not isinstance(payload, dict) or "family" not in payload:
            raise ModelSpecError(t("errors.model_missing_family"))
        params = payload.get("params", {})
        if not isinstance(params, dict):
            raise ModelSpecError(t("errors.model_params_object"))
        unknown = sorted(set(params) - set(PARAM_NAMES))
        if unknown:
            raise ModelSpecError(t("errors.unknown_params", names=", ".join(unknown)))
        extra = sorted(set(payload) - {"family", "params"})
        if extra:
            raise ModelSpecError(t("errors.unknown_params", names=", ".join(extra)))
        return cls(family=payload["family"], **params)

    @property
    def hash(self) -> str:
        return model_hash(self)


@dataclass(frozen=True)
class Horizon:
    """Discount rate q, i.e. the rate of the exponential clock e_q"""

    q: float

    def __post_init__(self) -> None:
        if not (isinstance(self.q, (int, float)) and math.isfinite(self.q) and self.q > 0):
            raise DomainError(t("errors.q_positive", q=self.q))
        object.__setattr__(self, "q", float(self.q))

    def truncation_time(self, tolerance: float = 1e-6) -> float:
        """Smallest t with exp(-q t) <= tolerance"""
        return math.log(1.0 / tolerance) / self.q * (1.0 + 1e-12)


# -- jump tails ------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialTail:
    """Up-jump Lévy measure mass*rate*exp(-rate*x) dx on (0, inf)"""

    rate: float
    mass: float

    def power_moment(self, nu: float) -> float:
        """Integral of x^nu over (1, inf) against the measure"""
        return float(self.mass * gammaincc(nu + 1.0, self.rate) * gamma(nu + 1.0) / self.rate**nu)


@dataclass(frozen=True)
class ParetoTail:
    """Up-jump Lévy measure mass*alpha*x^(-alpha-1) dx on (1, inf)"""

    alpha: float
    mass: float = 1.0

    def power_moment(self, nu: float) -> float:
        if nu >= self.alpha:
            return math.inf
        return self.mass * self.alpha / (self.alpha - nu)


class PowerMomentCheck(NamedTuple):
    holds: bool
    integral: float

    def __bool__(self) -> bool:
        return self.holds


def check_power_moment(
    source: Union[LevyModel, ExponentialTail, ParetoTail, None], nu: float
) -> PowerMomentCheck:
    """Checks that the up-tail of the Lévy measure has a finite nu-th moment.

    ``source`` is a model (its up-tail is used) or a tail object directly.
    """
    if nu <= 0:
        raise DomainError(t("errors.nu_positive", nu=nu))
    tail = source.up_tail if isinstance(source, LevyModel) else source
    if tail is None:
        return PowerMomentCheck(True, 0.0)
    integral = tail.power_moment(nu)
    return PowerMomentCheck(math.isfinite(integral), integral)


# -- Laplace exponent ------------------------------------------------------


def laplace_exponent(model: LevyModel, lam: Any) -> Any:
    """psi(lam) = log E[exp(lam X_1)], for real ``lam`` inside the open strip"""
    values = np.asarray(lam, dtype=float)
    lo, hi = model.strip
    lo_eff = lo * (1.0 - STRIP_MARGIN)
    hi_eff = hi * (1.0 - STRIP_MARGIN)
    if np.any(values <= lo_eff) or np.any(values >= hi_eff):
        raise DomainError(t("errors.outside_strip", lam=lam, lo=lo, hi=hi))
    result = model.psi(values)
    return float(result) if np.ndim(result) == 0 else result


# -- Shepp-Shiryaev conditions ---------------------------------------------


@dataclass(frozen=True)
class SSConditions:
    q: float
    psi_1: float
    q_above_psi1: bool
    bounded_variation: bool
    drift: Optional[float]
    q_below_drift: Optional[bool]

    @property
    def psi1_negative(self) -> bool:
        return self.psi_1 < 0

    @property
    def ok(self) -> bool:
        return self.q_above_psi1 and self.q_below_drift is not False

    def failures(self) -> List[str]:
        failed = []
        if not self.q_above_psi1:
            failed.append("q > psi(1) v 0")
        if self.q_below_drift is False:
            failed.append("q < d")
        return failed


def check_ss_conditions(model: LevyModel, q: float) -> SSConditions:
    """Evaluates q > psi(1) v 0 and, for bounded variation paths, q < d"""
    if not model.is_spectrally_negative:
        raise UnsupportedModelError(t("errors.needs_spectrally_negative"))
    psi_1 = float(model.psi(1.0))
    bounded = model.is_bounded_variation
    return SSConditions(
        q=float(q),
        psi_1=psi_1,
        q_above_psi1=q > max(psi_1, 0.0),
        bounded_variation=bounded,
        drift=model.drift if bounded else None,
        q_below_drift=(q < model.drift) if bounded else None,
    )


# -- files and catalog -----------------------------------------------------


def model_hash(model: LevyModel) -> str:
    return digest(model.to_dict())


def load_model(path: Union[str, Path]) -> LevyModel:
    """Reads a model file: {"family": ..., "params": {...}}"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
    except OSError as e:
        raise ModelSpecError(t("errors.model_unreadable", path=path, reason=e))
    except json.JSONDecodeError as e:
        raise ModelSpecError(t("errors.model_bad_json", path=path, reason=e))
    except UnicodeDecodeError as e:
        raise ModelSpecError(t("errors.model_bad_json", path=path, reason=e))
    try:
        return LevyModel.from_dict(payload)
    except TypeError as e:
        raise ModelSpecError(t("errors.model_bad_json", path=path, reason=e))


def catalog() -> Dict[str, LevyModel]:
    """Named example models, one or more per family"""
    return {
        "bm": LevyModel(Family.BROWNIAN_DRIFT, mu=0.0, sigma=1.0),
        "bm_drift": LevyModel(Family.BROWNIAN_DRIFT, mu=-0.5, sigma=1.0),
        "jump_diffusion": LevyModel(
            Family.JUMP_DIFFUSION_EXP,
            mu=0.0,
            sigma=1.0,
            lambda_j=1.0,
            p=0.5,
            eta_plus=2.0,
            eta_minus=2.0,
        ),
        "sn_cl": LevyModel(
            Family.SPECTRALLY_NEGATIVE_CL, mu=0.2, sigma=1.0, lambda_j=1.0, eta_minus=2.0
        ),
        "bv_sn": LevyModel(Family.BOUNDED_VARIATION_SN, d=2.0, lambda_j=1.0, eta_minus=1.0),
    }
