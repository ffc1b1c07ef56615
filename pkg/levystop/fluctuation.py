"""Laws of the running supremum and infimum at an independent exponential time.

X̄ = sup_{t <= e_q} X_t and X̲ = inf_{t <= e_q} X_t. A law is either an exact
exponential (signed so that the supremum lives on [0, inf) and the infimum
on (-inf, 0]) or an empirical cloud of simulated samples. The functionals
below are the expectations consumed by the stopping solvers.
"""

import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as _np
import pandas as _pd
from scipy.integrate import quad as _quad
from scipy.special import gamma as _gamma

from . import stats as _stats
from .errors import (
    DomainError,
    InsufficientSamplesError,
    LevyStopWarning,
    PreconditionError,
    UnsupportedModelError,
)
from .i18n import t
from .models import Family, Horizon, LevyModel, model_hash
from .scale import phi
from .simulation import DEFAULT_DT, GRID_SHIFT, sample_extrema
from .utils import canonical_json, digest

DEFAULT_SAMPLES = 1_000_000
MIN_SAMPLES = 1_000

Number = Union[float, Tuple[float, float]]


class Side(str, Enum):
    SUPREMUM = "supremum"
    INFIMUM = "infimum"

    @property
    def sign(self) -> int:
        return 1 if self is Side.SUPREMUM else -1


class LawKind(str, Enum):
    EXACT_EXPONENTIAL = "ExactExponential"
    EMPIRICAL = "Empirical"


class CutoffSide(str, Enum):
    BELOW = "below"  # M < cutoff
    ABOVE = "above"  # M > cutoff


@dataclass(frozen=True, eq=False)
class ExtremaLaw:
    """Law of X̄ or X̲ at e_q.

    Parameters
    ==========
    kind: LawKind
        exact exponential or empirical
    side: Side
        supremum or infimum
    q: float
        rate of the exponential time
    rate: float
        rate of |M| for exact laws
    samples: ndarray
        sorted samples for empirical laws
    seed, dt, model_hash:
        provenance of empirical samples
    """

    kind: LawKind
    side: Side
    q: float
    rate: Optional[float] = None
    samples: Optional[_np.ndarray] = field(default=None, repr=False)
    seed: Optional[int] = None
    dt: Optional[float] = None
    model_hash: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LawKind(self.kind))
        object.__setattr__(self, "side", Side(self.side))
        if self.kind is LawKind.EXACT_EXPONENTIAL:
            if self.rate is None or not self.rate > 0:
                raise DomainError(t("errors.rate_positive", rate=self.rate))
            return
        samples = _np.sort(_np.asarray(self.samples, dtype=float).ravel())
        if self.side is Side.SUPREMUM and samples.size and samples[0] < 0:
            raise DomainError(t("errors.law_sign", side=self.side.value))
        if self.side is Side.INFIMUM and samples.size and samples[-1] > 0:
            raise DomainError(t("errors.law_sign", side=self.side.value))
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def exponential(cls, side: Side, q: float, rate: float) -> "ExtremaLaw":
        return cls(LawKind.EXACT_EXPONENTIAL, Side(side), float(q), rate=float(rate))

    @property
    def sign(self) -> int:
        return self.side.sign

    @property
    def is_exact(self) -> bool:
        return self.kind is LawKind.EXACT_EXPONENTIAL

    @property
    def n_samples(self) -> int:
        return 0 if self.samples is None else int(self.samples.size)

    def require_samples(self) -> _np.ndarray:
        if self.n_samples < MIN_SAMPLES:
            raise InsufficientSamplesError(
                t("errors.insufficient_samples", n=self.n_samples, minimum=MIN_SAMPLES)
            )
        assert self.samples is not None
        return self.samples

    def moment(self, k: float) -> float:
        """E[|M|^k]"""
        if self.is_exact:
            assert self.rate is not None
            return float(_gamma(k + 1.0) / self.rate**k)
        return float(_np.mean(_np.abs(self.require_samples()) ** k))

    def laplace(self, u: Any) -> Any:
        """E[exp(-u |M|)] for u >= 0"""
        if self.is_exact:
            assert self.rate is not None
            return self.rate / (self.rate + _np.asarray(u, dtype=float))
        samples = _np.abs(self.require_samples())
        u = _np.asarray(u, dtype=float)
        return _np.exp(-_np.multiply.outer(u, samples)).mean(axis=-1)

    def metadata(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "side": self.side.value,
            "q": self.q,
            "rate": self.rate,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "dt": self.dt,
            "model_hash": self.model_hash,
        }


@dataclass(frozen=True)
class Exponential:
    """Integrand f(m) = scale * exp(beta * m), integrated in closed form"""

    beta: float
    scale: float = 1.0

    def __call__(self, m: Any) -> Any:
        return self.scale * _np.exp(self.beta * _np.asarray(m, dtype=float))


# -- laws ----------------------------------------------------------------------


def wiener_hopf_roots(model: LevyModel, q: float) -> Tuple[float, float]:
    """(beta_plus, beta_minus): the roots of psi(lam) = q are beta_plus and -beta_minus"""
    if model.has_jumps:
        raise UnsupportedModelError(t("errors.needs_jump_free"))
    Horizon(q)
    mu, s2 = model.mu, model.sigma**2
    root = math.sqrt(mu * mu + 2.0 * s2 * q)
    return (-mu + root) / s2, (mu + root) / s2


def _law_cache_path(
    cache_dir: Union[str, Path], model: LevyModel, q: float, side: Side, n: int, seed: int, dt: float
) -> Path:
    key = digest({"model": model_hash(model), "q": q, "side": side.value, "n": n, "seed": seed, "dt": dt, "grid_shift": GRID_SHIFT})
    return Path(cache_dir) / f"{side.value}-{key[:16]}.csv"


def extrema_law(
    model: LevyModel,
    q: float,
    side: Union[Side, str],
    n_samples: int = DEFAULT_SAMPLES,
    seed: Optional[int] = None,
    dt: float = DEFAULT_DT,
    cache_dir: Optional[Union[str, Path]] = None,
    n_workers: int = 1,
) -> ExtremaLaw:
    """Law of the supremum or infimum of ``model`` at an Exp(q) time.

    Brownian motion with drift has exponential laws on both sides; the
    supremum of a spectrally negative process is Exp(Phi(q)). Every other
    case is sampled by simulation, which needs an explicit ``seed``.
    """
    q = Horizon(q).q
    side = Side(side)
    if model.family is Family.BROWNIAN_DRIFT:
        beta_plus, beta_minus = wiener_hopf_roots(model, q)
        rate = beta_plus if side is Side.SUPREMUM else beta_minus
        return ExtremaLaw.exponential(side, q, rate)
    if side is Side.SUPREMUM and model.is_spectrally_negative:
        return ExtremaLaw.exponential(side, q, phi(model, q))

    if seed is None:
        raise PreconditionError(t("errors.seed_required"))
    if n_samples < MIN_SAMPLES:
        raise InsufficientSamplesError(t("errors.insufficient_samples", n=n_samples, minimum=MIN_SAMPLES))

    path = None
    if cache_dir is not None:
        path = _law_cache_path(cache_dir, model, q, side, n_samples, seed, dt)
        if path.exists():
            law = load_law(path)
            if (law.seed, law.dt, law.model_hash, law.n_samples) == (seed, dt, model_hash(model), n_samples):
                return law
            warnings.warn(t("warnings.stale_cache", path=path), LevyStopWarning)

    samples = sample_extrema(model, q, side.sign, n_samples, seed, dt_cap=dt, n_workers=n_workers)
    law = ExtremaLaw(
        LawKind.EMPIRICAL, side, q, samples=samples, seed=int(seed), dt=float(dt), model_hash=model_hash(model)
    )
    if path is not None:
        save_law(law, path)
    return law


def save_law(law: ExtremaLaw, path: Union[str, Path]) -> Path:
    """Writes samples as CSV and provenance as a JSON sidecar next to it"""
    if law.is_exact:
        raise DomainError(t("errors.save_exact_law"))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _pd.DataFrame({"sample": law.samples}).to_csv(path, index=False, float_format="%.17g")
    path.with_suffix(".json").write_text(canonical_json(law.metadata()), encoding="utf-8")
    return path


def load_law(path: Union[str, Path]) -> ExtremaLaw:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    samples = _pd.read_csv(path)["sample"].to_numpy(dtype=float)
    return ExtremaLaw(
        LawKind.EMPIRICAL,
        Side(meta["side"]),
        float(meta["q"]),
        samples=samples,
        seed=meta.get("seed"),
        dt=meta.get("dt"),
        model_hash=meta.get("model_hash"),
    )


# -- functionals ---------------------------------------------------------------


def _result(value: float, se: float, with_error: bool) -> Number:
    return (float(value), float(se)) if with_error else float(value)


def exp_moment(law: ExtremaLaw, c: float, with_error: bool = False) -> Number:
    """E[exp(c M)] for the signed extremum M"""
    if law.is_exact:
        assert law.rate is not None
        gap = law.rate - law.sign * c
        if gap <= 0:
            raise DomainError(t("errors.moment_diverges", c=c, rate=law.rate))
        return _result(law.rate / gap, 0.0, with_error)
    mean, se = _stats.mean_se(_np.exp(c * law.require_samples()))
    return _result(mean, se, with_error)


def exp_functional_inf(law: ExtremaLaw, beta: float, with_error: bool = False) -> Number:
    """E[exp(beta X̲)] for beta >= 0"""
    if law.side is not Side.INFIMUM:
        raise DomainError(t("errors.wrong_side", expected=Side.INFIMUM.value))
    if beta < 0:
        raise DomainError(t("errors.beta_nonnegative", beta=beta))
    return exp_moment(law, beta, with_error)


def exp_functional_sup(law: ExtremaLaw, beta: float, with_error: bool = False) -> Number:
    """E[exp(-beta X̄)] for beta >= 0"""
    if law.side is not Side.SUPREMUM:
        raise DomainError(t("errors.wrong_side", expected=Side.SUPREMUM.value))
    if beta < 0:
        raise DomainError(t("errors.beta_nonnegative", beta=beta))
    return exp_moment(law, -beta, with_error)


def _exact_truncated(law: ExtremaLaw, f: Callable[[Any], Any], cutoff: float, below: bool) -> float:
    """Integrates f(sign * E) against Exp(rate) over the image of the half-line"""
    assert law.rate is not None
    r, sign = law.rate, law.sign
    # M < c <=> E > -c for the infimum, M > c <=> E > c for the supremum
    e0 = sign * cutoff
    tail = below != (sign > 0)
    lo = max(e0, 0.0)
    if not tail and lo <= 0.0:
        return 0.0
    if tail and lo == math.inf:
        return 0.0

    if isinstance(f, Exponential):
        gamma_ = r - sign * f.beta
        if gamma_ <= 0:
            raise DomainError(t("errors.moment_diverges", c=f.beta, rate=r))
        upper = f.scale * r / gamma_ * math.exp(-gamma_ * lo)
        return upper if tail else f.scale * r / gamma_ - upper

    def density(e: float) -> float:
        return float(r * math.exp(-r * e) * f(sign * e))

    a, b = (lo, math.inf) if tail else (0.0, lo)
    value, _ = _quad(density, a, b, limit=200)
    return float(value)


def truncated_functional(
    law: ExtremaLaw,
    f: Callable[[Any], Any],
    cutoff: float,
    side_of_cutoff: Union[CutoffSide, str] = CutoffSide.BELOW,
    with_error: bool = False,
) -> Number:
    """E[f(M) 1{M < cutoff}] (below) or E[f(M) 1{M > cutoff}] (above).

    Indicators are strict. Exact laws integrate analytically for
    ``Exponential`` integrands and by quadrature otherwise; ``f`` must accept
    arrays for empirical laws.
    """
    below = CutoffSide(side_of_cutoff) is CutoffSide.BELOW
    if law.is_exact:
        return _result(_exact_truncated(law, f, float(cutoff), below), 0.0, with_error)
    samples = law.require_samples()
    mask = samples < cutoff if below else samples > cutoff
    values = _np.where(mask, _np.broadcast_to(f(samples), samples.shape), 0.0)
    mean, se = _stats.mean_se(values)
    return _result(mean, se, with_error)


def first_passage_transform(
    model: LevyModel,
    q: float,
    beta: float,
    x: float,
    y: float,
    law: Optional[ExtremaLaw] = None,
    with_error: bool = False,
    **law_options: Any,
) -> Number:
    """E_x[exp(-q tau_y^- + beta X_{tau_y^-}); tau_y^- < inf] for x >= y, beta >= 0.

    Equals exp(beta x) E[exp(beta X̲) 1{-X̲ > x - y}] / E[exp(beta X̲)].
    """
    if beta < 0:
        raise DomainError(t("errors.beta_nonnegative", beta=beta))
    if x < y:
        raise DomainError(t("errors.start_below_level", x=x, y=y))
    law = law or extrema_law(model, q, Side.INFIMUM, **law_options)
    num, num_se = truncated_functional(law, Exponential(beta), y - x, CutoffSide.BELOW, with_error=True)  # type: ignore[misc]
    den, den_se = exp_moment(law, beta, with_error=True)  # type: ignore[misc]
    scale = math.exp(beta * x)
    value = scale * num / den
    return _result(value, scale * _stats.ratio_se(num, num_se, den, den_se), with_error)


def first_passage_transform_up(
    model: LevyModel,
    q: float,
    beta: float,
    x: float,
    a: float,
    law: Optional[ExtremaLaw] = None,
    with_error: bool = False,
    **law_options: Any,
) -> Number:
    """E_x[exp(-q tau_a^+ + beta X_{tau_a^+}); tau_a^+ < inf] for x <= a.

    Equals exp(beta x) E[exp(beta X̄) 1{X̄ > a - x}] / E[exp(beta X̄)];
    beta must stay below the exponential rate of X̄ for exact laws.
    """
    if x > a:
        raise DomainError(t("errors.start_above_level", x=x, a=a))
    law = law or extrema_law(model, q, Side.SUPREMUM, **law_options)
    num, num_se = truncated_functional(law, Exponential(beta), a - x, CutoffSide.ABOVE, with_error=True)  # type: ignore[misc]
    den, den_se = exp_moment(law, beta, with_error=True)  # type: ignore[misc]
    scale = math.exp(beta * x)
    value = scale * num / den
    return _result(value, scale * _stats.ratio_se(num, num_se, den, den_se), with_error)
