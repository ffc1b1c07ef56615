"""Threshold solutions of the three optimal stopping problems.

Each problem restricts attention to first-passage rules, writes the expected
payoff of the rule at level y as a fluctuation functional, and maximises it
over y:

- McKean (perpetual American put): G(x) = (K - e^x)^+, stop below y*.
- Novikov-Shiryaev: G(x) = (x^+)^nu, stop above the root a(nu) of Q_nu;
  the variant G(x) = 1 - e^{-x^+} stops above x* = -log E[e^{-X̄}].
- Shepp-Shiryaev (Russian option): G = e^{x v X̄}, stop when the reflected
  process exceeds the root x* of Z^(q) = q W^(q).
"""

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional

import numpy as _np
import pandas as _pd
from scipy.optimize import bisect as _bisect

from .appell import AppellFamily, appell_eval, appell_root, build_appell_family
from .errors import (
    DomainError,
    LevyStopWarning,
    PreconditionError,
    SingularProfileError,
    UsageError,
)
from .fluctuation import (
    CutoffSide,
    Exponential,
    ExtremaLaw,
    Side,
    exp_functional_inf,
    exp_functional_sup,
    extrema_law,
    truncated_functional,
)
from .i18n import t
from .models import Horizon, LevyModel, check_power_moment, check_ss_conditions
from .scale import ScaleFunctionTable, build_scale_table
from .utils import grow_until


class Problem(str, Enum):
    MCKEAN = "mckean"
    NOVIKOV_SHIRYAEV = "ns"
    NS_EXPONENTIAL = "ns-exp"
    SHEPP_SHIRYAEV = "ss"


def payoff_function(problem: Problem, strike: Optional[float] = None, nu: Optional[float] = None) -> Callable[[Any], Any]:
    """Vectorised reward G for ``problem``"""
    problem = Problem(problem)
    if problem is Problem.MCKEAN:
        return lambda x: _np.maximum(strike - _np.exp(x), 0.0)
    if problem is Problem.NOVIKOV_SHIRYAEV:
        return lambda x: _np.maximum(x, 0.0) ** nu
    if problem is Problem.NS_EXPONENTIAL:
        return lambda x: 1.0 - _np.exp(-_np.maximum(x, 0.0))
    return lambda x: _np.exp(_np.maximum(x, 0.0))


@dataclass(frozen=True, eq=False)
class ThresholdSolution:
    """Solved stopping problem.

    ``threshold`` is y* (McKean, stop at or below), a(nu) or x* (Novikov-
    Shiryaev variants, stop at or above) or x* (Shepp-Shiryaev, stop once
    the reflected process exceeds it). ``context`` keeps the law, Appell
    family or scale table the solution was built from so that value
    profiles reuse the same numbers.
    """

    problem: Problem
    model: LevyModel
    q: float
    threshold: float
    value_fn: Callable[[float], float] = field(repr=False)
    params: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    context: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def stops_below(self) -> bool:
        return self.problem is Problem.MCKEAN

    def value(self, x: Any) -> Any:
        values = _np.vectorize(self.value_fn, otypes=[float])(_np.asarray(x, dtype=float))
        return float(values) if values.ndim == 0 else values

    def payoff(self, x: Any) -> Any:
        values = payoff_function(self.problem, self.params.get("strike"), self.params.get("nu"))(
            _np.asarray(x, dtype=float)
        )
        return float(values) if _np.ndim(values) == 0 else values

    def profile(self, x: float, level: float) -> float:
        """Expected payoff from x of the first-passage rule at ``level``"""
        return profile(self.problem, self.model, self.q, x, level, **self.params, **self.context)

    def value_grid(self, xs: Any) -> _pd.DataFrame:
        xs = _np.asarray(xs, dtype=float).ravel()
        return _pd.DataFrame({"x": xs, "value": self.value(xs), "payoff": self.payoff(xs)})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem.value,
            "model": self.model.to_dict(),
            "q": self.q,
            "params": dict(self.params),
            "threshold": self.threshold,
            "diagnostics": dict(self.diagnostics),
        }


def _law(model: LevyModel, q: float, side: Side, law: Optional[ExtremaLaw], options: Dict[str, Any]) -> ExtremaLaw:
    if law is not None:
        if law.side is not side:
            raise DomainError(t("errors.wrong_side", expected=side.value))
        return law
    return extrema_law(model, q, side, **options)


# -- McKean ---------------------------------------------------------------------


def mckean_value_profile(
    model: LevyModel,
    q: float,
    strike: float,
    x: float,
    y: float,
    law: Optional[ExtremaLaw] = None,
    **law_options: Any,
) -> float:
    """E_x[e^{-q tau_y^-}(K - e^{X_{tau_y^-}})] for y <= log K.

    Equals K P(X̲ < y - x) - e^x E[e^{X̲} 1{X̲ < y - x}] / E[e^{X̲}].
    """
    if y > math.log(strike):
        raise DomainError(t("errors.level_above_log_strike", y=y, strike=strike))
    law = _law(model, q, Side.INFIMUM, law, law_options)
    k = exp_functional_inf(law, 1.0)
    below = truncated_functional(law, Exponential(0.0), y - x, CutoffSide.BELOW)
    tail = truncated_functional(law, Exponential(1.0), y - x, CutoffSide.BELOW)
    return float(strike * below - math.exp(x) * tail / k)


def solve_mckean(
    model: LevyModel, q: float, strike: float, law: Optional[ExtremaLaw] = None, **law_options: Any
) -> ThresholdSolution:
    """Perpetual American put: exp(y*) = K E[exp(X̲)]"""
    Horizon(q)
    if not strike > 0:
        raise DomainError(t("errors.strike_positive", strike=strike))
    law = _law(model, q, Side.INFIMUM, law, law_options)
    k, k_se = exp_functional_inf(law, 1.0, with_error=True)  # type: ignore[misc]
    y_star = math.log(strike * k)

    def value(x: float) -> float:
        if x <= y_star:
            return strike - math.exp(x)
        return mckean_value_profile(model, q, strike, x, y_star, law=law)

    return ThresholdSolution(
        Problem.MCKEAN,
        model,
        float(q),
        y_star,
        value,
        params={"strike": float(strike)},
        diagnostics={
            "law": law.metadata(),
            "exp_functional_inf": k,
            "exp_functional_inf_se": k_se,
            "boundary_value": strike * (1.0 - k),
        },
        context={"law": law},
    )


# -- Novikov-Shiryaev -----------------------------------------------------------


def _appell_tail(fam: AppellFamily, nu: float, x: float, a: float) -> float:
    """E[Q_nu(x + X̄) 1{x + X̄ >= a}]"""

    def integrand(m: Any) -> Any:
        ys = _np.atleast_1d(x + _np.asarray(m, dtype=float))
        out = _np.zeros(ys.size)
        inside = ys >= a
        if inside.any():
            out[inside] = appell_eval(fam, nu, ys[inside])
        return float(out[0]) if _np.ndim(m) == 0 else out

    if fam.law.is_exact:
        # the supremum law is continuous: {x + X̄ >= a} = {X̄ > a - x} a.s.
        return float(truncated_functional(fam.law, integrand, a - x, CutoffSide.ABOVE))
    samples = fam.law.require_samples()
    return float(_np.mean(integrand(samples)))


def ns_value_profile(
    model: LevyModel,
    q: float,
    nu: float,
    x: float,
    a: float,
    law: Optional[ExtremaLaw] = None,
    family: Optional[AppellFamily] = None,
    **law_options: Any,
) -> float:
    """E_x[e^{-q tau_a^+} (X_{tau_a^+})^nu] = E[Q_nu(x + X̄) 1{x + X̄ >= a}] for a > 0"""
    if not a > 0:
        raise DomainError(t("errors.level_positive", a=a))
    if family is None:
        family = build_appell_family(_law(model, q, Side.SUPREMUM, law, law_options), nu, model)
    return _appell_tail(family, nu, x, a)


def solve_ns(
    model: LevyModel, q: float, nu: float, law: Optional[ExtremaLaw] = None, **law_options: Any
) -> ThresholdSolution:
    """Power payoff (x^+)^nu: stop above the positive root a(nu) of Q_nu"""
    Horizon(q)
    moment = check_power_moment(model, nu)
    if not moment:
        raise PreconditionError(t("errors.moment_condition", nu=nu))
    law = _law(model, q, Side.SUPREMUM, law, law_options)
    fam = build_appell_family(law, nu, model)
    a = appell_root(fam)

    def value(x: float) -> float:
        if x >= a:
            return x**nu
        return _appell_tail(fam, nu, x, a)

    return ThresholdSolution(
        Problem.NOVIKOV_SHIRYAEV,
        model,
        float(q),
        a,
        value,
        params={"nu": float(nu)},
        diagnostics={
            "law": law.metadata(),
            "moment_integral": moment.integral,
            "mean_supremum": fam.m1,
            "root_residual": float(appell_eval(fam, nu, a)),
        },
        context={"law": law, "family": fam},
    )


def ns_exponential_value_profile(
    model: LevyModel,
    q: float,
    x: float,
    a: float,
    law: Optional[ExtremaLaw] = None,
    **law_options: Any,
) -> float:
    """E_x[e^{-q tau_a^+}(1 - e^{-X_{tau_a^+}})] for a > 0.

    Equals E[(1 - e^{-(x + X̄)} / E[e^{-X̄}]) 1{x + X̄ > a}].
    """
    if not a > 0:
        raise DomainError(t("errors.level_positive", a=a))
    law = _law(model, q, Side.SUPREMUM, law, law_options)
    k = exp_functional_sup(law, 1.0)
    above = truncated_functional(law, Exponential(0.0), a - x, CutoffSide.ABOVE)
    tail = truncated_functional(law, Exponential(-1.0), a - x, CutoffSide.ABOVE)
    return float(above - math.exp(-x) * tail / k)


def solve_ns_exponential(
    model: LevyModel, q: float, law: Optional[ExtremaLaw] = None, **law_options: Any
) -> ThresholdSolution:
    """Bounded payoff 1 - e^{-x^+}: stop above x* = -log E[e^{-X̄}]"""
    Horizon(q)
    law = _law(model, q, Side.SUPREMUM, law, law_options)
    k, k_se = exp_functional_sup(law, 1.0, with_error=True)  # type: ignore[misc]
    x_star = -math.log(k)

    def value(x: float) -> float:
        if x >= x_star:
            return 1.0 - math.exp(-x)
        return ns_exponential_value_profile(model, q, x, x_star, law=law)

    return ThresholdSolution(
        Problem.NS_EXPONENTIAL,
        model,
        float(q),
        x_star,
        value,
        diagnostics={"law": law.metadata(), "exp_functional_sup": k, "exp_functional_sup_se": k_se},
        context={"law": law},
    )


# -- Shepp-Shiryaev -------------------------------------------------------------


def ss_g(table: ScaleFunctionTable, z: Any) -> Any:
    """g(z) = Z^(q)(z) - q W^(q)(z)"""
    return table.Z(z) - table.q * table.W(z)


def _ss_parts(table: ScaleFunctionTable, z: float) -> tuple:
    w, wp, zz = table.W(z), table.W_prime(z), table.Z(z)
    den = wp - w
    if abs(den) <= 1e-14 * (abs(wp) + abs(w) + 1e-300):
        raise SingularProfileError(t("errors.singular_profile", z=z))
    return w, wp, zz, den


def ss_f_prime(table: ScaleFunctionTable, z: float) -> float:
    """Derivative of f(z) = (Z W' - q W^2) / (W' - W); closed-form tables only"""
    if not table.is_closed_form:
        raise UsageError(t("errors.closed_form_only"))
    w, wp, zz, den = _ss_parts(table, z)
    ws = table.W_second(z)
    q = table.q
    num = zz * wp - q * w * w
    num_prime = zz * ws - q * w * wp
    den_prime = ws - wp
    return float((num_prime * den - num * den_prime) / (den * den))


def ss_value_profile(
    model: LevyModel,
    q: float,
    x: float,
    z: float,
    table: Optional[ScaleFunctionTable] = None,
    method: Optional[str] = None,
) -> float:
    """Expected payoff of stopping once the reflected process exceeds z, from Y_0 = x.

    V(x, z) = e^x (Z(z - x) - W(z - x) (q W(z) - Z(z)) / (W'(z) - W(z)))
    for 0 <= x <= z, and e^x for x > z.
    """
    if x < 0:
        raise DomainError(t("errors.reflected_start", x0=x))
    if not z > 0:
        raise DomainError(t("errors.level_positive", a=z))
    if x > z:
        return math.exp(x)
    table = table or build_scale_table(model, q, method)
    w, _, zz, den = _ss_parts(table, z)
    ratio = (q * w - zz) / den
    return float(math.exp(x) * (table.Z(z - x) - table.W(z - x) * ratio))


def solve_ss(model: LevyModel, q: float, method: Optional[str] = None) -> ThresholdSolution:
    """Russian option: x* solves Z^(q)(x) = q W^(q)(x), V(x) = e^x Z^(q)(x* - x)"""
    Horizon(q)
    conditions = check_ss_conditions(model, q)
    if conditions.psi1_negative:
        warnings.warn(t("warnings.psi1_negative", psi1=conditions.psi_1), LevyStopWarning)
    if not conditions.ok:
        raise PreconditionError(t("errors.ss_conditions", failed=", ".join(conditions.failures())))
    table = build_scale_table(model, q, method)
    g0 = float(1.0 - q * table.W0)

    hi = grow_until(lambda z: ss_g(table, z) < 0, 1.0, 500.0 / max(table.phi_q, 1.0))
    x_star = float(_bisect(lambda z: ss_g(table, z), 0.0, hi, xtol=1e-12))

    def value(x: float) -> float:
        xp = max(x, 0.0)
        return math.exp(xp) * table.Z(x_star - xp)

    diagnostics: Dict[str, Any] = {
        "conditions": {
            "q_above_psi1": conditions.q_above_psi1,
            "q_below_drift": conditions.q_below_drift,
            "psi1": conditions.psi_1,
            "psi1_negative": conditions.psi1_negative,
        },
        "g0": g0,
        "root_residual": float(ss_g(table, x_star)),
        "scale_repr": table.repr.value,
        "phi_q": table.phi_q,
    }
    if table.is_closed_form:
        try:
            diagnostics["f_prime_left"] = ss_f_prime(table, 0.5 * x_star)
            diagnostics["f_prime_right"] = ss_f_prime(table, 1.5 * x_star)
        except SingularProfileError:
            pass
    return ThresholdSolution(
        Problem.SHEPP_SHIRYAEV,
        model,
        float(q),
        x_star,
        value,
        diagnostics=diagnostics,
        context={"table": table},
    )


# -- dispatch ---------------------------------------------------------------------


def solve(problem: Problem, model: LevyModel, q: float, **options: Any) -> ThresholdSolution:
    """Dispatches to the solver of ``problem``.

    Options: ``strike`` (McKean), ``nu`` (Novikov-Shiryaev), ``method``
    (Shepp-Shiryaev) and extrema-law options for the others.
    """
    problem = Problem(problem)
    if problem is Problem.MCKEAN:
        strike = options.pop("strike", None)
        if strike is None:
            raise UsageError(t("errors.missing_param", name="strike"))
        return solve_mckean(model, q, strike, **options)
    if problem is Problem.NOVIKOV_SHIRYAEV:
        nu = options.pop("nu", None)
        if nu is None:
            raise UsageError(t("errors.missing_param", name="nu"))
        return solve_ns(model, q, nu, **options)
    if problem is Problem.NS_EXPONENTIAL:
        return solve_ns_exponential(model, q, **options)
    return solve_ss(model, q, method=options.get("method"))


def profile(problem: Problem, model: LevyModel, q: float, x: float, level: float, **options: Any) -> float:
    """Expected payoff from x of the first-passage rule at ``level``"""
    problem = Problem(problem)
    if problem is Problem.MCKEAN:
        return mckean_value_profile(model, q, options.pop("strike"), x, level, **options)
    if problem is Problem.NOVIKOV_SHIRYAEV:
        return ns_value_profile(model, q, options.pop("nu"), x, level, **options)
    if problem is Problem.NS_EXPONENTIAL:
        return ns_exponential_value_profile(model, q, x, level, **options)
    return ss_value_profile(model, q, x, level, table=options.get("table"), method=options.get("method"))
