"""核心OptimalStopping类 - 求解与蒙特卡洛验证"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from . import stats
from .fluctuation import DEFAULT_SAMPLES, ExtremaLaw, Side, extrema_law
from .i18n import set_language, t
from .errors import DomainError, PreconditionError, UsageError
from .models import Horizon, LevyModel
from .simulation import (
    DEFAULT_DT,
    DEFAULT_PATHS,
    MIN_PATHS,
    ExpPayoff,
    McEstimate,
    Payoff,
    PathGrid,
    PowerPayoff,
    PutPayoff,
    RussianPayoff,
    SweepResult,
    ThresholdRule,
    estimate_stopped_payoff,
    grid_shift,
    sweep_threshold,
)
from .solvers import Problem, ThresholdSolution, solve
from .utils import threshold_grid

SWEEP_POINTS = 41
SWEEP_WIDTH = 0.7
_MIN_LEVEL = 1e-3


@dataclass(frozen=True, eq=False)
class VerificationReport:
    """阈值验证结果

    候选阈值须落在蒙特卡洛扫描的最优区间内 (放宽一个网格监测修正量)，且该阈值处的模拟值与解析值
    之差不超过容差 (3倍标准误 + 网格监测偏差)。
    """

    solution: ThresholdSolution
    candidate: float
    offset: float
    x0: float
    sweep: SweepResult
    estimate: McEstimate
    analytic: float
    tolerance: float
    level_tolerance: float
    in_interval: bool
    value_ok: bool

    @property
    def passed(self) -> bool:
        return self.in_interval and self.value_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.solution.problem.value,
            "threshold": self.solution.threshold,
            "candidate": self.candidate,
            "offset": self.offset,
            "x0": self.x0,
            "sweep": self.sweep.to_dict(),
            "estimate": self.estimate.to_dict(),
            "analytic": self.analytic,
            "tolerance": self.tolerance,
            "level_tolerance": self.level_tolerance,
            "in_interval": self.in_interval,
            "value_ok": self.value_ok,
            "passed": self.passed,
        }


class OptimalStopping:
    """最优停止问题的统一入口

    对一个Lévy模型和贴现率q，求解McKean、Novikov-Shiryaev和
    Shepp-Shiryaev问题，并用蒙特卡洛扫描验证解析阈值。
    """

    def __init__(
        self,
        model: LevyModel,
        q: float,
        seed: Optional[int] = 0,
        n_paths: int = DEFAULT_PATHS,
        dt: float = DEFAULT_DT,
        t_max: Optional[float] = None,
        n_samples: int = DEFAULT_SAMPLES,
        language: str = "en",
        n_workers: int = 1,
        antithetic: bool = False,
        cache_dir: Optional[Union[str, Path]] = None,
    ):
        """初始化求解器

        Args:
            model: Lévy过程模型
            q: 贴现率 (q > 0)
            seed: 随机种子 (蒙特卡洛与经验分布共用)
            n_paths: 每次模拟的路径数 (>= 1000)
            dt: 高斯部分的时间步长
            t_max: 模拟截断时间 (默认使 exp(-q t_max) <= 1e-6)
            n_samples: 经验极值分布的样本数
            language: 语言设置 ('en' 英文, 'zh' 中文)
            n_workers: 并行线程数
            antithetic: 是否使用对偶变量
            cache_dir: 经验分布缓存目录 (可选)
        """
        self.model = model
        self.q = Horizon(q).q
        if n_paths < MIN_PATHS:
            raise DomainError(t("errors.too_few_paths", n=n_paths, minimum=MIN_PATHS))
        self.seed = seed
        self.n_paths = n_paths
        self.dt = dt
        self.t_max = t_max
        self.n_samples = n_samples
        self.language = language
        self.n_workers = n_workers
        self.antithetic = antithetic
        self.cache_dir = cache_dir
        self._laws: Dict[Any, ExtremaLaw] = {}

        set_language(language)

    # -- 配置 --------------------------------------------------------------

    def law_options(self) -> Dict[str, Any]:
        """经验极值分布的采样参数"""
        return {
            "n_samples": self.n_samples,
            "seed": self.seed,
            "dt": self.dt,
            "cache_dir": self.cache_dir,
            "n_workers": self.n_workers,
        }

    def law(self, side: Union[Side, str]) -> ExtremaLaw:
        """极值分布，按当前采样参数缓存"""
        side = Side(side)
        key = (side, self.model, self.q, self.seed, self.dt, self.n_samples)
        if key not in self._laws:
            self._laws[key] = extrema_law(self.model, self.q, side, **self.law_options())
        return self._laws[key]

    def grid(self, seed: Optional[int] = None) -> PathGrid:
        seed = self.seed if seed is None else seed
        if seed is None:
            raise PreconditionError(t("errors.seed_required"))
        if self.t_max is None:
            return PathGrid.for_discount(self.q, dt=self.dt, seed=seed, antithetic=self.antithetic)
        return PathGrid(dt=self.dt, t_max=self.t_max, seed=seed, antithetic=self.antithetic)

    @staticmethod
    def payoff(problem: Problem, strike: Optional[float] = None, nu: Optional[float] = None) -> Payoff:
        """问题对应的蒙特卡洛收益描述"""
        problem = Problem(problem)
        if problem is Problem.MCKEAN:
            if strike is None:
                raise UsageError(t("errors.missing_param", name="strike"))
            return PutPayoff(strike)
        if problem is Problem.NOVIKOV_SHIRYAEV:
            if nu is None:
                raise UsageError(t("errors.missing_param", name="nu"))
            return PowerPayoff(nu)
        if problem is Problem.NS_EXPONENTIAL:
            return ExpPayoff()
        return RussianPayoff()

    # -- 求解 --------------------------------------------------------------

    def solve(
        self,
        problem: Union[Problem, str],
        strike: Optional[float] = None,
        nu: Optional[float] = None,
        method: Optional[str] = None,
    ) -> ThresholdSolution:
        """求解最优阈值

        Args:
            problem: 'mckean', 'ns', 'ns-exp' 或 'ss'
            strike: 行权价K (McKean)
            nu: 幂次 (Novikov-Shiryaev)
            method: 尺度函数算法 (Shepp-Shiryaev, None/'closed_form'/'inversion')

        Returns:
            ThresholdSolution
        """
        problem = Problem(problem)
        if problem is Problem.SHEPP_SHIRYAEV:
            return solve(problem, self.model, self.q, method=method)
        self.payoff(problem, strike, nu)
        if problem is Problem.MCKEAN:
            return solve(problem, self.model, self.q, strike=strike, law=self.law(Side.INFIMUM))
        if problem is Problem.NOVIKOV_SHIRYAEV:
            return solve(problem, self.model, self.q, nu=nu, law=self.law(Side.SUPREMUM))
        return solve(problem, self.model, self.q, law=self.law(Side.SUPREMUM))

    def levels(
        self,
        solution: ThresholdSolution,
        center: Optional[float] = None,
        width: float = SWEEP_WIDTH,
        points: int = SWEEP_POINTS,
    ) -> np.ndarray:
        """阈值附近的扫描网格，截断到问题的可行范围"""
        center = solution.threshold if center is None else center
        if solution.problem is Problem.MCKEAN:
            return threshold_grid(center, width, points, upper=math.log(solution.params["strike"]))
        return threshold_grid(center, width, points, lower=_MIN_LEVEL)

    # -- 模拟 --------------------------------------------------------------

    def estimate(
        self,
        problem: Union[Problem, str],
        level: float,
        x0: float = 0.0,
        strike: Optional[float] = None,
        nu: Optional[float] = None,
        seed: Optional[int] = None,
    ) -> McEstimate:
        """按阈值规则停止时的期望贴现收益 (蒙特卡洛)"""
        payoff = self.payoff(problem, strike, nu)
        return estimate_stopped_payoff(
            self.model,
            self.q,
            ThresholdRule(payoff.passage, level),
            payoff,
            x0=x0,
            grid=self.grid(seed),
            n_paths=self.n_paths,
            n_workers=self.n_workers,
        )

    def sweep(
        self,
        problem: Union[Problem, str],
        levels: Any,
        x0: float = 0.0,
        strike: Optional[float] = None,
        nu: Optional[float] = None,
    ) -> SweepResult:
        """公共随机数下的阈值扫描"""
        return sweep_threshold(
            self.model,
            self.q,
            self.payoff(problem, strike, nu),
            x0,
            levels,
            n_paths=self.n_paths,
            grid=self.grid(),
            n_workers=self.n_workers,
        )

    def tolerance(self, estimate: McEstimate, value: float) -> float:
        """3倍标准误加上高斯部分离散监测的偏差容许"""
        return 3.0 * estimate.std_error + self.model.sigma * math.sqrt(self.dt) * max(1.0, abs(value))

    def verify(
        self,
        problem: Union[Problem, str],
        strike: Optional[float] = None,
        nu: Optional[float] = None,
        offset: float = 0.0,
        x0: float = 0.0,
        width: float = SWEEP_WIDTH,
        points: int = SWEEP_POINTS,
        method: Optional[str] = None,
    ) -> VerificationReport:
        """求解、扫描并在候选阈值处比较模拟值与解析值

        Args:
            problem: 问题名称
            offset: 注入候选阈值的偏移 (负对照)
            x0: 模拟起点 (Shepp-Shiryaev为最大值初值)
            width: 扫描半宽
            points: 扫描点数

        Returns:
            VerificationReport
        """
        solution = self.solve(problem, strike=strike, nu=nu, method=method)
        candidate = solution.threshold + offset
        levels = self.levels(solution, candidate, width, points)
        sweep = self.sweep(solution.problem, levels, x0, strike, nu)
        # independent stream for the point estimate
        estimate = self.estimate(solution.problem, candidate, x0, strike, nu, seed=None if self.seed is None else self.seed + 1)
        analytic = solution.profile(x0, candidate)
        tolerance = self.tolerance(estimate, analytic)
        level_tolerance = grid_shift(self.model, self.dt)
        return VerificationReport(
            solution=solution,
            candidate=candidate,
            offset=offset,
            x0=x0,
            sweep=sweep,
            estimate=estimate,
            analytic=analytic,
            tolerance=tolerance,
            level_tolerance=level_tolerance,
            in_interval=sweep.contains(candidate, tol=max(level_tolerance, 1e-12)),
            value_ok=stats.within(estimate.mean, analytic, estimate.std_error, slack=tolerance - 3.0 * estimate.std_error),
        )
