"""LevyStop: Lévy过程的最优停止问题

求解McKean永续美式看跌期权、Novikov-Shiryaev幂收益问题和Shepp-Shiryaev
俄式期权的最优阈值，并用蒙特卡洛模拟验证。
"""

from typing import Optional

try:
    from ._version import version as __version__
except ImportError:
    __version__ = "unknown"

from . import fluctuation, scale, solvers, stats, utils
from .appell import AppellFamily, appell_eval, appell_root, build_appell_family
from .core import OptimalStopping, VerificationReport
from .errors import LevyStopError
from .fluctuation import ExtremaLaw, Side, extrema_law
from .i18n import get_language, get_supported_languages, set_language
from .models import Family, LevyModel, catalog, load_model
from .scale import ScaleFunctionTable, build_scale_table
from .simulation import DEFAULT_PATHS
from .solvers import Problem, ThresholdSolution, solve

__all__ = [
    "OptimalStopping",
    "VerificationReport",
    "LevyModel",
    "Family",
    "catalog",
    "load_model",
    "Problem",
    "ThresholdSolution",
    "solve",
    "ExtremaLaw",
    "Side",
    "extrema_law",
    "AppellFamily",
    "build_appell_family",
    "appell_eval",
    "appell_root",
    "ScaleFunctionTable",
    "build_scale_table",
    "LevyStopError",
    "fluctuation",
    "scale",
    "solvers",
    "stats",
    "utils",
    "set_language",
    "get_language",
    "get_supported_languages",
    "create_solver",
    "__version__",
]


def create_solver(
    model: LevyModel,
    q: float,
    seed: Optional[int] = 0,
    n_paths: int = DEFAULT_PATHS,
    language: str = "en",
) -> OptimalStopping:
    """创建OptimalStopping实例的便捷函数

    Args:
        model: Lévy过程模型
        q: 贴现率 (q > 0)
        seed: 随机种子 (默认: 0)
        n_paths: 蒙特卡洛路径数
        language: 语言设置 ('en' 英文, 'zh' 中文)

    Returns:
        配置好的OptimalStopping实例
    """
    return OptimalStopping(model, q, seed=seed, n_paths=n_paths, language=language)
