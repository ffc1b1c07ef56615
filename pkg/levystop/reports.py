"""JSON/CSV输出与终端摘要

Machine-readable outputs are deterministic: JSON with sorted keys and no
timestamps, CSV through pandas with a fixed float format. Summaries are
localised through the i18n catalogue.
"""

from pathlib import Path
from typing import Any, Dict, List, Union

import pandas as pd

from .i18n import format_number, t
from .models import model_hash
from .simulation import McEstimate, SweepResult
from .solvers import ThresholdSolution
from .utils import canonical_json

CSV_FLOAT_FORMAT = "%.12g"


def write_json(payload: Any, path: Union[str, Path]) -> Path:
    """写入确定性JSON文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(payload), encoding="utf-8")
    return path


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """写入CSV文件 (无索引, 固定浮点格式)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def solution_payload(solution: ThresholdSolution) -> Dict[str, Any]:
    payload = solution.to_dict()
    payload["model_hash"] = model_hash(solution.model)
    return payload


def sweep_payload(result: SweepResult, threshold: Union[float, None] = None) -> Dict[str, Any]:
    payload = result.to_dict()
    if threshold is not None:
        payload["threshold"] = threshold
        payload["contains_threshold"] = result.contains(threshold)
    return payload


def _estimate_line(estimate: McEstimate) -> str:
    lo, hi = estimate.confidence_interval()
    return t(
        "summary.estimate",
        mean=format_number(estimate.mean),
        se=format_number(estimate.std_error, "scientific"),
        lo=format_number(lo),
        hi=format_number(hi),
        n=estimate.n_paths,
    )


def solution_summary(solution: ThresholdSolution) -> str:
    """求解结果的可读摘要"""
    lines: List[str] = [
        t("summary.problem", problem=t(f"problems.{solution.problem.value}")),
        t("summary.model", family=solution.model.family.value, q=format_number(solution.q)),
        t("summary.threshold", threshold=format_number(solution.threshold)),
    ]
    for name, value in sorted(solution.params.items()):
        lines.append(t("summary.param", name=name, value=format_number(value)))
    return "\n".join(lines)


def sweep_summary(result: SweepResult) -> str:
    lo, hi = result.interval
    return "\n".join(
        [
            t("summary.sweep", n=len(result.table), payoff=result.payoff),
            t("summary.argmax", argmax=format_number(result.argmax), lo=format_number(lo), hi=format_number(hi)),
        ]
    )


def verification_summary(report: Any) -> str:
    """验证报告摘要, 最后一行为 PASS/FAIL"""
    lines = [
        solution_summary(report.solution),
        t("summary.candidate", candidate=format_number(report.candidate), offset=format_number(report.offset)),
        sweep_summary(report.sweep),
        _estimate_line(report.estimate),
        t(
            "summary.analytic",
            analytic=format_number(report.analytic),
            tolerance=format_number(report.tolerance, "scientific"),
        ),
        t("summary.verdict_pass") if report.passed else t("summary.verdict_fail"),
    ]
    return "\n".join(lines)
