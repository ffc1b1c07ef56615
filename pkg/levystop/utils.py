"""Small helpers shared across levystop modules"""

import enum as _enum
import hashlib as _hashlib
import json as _json
import math as _math
from dataclasses import asdict as _asdict
from dataclasses import is_dataclass as _is_dataclass
from typing import Any, Callable, Optional

import numpy as _np

from .errors import NumericalError
from .i18n import t


def to_builtin(obj: Any) -> Any:
    """Converts numpy scalars/arrays, enums and dataclasses to JSON-safe types"""
    if isinstance(obj, _enum.Enum):
        return obj.value
    if _is_dataclass(obj) and not isinstance(obj, type):
        return to_builtin(_asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, _np.ndarray):
        return [to_builtin(v) for v in obj.tolist()]
    if isinstance(obj, _np.bool_):
        return bool(obj)
    if isinstance(obj, _np.integer):
        return int(obj)
    if isinstance(obj, (_np.floating, float)):
        value = float(obj)
        # JSON has no inf/nan
        return value if _math.isfinite(value) else str(value)
    return obj


def canonical_json(obj: Any, indent: Optional[int] = 2) -> str:
    """Deterministic JSON text: sorted keys, no timestamps, trailing newline"""
    return (
        _json.dumps(to_builtin(obj), sort_keys=True, indent=indent, ensure_ascii=False)
        + "\n"
    )


def digest(obj: Any) -> str:
    """SHA-256 of the compact canonical JSON form of ``obj``"""
    text = _json.dumps(to_builtin(obj), sort_keys=True, separators=(",", ":"))
    return _hashlib.sha256(text.encode("utf-8")).hexdigest()


def is_integer(s: float, tol: float = 1e-12) -> bool:
    return abs(s - round(s)) <= tol


def grow_until(
    predicate: Callable[[float], bool],
    start: float,
    limit: float,
    factor: float = 2.0,
) -> float:
    """Multiplies ``start`` by ``factor`` until ``predicate`` holds.

    Raises NumericalError once the point passes ``limit``.
    """
    x = start
    while not predicate(x):
        x *= factor
        if x > limit:
            raise NumericalError(t("errors.bracket_not_found", limit=limit))
    return x


def threshold_grid(
    center: float,
    width: float,
    points: int,
    lower: Optional[float] = None,
    upper: Optional[float] = None,
) -> _np.ndarray:
    """Evenly spaced levels on [center - width, center + width], clipped"""
    lo = center - width
    hi = center + width
    if lower is not None:
        lo = max(lo, lower)
    if upper is not None:
        hi = min(hi, upper)
    if points == 1:
        return _np.array([center])
    return _np.linspace(lo, hi, points)
