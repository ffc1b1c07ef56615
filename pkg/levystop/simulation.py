"""Monte Carlo engine for Lévy paths, first-passage rules and threshold sweeps.

Paths are simulated exactly at their skeleton points: the Gaussian part on a
regular grid and every jump at its exact time, with the state observed
immediately before and after the jump. A batch of paths is advanced a block
of grid steps at a time and an observer watches every skeleton point of the
block; paths that no observer needs any more are dropped from the active set.

Barriers and extrema are monitored on the grid, which lags the continuous
path by about GRID_SHIFT * sigma * sqrt(dt); passage rules and sampled
extrema are corrected by that amount.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, ClassVar, Dict, Iterator, List, Optional, Tuple, Union

import numpy as _np
import pandas as _pd

from . import stats as _stats
from .errors import DomainError, LevyStopWarning, UsageError
from .i18n import t
from .models import Horizon, LevyModel

DEFAULT_DT = 1e-3
DISCOUNT_TOLERANCE = 1e-6
BATCH_SIZE = 16384
MIN_PATHS = 1000
DEFAULT_PATHS = 100_000

BLOCK_STEPS = 64
# E[continuous max - grid max] of a Brownian path, per sigma sqrt(dt)
GRID_SHIFT = 0.5826

_START, _GRID, _PRE_JUMP, _POST_JUMP, _PAD = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class PathGrid:
    """Time discretisation and random stream of a simulation.

    Parameters
    ==========
    dt: float
        step of the Gaussian grid
    t_max: float
        simulation horizon; paths still running at t_max are truncated
    seed: int
        master seed, batch b draws from SeedSequence(seed, spawn_key=(b,))
    antithetic: bool
        pair path i with path i + n/2 of each batch using negated grid normals
    """

    dt: float = DEFAULT_DT
    t_max: float = 1.0
    seed: int = 0
    antithetic: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise DomainError(t("errors.dt_positive", dt=self.dt))
        if not self.t_max > 0:
            raise DomainError(t("errors.t_max_positive", t_max=self.t_max))
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, _np.integer)) or self.seed < 0:
            raise DomainError(t("errors.bad_seed", seed=self.seed))

    @classmethod
    def for_discount(
        cls,
        q: float,
        dt: float = DEFAULT_DT,
        seed: int = 0,
        antithetic: bool = False,
        tolerance: float = DISCOUNT_TOLERANCE,
    ) -> "PathGrid":
        """Grid whose horizon makes exp(-q t_max) <= tolerance"""
        return cls(dt=dt, t_max=Horizon(q).truncation_time(tolerance), seed=seed, antithetic=antithetic)

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.t_max / self.dt - 1e-9)))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    truncation_bias_bound: float = 0.0

    def confidence_interval(self, level: float = 0.95) -> Tuple[float, float]:
        return _stats.confidence_interval(self.mean, self.std_error, level)

    def to_dict(self) -> Dict[str, Any]:
        lo, hi = self.confidence_interval()
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "truncation_bias_bound": self.truncation_bias_bound,
            "ci95": [lo, hi],
        }


# -- stopping rules and payoffs ----------------------------------------------


class Passage(str, Enum):
    DOWN = "down"  # tau_y^- = inf{t > 0: X_t < y}
    UP = "up"  # tau_a^+ = inf{t > 0: X_t > a}
    REFLECTED = "reflected"  # T_z = inf{t > 0: (x v sup X) - X_t > z}


@dataclass(frozen=True)
class ThresholdRule:
    passage: Passage
    level: float


@dataclass(frozen=True)
class PutPayoff:
    """(K - e^x)^+ stopped at tau_y^-"""

    strike: float
    name: ClassVar[str] = "put"
    passage: ClassVar[Passage] = Passage.DOWN

    def __call__(self, x: _np.ndarray, m: _np.ndarray) -> _np.ndarray:
        return _np.maximum(self.strike - _np.exp(x), 0.0)

    def bound(self, level: Any, x: Any, m: Any) -> Any:
        return _np.full(_np.broadcast(level, x).shape, self.strike)


@dataclass(frozen=True)
class PowerPayoff:
    """(x^+)^nu stopped at tau_a^+"""

    nu: float
    name: ClassVar[str] = "power"
    passage: ClassVar[Passage] = Passage.UP

    def __call__(self, x: _np.ndarray, m: _np.ndarray) -> _np.ndarray:
        return _np.maximum(x, 0.0) ** self.nu

    def bound(self, level: Any, x: Any, m: Any) -> Any:
        # overshoot ignored
        return _np.maximum(_np.maximum(level, x), 0.0) ** self.nu


@dataclass(frozen=True)
class ExpPayoff:
    """1 - e^{-x^+} stopped at tau_a^+"""

    name: ClassVar[str] = "exp-payoff"
    passage: ClassVar[Passage] = Passage.UP

    def __call__(self, x: _np.ndarray, m: _np.ndarray) -> _np.ndarray:
        return 1.0 - _np.exp(-_np.maximum(x, 0.0))

    def bound(self, level: Any, x: Any, m: Any) -> Any:
        return _np.ones(_np.broadcast(level, x).shape)


@dataclass(frozen=True)
class RussianPayoff:
    """e^{x v sup X} stopped when the reflected process exceeds z"""

    name: ClassVar[str] = "russian"
    passage: ClassVar[Passage] = Passage.REFLECTED

    def __call__(self, x: _np.ndarray, m: _np.ndarray) -> _np.ndarray:
        return _np.exp(m)

    def bound(self, level: Any, x: Any, m: Any) -> Any:
        # running maximum so far; later growth of the maximum is ignored
        return _np.exp(_np.broadcast_to(m, _np.broadcast(level, m).shape))


@dataclass(frozen=True)
class ExponentialPayoff:
    """e^{beta x} stopped at tau_y^-, the first-passage Laplace functional"""

    beta: float
    name: ClassVar[str] = "exponential"
    passage: ClassVar[Passage] = Passage.DOWN

    def __call__(self, x: _np.ndarray, m: _np.ndarray) -> _np.ndarray:
        return _np.exp(self.beta * x)

    def bound(self, level: Any, x: Any, m: Any) -> Any:
        return _np.exp(self.beta * _np.broadcast_to(level, _np.broadcast(level, x).shape))


Payoff = Union[PutPayoff, PowerPayoff, ExpPayoff, RussianPayoff, ExponentialPayoff]


# -- path engine -------------------------------------------------------------


def _batch_rng(seed: int, index: int) -> _np.random.Generator:
    return _np.random.default_rng(_np.random.SeedSequence(int(seed), spawn_key=(index,)))


def _batch_sizes(n_paths: int) -> List[int]:
    full, rest = divmod(n_paths, BATCH_SIZE)
    return [BATCH_SIZE] * full + ([rest] if rest else [])


def _run_batches(task: Callable[[int, int, _np.random.Generator], Any], n_paths: int, seed: int, n_workers: int = 1) -> List[Any]:
    """Runs ``task(index, size, rng)`` per batch; results keep batch order"""
    sizes = _batch_sizes(n_paths)

    def work(index: int) -> Any:
        return task(index, sizes[index], _batch_rng(seed, index))

    if n_workers <= 1 or len(sizes) == 1:
        return [work(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(work, range(len(sizes))))


@dataclass(frozen=True, eq=False)
class _Block:
    """Skeleton points of the active paths over a run of grid steps.

    Row i of ``times``, ``values`` and ``kinds`` lists the points of active
    path i in time order, padded at the end with copies of its last point.
    ``grid`` and ``live`` keep the grid values alone, one column per step.
    """

    times: _np.ndarray
    values: _np.ndarray
    kinds: _np.ndarray
    grid: _np.ndarray
    live: _np.ndarray
    jump_rows: _np.ndarray = field(default_factory=lambda: _np.zeros(0, dtype=_np.int64))
    jump_time: _np.ndarray = field(default_factory=lambda: _np.zeros(0))
    jump_pre: _np.ndarray = field(default_factory=lambda: _np.zeros(0))
    jump_post: _np.ndarray = field(default_factory=lambda: _np.zeros(0))

    @classmethod
    def start(cls, t: _np.ndarray, x: _np.ndarray) -> "_Block":
        col = x[:, None].copy()
        return cls(t[:, None].copy(), col, _np.full(col.shape, _START, dtype=_np.int8), col, _np.ones(col.shape, dtype=bool))

    @property
    def last(self) -> _np.ndarray:
        return self.grid[:, -1]


class _PathEngine:
    """Advances one batch of paths of ``model``, BLOCK_STEPS grid steps at a time.

    Observers implement start/observe/finished/retire and may store their
    own per-path arrays in the shared state dict, which is compressed
    together with the positions whenever paths leave the active set.
    """

    def __init__(self, model: LevyModel, rng: _np.random.Generator, antithetic: bool = False):
        self.rng = rng
        self.antithetic = antithetic
        self.drift = model.drift
        self.sigma = model.sigma
        self.rate = model.lambda_j
        self.p_up = model.p if model.has_up_jumps else 0.0
        self.eta_plus = model.eta_plus
        self.eta_minus = model.eta_minus

    def run(self, n: int, x0: float, dt: Any, n_steps: Any, observer: Any) -> Any:
        state: Dict[str, _np.ndarray] = {
            "ids": _np.arange(n),
            "x": _np.full(n, float(x0)),
            "t": _np.zeros(n),
            "dt": _np.broadcast_to(_np.asarray(dt, dtype=float), (n,)).copy(),
            "left": _np.broadcast_to(_np.asarray(n_steps, dtype=_np.int64), (n,)).copy(),
        }
        observer.start(state)
        observer.observe(state, _Block.start(state["t"], state["x"]))
        self._retire(state, observer)
        while state["ids"].size:
            k = int(min(BLOCK_STEPS, state["left"].max()))
            block = self._block(state, n, k)
            observer.observe(state, block)
            state["x"] = block.last.copy()
            state["t"] = state["t"] + _np.minimum(state["left"], k) * state["dt"]
            state["left"] = state["left"] - k
            self._retire(state, observer)
        return observer

    def _retire(self, state: Dict[str, _np.ndarray], observer: Any) -> None:
        alive = (state["left"] > 0) & ~observer.finished(state)
        if alive.all():
            return
        observer.retire(state, _np.flatnonzero(~alive))
        for key in state:
            state[key] = state[key][alive]

    def _block(self, state: Dict[str, _np.ndarray], n_total: int, k: int) -> _Block:
        n = state["ids"].size
        dt = state["dt"][:, None]
        steps = _np.arange(1, k + 1)[None, :]
        live = steps <= state["left"][:, None]
        diffusion = self.drift * dt
        if self.sigma > 0:
            diffusion = diffusion + self.sigma * _np.sqrt(dt) * self._grid_normals(state["ids"], n_total, k)
        if not live.all():
            diffusion = _np.where(live, diffusion, 0.0)
        increments = _np.broadcast_to(diffusion, (n, k))
        events = None
        if self.rate > 0:
            counts = self.rng.poisson(self.rate * dt, size=(n, k))
            counts[~live] = 0
            if counts.any():
                events = self._jump_events(counts, state["dt"], increments)
                increments = increments.copy()
                _np.add.at(increments, (events["rows"], events["steps"]), events["sizes"])
        grid = state["x"][:, None] + _np.cumsum(increments, axis=1)
        times = state["t"][:, None] + _np.minimum(steps, state["left"][:, None]) * dt
        kinds = _np.where(live, _GRID, _PAD).astype(_np.int8)
        if events is None:
            return _Block(times, grid, kinds, grid, live)
        return self._merge(state, grid, times, kinds, live, events)

    def _jump_events(self, counts: _np.ndarray, dt: _np.ndarray, diffusion: _np.ndarray) -> Dict[str, _np.ndarray]:
        """Jump times, sizes and the Gaussian part at each jump, ordered by path and time.

        Inside a step the jump times are uniform order statistics and the
        Gaussian part is filled in by a Brownian bridge towards the step's
        grid increment.
        """
        rows_s, steps_s = _np.nonzero(counts)
        per_step = counts[rows_s, steps_s]
        total = int(per_step.sum())
        group = _np.repeat(_np.arange(per_step.size), per_step)
        rows, steps = rows_s[group], steps_s[group]
        h = dt[rows]
        u = self.rng.random(total) * h
        u = u[_np.lexsort((u, group))]
        sizes = self._jump_sizes(total)
        first = _np.cumsum(per_step) - per_step
        rank = _np.arange(total) - first[group]

        end = diffusion[rows, steps]
        bridge = _np.empty(total)
        prev_u = _np.zeros(per_step.size)
        prev_w = _np.zeros(per_step.size)
        for r in range(int(per_step.max())):
            sel = _np.flatnonzero(rank == r)
            g = group[sel]
            du = u[sel] - prev_u[g]
            rest = h[sel] - prev_u[g]
            w = prev_w[g] + du / rest * (end[sel] - prev_w[g])
            if self.sigma > 0:
                w = w + self.sigma * _np.sqrt(du * (h[sel] - u[sel]) / rest) * self.rng.standard_normal(sel.size)
            bridge[sel] = w
            prev_u[g] = u[sel]
            prev_w[g] = w

        before = _np.cumsum(sizes) - sizes
        before = before - before[first][group]
        return {"rows": rows, "steps": steps, "u": u, "sizes": sizes, "bridge": bridge, "before": before}

    def _merge(
        self,
        state: Dict[str, _np.ndarray],
        grid: _np.ndarray,
        times: _np.ndarray,
        kinds: _np.ndarray,
        live: _np.ndarray,
        events: Dict[str, _np.ndarray],
    ) -> _Block:
        n, k = grid.shape
        rows, steps = events["rows"], events["steps"]
        step_start = _np.where(steps == 0, state["x"][rows], grid[rows, steps - 1])
        pre = step_start + events["bridge"] + events["before"]
        post = pre + events["sizes"]
        when = state["t"][rows] + steps * state["dt"][rows] + events["u"]

        per_row = _np.bincount(rows, minlength=n)
        width = k + 2 * int(per_row.max())
        values = _np.concatenate([grid, _np.repeat(grid[:, -1:], width - k, axis=1)], axis=1)
        all_times = _np.concatenate([times, _np.repeat(times[:, -1:], width - k, axis=1)], axis=1)
        all_kinds = _np.concatenate([kinds, _np.full((n, width - k), _PAD, dtype=_np.int8)], axis=1)
        slot = k + 2 * (_np.arange(rows.size) - (_np.cumsum(per_row) - per_row)[rows])
        values[rows, slot], values[rows, slot + 1] = pre, post
        all_times[rows, slot] = all_times[rows, slot + 1] = when
        all_kinds[rows, slot], all_kinds[rows, slot + 1] = _PRE_JUMP, _POST_JUMP

        busy = _np.flatnonzero(per_row)
        sub_kinds = all_kinds[busy]
        key = _np.where(sub_kinds == _PAD, _np.inf, all_times[busy])
        order = _np.lexsort((sub_kinds == _POST_JUMP, key), axis=-1)
        sub_times = _np.take_along_axis(all_times[busy], order, axis=1)
        sub_values = _np.take_along_axis(values[busy], order, axis=1)
        sub_kinds = _np.take_along_axis(sub_kinds, order, axis=1)
        last = (sub_kinds != _PAD).sum(axis=1) - 1
        pad = _np.arange(width)[None, :] > last[:, None]
        picked = _np.arange(busy.size)
        sub_values = _np.where(pad, sub_values[picked, last][:, None], sub_values)
        sub_times = _np.where(pad, sub_times[picked, last][:, None], sub_times)
        values[busy], all_times[busy], all_kinds[busy] = sub_values, sub_times, sub_kinds
        return _Block(all_times, values, all_kinds, grid, live, rows, when, pre, post)

    def _grid_normals(self, ids: _np.ndarray, n_total: int, k: int) -> _np.ndarray:
        if not self.antithetic:
            return self.rng.standard_normal((ids.size, k))
        z = self.rng.standard_normal(((n_total + 1) // 2, k))
        return _np.concatenate([z, -z])[ids]

    def _jump_sizes(self, size: int) -> _np.ndarray:
        up = self.rng.random(size) < self.p_up
        ups = self.rng.exponential(1.0 / self.eta_plus, size)
        downs = self.rng.exponential(1.0 / self.eta_minus, size)
        return _np.where(up, ups, -downs)


def grid_shift(model: LevyModel, dt: float) -> float:
    """Continuity correction of a barrier monitored every ``dt``"""
    return GRID_SHIFT * model.sigma * math.sqrt(dt)


def _first_above(running: _np.ndarray, rows: _np.ndarray, levels: _np.ndarray) -> _np.ndarray:
    """First column where each nondecreasing ``running[rows]`` exceeds ``levels``"""
    lo = _np.zeros(rows.size, dtype=_np.int64)
    hi = _np.full(rows.size, running.shape[1] - 1, dtype=_np.int64)
    for _ in range(int(running.shape[1]).bit_length()):
        mid = (lo + hi) // 2
        above = running[rows, mid] > levels
        hi = _np.where(above, mid, hi)
        lo = _np.where(above, lo, mid + 1)
    return lo


class _PassageObserver:
    """Records e^{-qt} G at the first passage over each of several levels.

    The passage is monitored through a quantity s that the rule pushes
    upward: -X for tau_y^-, X for tau_a^+ and the reflected process for T_z.
    A level is crossed when the running maximum of s is strictly above it,
    so one pass over the paths serves every level with common random numbers.

    With ``shift`` > 0 the grid is corrected towards continuous monitoring:
    s is raised by ``shift`` at points reached by diffusion, the running
    maximum of X by ``shift`` once the path has moved, and a passage found
    at a diffusive point is settled exactly at the level.
    """

    def __init__(self, n: int, passage: Passage, levels: _np.ndarray, payoff: Payoff, q: float, m0: float, shift: float = 0.0):
        self.passage = passage
        self.payoff = payoff
        self.q = q
        self.m0 = m0
        self.shift = shift
        s_levels = -levels if passage is Passage.DOWN else levels
        self.order = _np.argsort(s_levels, kind="stable")
        self.s_levels = s_levels[self.order]
        self.levels_sorted = levels[self.order]
        self.values = _np.zeros((n, levels.size))
        self.truncation = _np.zeros(levels.size)

    def start(self, state: Dict[str, _np.ndarray]) -> None:
        n = state["x"].size
        state["m"] = state["x"].copy()
        state["rec"] = _np.full(n, -_np.inf)
        state["filled"] = _np.zeros(n, dtype=_np.int64)

    def _monitored(self, x: _np.ndarray, m: Optional[_np.ndarray]) -> _np.ndarray:
        if self.passage is Passage.DOWN:
            return -x
        if self.passage is Passage.UP:
            return x
        return m - x

    def _maximum(self, m: _np.ndarray, moved: Any = True) -> _np.ndarray:
        return _np.maximum(self.m0, m + self.shift * moved)

    def _running_maximum(self, state: Dict[str, _np.ndarray], block: _Block, rows: Any) -> _np.ndarray:
        m_run = _np.maximum.accumulate(_np.maximum(block.values[rows], state["m"][rows, None]), axis=1)
        return self._maximum(m_run, block.kinds[rows] != _START)

    def observe(self, state: Dict[str, _np.ndarray], block: _Block) -> None:
        x = block.values
        diffusive = (block.kinds == _GRID) | (block.kinds == _PRE_JUMP)
        m = None
        if self.passage is Passage.REFLECTED:
            m = self._running_maximum(state, block, slice(None))
        s = self._monitored(x, m)
        if self.shift > 0:
            s = s + self.shift * diffusive
        rec = _np.maximum(state["rec"], s.max(axis=1))
        crossed = _np.searchsorted(self.s_levels, rec, side="left")
        filled = state["filled"]
        rows = _np.flatnonzero(crossed > filled)
        if rows.size:
            m_rows = m[rows] if m is not None else self._running_maximum(state, block, rows)
            running = _np.maximum.accumulate(_np.maximum(s[rows], state["rec"][rows, None]), axis=1)
            counts = crossed[rows] - filled[rows]
            local = _np.repeat(_np.arange(rows.size), counts)
            cols = _np.repeat(filled[rows], counts) + _np.arange(local.size) - _np.repeat(_np.cumsum(counts) - counts, counts)
            at = _first_above(running, local, self.s_levels[cols])
            r = rows[local]
            when = block.times[r, at]
            m_at = m_rows[local, at]
            level = self.levels_sorted[cols]
            settled = m_at - level if self.passage is Passage.REFLECTED else level
            x_at = _np.where(diffusive[r, at] & (self.shift > 0), settled, x[r, at])
            ids = state["ids"][r]
            self.values[ids, cols] = _np.exp(-self.q * when) * self.payoff(x_at, m_at)
            self._on_passage(ids, cols, when, x_at, m_at)
        state["m"] = _np.maximum(state["m"], x.max(axis=1))
        state["rec"] = rec
        state["filled"] = _np.maximum(filled, crossed)

    def _on_passage(self, ids: _np.ndarray, cols: _np.ndarray, t: _np.ndarray, x: _np.ndarray, m: _np.ndarray) -> None:
        pass

    def finished(self, state: Dict[str, _np.ndarray]) -> _np.ndarray:
        return state["filled"] >= self.s_levels.size

    def retire(self, state: Dict[str, _np.ndarray], gone: _np.ndarray) -> None:
        filled = state["filled"][gone]
        still_open = _np.arange(self.s_levels.size)[None, :] >= filled[:, None]
        if not still_open.any():
            return
        disc = _np.exp(-self.q * state["t"][gone])[:, None]
        bound = self.payoff.bound(
            self.levels_sorted[None, :], state["x"][gone][:, None], self._maximum(state["m"][gone])[:, None]
        )
        self.truncation += (disc * bound * still_open).sum(axis=0)

    def columns(self) -> _np.ndarray:
        """Discounted payoffs with columns in the caller's level order"""
        return self.values[:, _np.argsort(self.order)]

    def truncation_columns(self) -> _np.ndarray:
        return self.truncation[_np.argsort(self.order)]


class _PassageStateObserver(_PassageObserver):
    """Single-level passage observer that also keeps the state at passage"""

    def __init__(self, n: int, passage: Passage, level: float, payoff: Payoff, q: float, m0: float, shift: float = 0.0):
        super().__init__(n, passage, _np.array([level]), payoff, q, m0, shift)
        self.time = _np.full(n, _np.inf)
        self.x = _np.full(n, _np.nan)
        self.m = _np.full(n, _np.nan)

    def _on_passage(self, ids: _np.ndarray, cols: _np.ndarray, t: _np.ndarray, x: _np.ndarray, m: _np.ndarray) -> None:
        self.time[ids] = t
        self.x[ids] = x
        self.m[ids] = m


class _ExtremumObserver:
    """Running maximum (sign > 0) or minimum (sign < 0) over each path.

    Points reached by diffusion are moved outward by ``scale * sqrt(dt)``.
    """

    def __init__(self, n: int, sign: int, scale: float = 0.0):
        self.sign = sign
        self.scale = scale
        self.result = _np.zeros(n)

    def start(self, state: Dict[str, _np.ndarray]) -> None:
        state["ext"] = state["x"].copy()

    def observe(self, state: Dict[str, _np.ndarray], block: _Block) -> None:
        pick = _np.maximum if self.sign > 0 else _np.minimum
        values = block.values
        if self.scale > 0:
            diffusive = (block.kinds == _GRID) | (block.kinds == _PRE_JUMP)
            values = values + self.sign * self.scale * _np.sqrt(state["dt"])[:, None] * diffusive
        state["ext"] = pick(state["ext"], pick.reduce(values, axis=1))

    def finished(self, state: Dict[str, _np.ndarray]) -> _np.ndarray:
        return _np.zeros(state["x"].size, dtype=bool)

    def retire(self, state: Dict[str, _np.ndarray], gone: _np.ndarray) -> None:
        self.result[state["ids"][gone]] = state["ext"][gone]


class _RecordingObserver:
    """Keeps grid values and jump events of every path"""

    def __init__(self, n: int, n_steps: int):
        self.values = _np.zeros((n, n_steps + 1))
        self.jumps: Dict[str, List[_np.ndarray]] = {"path": [], "time": [], "pre": [], "post": []}

    def start(self, state: Dict[str, _np.ndarray]) -> None:
        state["col"] = _np.zeros(state["x"].size, dtype=_np.int64)

    def observe(self, state: Dict[str, _np.ndarray], block: _Block) -> None:
        ids = state["ids"]
        r, c = _np.nonzero(block.live)
        self.values[ids[r], state["col"][r] + c] = block.grid[r, c]
        state["col"] = state["col"] + block.live.sum(axis=1)
        if block.jump_rows.size:
            self.jumps["path"].append(ids[block.jump_rows])
            self.jumps["time"].append(block.jump_time)
            self.jumps["pre"].append(block.jump_pre)
            self.jumps["post"].append(block.jump_post)

    def finished(self, state: Dict[str, _np.ndarray]) -> _np.ndarray:
        return _np.zeros(state["x"].size, dtype=bool)

    def retire(self, state: Dict[str, _np.ndarray], gone: _np.ndarray) -> None:
        pass


# -- public operations -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Skeleton paths of one batch.

    ``values[i, k]`` is path i at ``times[k]``; jumps are listed separately
    with their exact times and the states just before and after.
    """

    offset: int
    times: _np.ndarray
    values: _np.ndarray
    jump_path: _np.ndarray
    jump_time: _np.ndarray
    jump_pre: _np.ndarray
    jump_post: _np.ndarray

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]


def simulate_paths(model: LevyModel, grid: PathGrid, n_paths: int, x0: float = 0.0) -> Iterator[PathBatch]:
    """Reproducible stream of skeleton paths on ``grid``, one batch at a time"""
    if n_paths < 1:
        raise DomainError(t("errors.too_few_paths", n=n_paths, minimum=1))
    n_steps = grid.n_steps
    times = _np.arange(n_steps + 1) * grid.dt
    offset = 0
    for index, size in enumerate(_batch_sizes(n_paths)):
        engine = _PathEngine(model, _batch_rng(grid.seed, index), grid.antithetic)
        rec = engine.run(size, x0, grid.dt, n_steps, _RecordingObserver(size, n_steps))

        def cat(key: str, dtype: Any = float) -> _np.ndarray:
            parts = rec.jumps[key]
            return _np.concatenate(parts).astype(dtype) if parts else _np.zeros(0, dtype=dtype)

        order = _np.lexsort((cat("time"), cat("path", _np.int64)))
        yield PathBatch(
            offset=offset,
            times=times,
            values=rec.values,
            jump_path=cat("path", _np.int64)[order],
            jump_time=cat("time")[order],
            jump_pre=cat("pre")[order],
            jump_post=cat("post")[order],
        )
        offset += size


def sample_extrema(
    model: LevyModel,
    q: float,
    sign: int,
    n_samples: int,
    seed: int,
    dt_cap: float = DEFAULT_DT,
    min_steps: int = 1000,
    n_workers: int = 1,
) -> _np.ndarray:
    """Samples sup (sign > 0) or inf (sign < 0) of X over [0, e_q].

    Each path draws its own horizon T ~ Exp(q) and is simulated with
    max(min_steps, ceil(T/dt_cap)) equal steps; extrema reached by diffusion
    carry the continuity correction of their step. Returned sorted ascending.
    """
    Horizon(q)
    if n_samples < 1:
        raise DomainError(t("errors.too_few_paths", n=n_samples, minimum=1))

    def task(index: int, size: int, rng: _np.random.Generator) -> _np.ndarray:
        horizon = rng.exponential(1.0 / q, size)
        steps = _np.maximum(min_steps, _np.ceil(horizon / dt_cap)).astype(_np.int64)
        engine = _PathEngine(model, rng)
        observer = _ExtremumObserver(size, sign, GRID_SHIFT * model.sigma)
        return engine.run(size, 0.0, horizon / steps, steps, observer).result

    samples = _np.concatenate(_run_batches(task, n_samples, seed, n_workers))
    # exact endpoints of the sign constraint
    samples = _np.maximum(samples, 0.0) if sign > 0 else _np.minimum(samples, 0.0)
    return _np.sort(samples)


def _prepare(model: LevyModel, q: float, payoff: Payoff, x0: float, grid: Optional[PathGrid], n_paths: int) -> Tuple[PathGrid, int, float, float]:
    Horizon(q)
    if n_paths < MIN_PATHS:
        raise DomainError(t("errors.too_few_paths", n=n_paths, minimum=MIN_PATHS))
    grid = grid or PathGrid.for_discount(q)
    if grid.antithetic and n_paths % 2:
        n_paths += 1
    if payoff.passage is Passage.REFLECTED:
        if x0 < 0:
            raise DomainError(t("errors.reflected_start", x0=x0))
        return grid, n_paths, 0.0, float(x0)
    return grid, n_paths, float(x0), float(x0)


def _passage_batches(
    model: LevyModel,
    q: float,
    payoff: Payoff,
    levels: _np.ndarray,
    x0: float,
    grid: PathGrid,
    n_paths: int,
    n_workers: int,
) -> List[_PassageObserver]:
    grid, n_paths, start, m0 = _prepare(model, q, payoff, x0, grid, n_paths)

    def task(index: int, size: int, rng: _np.random.Generator) -> _PassageObserver:
        observer = _PassageObserver(size, payoff.passage, levels, payoff, q, m0, grid_shift(model, grid.dt))
        engine = _PathEngine(model, rng, grid.antithetic)
        return engine.run(size, start, grid.dt, grid.n_steps, observer)

    return _run_batches(task, n_paths, grid.seed, n_workers)


def _summaries(observers: List[_PassageObserver], grid: PathGrid) -> List[McEstimate]:
    columns = [obs.columns() for obs in observers]
    if grid.antithetic:
        # pair path i with i + n/2 inside each batch
        pairs = [0.5 * (c[: c.shape[0] // 2] + c[c.shape[0] // 2 :]) for c in columns]
        samples = _np.concatenate(pairs, axis=0)
    else:
        samples = _np.concatenate(columns, axis=0)
    n_paths = sum(c.shape[0] for c in columns)
    truncation = sum(obs.truncation_columns() for obs in observers) / n_paths
    estimates = []
    for j in range(samples.shape[1]):
        mean, se = _stats.mean_se(samples[:, j])
        estimates.append(McEstimate(mean, se, n_paths, int(grid.seed), float(truncation[j])))
    return estimates


def _check_rule(rule: ThresholdRule, payoff: Payoff) -> None:
    if Passage(rule.passage) is not payoff.passage:
        raise UsageError(t("errors.rule_payoff_mismatch", rule=Passage(rule.passage).value, payoff=payoff.name))


def estimate_stopped_payoff(
    model: LevyModel,
    q: float,
    rule: ThresholdRule,
    payoff: Payoff,
    x0: float = 0.0,
    grid: Optional[PathGrid] = None,
    n_paths: int = DEFAULT_PATHS,
    n_workers: int = 1,
) -> McEstimate:
    """Estimates E_x0[e^{-q tau} G(X_tau)] for a first-passage rule.

    For the reflected rule ``x0`` is the initial level of the running
    maximum (X_0 = 0); paths that have not stopped by t_max contribute 0.
    """
    _check_rule(rule, payoff)
    grid = grid or PathGrid.for_discount(q)
    observers = _passage_batches(model, q, payoff, _np.array([float(rule.level)]), x0, grid, n_paths, n_workers)
    estimate = _summaries(observers, grid)[0]
    if estimate.truncation_bias_bound > estimate.std_error > 0:
        warnings.warn(t("warnings.truncation", bound=estimate.truncation_bias_bound), LevyStopWarning)
    return estimate


def sample_passages(
    model: LevyModel,
    rule: ThresholdRule,
    x0: float = 0.0,
    grid: Optional[PathGrid] = None,
    n_paths: int = MIN_PATHS,
) -> _pd.DataFrame:
    """Time, state and running maximum at the first passage of each path.

    Paths that do not stop within the grid horizon have ``stopped`` False.
    A passage by diffusion is settled on the level itself, so only jumps
    leave an overshoot.
    """
    passage = Passage(rule.passage)
    grid = grid or PathGrid()
    payoff: Payoff = {
        Passage.DOWN: ExponentialPayoff(0.0),
        Passage.UP: ExpPayoff(),
        Passage.REFLECTED: RussianPayoff(),
    }[passage]
    _, n_paths, start, m0 = _prepare(model, 1.0, payoff, x0, grid, max(n_paths, MIN_PATHS))
    frames = []
    for index, size in enumerate(_batch_sizes(n_paths)):
        observer = _PassageStateObserver(size, passage, float(rule.level), payoff, 0.0, m0, grid_shift(model, grid.dt))
        _PathEngine(model, _batch_rng(grid.seed, index), grid.antithetic).run(size, start, grid.dt, grid.n_steps, observer)
        frames.append(
            _pd.DataFrame(
                {
                    "stopped": _np.isfinite(observer.time),
                    "time": observer.time,
                    "x": observer.x,
                    "m": observer.m,
                }
            )
        )
    return _pd.concat(frames, ignore_index=True)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Common-random-numbers estimates over a threshold grid"""

    table: _pd.DataFrame
    estimates: List[McEstimate]
    argmax: float
    interval: Tuple[float, float]
    payoff: str
    x0: float
    grid: PathGrid = field(default_factory=PathGrid)

    def contains(self, level: float, tol: float = 1e-12) -> bool:
        return self.interval[0] - tol <= level <= self.interval[1] + tol

    def estimate_at(self, level: float) -> McEstimate:
        idx = int(_np.argmin(_np.abs(self.table["y"].to_numpy() - level)))
        return self.estimates[idx]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "payoff": self.payoff,
            "x0": self.x0,
            "argmax": self.argmax,
            "interval": list(self.interval),
            "n_levels": int(len(self.table)),
            "n_paths": self.estimates[0].n_paths if self.estimates else 0,
            "seed": int(self.grid.seed),
            "dt": self.grid.dt,
            "t_max": self.grid.t_max,
            "antithetic": self.grid.antithetic,
        }


def sweep_threshold(
    model: LevyModel,
    q: float,
    payoff: Payoff,
    x0: float,
    levels: Any,
    n_paths: int = DEFAULT_PATHS,
    grid: Optional[PathGrid] = None,
    n_workers: int = 1,
) -> SweepResult:
    """Estimates the stopped payoff at every level of a sorted grid.

    All levels are served by the same paths. The argmax is reported with the
    hull of all levels whose estimate is within one SE of the maximum.
    """
    levels = _np.asarray(levels, dtype=float).ravel()
    if levels.size == 0 or _np.any(_np.diff(levels) <= 0):
        raise DomainError(t("errors.unsorted_grid"))
    if levels.size < 11:
        warnings.warn(t("warnings.short_grid", n=levels.size), LevyStopWarning)
    grid = grid or PathGrid.for_discount(q)
    observers = _passage_batches(model, q, payoff, levels, x0, grid, n_paths, n_workers)
    estimates = _summaries(observers, grid)
    table = _pd.DataFrame(
        {
            "y": levels,
            "estimate": [e.mean for e in estimates],
            "std_error": [e.std_error for e in estimates],
            "n_paths": [e.n_paths for e in estimates],
        }
    )
    argmax, interval = _stats.flat_argmax(levels, table["estimate"], table["std_error"])
    return SweepResult(table, estimates, argmax, interval, payoff.name, float(x0), grid)
