"""Command line front end.

    levystop solve  {mckean,ns,ns-exp,ss} --model FILE --q R --seed N [--strike R | --nu R]
    levystop verify {mckean,ns,ns-exp,ss} --model FILE --q R --seed N [--paths N] [--offset R]
    levystop sweep  {mckean,ns,ns-exp,ss} --model FILE --q R --seed N [--y-min R --y-max R]
    levystop scale eval --model FILE --q R [--x-max R] [--points N]
    levystop appell {eval,root} --model FILE --q R --nu R [--s R --y R]

Exit status: 0 success, 1 malformed input or usage, 2 failed precondition
or domain check, 3 numerical failure, 4 verification FAIL.
"""

import argparse
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from . import reports
from .appell import appell_eval, appell_root, build_appell_family
from .core import SWEEP_POINTS, SWEEP_WIDTH, OptimalStopping
from .errors import DomainError, LevyStopError, UsageError
from .fluctuation import DEFAULT_SAMPLES, Side, extrema_law
from .i18n import get_supported_languages, set_language, t
from .models import LevyModel, load_model
from .scale import build_scale_table, scale_grid
from .simulation import DEFAULT_DT, DEFAULT_PATHS, MIN_PATHS
from .solvers import Problem
from .utils import canonical_json

EXIT_OK = 0
EXIT_VERIFY_FAILED = 4
PROBLEMS = [p.value for p in Problem]


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1"""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    """One validated invocation"""

    command: str
    model_path: Path
    q: float
    problem: Optional[Problem] = None
    action: Optional[str] = None
    strike: Optional[float] = None
    nu: Optional[float] = None
    seed: Optional[int] = None
    n_paths: int = DEFAULT_PATHS
    n_samples: int = DEFAULT_SAMPLES
    dt: float = DEFAULT_DT
    t_max: Optional[float] = None
    workers: int = 1
    antithetic: bool = False
    out: Optional[Path] = None
    offset: float = 0.0
    x0: float = 0.0
    width: float = SWEEP_WIDTH
    points: int = SWEEP_POINTS
    y_min: Optional[float] = None
    y_max: Optional[float] = None
    grid_points: int = 0
    x_max: float = 10.0
    method: Optional[str] = None
    s: Optional[float] = None
    y: Optional[float] = None
    language: str = "en"

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        values = {k: v for k, v in vars(args).items() if k in names and v is not None}
        if values.get("problem") is not None:
            values["problem"] = Problem(values["problem"])
        for key in ("model_path", "out"):
            if key in values:
                values[key] = Path(values[key])
        config = cls(**values)
        config.validate()
        return config

    def validate(self) -> None:
        def positive(name: str, value: Optional[float]) -> None:
            if value is not None and not (math.isfinite(value) and value > 0):
                raise DomainError(t("errors.positive_option", name=name, value=value))

        positive("q", self.q)
        positive("strike", self.strike)
        positive("nu", self.nu)
        positive("dt", self.dt)
        positive("t-max", self.t_max)
        positive("x-max", self.x_max)
        positive("width", self.width)
        if self.seed is not None and self.seed < 0:
            raise DomainError(t("errors.bad_seed", seed=self.seed))
        if self.n_paths < MIN_PATHS:
            raise DomainError(t("errors.too_few_paths", n=self.n_paths, minimum=MIN_PATHS))
        if self.points < 1 or self.grid_points < 0 or self.workers < 1:
            raise DomainError(t("errors.positive_option", name="points", value=self.points))
        if self.problem is Problem.MCKEAN and self.strike is None:
            raise UsageError(t("errors.missing_param", name="strike"))
        if self.problem is Problem.NOVIKOV_SHIRYAEV and self.nu is None:
            raise UsageError(t("errors.missing_param", name="nu"))
        if self.command == "appell":
            if self.nu is None:
                raise UsageError(t("errors.missing_param", name="nu"))
            if self.action == "eval" and (self.s is None or self.y is None):
                raise UsageError(t("errors.missing_param", name="s, y"))
        if self.y_min is not None and self.y_max is not None and self.y_min >= self.y_max:
            raise DomainError(t("errors.unsorted_grid"))

    def engine(self, model: LevyModel) -> OptimalStopping:
        return OptimalStopping(
            model,
            self.q,
            seed=self.seed,
            n_paths=self.n_paths,
            dt=self.dt,
            t_max=self.t_max,
            n_samples=self.n_samples,
            language=self.language,
            n_workers=self.workers,
            antithetic=self.antithetic,
            cache_dir=None if self.out is None else self.out / "cache",
        )


# -- commands ---------------------------------------------------------------------


def _emit(config: RunConfig, name: str, payload: Dict[str, Any], summary: str) -> None:
    print(summary)
    if config.out is not None:
        reports.write_json(payload, config.out / name)


def cmd_solve(config: RunConfig) -> int:
    stopping = config.engine(load_model(config.model_path))
    solution = stopping.solve(config.problem, strike=config.strike, nu=config.nu, method=config.method)
    _emit(config, "solution.json", reports.solution_payload(solution), reports.solution_summary(solution))
    if config.out is not None and config.grid_points > 0:
        xs = np.linspace(solution.threshold - 5.0, solution.threshold + 5.0, config.grid_points)
        reports.write_csv(solution.value_grid(xs), config.out / "value_grid.csv")
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    stopping = config.engine(load_model(config.model_path))
    report = stopping.verify(
        config.problem,
        strike=config.strike,
        nu=config.nu,
        offset=config.offset,
        x0=config.x0,
        width=config.width,
        points=config.points,
        method=config.method,
    )
    payload = report.to_dict()
    payload["solution"] = reports.solution_payload(report.solution)
    _emit(config, "verification.json", payload, reports.verification_summary(report))
    if config.out is not None:
        reports.write_csv(report.sweep.table, config.out / "sweep.csv")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_sweep(config: RunConfig) -> int:
    stopping = config.engine(load_model(config.model_path))
    solution = stopping.solve(config.problem, strike=config.strike, nu=config.nu, method=config.method)
    if config.y_min is not None and config.y_max is not None:
        levels = np.linspace(config.y_min, config.y_max, config.points)
    else:
        levels = stopping.levels(solution, width=config.width, points=config.points)
    result = stopping.sweep(config.problem, levels, x0=config.x0, strike=config.strike, nu=config.nu)
    _emit(config, "sweep.json", reports.sweep_payload(result, solution.threshold), reports.sweep_summary(result))
    if config.out is not None:
        reports.write_csv(result.table, config.out / "sweep.csv")
    return EXIT_OK


def cmd_scale(config: RunConfig) -> int:
    table = build_scale_table(load_model(config.model_path), config.q, config.method)
    xs = np.linspace(0.0, config.x_max, max(config.points, 2))
    frame = scale_grid(table, xs)
    if config.out is not None:
        reports.write_csv(frame, config.out / "scale.csv")
    else:
        print(frame.to_csv(index=False, float_format=reports.CSV_FLOAT_FORMAT), end="")
    return EXIT_OK


def cmd_appell(config: RunConfig) -> int:
    model = load_model(config.model_path)
    law = extrema_law(model, config.q, Side.SUPREMUM, n_samples=config.n_samples, seed=config.seed, dt=config.dt)
    assert config.nu is not None
    fam = build_appell_family(law, config.nu, model)
    payload: Dict[str, Any] = {"nu": config.nu, "q": config.q, "law": law.metadata()}
    if config.action == "root":
        payload["root"] = appell_root(fam)
    else:
        payload.update({"s": config.s, "y": config.y, "value": appell_eval(fam, config.s, config.y)})
    text = canonical_json(payload)
    print(text, end="")
    if config.out is not None:
        reports.write_json(payload, config.out / f"appell_{config.action}.json")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "scale": cmd_scale,
    "appell": cmd_appell,
}


# -- parser -----------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", dest="model_path", required=True, help="model JSON file")
    p.add_argument("--q", type=float, required=True, help="discount rate")
    p.add_argument("--out", help="output directory")
    p.add_argument("--lang", dest="language", choices=get_supported_languages(), default="en")
    p.add_argument("--samples", dest="n_samples", type=int, default=DEFAULT_SAMPLES, help="extremum samples")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)


def _problem(p: argparse.ArgumentParser) -> None:
    p.add_argument("problem", choices=PROBLEMS)
    p.add_argument("--strike", type=float, help="strike K (mckean)")
    p.add_argument("--nu", type=float, help="power nu (ns)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--method", choices=["closed_form", "inversion"], help="scale function backend (ss)")


def _monte_carlo(p: argparse.ArgumentParser) -> None:
    p.add_argument("--paths", dest="n_paths", type=int, default=DEFAULT_PATHS)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--x0", type=float, default=0.0, help="start (ss: initial maximum)")
    p.add_argument("--width", type=float, default=SWEEP_WIDTH)
    p.add_argument("--points", type=int, default=SWEEP_POINTS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levystop", description="Optimal stopping for Lévy processes")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a stopping problem")
    _common(solve)
    _problem(solve)
    solve.add_argument("--grid-points", dest="grid_points", type=int, default=0, help="value grid size")

    verify = sub.add_parser("verify", help="solve and check by Monte Carlo")
    _common(verify)
    _problem(verify)
    _monte_carlo(verify)
    verify.add_argument("--offset", type=float, default=0.0, help="inject a threshold offset")

    sweep = sub.add_parser("sweep", help="Monte Carlo threshold sweep")
    _common(sweep)
    _problem(sweep)
    _monte_carlo(sweep)
    sweep.add_argument("--y-min", dest="y_min", type=float)
    sweep.add_argument("--y-max", dest="y_max", type=float)

    scale = sub.add_parser("scale", help="scale functions")
    scale.add_argument("action", choices=["eval"])
    _common(scale)
    scale.add_argument("--x-max", dest="x_max", type=float, default=10.0)
    scale.add_argument("--points", type=int, default=101)
    scale.add_argument("--method", choices=["closed_form", "inversion"])

    appell = sub.add_parser("appell", help="Appell functions")
    appell.add_argument("action", choices=["eval", "root"])
    _common(appell)
    appell.add_argument("--nu", type=float)
    appell.add_argument("--s", type=float)
    appell.add_argument("--y", type=float)
    appell.add_argument("--seed", type=int)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    set_language(args.language)
    try:
        config = RunConfig.from_args(args)
        return COMMANDS[config.command](config)
    except LevyStopError as e:
        print(t("cli.error", kind=type(e).__name__, message=e), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
