import json
import math

import pytest

from levystop.cli import build_parser, main
from levystop.models import Family, LevyModel


@pytest.fixture
def bm_file(model_file, bm):
    return str(model_file(bm))


def test_solve_writes_deterministic_json(bm_file, tmp_path, capsys):
    out = tmp_path / "run"
    args = ["solve", "mckean", "--model", bm_file, "--q", "0.5", "--strike", "1", "--seed", "1", "--out", str(out)]
    assert main(args) == 0
    first = (out / "solution.json").read_text(encoding="utf-8")
    payload = json.loads(first)
    assert payload["threshold"] == pytest.approx(-math.log(2.0))
    assert payload["params"] == {"strike": 1.0}
    assert len(payload["model_hash"]) == 64
    assert "McKean" in capsys.readouterr().out
    assert main(args) == 0
    assert (out / "solution.json").read_text(encoding="utf-8") == first


def test_solve_value_grid(bm_file, tmp_path):
    out = tmp_path / "grid"
    args = ["solve", "ss", "--model", bm_file, "--q", "1", "--seed", "1", "--out", str(out), "--grid-points", "5"]
    assert main(args) == 0
    lines = (out / "value_grid.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,value,payoff"
    assert len(lines) == 6


def test_chinese_summary(bm_file, capsys):
    assert main(["solve", "ns-exp", "--model", bm_file, "--q", "0.5", "--seed", "1", "--lang", "zh"]) == 0
    assert "问题" in capsys.readouterr().out


@pytest.mark.parametrize(
    "args, code",
    [
        (["solve", "mckean", "--q", "0.5"], 1),
        (["solve", "ns", "--q", "0.5"], 1),
        (["solve", "mckean", "--q", "-1", "--strike", "1"], 2),
        (["solve", "mckean", "--q", "0.5", "--strike", "0"], 2),
    ],
)
def test_exit_codes(bm_file, args, code, capsys):
    assert main(args[:2] + ["--model", bm_file, "--seed", "1"] + args[2:]) == code
    assert "error" in capsys.readouterr().err


def test_model_errors(model_file, models, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    assert main(["solve", "ss", "--model", str(broken), "--q", "1", "--seed", "1"]) == 1
    assert main(["solve", "ss", "--model", str(tmp_path / "nope.json"), "--q", "1", "--seed", "1"]) == 1
    assert main(["solve", "ss", "--model", str(model_file(models["jump_diffusion"])), "--q", "1", "--seed", "1"]) == 2
    assert main(["solve", "ss", "--model", str(model_file(models["bv_sn"])), "--q", "2.5", "--seed", "1"]) == 2


def test_usage_errors_exit_1(bm_file):
    with pytest.raises(SystemExit) as info:
        main(["solve", "american", "--model", bm_file, "--q", "1"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["verify", "ss", "--model", bm_file, "--q", "1"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["solve", "mckean", "--model", bm_file, "--q", "0.5", "--strike", "1"])
    assert info.value.code == 1


def test_scale_eval(bm_file, capsys):
    assert main(["scale", "eval", "--model", bm_file, "--q", "1", "--x-max", "1", "--points", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,W,Z,W_prime"
    x, w, z, _ = map(float, lines[-1].split(","))
    assert x == 1.0
    assert z == pytest.approx(math.cosh(math.sqrt(2.0)), rel=1e-9)


def test_appell(bm_file, capsys):
    assert main(["appell", "root", "--model", bm_file, "--q", "0.5", "--nu", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["root"] == pytest.approx(2.0)
    assert main(["appell", "eval", "--model", bm_file, "--q", "0.5", "--nu", "2", "--s", "1.5", "--y", "2"]) == 0
    value = json.loads(capsys.readouterr().out)["value"]
    assert value == pytest.approx(2.0**1.5 - 1.5 * math.sqrt(2.0), rel=1e-6)
    assert main(["appell", "eval", "--model", bm_file, "--q", "0.5", "--nu", "2"]) == 1


def test_verify(bm_file, tmp_path):
    common = ["--model", bm_file, "--q", "0.5", "--strike", "1", "--seed", "12", "--paths", "4000", "--dt", "0.002"]
    out = tmp_path / "verify"
    assert main(["verify", "mckean", *common, "--out", str(out)]) == 0
    report = json.loads((out / "verification.json").read_text(encoding="utf-8"))
    assert report["passed"] is True
    assert report["solution"]["threshold"] == pytest.approx(-math.log(2.0))
    assert (out / "sweep.csv").read_text(encoding="utf-8").startswith("y,estimate,std_error,n_paths")
    assert main(["verify", "mckean", *common, "--offset", "0.6"]) == 4


def test_sweep_with_explicit_range(bm_file, tmp_path):
    out = tmp_path / "sweep"
    args = [
        "sweep", "ns-exp", "--model", bm_file, "--q", "0.5", "--seed", "3", "--paths", "2000",
        "--dt", "0.005", "--y-min", "0.2", "--y-max", "1.2", "--points", "11", "--out", str(out),
    ]
    assert main(args) == 0
    payload = json.loads((out / "sweep.json").read_text(encoding="utf-8"))
    assert payload["n_levels"] == 11
    assert payload["threshold"] == pytest.approx(math.log(2.0))
    assert main(args[:-2] + ["--y-min", "1.2", "--y-max", "0.2"]) == 2


def test_parser_lists_commands():
    parser = build_parser()
    args = parser.parse_args(["scale", "eval", "--model", "m.json", "--q", "1"])
    assert args.command == "scale" and args.action == "eval"
    assert LevyModel(Family.BROWNIAN_DRIFT, sigma=2.0).sigma == 2.0
