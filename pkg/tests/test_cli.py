import importlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from lipperturb.cli.demos import list_demos
from lipperturb.cli.report import BEGIN, END, extract_block

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
cli_main = importlib.import_module("lipperturb.cli.main")
REQUIRED_DEMOS = {"hilding-identity", "casazza-kalton-main", "stability-frame",
                  "certified-inversion", "lippel-dilation", "schauder-check"}


def run(argv, capsys):
    code = cli_main.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def bounds_scenario(**params):
    base = {"formula": "main", "lambda1": 0.2, "lambda2": 0.1, "lip_s": 2.0, "lip_sinv": 1.0}
    base.update(params)
    return {"schema_version": 1, "name": "b", "seed": 0, "task": "bounds", "params": base}


@pytest.fixture(autouse=True)
def _out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("LIPPERTURB_OUT_DIR", str(tmp_path / "env-out"))


@pytest.mark.parametrize("path", sorted(p.name for p in SCENARIOS.glob("*.json")))
def test_shipped_scenarios_pass(path, tmp_path, capsys):
    code, out, _ = run(["run", str(SCENARIOS / path), "--out", str(tmp_path / "o")], capsys)
    assert code == 0
    block = extract_block(out)
    assert block["passed"] and block["schema"]["name"] == "lipperturb-report"
    assert (tmp_path / "o" / "report.json").exists() and (tmp_path / "o" / "report.txt").exists()


def test_assertion_failure_exits_one(tmp_path, capsys):
    sc = bounds_scenario()
    sc["assertions"] = [{"path": "result.report.lip_Tinv_upper", "op": "<", "value": 1.0}]
    code, out, _ = run(["run", write(tmp_path, "a.json", sc), "--json-only"], capsys)
    assert code == 1
    block = extract_block(out)
    assert not block["passed"] and not block["assertions"][0]["passed"]


def test_domain_error_exits_two_and_names_parameter(tmp_path, capsys):
    code, out, err = run(["run", write(tmp_path, "d.json", bounds_scenario(lambda1=1.0))], capsys)
    assert code == 2
    assert "lambda1" in err and "DomainError" in err
    assert BEGIN not in out


def test_shipped_invalid_scenarios(capsys):
    for path in sorted((SCENARIOS / "invalid").glob("*.json")):
        code, _, err = run(["run", str(path)], capsys)
        assert code == 2, path.name
        assert err.startswith("lipperturb: ")


def test_json_syntax_error_reports_position(tmp_path, capsys):
    path = write(tmp_path, "s.json", '{\n  "schema_version": 1,\n  "name": oops\n}')
    code, _, err = run(["run", path], capsys)
    assert code == 2 and "s.json:3:11" in err


def test_unknown_key_is_rejected(tmp_path, capsys):
    sc = bounds_scenario()
    sc["params"]["lambda_1"] = 0.1
    code, _, err = run(["run", write(tmp_path, "k.json", sc)], capsys)
    assert code == 2 and "lambda_1" in err


def test_missing_file_is_usage_error(tmp_path, capsys):
    code, _, err = run(["run", str(tmp_path / "none.json")], capsys)
    assert code == 2


def test_internal_error_exits_three(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("bug")
    monkeypatch.setattr(cli_main, "run_task", boom)
    code, _, err = run(["run", write(tmp_path, "b.json", bounds_scenario())], capsys)
    assert code == 3 and "internal error" in err


def test_demo_listing(capsys):
    code, out, _ = run(["demos"], capsys)
    assert code == 0
    names = {n for n, _ in list_demos()}
    assert len(names) >= 12 and REQUIRED_DEMOS <= names
    assert f"{len(names)} demos" in out


def test_unknown_demo(capsys):
    code, _, err = run(["demo", "no-such-demo"], capsys)
    assert code == 2 and "no-such-demo" in err


def test_identity_demo_bounds_are_one(capsys):
    code, out, _ = run(["demo", "hilding-identity", "--json-only"], capsys)
    assert code == 0
    rep = extract_block(out)["result"]["report"]
    for key in ("lip_T_lower", "lip_T_upper", "lip_Tinv_lower", "lip_Tinv_upper"):
        assert rep[key] == 1.0


def test_stability_frame_demo_and_figures(tmp_path, capsys):
    code, out, _ = run(["demo", "stability-frame", "--out", str(tmp_path / "sf")], capsys)
    assert code == 0
    assert "report written to" in out
    code, _, _ = run(["demo", "casazza-kalton-main", "--out", str(tmp_path / "ck")], capsys)
    assert code == 0
    assert (tmp_path / "ck" / "frontier.png").stat().st_size > 0


def test_env_var_sets_output_dir(tmp_path, capsys):
    code, _, _ = run(["demo", "soderlind", "--json-only"], capsys)
    assert code == 0
    report = tmp_path / "env-out" / "soderlind" / "report.json"
    assert json.loads(report.read_text())["passed"] is True


def test_json_only_prints_only_the_block(capsys):
    code, out, _ = run(["demo", "barbagallo", "--json-only"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == BEGIN and lines[-1] == END


def test_seed_override_is_deterministic(capsys):
    blocks = []
    for seed in (7, 7, 8):
        _, out, _ = run(["demo", "casazza-kalton-main", "--seed", str(seed), "--json-only"], capsys)
        blocks.append(out)
    assert blocks[0] == blocks[1]
    assert extract_block(blocks[2])["scenario"]["seed"] == 8


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lipperturb", "demo", "hilding-identity",
                           "--json-only", "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert extract_block(proc.stdout)["passed"]
