"""Report assembly, assertion evaluation and file output."""

from __future__ import annotations

import json
import math
import os
import re
from pathlib import Path

import numpy as np

REPORT_SCHEMA = {"name": "lipperturb-report", "version": 1}
BEGIN = "=== BEGIN REPORT JSON ==="
END = "=== END REPORT JSON ==="
OUT_ENV = "LIPPERTURB_OUT_DIR"


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(block: dict) -> str:
    return json.dumps(jsonable(block), indent=2, sort_keys=True, allow_nan=False)


# --------------------------------------------------------------- assertions

_TOKEN = re.compile(r"([^.\[\]]+)|\[(\d+)\]")


def lookup(doc, path: str):
    cur = doc
    for name, idx in _TOKEN.findall(path):
        try:
            cur = cur[int(idx)] if idx else cur[name]
        except (KeyError, IndexError, TypeError):
            raise KeyError(path) from None
    return cur


def _num(v):
    if isinstance(v, str) and v in ("inf", "-inf", "nan"):
        return float(v)
    return v


def evaluate_assertion(doc: dict, a: dict, tol: float) -> dict:
    path, op, want = a["path"], a["op"], a.get("value")
    try:
        got = lookup(doc, path)
    except KeyError:
        return {"path": path, "op": op, "value": want, "actual": None, "passed": False,
                "detail": "path not found"}
    g, w = _num(got), _num(want)
    numeric = all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (g, w))
    slack = tol * max(1.0, abs(w)) if numeric and math.isfinite(w) else 0.0
    if op == "is":
        ok = got is want or got == want and type(got) is type(want)
    elif not numeric:
        ok = op == "==" and got == want
    elif op == "==":
        ok = g == w or abs(g - w) <= slack
    elif op == "<=":
        ok = g <= w + slack
    elif op == ">=":
        ok = g >= w - slack
    elif op == "<":
        ok = g < w
    else:
        ok = g > w
    return {"path": path, "op": op, "value": want, "actual": got, "passed": bool(ok)}


# ------------------------------------------------------------------ assembly

def build_block(scenario_echo: dict, task: str, outcome, assertions: list, tol: float) -> dict:
    block = {"schema": dict(REPORT_SCHEMA), "scenario": scenario_echo, "task": task,
             "validates": outcome.validates, "tolerance": tol,
             "result": jsonable(outcome.result), "checks": outcome.checks,
             "figures": [f["file"] for f in outcome.figures]}
    block["assertions"] = [evaluate_assertion(block, a, tol) for a in assertions]
    block["passed"] = outcome.passed and all(a["passed"] for a in block["assertions"])
    return jsonable(block)


def _flatten(d, prefix="", out=None, depth=0):
    out = [] if out is None else out
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and depth < 2:
            _flatten(v, key + ".", out, depth + 1)
        elif isinstance(v, list) and len(v) > 6:
            out.append((key, f"[{len(v)} entries]"))
        else:
            s = json.dumps(v) if not isinstance(v, str) else v
            out.append((key, s if len(s) <= 90 else s[:87] + "..."))
    return out


def text_summary(block: dict, elapsed: float | None = None) -> str:
    sc = block["scenario"]
    head = [("scenario", sc.get("name", "")), ("task", block["task"]),
            ("seed", str(sc.get("seed", ""))), ("validates", block["validates"])]
    if elapsed is not None:
        head.append(("elapsed", f"{elapsed:.3f} s"))
    rows = head + _flatten(block["result"], "result.")
    w = max(len(k) for k, _ in rows)
    lines = [f"{k.ljust(w)}  {v}" for k, v in rows]
    if block["checks"]:
        lines.append("")
        lines.append("checks:")
        for c in block["checks"]:
            mark = "PASS" if c["passed"] else "FAIL"
            lines.append(f"  [{mark}] {c['name']}" + (f"  ({c['detail']})" if c["detail"] else ""))
    if block["assertions"]:
        lines.append("")
        lines.append("assertions:")
        for a in block["assertions"]:
            mark = "PASS" if a["passed"] else "FAIL"
            lines.append(f"  [{mark}] {a['path']} {a['op']} {a['value']!r} "
                         f"(actual {a['actual']!r})")
    lines.append("")
    lines.append(f"overall: {'PASS' if block['passed'] else 'FAIL'}")
    return "\n".join(lines)


def output_dir(name: str, out: str | None) -> Path:
    if out:
        return Path(out)
    base = os.environ.get(OUT_ENV) or "lipperturb-out"
    return Path(base) / name


def write_outputs(block: dict, summary: str, outcome, out_dir: Path) -> list[Path]:
    from .plotting import render
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dumps(block) + "\n")
    (out_dir / "report.txt").write_text(summary + "\n")
    return [render(desc, out_dir) for desc in outcome.figures] + [out_dir / "report.json",
                                                                   out_dir / "report.txt"]


def extract_block(text: str) -> dict:
    """Parse the delimited machine block out of CLI stdout."""
    start = text.index(BEGIN) + len(BEGIN)
    return json.loads(text[start:text.index(END, start)])
