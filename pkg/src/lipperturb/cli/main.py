"""``lipperturb`` command line.

Exit codes: 0 all checks and assertions pass; 1 mathematical failure
(failed check or assertion, unmet precondition, nonconvergence); 2 usage
error (bad scenario, parameter outside its domain); 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
import time
import traceback

from ..errors import LipPerturbError, NonconvergenceError, NotVerifiableError, PreconditionError
from .demos import DEFAULT_SEED, list_demos, run_demo
from .report import BEGIN, END, build_block, dumps, output_dir, text_summary, write_outputs
from .scenario import ScenarioError, load_scenario
from .tasks import run_task

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

_MATH = (PreconditionError, NonconvergenceError, NotVerifiableError)
# every other library error (domain, structure, unsupported configuration,
# degenerate input) is a usage failure


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lipperturb",
                                description="Lipschitz perturbation bounds, certified "
                                            "inversion, metric frames and atomic decompositions.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--out", default=None, help="output directory for report and figures")
    common.add_argument("--json-only", action="store_true",
                        help="print only the delimited JSON block")
    common.add_argument("--tolerance", type=float, default=1e-9,
                        help="relative slack for checks and assertions (default 1e-9)")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", parents=[common], help="run a scenario file")
    r.add_argument("file")
    d = sub.add_parser("demo", parents=[common], help="run a built-in demo")
    d.add_argument("name")
    sub.add_parser("demos", help="list the built-in demos")
    return p


def _error(kind: str, exc: BaseException) -> None:
    param = getattr(exc, "parameter", None)
    tag = f" [{param}]" if param else ""
    print(f"lipperturb: {kind}{tag}: {exc}", file=sys.stderr)


def execute(args) -> int:
    t0 = time.perf_counter()
    if args.verb == "run":
        sc = load_scenario(args.file, args.seed)
        outcome = run_task(sc, args.tolerance)
        echo, name, assertions = sc.raw, sc.name, sc.assertions
    else:
        seed = DEFAULT_SEED if args.seed is None else args.seed
        outcome = run_demo(args.name, seed, args.tolerance)
        name, assertions = args.name, []
        echo = {"schema_version": 1, "name": name, "seed": seed, "task": "demo",
                "params": {"demo": name}}
    block = build_block(echo, "demo" if args.verb == "demo" else echo["task"], outcome,
                        assertions, args.tolerance)
    summary = text_summary(block, time.perf_counter() - t0)
    out = output_dir(name, args.out)
    write_outputs(block, summary, outcome, out)
    if not args.json_only:
        print(summary)
        print(f"report written to {out}")
    print(BEGIN)
    print(dumps(block))
    print(END)
    return EXIT_OK if block["passed"] else EXIT_FAIL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.verb == "demos":
        rows = list_demos()
        w = max(len(n) for n, _ in rows)
        for n, v in rows:
            print(f"{n.ljust(w)}  {v}")
        print(f"{len(rows)} demos")
        return EXIT_OK
    try:
        return execute(args)
    except _MATH as exc:
        _error(type(exc).__name__, exc)
        return EXIT_FAIL
    except LipPerturbError as exc:
        _error("usage error" if isinstance(exc, ScenarioError) else type(exc).__name__, exc)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - reported as internal error
        traceback.print_exc(file=sys.stderr)
        _error("internal error", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
