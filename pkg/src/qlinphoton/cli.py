"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import response, scenario, synthesis
from .errors import NumericalError, QLinPhotonError, ValidationError, exit_code
from .model import realize
from .verify import FAULTS, verify


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default="out", help="directory for emitted files")
    common.add_argument("--dt", type=float, default=None, help="override the grid step")
    common.add_argument("--tol", type=float, default=None, help="state certification tolerance")
    common.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")

    ap = argparse.ArgumentParser(prog="qlinphoton", description="Linear quantum systems driven by photon and Gaussian fields.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="run every product a scenario requests")
    p.add_argument("scenario")
    p = sub.add_parser("steady", parents=[common], help="run only the steady-state products of a scenario")
    p.add_argument("scenario")
    p = sub.add_parser("synthesize", parents=[common], help="passive realization of a rational all-pass")
    p.add_argument("realization")
    p = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    p.add_argument("--fault", choices=FAULTS, default=None, help="inject a deliberate fault")
    p = sub.add_parser("example", parents=[common], help="run a built-in scenario")
    p.add_argument("name")
    return ap


def _load_scenario(args, source):
    sc = scenario.parse_scenario(source, dt=args.dt)
    if args.tol is not None:
        doc = dict(sc.document, tol=args.tol)
        sc = scenario.parse_scenario(doc, dt=args.dt)
    return sc


def _run_scenario(args, source, products=None) -> int:
    sc = _load_scenario(args, source)
    manifest = scenario.run(sc, args.out_dir, args.fmt, products)
    print(json.dumps({"out_dir": str(args.out_dir), "files": manifest["files"]}, sort_keys=True))
    return 0


def _cplx_pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _synthesize(args) -> int:
    try:
        doc = json.loads(Path(args.realization).read_text())
    except json.JSONDecodeError as exc:
        raise scenario.ScenarioError([{"path": "$", "message": f"invalid JSON: {exc.msg} (line {exc.lineno})"}]) from None
    errs = scenario._schema_errors(doc, scenario.REALIZATION_SCHEMA)
    if errs:
        raise scenario.ScenarioError(errs)
    d = scenario.build_allpass(doc)
    params = synthesis.synthesize(d)
    g = realize(params)
    s = 1j * np.linspace(-20.0, 20.0, 401)
    tf_dev = float(np.max(np.abs(response.transfer_grid(g, s)[:, 0, 0] - d.transfer(s)))) if d.state_dim else 0.0
    flat = response.check_flat_unitary(g)
    mats = {
        "S_minus": params.S_minus, "C_minus": params.C_minus, "C_plus": params.C_plus,
        "Omega_minus": params.Omega_minus, "Omega_plus": params.Omega_plus,
    }
    out = {
        "params": {k: [[_cplx_pair(v) for v in row] for row in M] for k, M in mats.items()},
        "report": {
            "transfer_max_deviation": tf_dev,
            "flat_unitary_residual": flat,
            "passed": bool(tf_dev < 1e-9 and flat < 1e-9),
        },
    }
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "synthesis.json").write_text(json.dumps(out, sort_keys=True, indent=1) + "\n", encoding="utf-8", newline="\n")
    (out_dir / "manifest.json").write_text(
        json.dumps({"files": ["manifest.json", "synthesis.json"], "operations": ["synthesis.synthesize"]}, sort_keys=True, indent=1) + "\n",
        encoding="utf-8", newline="\n",
    )
    print(json.dumps(out["report"], sort_keys=True))
    return 0 if out["report"]["passed"] else 2


def _verify(args) -> int:
    rep = verify(dt=args.dt if args.dt is not None else 1e-3, fault=args.fault)
    for line in rep.lines():
        print(line)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "verify.json").write_text(json.dumps(rep.as_dict(), sort_keys=True, indent=1) + "\n", encoding="utf-8", newline="\n")
    return 0 if rep.all_passed else 2


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _run_scenario(args, Path(args.scenario))
        if args.command == "steady":
            return _run_scenario(args, Path(args.scenario), scenario.STEADY_PRODUCTS)
        if args.command == "example":
            return _run_scenario(args, scenario.builtin(args.name))
        if args.command == "synthesize":
            return _synthesize(args)
        return _verify(args)
    except scenario.ScenarioError as exc:
        print(json.dumps({"error": "validation", "violations": exc.violations}, sort_keys=True), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return 1
    except (ValidationError, NumericalError, QLinPhotonError) as exc:
        kind = "validation" if isinstance(exc, ValidationError) else "numerical"
        print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
