"""Command-line entry points.

    psgraph prove --graph FILE.psg --goal "!x. x + 0 = x" --mode auto
    psgraph prove --graph FILE.psg --mode interactive --port 1779
    psgraph build --strategy FILE.psx --out FILE.psg
    psgraph check FILE.psg
    psgraph serve --port 1779

Exit codes: 0 success / proof complete, 1 evaluation failed, 2 usage,
I/O or parse errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .combinators import CombinatorError, compile_strategy
from .engine import EvalContext, init_eval, run_auto
from .graph import GraphError, from_json, to_json, validate
from .protocol import CURRENT, DEFAULT_PORT, serve
from .prover import init_pplan
from .terms import TermParseError, parse_prop


def _load_psgraph(path: str):
    try:
        return from_json(Path(path).read_text())
    except OSError as exc:
        raise SystemExit(_usage_error(f"cannot read {path}: {exc}"))
    except GraphError as exc:
        raise SystemExit(_usage_error(f"{path}: {exc}"))


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def cmd_prove(args: argparse.Namespace) -> int:
    psg = _load_psgraph(args.graph)
    if args.mode == "interactive":
        name = Path(args.graph).stem
        port = args.port or int(os.environ.get("PSGRAPH_PORT", DEFAULT_PORT))
        print(f"serving strategy {name!r} on port {port}; awaiting UI", flush=True)
        serve(port, preload={name: psg, CURRENT: psg})
        return 0
    if not args.goal:
        return _usage_error("--goal is required in auto mode")
    try:
        goal = parse_prop(args.goal)
    except TermParseError as exc:
        return _usage_error(f"bad goal: {exc}")
    ctx = EvalContext()
    try:
        pn, plan = init_pplan(goal)
        ev = init_eval(psg, pn, plan, ctx)
    except Exception as exc:
        return _usage_error(str(exc))
    ev = run_auto(ev, ctx, fuel=args.fuel)
    if ev.status.kind == "complete":
        branch = ev.branches[0]
        print(f"complete: {len(branch.pplan.open_goals)} open goals")
        for entry in branch.pplan.journal:
            children = ",".join(c.id for c in entry.children) or "-"
            print(f"  {entry.parent_id} --{entry.tactic}[{entry.branch_index}]--> "
                  f"{children}")
        return 0
    print(f"failed: {ev.status.reason}", file=sys.stderr)
    if ev.status.report:
        import json
        print(json.dumps(ev.status.report, indent=2), file=sys.stderr)
    return 1


def cmd_build(args: argparse.Namespace) -> int:
    try:
        text = Path(args.strategy).read_text()
    except OSError as exc:
        return _usage_error(f"cannot read {args.strategy}: {exc}")
    try:
        psg = compile_strategy(text)
        out = to_json(psg)
    except (CombinatorError, GraphError) as exc:
        return _usage_error(f"{args.strategy}: {exc}")
    Path(args.out).write_text(out + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    psg = _load_psgraph(args.file)
    report = validate(psg, EvalContext().prover)
    if not report:
        print("ok")
        return 0
    for violation in report.violations:
        print(str(violation), file=sys.stderr)
    return 1


def cmd_serve(args: argparse.Namespace) -> int:
    port = args.port or int(os.environ.get("PSGRAPH_PORT", DEFAULT_PORT))
    print(f"listening on port {port}", flush=True)
    serve(port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psgraph",
                                     description="proof-strategy-graph engine")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    prove = sub.add_parser("prove", help="evaluate a strategy against a goal")
    prove.add_argument("--graph", required=True)
    prove.add_argument("--goal")
    prove.add_argument("--mode", choices=["auto", "interactive"], default="auto")
    prove.add_argument("--port", type=int)
    prove.add_argument("--fuel", type=int, default=10000)
    prove.set_defaults(func=cmd_prove)

    build = sub.add_parser("build", help="compile a .psx strategy expression")
    build.add_argument("--strategy", required=True)
    build.add_argument("--out", required=True)
    build.set_defaults(func=cmd_build)

    check = sub.add_parser("check", help="validate a .psg file")
    check.add_argument("file")
    check.set_defaults(func=cmd_check)

    srv = sub.add_parser("serve", help="run the protocol server")
    srv.add_argument("--port", type=int)
    srv.set_defaults(func=cmd_serve)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except KeyboardInterrupt:
        return 130


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
