#!/usr/bin/env python3
"""Build the shipped induction/rippling strategies, prove their demo goals,
and print the audit journal and timing for each run.

    python3 scripts/demo_ripple.py
"""

import sys
import time
from pathlib import Path

from psgraph import (
    EvalContext, compile_strategy, init_eval, init_pplan, parse_prop,
    replay_journal, run_auto,
)

STRATEGIES = Path(__file__).resolve().parent.parent / "strategies"

CASES = [
    ("induct_ripple.psx", "!x. x + 0 = x"),
    ("intro_induct_ripple.psx", "!x.!y. S x + y = S (x + y)"),
]


def main() -> int:
    failures = 0
    for name, goal_text in CASES:
        psgraph = compile_strategy((STRATEGIES / name).read_text())
        ctx = EvalContext()
        pn, plan = init_pplan(parse_prop(goal_text))
        start = time.perf_counter()
        ev = run_auto(init_eval(psgraph, pn, plan, ctx), ctx)
        elapsed = time.perf_counter() - start
        print(f"== {name}  goal: {goal_text}")
        print(f"   status: {ev.status.kind}  ({elapsed * 1000:.1f} ms)")
        if ev.status.kind != "complete":
            print(f"   reason: {ev.status.reason}")
            failures += 1
            continue
        final = ev.branches[0].pplan
        print(f"   open goals: {len(final.open_goals)}"
              f"   journal entries: {len(final.journal)}"
              f"   replay sound: {replay_journal(final, ctx.prover)}")
        for entry in final.journal:
            children = ",".join(c.id for c in entry.children) or "-"
            print(f"     {entry.parent_id} --{entry.tactic}"
                  f"[{entry.branch_index}]--> {children}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
