"""Proof-strategy-graph engine: tactics as nodes of an open graph, goals
flowing along goal-typed edges, built by a combinator algebra and evaluated
interactively or automatically against a pluggable prover backend."""

from .combinators import (
    PSGraphFun, apply_fun, compile_strategy, elaborate, lift, nest, or_comb,
    orelse_comb, parse_strategy, repeat_alpha, tensor, then_all, then_pick,
)
from .engine import Eval, EvalConfig, EvalContext, init_eval, run_auto, step
from .goaltypes import (
    Gnode, GoalType, comparable, default_registry, match_goal, parse_goaltype,
)
from .graph import (
    OpenGraph, PSGraph, TacticSpec, add_edge, add_tactic_node, empty_psgraph,
    from_json, interface, to_json, validate,
)
from .prover import (
    Context, Pnode, Pplan, apply_tactic, default_context, embeds, init_pplan,
    match_terms, replay_journal,
)
from .terms import parse_prop, parse_term, prop_to_str, term_to_str

__version__ = "0.1.0"
