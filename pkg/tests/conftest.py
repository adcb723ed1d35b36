import random
from pathlib import Path

import pytest

from psgraph.combinators import (
    PSGraphFun, apply_fun, compile_strategy, lift, nest, or_comb,
    orelse_comb, repeat_alpha, tensor, then_pick,
)
from psgraph.engine import EvalContext
from psgraph.terms import parse_prop

STRATEGIES = Path(__file__).resolve().parent.parent / "strategies"


@pytest.fixture
def ctx() -> EvalContext:
    return EvalContext()


@pytest.fixture
def fig_strategy():
    return compile_strategy((STRATEGIES / "induct_ripple.psx").read_text())


@pytest.fixture
def fig_strategy_intro():
    return compile_strategy((STRATEGIES / "intro_induct_ripple.psx").read_text())


# ---------------------------------------------------------------------------
# Random generators shared by property and acceptance tests


GROUND_GOALS = [
    "0 = 0",
    "S 0 = S 0",
    "0 + 0 = 0",
    "S 0 + 0 = S 0",
    "S 0 + S 0 = S (S 0)",
    "!x. x + 0 = x",
    "!x. 0 + x = x",
    "!x. S x + 0 = S x",
    "!x.!y. S x + y = S (x + y)",
    "0 = 0 ==> 0 = 0",
    "!x. x = x",
]


def random_goal(rng: random.Random):
    return parse_prop(rng.choice(GROUND_GOALS))


CHAIN_TACTICS = ["id", "intro", "induct", "refl", "assumption"]


def random_chain(rng: random.Random, max_len: int = 5) -> tuple[list[str], PSGraphFun]:
    names = [rng.choice(CHAIN_TACTICS) for _ in range(rng.randint(1, max_len))]
    fun = lift(f"n{0}", names[0], ["any"], ["any"])
    for i, name in enumerate(names[1:], 1):
        fun = then_pick(fun, lift(f"n{i}", name, ["any"], ["any"]))
    return names, fun


def random_fun(rng: random.Random, depth: int = 0) -> PSGraphFun:
    """Random well-formed combinator value (used for serialization and
    conservation corpora)."""
    types = ["any", "is_eq", "not is_eq"]
    if depth >= 2 or rng.random() < 0.45:
        n_in = rng.randint(1, 2)
        n_out = rng.randint(0, 2)
        return lift(rng.choice(["a", "b", "c"]),
                    rng.choice(["id", "intro", "refl", "induct",
                                "rewrite[add_0,add_S]"]),
                    [rng.choice(types) for _ in range(n_in)],
                    [rng.choice(types) for _ in range(n_out)])
    kind = rng.choice(["then", "tensor", "nest", "orelse", "or"])
    if kind == "then":
        return then_pick(random_fun(rng, depth + 1), random_fun(rng, depth + 1))
    if kind == "tensor":
        return tensor(random_fun(rng, depth + 1), random_fun(rng, depth + 1))
    if kind == "nest":
        return nest("sub", random_fun(rng, depth + 1))
    child = lift("alt", rng.choice(["id", "refl"]), ["any"], ["any"])
    other = lift("alt", rng.choice(["intro", "id"]), ["any"], ["any"])
    comb = or_comb if kind == "or" else orelse_comb
    return comb("choice", child, other)


def random_psgraph(rng: random.Random):
    return apply_fun(random_fun(rng))
