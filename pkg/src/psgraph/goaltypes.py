"""Goal-type language: `;`-separated predicate clauses with `not`/`or`.

Grammar (or binds tighter than `;`, not binds tighter than or):

    gt     := clause (';' clause)*
    clause := 'not'? atom ('or' 'not'? atom)*
    atom   := ident ('(' arg (',' arg)* ')')?

A goal type gates which edges a goal may travel: matching succeeds iff
every clause holds for the goal.  Predicates are looked up by name in a
registry; a predicate may attach annotation updates to the goal node it
returns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .prover import Context, Pnode


class GoalTypeError(Exception):
    pass


class ParseError(GoalTypeError):
    def __init__(self, position: int, expected: str):
        super().__init__(f"parse error at {position}: expected {expected}")
        self.position = position
        self.expected = expected


class UnknownPredicate(GoalTypeError):
    pass


class DuplicatePredicate(GoalTypeError):
    pass


# ---------------------------------------------------------------------------
# Syntax


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return self.pred if not self.args else f"{self.pred}({', '.join(self.args)})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else str(self.atom)


@dataclass(frozen=True)
class Clause:
    """Disjunction of literals; a singleton clause is a bare (negated) atom."""
    literals: tuple[Literal, ...]

    def __str__(self) -> str:
        return " or ".join(str(lit) for lit in self.literals)


@dataclass(frozen=True)
class GoalType:
    """Conjunction of clauses."""
    clauses: tuple[Clause, ...]

    def __str__(self) -> str:
        return "; ".join(str(c) for c in self.clauses)


_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<sym>[(),;]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            if text[i:].strip() == "":
                break
            raise ParseError(i, "identifier or punctuation")
        if m.group("ident"):
            out.append(("ident", m.group("ident"), m.start("ident")))
        else:
            out.append(("sym", m.group("sym"), m.start("sym")))
        i = m.end()
    return out


class _P:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, value=None, kind=None):
        tok = self.peek()
        if tok is None or (value is not None and tok[1] != value) \
                or (kind is not None and tok[0] != kind):
            pos = tok[2] if tok else len(self.text)
            raise ParseError(pos, value or kind or "token")
        self.i += 1
        return tok

    def at_ident(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "ident" and tok[1] == word


def _parse_atom(p: _P) -> Atom:
    tok = p.take(kind="ident")
    if tok[1] in ("not", "or"):
        raise ParseError(tok[2], "predicate name")
    args: list[str] = []
    if p.peek() is not None and p.peek()[1] == "(":
        p.take("(")
        args.append(p.take(kind="ident")[1])
        while p.peek() is not None and p.peek()[1] == ",":
            p.take(",")
            args.append(p.take(kind="ident")[1])
        p.take(")")
    return Atom(tok[1], tuple(args))


def _parse_literal(p: _P) -> Literal:
    negated = False
    while p.at_ident("not"):
        p.take("not")
        negated = not negated
    return Literal(_parse_atom(p), negated)


def _parse_clause(p: _P) -> Clause:
    lits = [_parse_literal(p)]
    while p.at_ident("or"):
        p.take("or")
        lits.append(_parse_literal(p))
    return Clause(tuple(lits))


def parse_goaltype(text: str) -> GoalType:
    p = _P(text)
    if p.peek() is None:
        raise ParseError(0, "goal type")
    clauses = [_parse_clause(p)]
    while p.peek() is not None and p.peek()[1] == ";":
        p.take(";")
        clauses.append(_parse_clause(p))
    if p.peek() is not None:
        raise ParseError(p.peek()[2], "end of input")
    return GoalType(tuple(clauses))


def normalize(gt: GoalType) -> GoalType:
    clauses = []
    for c in gt.clauses:
        clauses.append(Clause(tuple(sorted(set(c.literals), key=str))))
    return GoalType(tuple(sorted(set(clauses), key=str)))


def comparable(a: GoalType, b: GoalType) -> bool:
    """Goal types are comparable (pluggable) iff normalized-equal."""
    return normalize(a) == normalize(b)


# ---------------------------------------------------------------------------
# Goal nodes and matching


@dataclass(frozen=True)
class Gnode:
    """Serializable token for an open goal in transit on an edge."""
    goal_text: str
    pnode_key: str
    annotations: tuple[tuple[str, str], ...] = ()

    def annotation_dict(self) -> dict[str, str]:
        return dict(self.annotations)


# A matcher inspects the goal and either fails (None) or succeeds with a
# (possibly empty) set of annotation updates.
Matcher = Callable[[Gnode, Sequence[str], Pnode, Context], Optional[dict[str, str]]]


@dataclass(frozen=True)
class PredicateRegistry:
    matchers: tuple[tuple[str, Matcher], ...] = ()

    def lookup(self, name: str) -> Matcher:
        for n, m in self.matchers:
            if n == name:
                return m
        raise UnknownPredicate(name)

    def names(self) -> list[str]:
        return [n for n, _ in self.matchers]


def register_predicate(reg: PredicateRegistry, name: str,
                       matcher: Matcher) -> PredicateRegistry:
    if name in reg.names():
        raise DuplicatePredicate(name)
    return PredicateRegistry(reg.matchers + ((name, matcher),))


def _eval_literal(lit: Literal, prev: Gnode, p: Pnode, ctx: Context,
                  reg: PredicateRegistry) -> Optional[dict[str, str]]:
    matcher = reg.lookup(lit.atom.pred)
    result = matcher(prev, lit.atom.args, p, ctx)
    if lit.negated:
        return {} if result is None else None
    return result


def explain_match(prev: Gnode, gt: GoalType, p: Pnode, ctx: Context,
                  reg: PredicateRegistry) -> tuple[Optional[Gnode], Optional[str]]:
    """Like match_goal but also reports the first failing clause."""
    updates: dict[str, str] = {}
    for clause in gt.clauses:
        hit = None
        for lit in clause.literals:
            hit = _eval_literal(lit, prev, p, ctx, reg)
            if hit is not None:
                break
        if hit is None:
            return None, str(clause)
        updates.update(hit)
    merged = prev.annotation_dict()
    merged.update(updates)
    gnode = Gnode(goal_text=p.text(), pnode_key=p.id,
                  annotations=tuple(sorted(merged.items())))
    return gnode, None


def match_goal(prev: Gnode, gt: GoalType, p: Pnode, ctx: Context,
               reg: PredicateRegistry) -> Optional[Gnode]:
    """Return a fresh goal node for ``p`` iff every clause of ``gt`` holds;
    ``prev`` is the goal node that generated ``p``."""
    gnode, _ = explain_match(prev, gt, p, ctx, reg)
    return gnode


# ---------------------------------------------------------------------------
# Built-in predicates


def _pred_any(prev, args, p, ctx):
    return {}


def _pred_top_symbol(prev, args, p, ctx):
    from .terms import Eq, Forall, Imp
    sym = {Forall: "forall", Imp: "imp", Eq: "eq"}[type(p.conclusion)]
    return {} if args and args[0] == sym else None


def _pred_has_hyp(prev, args, p, ctx):
    return {} if p.hypotheses else None


def _pred_hyp_embeds(prev, args, p, ctx):
    from .terms import embeds
    return {} if any(embeds(h, p.conclusion) for h in p.hypotheses) else None


def _pred_is_eq(prev, args, p, ctx):
    from .terms import Eq
    return {} if isinstance(p.conclusion, Eq) else None


def _pred_is_imp(prev, args, p, ctx):
    from .terms import Imp
    return {} if isinstance(p.conclusion, Imp) else None


def _pred_closed(prev, args, p, ctx):
    # Trivially dischargeable: reflexive equation or a matching hypothesis.
    from .prover import _trivial
    ok = _trivial(p.conclusion) or p.conclusion in p.hypotheses
    return {} if ok else None


def default_registry() -> PredicateRegistry:
    reg = PredicateRegistry()
    for name, matcher in [
        ("any", _pred_any),
        ("top_symbol", _pred_top_symbol),
        ("has_hyp", _pred_has_hyp),
        ("hyp_embeds", _pred_hyp_embeds),
        ("is_eq", _pred_is_eq),
        ("is_imp", _pred_is_imp),
        ("closed", _pred_closed),
    ]:
        reg = register_predicate(reg, name, matcher)
    return reg
