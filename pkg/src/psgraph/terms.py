"""Peano terms and sequent-style propositions for the built-in prover.

Concrete syntax:  ``0``, ``S t``, ``t + u``, ``t * u``, ``t = u``,
``P ==> Q``, ``!x. P``, with parentheses.  ``S`` binds tightest, then
``*``, then ``+``, then ``=``, then ``==>`` (right associative); ``!x.``
scopes to the end of its sub-expression.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union


class TermParseError(ValueError):
    def __init__(self, position: int, expected: str):
        super().__init__(f"parse error at {position}: expected {expected}")
        self.position = position
        self.expected = expected


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Succ:
    arg: "Term"


@dataclass(frozen=True)
class Plus:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Times:
    left: "Term"
    right: "Term"


Term = Union[Var, Zero, Succ, Plus, Times]


# ---------------------------------------------------------------------------
# Propositions


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Imp:
    ante: "Prop"
    cons: "Prop"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Prop"


Prop = Union[Eq, Imp, Forall]


# ---------------------------------------------------------------------------
# Printing


def term_to_str(t: Term, prec: int = 0) -> str:
    # prec levels: 0 sum, 1 product, 2 atom-ish
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, Succ):
        return f"S {term_to_str(t.arg, 2)}"
    if isinstance(t, Plus):
        s = f"{term_to_str(t.left, 1)} + {term_to_str(t.right, 0)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, Times):
        s = f"{term_to_str(t.left, 2)} * {term_to_str(t.right, 1)}"
        return f"({s})" if prec > 1 else s
    raise TypeError(t)


def prop_to_str(p: Prop) -> str:
    if isinstance(p, Eq):
        return f"{term_to_str(p.left)} = {term_to_str(p.right)}"
    if isinstance(p, Imp):
        ante = prop_to_str(p.ante)
        if isinstance(p.ante, (Imp, Forall)):
            ante = f"({ante})"
        return f"{ante} ==> {prop_to_str(p.cons)}"
    if isinstance(p, Forall):
        return f"!{p.var}. {prop_to_str(p.body)}"
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Parsing


class _Lexer:
    SYMS = ("==>", "+", "*", "=", "!", ".", "(", ")")

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []  # (kind, value, pos)
        self._lex()
        self.idx = 0

    def _lex(self) -> None:
        text, i = self.text, 0
        while i < len(text):
            c = text[i]
            if c.isspace():
                i += 1
                continue
            for sym in self.SYMS:
                if text.startswith(sym, i):
                    self.tokens.append(("sym", sym, i))
                    i += len(sym)
                    break
            else:
                if c == "0":
                    self.tokens.append(("zero", "0", i))
                    i += 1
                elif c.isalpha() or c == "_":
                    j = i
                    while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                        j += 1
                    self.tokens.append(("ident", text[i:j], i))
                    i = j
                else:
                    raise TermParseError(i, "token")

    def peek(self) -> Optional[tuple[str, str, int]]:
        return self.tokens[self.idx] if self.idx < len(self.tokens) else None

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise TermParseError(len(self.text), "more input")
        self.idx += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.peek()
        if tok is None or tok[1] != value:
            raise TermParseError(tok[2] if tok else len(self.text), repr(value))
        self.idx += 1

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[1] == value


def _parse_atom(lx: _Lexer) -> Term:
    tok = lx.peek()
    if tok is None:
        raise TermParseError(len(lx.text), "term")
    kind, value, pos = tok
    if value == "(":
        lx.next()
        t = _parse_sum(lx)
        lx.expect(")")
        return t
    if kind == "zero":
        lx.next()
        return Zero()
    if kind == "ident" and value != "S":
        lx.next()
        return Var(value)
    raise TermParseError(pos, "term")


def _parse_app(lx: _Lexer) -> Term:
    tok = lx.peek()
    if tok is not None and tok[0] == "ident" and tok[1] == "S":
        lx.next()
        return Succ(_parse_app(lx))
    return _parse_atom(lx)


def _parse_prod(lx: _Lexer) -> Term:
    t = _parse_app(lx)
    if lx.at("*"):
        lx.next()
        return Times(t, _parse_prod(lx))
    return t


def _parse_sum(lx: _Lexer) -> Term:
    t = _parse_prod(lx)
    if lx.at("+"):
        lx.next()
        return Plus(t, _parse_sum(lx))
    return t


def _parse_prop(lx: _Lexer) -> Prop:
    if lx.at("!"):
        lx.next()
        tok = lx.next()
        if tok[0] != "ident":
            raise TermParseError(tok[2], "variable name")
        lx.expect(".")
        return Forall(tok[1], _parse_prop(lx))
    if lx.at("("):
        # Could be a parenthesized prop or a parenthesized term; try prop first.
        save = lx.idx
        lx.next()
        try:
            inner = _parse_prop(lx)
            lx.expect(")")
            if lx.at("==>"):
                lx.next()
                return Imp(inner, _parse_prop(lx))
            if lx.peek() is None or lx.at(")"):
                return inner
        except TermParseError:
            pass
        lx.idx = save
    left = _parse_sum(lx)
    lx.expect("=")
    right = _parse_sum(lx)
    eq = Eq(left, right)
    if lx.at("==>"):
        lx.next()
        return Imp(eq, _parse_prop(lx))
    return eq


def parse_term(text: str) -> Term:
    lx = _Lexer(text)
    t = _parse_sum(lx)
    tok = lx.peek()
    if tok is not None:
        raise TermParseError(tok[2], "end of input")
    return t


def parse_prop(text: str) -> Prop:
    lx = _Lexer(text)
    p = _parse_prop(lx)
    tok = lx.peek()
    if tok is not None:
        raise TermParseError(tok[2], "end of input")
    return p


# ---------------------------------------------------------------------------
# Variables and substitution


def free_vars(x: Union[Term, Prop]) -> set[str]:
    if isinstance(x, Var):
        return {x.name}
    if isinstance(x, Zero):
        return set()
    if isinstance(x, Succ):
        return free_vars(x.arg)
    if isinstance(x, (Plus, Times)):
        return free_vars(x.left) | free_vars(x.right)
    if isinstance(x, Eq):
        return free_vars(x.left) | free_vars(x.right)
    if isinstance(x, Imp):
        return free_vars(x.ante) | free_vars(x.cons)
    if isinstance(x, Forall):
        return free_vars(x.body) - {x.var}
    raise TypeError(x)


def subst_term(t: Term, var: str, repl: Term) -> Term:
    if isinstance(t, Var):
        return repl if t.name == var else t
    if isinstance(t, Zero):
        return t
    if isinstance(t, Succ):
        return Succ(subst_term(t.arg, var, repl))
    if isinstance(t, Plus):
        return Plus(subst_term(t.left, var, repl), subst_term(t.right, var, repl))
    if isinstance(t, Times):
        return Times(subst_term(t.left, var, repl), subst_term(t.right, var, repl))
    raise TypeError(t)


def subst_prop(p: Prop, var: str, repl: Term) -> Prop:
    if isinstance(p, Eq):
        return Eq(subst_term(p.left, var, repl), subst_term(p.right, var, repl))
    if isinstance(p, Imp):
        return Imp(subst_prop(p.ante, var, repl), subst_prop(p.cons, var, repl))
    if isinstance(p, Forall):
        if p.var == var:
            return p  # shadowed
        if p.var in free_vars(repl):
            fresh = fresh_name(p.var, free_vars(repl) | free_vars(p.body))
            body = subst_prop(p.body, p.var, Var(fresh))
            return Forall(fresh, subst_prop(body, var, repl))
        return Forall(p.var, subst_prop(p.body, var, repl))
    raise TypeError(p)


def fresh_name(base: str, avoid: set[str]) -> str:
    if base not in avoid:
        return base
    n = 1
    while f"{base}{n}" in avoid:
        n += 1
    return f"{base}{n}"


# ---------------------------------------------------------------------------
# First-order matching


def match_term(pattern: Term, target: Term, patvars: Optional[set[str]] = None,
               subst: Optional[dict[str, Term]] = None) -> Optional[dict[str, Term]]:
    """Match ``target`` against ``pattern``; variables of the pattern (or the
    restricted ``patvars`` set) may be consistently instantiated."""
    if subst is None:
        subst = {}
    if isinstance(pattern, Var) and (patvars is None or pattern.name in patvars):
        bound = subst.get(pattern.name)
        if bound is None:
            subst = dict(subst)
            subst[pattern.name] = target
            return subst
        return subst if bound == target else None
    if isinstance(pattern, Var):
        return subst if pattern == target else None
    if isinstance(pattern, Zero):
        return subst if isinstance(target, Zero) else None
    if isinstance(pattern, Succ):
        if not isinstance(target, Succ):
            return None
        return match_term(pattern.arg, target.arg, patvars, subst)
    if isinstance(pattern, (Plus, Times)):
        if type(pattern) is not type(target):
            return None
        subst2 = match_term(pattern.left, target.left, patvars, subst)
        if subst2 is None:
            return None
        return match_term(pattern.right, target.right, patvars, subst2)
    raise TypeError(pattern)


def apply_subst(t: Term, subst: dict[str, Term]) -> Term:
    """Simultaneous substitution (no chaining through replacement terms)."""
    if isinstance(t, Var):
        return subst.get(t.name, t)
    if isinstance(t, Zero):
        return t
    if isinstance(t, Succ):
        return Succ(apply_subst(t.arg, subst))
    if isinstance(t, Plus):
        return Plus(apply_subst(t.left, subst), apply_subst(t.right, subst))
    if isinstance(t, Times):
        return Times(apply_subst(t.left, subst), apply_subst(t.right, subst))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Positions and single-step rewriting

# A position addresses a subterm inside a Prop: a tuple of child indices,
# walking Eq/Imp/Forall/term constructors uniformly in preorder.


def _children(x: Union[Term, Prop]) -> list[Union[Term, Prop]]:
    if isinstance(x, (Var, Zero)):
        return []
    if isinstance(x, Succ):
        return [x.arg]
    if isinstance(x, (Plus, Times, Eq)):
        return [x.left, x.right]
    if isinstance(x, Imp):
        return [x.ante, x.cons]
    if isinstance(x, Forall):
        return [x.body]
    raise TypeError(x)


def _replace_child(x: Union[Term, Prop], i: int, child) :
    if isinstance(x, Succ):
        return Succ(child)
    if isinstance(x, Plus):
        return Plus(child, x.right) if i == 0 else Plus(x.left, child)
    if isinstance(x, Times):
        return Times(child, x.right) if i == 0 else Times(x.left, child)
    if isinstance(x, Eq):
        return Eq(child, x.right) if i == 0 else Eq(x.left, child)
    if isinstance(x, Imp):
        return Imp(child, x.cons) if i == 0 else Imp(x.ante, child)
    if isinstance(x, Forall):
        return Forall(x.var, child)
    raise TypeError(x)


def term_positions(x: Union[Term, Prop]) -> Iterator[tuple[tuple[int, ...], Term]]:
    """All term-valued positions in preorder (leftmost-outermost)."""
    def walk(node, path):
        if isinstance(node, (Var, Zero, Succ, Plus, Times)):
            yield path, node
        for i, child in enumerate(_children(node)):
            yield from walk(child, path + (i,))
    yield from walk(x, ())


def replace_at(x: Union[Term, Prop], path: tuple[int, ...], repl: Term):
    if not path:
        return repl
    i = path[0]
    return _replace_child(x, i, replace_at(_children(x)[i], path[1:], repl))


def rewrite_everywhere(p: Prop, lhs: Term, rhs: Term, patvars: set[str]) -> Prop:
    """Exhaustively rewrite lhs->rhs occurrences in ``p`` (terminating use only)."""
    changed = True
    while changed:
        changed = False
        for path, sub in term_positions(p):
            subst = match_term(lhs, sub, patvars)
            if subst is not None:
                p = replace_at(p, path, apply_subst(rhs, subst))
                changed = True
                break
    return p


# ---------------------------------------------------------------------------
# Homeomorphic embedding


def _label(x: Union[Term, Prop]) -> str:
    if isinstance(x, Var):
        return f"var:{x.name}"
    if isinstance(x, Forall):
        return f"forall:{x.var}"
    return type(x).__name__


def embeds(skel: Union[Term, Prop], t: Union[Term, Prop]) -> bool:
    """Order-preserving homeomorphic tree embedding of ``skel`` into ``t``."""
    if _label(skel) == _label(t):
        ks, ts = _children(skel), _children(t)
        if len(ks) == len(ts) and all(embeds(k, u) for k, u in zip(ks, ts)):
            return True
    return any(embeds(skel, u) for u in _children(t))


def tree_size(x: Union[Term, Prop]) -> int:
    return 1 + sum(tree_size(c) for c in _children(x))
