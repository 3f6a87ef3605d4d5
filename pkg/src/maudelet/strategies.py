"""The strategy language: expression syntax and its interpreters.

``srewrite`` explores the strategy execution tree fairly (round-robin
over explicit continuations) so every finitely reachable solution is
eventually emitted; ``dsrewrite`` is strict depth-first, left to right.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections import deque

from .lexer import Token
from .terms import App, Substitution, Term, Var, canonicalize, vars_of


# -- expression syntax ---------------------------------------------------------

class StrategyExpr:
    pass


@dataclass(frozen=True)
class Idle(StrategyExpr):
    pass


@dataclass(frozen=True)
class Fail(StrategyExpr):
    pass


@dataclass(frozen=True)
class Apply(StrategyExpr):
    label: str
    bindings: tuple  # ((var name, Term), ...)
    cond_strats: tuple
    top: bool = False


@dataclass(frozen=True)
class Test(StrategyExpr):
    scope: str  # 'match' | 'xmatch' | 'amatch'
    pattern: Term
    condition: tuple


@dataclass(frozen=True)
class Seq(StrategyExpr):
    first: StrategyExpr
    second: StrategyExpr


@dataclass(frozen=True)
class Alt(StrategyExpr):
    left: StrategyExpr
    right: StrategyExpr


@dataclass(frozen=True)
class Star(StrategyExpr):
    body: StrategyExpr


@dataclass(frozen=True)
class Cond(StrategyExpr):
    test: StrategyExpr
    positive: StrategyExpr
    negative: StrategyExpr


@dataclass(frozen=True)
class MatchRew(StrategyExpr):
    scope: str
    pattern: Term
    condition: tuple
    clauses: tuple  # ((Var, StrategyExpr), ...)


@dataclass(frozen=True)
class Call(StrategyExpr):
    name: str
    args: tuple


IDLE = Idle()
FAIL = Fail()


def negation(expr: StrategyExpr) -> StrategyExpr:
    return Cond(expr, FAIL, IDLE)


def normalization(expr: StrategyExpr) -> StrategyExpr:
    return Seq(Star(expr), negation(expr))


# -- expression parsing ----------------------------------------------------------

_STOP = {"?", ":", ";", "|", ",", "by", "using", "s.t.", "or-else",
         "*", "!", "+", "}"}

TEST_KEYWORDS = {"match", "xmatch", "amatch"}
MATCHREW_KEYWORDS = {"matchrew": "match", "xmatchrew": "xmatch",
                     "amatchrew": "amatch"}


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos].text if self.pos < len(self.tokens) else None

    def next(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text):
        from .parser import ParseError
        if self.peek() != text:
            raise ParseError(f"expected {text!r} in strategy expression",
                             self.tokens[min(self.pos, len(self.tokens) - 1)])
        return self.next()

    def scan_balanced(self, stop_tokens):
        """Tokens up to an unnested stop token or unbalanced closer."""
        from .parser import OPEN, CLOSE
        out = []
        depth = 0
        while self.pos < len(self.tokens):
            t = self.tokens[self.pos]
            if t.text in OPEN:
                depth += 1
            elif t.text in CLOSE:
                if depth == 0:
                    break
                depth -= 1
            elif depth == 0 and t.text in stop_tokens:
                break
            out.append(t)
            self.pos += 1
        return out


def parse_strategy_expr(term_parser, tokens: list[Token]) -> StrategyExpr:
    cur = _Cursor(tokens)
    expr = _parse_cond(term_parser, cur)
    if cur.pos != len(tokens):
        from .parser import ParseError
        raise ParseError("trailing tokens in strategy expression",
                         tokens[cur.pos])
    return expr


def _parse_cond(tp, cur) -> StrategyExpr:
    a = _parse_alt(tp, cur)
    if cur.peek() == "?":
        cur.next()
        b = _parse_alt(tp, cur)
        cur.expect(":")
        c = _parse_cond(tp, cur)
        return Cond(a, b, c)
    while cur.peek() == "or-else":
        cur.next()
        b = _parse_alt(tp, cur)
        a = Cond(a, IDLE, b)
    return a


def _parse_alt(tp, cur) -> StrategyExpr:
    a = _parse_seq(tp, cur)
    while cur.peek() == "|":
        cur.next()
        a = Alt(a, _parse_seq(tp, cur))
    return a


def _parse_seq(tp, cur) -> StrategyExpr:
    a = _parse_post(tp, cur)
    while cur.peek() == ";":
        cur.next()
        a = Seq(a, _parse_post(tp, cur))
    return a


def _parse_post(tp, cur) -> StrategyExpr:
    a = _parse_primary(tp, cur)
    while cur.peek() in ("*", "!", "+"):
        mark = cur.next().text
        if mark == "*":
            a = Star(a)
        elif mark == "+":
            a = Seq(a, Star(a))
        else:
            a = normalization(a)
    return a


def _parse_primary(tp, cur) -> StrategyExpr:
    from .parser import ParseError, parse_condition
    t = cur.peek()
    if t is None:
        raise ParseError("missing strategy expression",
                         cur.tokens[-1] if cur.tokens else None)
    if t == "(":
        cur.next()
        inner = _parse_cond(tp, cur)
        cur.expect(")")
        return inner
    if t == "idle":
        cur.next()
        return IDLE
    if t == "fail":
        cur.next()
        return FAIL
    if t == "not":
        cur.next()
        cur.expect("(")
        inner = _parse_cond(tp, cur)
        cur.expect(")")
        return negation(inner)
    if t == "top":
        cur.next()
        cur.expect("(")
        inner = _parse_cond(tp, cur)
        cur.expect(")")
        if isinstance(inner, Apply):
            return Apply(inner.label, inner.bindings, inner.cond_strats, True)
        raise ParseError("top(...) requires a rule application",
                         cur.tokens[cur.pos - 1])
    if t in TEST_KEYWORDS:
        cur.next()
        pat_tokens = cur.scan_balanced(_STOP | {"s.t."})
        pattern = tp.parse(pat_tokens)
        condition = ()
        if cur.peek() == "s.t.":
            cur.next()
            cond_tokens = cur.scan_balanced(_STOP - {":"})
            condition = parse_condition(tp, cond_tokens)
        return Test(t, canonicalize(tp.sig, pattern), condition)
    if t in MATCHREW_KEYWORDS:
        scope = MATCHREW_KEYWORDS[t]
        cur.next()
        pat_tokens = cur.scan_balanced({"s.t.", "by"})
        pattern = tp.parse(pat_tokens)
        condition = ()
        if cur.peek() == "s.t.":
            cur.next()
            cond_tokens = cur.scan_balanced({"by"})
            condition = parse_condition(tp, cond_tokens)
        cur.expect("by")
        pattern = canonicalize(tp.sig, pattern)
        pat_vars = {v.name: v for v in vars_of(pattern)}
        clauses = []
        while True:
            name_tok = cur.next()
            var = pat_vars.get(name_tok.text)
            if var is None:
                raise ParseError(
                    f"matchrew variable {name_tok.text} does not occur "
                    f"in the pattern", name_tok)
            cur.expect("using")
            sub = _parse_cond(tp, cur)
            clauses.append((var, sub))
            if cur.peek() == ",":
                cur.next()
                continue
            break
        names = [v.name for v, _ in clauses]
        if len(set(names)) != len(names):
            raise ParseError("matchrew variables must be distinct", name_tok)
        return MatchRew(scope, pattern, condition, tuple(clauses))
    # rule application or strategy call
    name = cur.next().text
    bindings: tuple = ()
    cond_strats: tuple = ()
    if cur.peek() == "(" and name in tp.module.strategy_decls:
        cur.next()
        args = []
        if cur.peek() != ")":
            while True:
                arg_tokens = cur.scan_balanced({","})
                args.append(canonicalize(tp.sig, tp.parse(arg_tokens)))
                if cur.peek() == ",":
                    cur.next()
                    continue
                break
        cur.expect(")")
        return Call(name, tuple(args))
    if cur.peek() == "[":
        cur.next()
        pairs = []
        while True:
            var_tok = cur.next()
            cur.expect("<-")
            val_tokens = cur.scan_balanced({","})
            value = canonicalize(tp.sig, tp.parse(val_tokens))
            pairs.append((var_tok.text, value))
            if cur.peek() == ",":
                cur.next()
                continue
            break
        cur.expect("]")
        bindings = tuple(pairs)
    if cur.peek() == "{":
        cur.next()
        strats = []
        while True:
            strats.append(_parse_cond(tp, cur))
            if cur.peek() == ",":
                cur.next()
                continue
            break
        cur.expect("}")
        cond_strats = tuple(strats)
    if name in tp.module.strategy_decls and not bindings and not cond_strats:
        return Call(name, ())
    return Apply(name, bindings, cond_strats, False)
