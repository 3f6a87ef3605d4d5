"""Equational simplification to canonical normal form modulo B.

Reduction is leftmost-innermost: arguments are normalized before the
parent is examined, which keeps trace step counts reproducible.
Equations are tried in declaration order, non-owise before owise; the
first successful match whose condition holds fires.  Memberships refine
sorts of normal forms only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .matching import Matcher, MatchResult
from .modules import (EqualityFragment, MatchFragment, RewriteFragment,
                      SortFragment, TheoryModule)
from .printing import pretty, pretty_statement
from .terms import (App, Substitution, Term, Var, apply_subst, canonicalize,
                    least_sort)


class EngineLimit(Exception):
    pass


@dataclass
class EngineLimits:
    max_rewrites: int = 1_000_000
    membership_depth: int = 64
    inner_search_depth: int = 10_000


@dataclass
class TraceStep:
    statement: object
    subst: Substitution
    redex: Term
    contractum: Term


class RewriteEngine:
    """Evaluator for one module: reduce, memberships, condition solving."""

    def __init__(self, module: TheoryModule, limits: EngineLimits | None = None):
        self.module = module
        self.sig = module.signature
        self.limits = limits or EngineLimits()
        self.matcher = Matcher(module, sorter=self.sort_of)
        self.normal_forms: dict[Term, Term] = {}
        self.sort_cache: dict[Term, object] = {}
        self.rewrite_count = 0
        self.trace: list[TraceStep] | None = None
        self.print_attribute = False
        self.print_lines: list[str] = []
        self._mb_depth = 0
        self._index_equations()

    def _index_equations(self):
        self.eqs_by_op: dict[int, list] = {}
        self.eqs_by_kind: dict[int, list] = {}
        for eq in self.module.equations:
            if eq.nonexec:
                continue
            lhs = eq.lhs
            if type(lhs) is Var:
                self.eqs_by_kind.setdefault(id(lhs.sort.kind), []).append(eq)
            elif lhs.op.has_any_identity:
                self.eqs_by_kind.setdefault(
                    id(lhs.op.result_kind), []).append(eq)
            else:
                self.eqs_by_op.setdefault(id(lhs.op), []).append(eq)
        self.mbs_by_kind: dict[int, list] = {}
        for mb in self.module.memberships:
            if mb.nonexec:
                continue
            self.mbs_by_kind.setdefault(id(mb.sort.kind), []).append(mb)

    # -- public ------------------------------------------------------------------
    def reduce(self, term: Term) -> Term:
        # normalization walks the given (possibly raw) tree bottom-up, so
        # trace step order follows the unflattened input structure
        return self._normalize(term)

    def reduce_with_count(self, term: Term):
        before = self.rewrite_count
        nf = self.reduce(term)
        return nf, self.rewrite_count - before

    def sort_of(self, term: Term):
        """Least sort refined by (conditional) memberships; for normal forms."""
        cached = self.sort_cache.get(term)
        if cached is not None:
            return cached
        ls = least_sort(self.sig, term)
        if self._mb_depth >= self.limits.membership_depth:
            return ls
        candidates = self.mbs_by_kind.get(id(ls.kind), ())
        if candidates:
            self._mb_depth += 1
            try:
                best = ls
                changed = True
                while changed:
                    changed = False
                    for mb in candidates:
                        refines = (self.sig.leq(mb.sort, best)
                                   and mb.sort is not best)
                        if refines and self._membership_applies(mb, term):
                            best = mb.sort
                            changed = True
            finally:
                self._mb_depth -= 1
            ls = best
        self.sort_cache[term] = ls
        return ls

    def _membership_applies(self, mb, term) -> bool:
        for m in self.matcher.match_all(mb.term, term, extension=False):
            for _theta in self.eval_condition(mb.condition, m.subst):
                return True
        return False

    def apply_memberships(self, term: Term):
        """Sort of an equational normal form, memberships included."""
        return self.sort_of(term)

    # -- reduction ----------------------------------------------------------------
    def _normalize(self, term: Term) -> Term:
        if type(term) is Var:
            return term
        hit = self.normal_forms.get(term)
        if hit is not None:
            return hit
        current = term
        while True:
            current = self._normalize_args(current)
            step = self._rewrite_top(current)
            if step is None:
                break
            current = canonicalize(self.sig, step)
        self.normal_forms[term] = current
        self.normal_forms[current] = current
        return current

    def _normalize_args(self, term: Term) -> Term:
        if type(term) is Var:
            return term
        if not term.args:
            return canonicalize(self.sig, term)
        op = term.op
        if op.attrs.special == "builtin.if":
            cond = self._normalize(term.args[0])
            name = self._const_name(cond)
            if name == "true":
                self._count_rewrite()
                return self._normalize(term.args[1])
            if name == "false":
                self._count_rewrite()
                return self._normalize(term.args[2])
            args = (cond,) + tuple(self._normalize(a) for a in term.args[1:])
            return canonicalize(self.sig, App(op, args))
        new_args = tuple(self._normalize(a) for a in term.args)
        return canonicalize(self.sig, App(op, new_args))

    @staticmethod
    def _const_name(term):
        if type(term) is App and not term.args:
            return term.op.pattern[0]
        return None

    def _count_rewrite(self):
        self.rewrite_count += 1
        if self.rewrite_count > self.limits.max_rewrites:
            raise EngineLimit(
                f"rewrite limit of {self.limits.max_rewrites} exceeded")

    def _rewrite_top(self, term: Term):
        """One equational rewrite at the top of ``term`` (args normal)."""
        if type(term) is Var:
            return None
        special = term.op.attrs.special
        if special is not None:
            result = self._builtin(special, term)
            if result is not None:
                self._count_rewrite()
                return result
        candidates = list(self.eqs_by_op.get(id(term.op), ()))
        kind = least_sort(self.sig, term).kind
        candidates += [eq for eq in self.eqs_by_kind.get(id(kind), ())
                       if eq not in candidates]
        candidates.sort(key=lambda e: (e.owise, e.index))
        for eq in candidates:
            hit = self._try_statement(eq, term)
            if hit is not None:
                return hit
        return None

    def _try_statement(self, eq, term):
        matches = self.matcher.match_all(eq.lhs, term, extension=True)
        for m in matches:
            for theta in self.eval_condition(eq.condition, m.subst):
                self._count_rewrite()
                replacement = apply_subst(self.sig, eq.rhs, theta)
                if self.trace is not None:
                    self.trace.append(TraceStep(
                        statement=eq, subst=theta,
                        redex=apply_subst(self.sig, eq.lhs, theta),
                        contractum=replacement))
                if eq.print_spec and self.print_attribute:
                    self.emit_print(eq.print_spec, theta)
                if m.has_residue:
                    return self.matcher.rebuild(term.op, replacement, m)
                return replacement
        return None

    # -- builtins ------------------------------------------------------------------
    def _nat_value(self, term):
        if type(term) is App and not term.args and term.op.pattern[0].isdigit():
            return int(term.op.pattern[0])
        return None

    def _nat(self, value: int):
        return App(self.module.nat_literal(value), ())

    def _bool(self, value: bool):
        name = "true" if value else "false"
        for op in self.sig.operators:
            if op.arity == 0 and op.pattern[0] == name:
                return App(op, ())
        raise EngineLimit("BOOL not available")

    def _builtin(self, special, term):
        if special == "builtin.eq" or special == "builtin.neq":
            a, b = term.args
            equal = a == b
            return self._bool(equal if special == "builtin.eq" else not equal)
        if special == "builtin.sorttest":
            target = self.module.sort_named(dict(term.op.attrs.extra)["sorttest"])
            return self._bool(self.sig.leq(self.sort_of(term.args[0]), target))
        if special.startswith("nat."):
            vals = [self._nat_value(a) for a in term.args]
            if any(v is None for v in vals):
                return None
            if special == "nat.s":
                return self._nat(vals[0] + 1)
            if special == "nat.plus":
                return self._nat(sum(vals))
            if special == "nat.times":
                out = 1
                for v in vals:
                    out *= v
                return self._nat(out)
            if special == "nat.lt":
                return self._bool(vals[0] < vals[1])
            if special == "nat.le":
                return self._bool(vals[0] <= vals[1])
            if special == "nat.gt":
                return self._bool(vals[0] > vals[1])
            if special == "nat.ge":
                return self._bool(vals[0] >= vals[1])
            if special == "nat.max":
                return self._nat(max(vals))
            if special == "nat.min":
                return self._nat(min(vals))
            if special == "nat.sd":
                return self._nat(abs(vals[0] - vals[1]))
        return None

    # -- condition evaluation ----------------------------------------------------------
    def eval_condition(self, condition, theta: Substitution):
        """Extended substitutions solving the fragments left to right."""
        if not condition:
            yield theta
            return
        frag, rest = condition[0], condition[1:]
        if isinstance(frag, EqualityFragment):
            lhs = self.reduce(apply_subst(self.sig, frag.lhs, theta))
            rhs = self.reduce(apply_subst(self.sig, frag.rhs, theta))
            if lhs == rhs:
                yield from self.eval_condition(rest, theta)
        elif isinstance(frag, MatchFragment):
            value = self.reduce(apply_subst(self.sig, frag.value, theta))
            pattern = apply_subst(self.sig, frag.pattern, theta)
            for m in self.matcher.match_all(pattern, value, extension=False):
                merged = theta.copy()
                merged.bindings.update(m.subst.bindings)
                yield from self.eval_condition(rest, merged)
        elif isinstance(frag, SortFragment):
            value = self.reduce(apply_subst(self.sig, frag.term, theta))
            if self.sig.leq(self.sort_of(value), frag.sort):
                yield from self.eval_condition(rest, theta)
        elif isinstance(frag, RewriteFragment):
            source = self.reduce(apply_subst(self.sig, frag.source, theta))
            target = apply_subst(self.sig, frag.target, theta)
            for ext in self.solve_rewrite_fragment(source, target):
                merged = theta.copy()
                merged.bindings.update(ext.bindings)
                yield from self.eval_condition(rest, merged)
        else:
            raise EngineLimit(f"unknown condition fragment {frag!r}")

    def solve_rewrite_fragment(self, source: Term, target: Term):
        """Reachability condition: overridden by the rule engine."""
        raise EngineLimit(
            "rewrite conditions require a system-module engine")

    # -- tracing -------------------------------------------------------------------------
    def trace_reduce(self, term: Term):
        """Reduce with a §-style transcript; returns (normal form, text)."""
        self.trace = []
        self.normal_forms.clear()  # the memo would skip traced steps
        before = self.rewrite_count
        try:
            nf = self.reduce(term)
        finally:
            steps, self.trace = self.trace, None
        lines = []
        for st in steps:
            lines.append("*********** equation")
            lines.append(pretty_statement(self.module, st.statement))
            for v, t in st.subst.items():
                lines.append(f"{v.name} --> {pretty(self.module, t)}")
            lines.append(pretty(self.module, st.redex))
            lines.append("--->")
            lines.append(pretty(self.module, st.contractum))
        lines.append(f"rewrites: {self.rewrite_count - before}")
        return nf, "\n".join(lines)

    def emit_print(self, spec, theta: Substitution):
        by_name = {v.name: t for v, t in theta.bindings.items()}
        parts = []
        for kind, value in spec:
            if kind == "text":
                parts.append(value)
            else:
                bound = by_name.get(value)
                parts.append(pretty(self.module, bound)
                             if bound is not None else value)
        self.print_lines.append("".join(parts))
