"""Symbolic reachability by narrowing with narrowing-attributed rules,
modulo the equations and axioms; step unifiers come from variant
unification.  Implements the vu-narrow search with modes and bounds.

Associative operators with identity are not supported by built-in
B-unification, so narrowing modules are loaded in a compiled form where
each such identity becomes three variant equations (the load is
explicit: see ``narrowing_module``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .reduction import RewriteEngine
from .terms import (App, Substitution, Term, Var, apply_subst, canonicalize,
                    least_sort, vars_of)
from .variants import VariantEngine


@dataclass
class SymbolicState:
    term: Term
    acc: Substitution          # restricted to the query's variables
    depth: int
    index: int
    parent: int | None = None
    rule: object | None = None
    position: tuple = ()
    step_subst: Substitution | None = None


@dataclass
class ReachabilitySolution:
    state: SymbolicState
    goal_unifier: Substitution

    def combined(self, sig, query_vars) -> Substitution:
        out = {}
        for v in query_vars:
            t = apply_subst(sig, self.state.acc.get(v, v), self.goal_unifier)
            if t != v:
                out[v] = t
        return Substitution(out)


def narrowing_module(db, name: str):
    """The module in narrowing-compiled form (assoc+id turned into
    variant equations); built and cached separately from db.get."""
    cache = getattr(db, "_narrowing_built", None)
    if cache is None:
        cache = db._narrowing_built = {}
    if name not in cache:
        from .parser import build_module
        cache[name] = build_module(db.raw[name], db, compile_assoc_id=True)
    return cache[name]


class NarrowingEngine:
    def __init__(self, module, limits=None):
        self.module = module
        self.sig = module.signature
        self.engine = RewriteEngine(module, limits)
        self.variants = VariantEngine(module, self.engine)
        self.rules = [r for r in module.rules if r.narrowing]
        self._fresh = 0
        if not self.rules:
            raise ValueError(
                f"module {module.name} has no narrowing rules")

    # -- steps ------------------------------------------------------------------
    def _rename_rule(self, rule):
        mapping = {}
        for v in vars_of(rule.lhs) + vars_of(rule.rhs):
            if v not in mapping:
                self._fresh += 1
                mapping[v] = Var(f"%r{self._fresh}", v.sort)
        ren = Substitution(mapping)
        return (apply_subst(self.sig, rule.lhs, ren),
                apply_subst(self.sig, rule.rhs, ren))

    def narrow_rule_step(self, state: SymbolicState, query_vars):
        children = []
        for pos, node in _positions(state.term):
            node_kind = least_sort(self.sig, node).kind
            for rule in self.rules:
                lhs_kind = (rule.lhs.sort.kind if type(rule.lhs) is Var
                            else rule.lhs.op.result_kind)
                if lhs_kind is not node_kind:
                    continue
                lhs, rhs = self._rename_rule(rule)
                for sigma in self.variants.variant_unify(node, lhs):
                    sigma = self._freshen(sigma)
                    replaced = _replace(state.term, pos, rhs)
                    new_term = self.engine.reduce(
                        apply_subst(self.sig, replaced, sigma))
                    acc = state.acc.compose(self.sig, sigma)
                    acc = Substitution({
                        v: acc.get(v, sigma.get(v, v))
                        for v in query_vars})
                    children.append(SymbolicState(
                        term=new_term, acc=acc, depth=state.depth + 1,
                        index=-1, parent=state.index, rule=rule,
                        position=pos, step_subst=sigma))
        return children

    def _freshen(self, sigma: Substitution) -> Substitution:
        """Give the step unifier's fresh variables globally unique names."""
        mapping = {}
        for t in sigma.bindings.values():
            for w in vars_of(t):
                if w.name.startswith("%") and w not in mapping:
                    self._fresh += 1
                    mapping[w] = Var(f"%{self._fresh}", w.sort)
        if not mapping:
            return sigma
        ren = Substitution(mapping)
        return Substitution({
            v: apply_subst(self.sig, t, ren)
            for v, t in sigma.bindings.items()})

    # -- the search -----------------------------------------------------------------
    def vu_narrow(self, start: Term, mode: str, goal: Term,
                  max_solutions=None, max_depth=None, folding="none"):
        """Breadth-first narrowing reachability; yields solutions."""
        goal = canonicalize(self.sig, goal)
        start_nf = self.engine.reduce(canonicalize(self.sig, start))
        query_vars = vars_of(start_nf) + [
            v for v in vars_of(goal) if v not in vars_of(start_nf)]
        init = SymbolicState(term=start_nf, acc=Substitution(), depth=0,
                             index=0)
        states = [init]
        kept = [init]
        frontier = [init]
        emitted = 0
        next_index = 1
        checked = 0
        children_of: dict[int, list] = {}
        while True:
            while checked < len(states):
                state = states[checked]
                checked += 1
                if mode == "+" and state.depth == 0:
                    continue
                if mode == "1" and state.depth != 1:
                    continue
                if mode == "!":
                    kids = children_of.get(state.index)
                    if kids is None:
                        kids = self.narrow_rule_step(state, query_vars)
                        children_of[state.index] = kids
                    if kids:
                        continue
                goal_inst = apply_subst(self.sig, goal, state.acc)
                for gu in self.variants.variant_unify(state.term, goal_inst):
                    yield ReachabilitySolution(state, gu)
                    emitted += 1
                    if max_solutions is not None and \
                            emitted >= max_solutions:
                        return
            if not frontier:
                return
            next_frontier = []
            for state in frontier:
                if max_depth is not None and state.depth >= max_depth:
                    continue
                kids = children_of.get(state.index)
                if kids is None:
                    kids = self.narrow_rule_step(state, query_vars)
                    children_of[state.index] = kids
                for child in kids:
                    if folding == "fold" and any(
                            self._subsumes(w.term, child.term)
                            for w in kept):
                        continue
                    child.index = next_index
                    next_index += 1
                    states.append(child)
                    kept.append(child)
                    next_frontier.append(child)
            frontier = next_frontier

    def _subsumes(self, general: Term, specific: Term) -> bool:
        from .matching import match_simultaneously
        return match_simultaneously(self.variants.matcher,
                                    [(general, specific)])


def _positions(term: Term, prefix=()):
    if type(term) is Var:
        return
    frozen = term.op.attrs.frozen
    yield prefix, term
    if frozen == (-1,):
        return
    for i, a in enumerate(term.args, start=1):
        slot = min(i, term.op.arity)
        if slot in frozen:
            continue
        yield from _positions(a, prefix + (i,))


def _replace(term, pos, value):
    if not pos:
        return value
    args = list(term.args)
    args[pos[0] - 1] = _replace(args[pos[0] - 1], pos[1:], value)
    return App(term.op, tuple(args))
