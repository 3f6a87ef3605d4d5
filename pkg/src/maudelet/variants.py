"""Variant generation by folding variant narrowing, and variant-based
E∪B-unification.

A variant of t is a pair (u, θ) with u the normal form of tθ and θ
normalized.  Narrowing happens at non-variable positions with the
variant-attributed equations, using B-unification for each step; newly
generated variants are kept only when no kept variant is more general,
and a more general newcomer evicts the kept variants it subsumes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .matching import Matcher
from .reduction import RewriteEngine
from .signature import Attributes, OpDecl
from .terms import (App, Substitution, Term, Var, apply_subst, canonicalize,
                    term_key, vars_of)
from .unification import Unify


@dataclass
class Variant:
    term: Term
    subst: Substitution   # restricted to the input term's variables
    depth: int
    index: int
    parent: int | None = None


class VariantEngine:
    def __init__(self, module, engine: RewriteEngine | None = None):
        self.module = module
        self.sig = module.signature
        self.engine = engine or RewriteEngine(module)
        self.matcher = Matcher(module, sorter=self.engine.sort_of)
        self.variant_eqs = [eq for eq in module.equations if eq.variant]

    # -- narrowing steps ---------------------------------------------------------
    def narrow_children(self, variant: Variant, input_vars):
        """One folding-variant-narrowing step at each non-variable position."""
        from .terms import least_sort
        children = []
        for pos, node in _nonvar_positions(variant.term):
            node_kind = least_sort(self.sig, node).kind
            for eq in self.variant_eqs:
                lhs_kind = (eq.lhs.sort.kind if type(eq.lhs) is Var
                            else eq.lhs.op.result_kind)
                if lhs_kind is not node_kind:
                    continue
                solver = Unify(self.module, self.matcher)
                lhs, rhs = self._rename_statement(eq)
                result = solver.solve([(node, lhs)], rename=False)
                for sigma in result.unifiers:
                    replaced = _replace_raw(variant.term, pos, rhs)
                    new_term = self.engine.reduce(
                        apply_subst(self.sig, replaced, sigma))
                    new_subst = variant.subst.compose(self.sig, sigma)
                    new_subst = new_subst.restrict(input_vars)
                    if not self._normalized(new_subst):
                        continue
                    children.append(Variant(
                        term=new_term, subst=new_subst,
                        depth=variant.depth + 1, index=-1,
                        parent=variant.index))
        return children

    def _rename_statement(self, eq):
        from .unification import _FRESH_NAMES
        mapping = {}
        for v in vars_of(eq.lhs) + vars_of(eq.rhs):
            if v not in mapping:
                mapping[v] = Var(f"#{next(_FRESH_NAMES)}", v.sort)
        ren = Substitution(mapping)
        return (apply_subst(self.sig, eq.lhs, ren),
                apply_subst(self.sig, eq.rhs, ren))

    def _normalized(self, subst: Substitution) -> bool:
        return all(self.engine.reduce(t) == t
                   for t in subst.bindings.values())

    # -- the folding enumeration ----------------------------------------------------
    def get_variants(self, term: Term, bound: int | None = None):
        """Incremental stream of most general variants, breadth-first."""
        from .unification import _FRESH_NAMES
        term = canonicalize(self.sig, term)
        input_vars = vars_of(term)
        mapping = {}
        for v in input_vars:
            mapping[v] = Var(f"#{next(_FRESH_NAMES)}", v.sort)
        theta0 = Substitution(mapping)
        t0 = self.engine.reduce(apply_subst(self.sig, term, theta0))
        root = Variant(term=t0, subst=theta0.restrict(input_vars),
                       depth=0, index=0)
        kept: list[Variant] = [root]
        frontier = [root]
        emitted = 0
        next_index = 1
        yield self._display(root, input_vars)
        emitted += 1
        if bound is not None and emitted >= bound:
            return
        while frontier:
            next_frontier = []
            for v in frontier:
                children = self.narrow_children(v, input_vars)
                for child in children:
                    if any(self.more_general(w, child) for w in kept):
                        continue
                    evicted = [w for w in kept
                               if self.more_general(child, w)]
                    for w in evicted:
                        kept.remove(w)
                        if w in next_frontier:
                            next_frontier.remove(w)
                    child.index = next_index
                    next_index += 1
                    kept.append(child)
                    next_frontier.append(child)
                    yield self._display(child, input_vars)
                    emitted += 1
                    if bound is not None and emitted >= bound:
                        return
            frontier = next_frontier

    def _display(self, variant: Variant, input_vars) -> Variant:
        """A copy with fresh variables renumbered #1.. for presentation."""
        mapping = {}

        def walk(t):
            if type(t) is Var:
                if t not in mapping:
                    mapping[t] = Var(f"#{len(mapping) + 1}", t.sort)
            else:
                for a in t.args:
                    walk(a)

        walk(variant.term)
        for v in sorted(variant.subst.bindings, key=term_key):
            walk(variant.subst.bindings[v])
        ren = Substitution(mapping)
        return Variant(
            term=apply_subst(self.sig, variant.term, ren),
            subst=Substitution({
                v: apply_subst(self.sig, t, ren)
                for v, t in variant.subst.bindings.items()}),
            depth=variant.depth, index=variant.index,
            parent=variant.parent)

    # -- the variant ordering ------------------------------------------------------
    def more_general(self, v1: Variant, v2: Variant) -> bool:
        """True iff some γ sends v1's term and bindings to v2's modulo B."""
        pairs = [(v1.term, v2.term)]
        domain = set(v1.subst.bindings) | set(v2.subst.bindings)
        for z in sorted(domain, key=term_key):
            pairs.append((v1.subst.get(z, z), v2.subst.get(z, z)))
        return self._match_pairs(pairs)

    def _match_pairs(self, pairs):
        from .matching import match_simultaneously
        return match_simultaneously(self.matcher, pairs)

    # -- FVP detection ----------------------------------------------------------------
    def fvp_check(self, per_symbol_bound: int = 256):
        """Variant counts of f(x1,...,xn) per non-constructor symbol."""
        report = {}
        for op in self.sig.operators:
            if op.attrs.ctor or op.attrs.special is not None:
                continue
            decls = [d for d in op.decls if not d.is_kind_level]
            if not decls:
                continue
            if not any((type(eq.lhs) is App and eq.lhs.op is op)
                       for eq in self.module.equations):
                continue
            args = tuple(Var(f"x{i + 1}", s)
                         for i, s in enumerate(decls[0].arg_sorts))
            term = canonicalize(self.sig, App(op, args))
            count = 0
            exceeded = False
            for _variant in self.get_variants(term, bound=per_symbol_bound):
                count += 1
                if count >= per_symbol_bound:
                    exceeded = True
                    break
            report[op.name] = ("exceeded-bound" if exceeded else "finite",
                               count)
        return report

    # -- variant unification ------------------------------------------------------------
    def variant_unify(self, t: Term, t2: Term, bound: int | None = None):
        """Stream of E∪B-unifiers via variants of an internal equality."""
        ext = _ensure_eq_extension(self.module)
        from .terms import least_sort
        lhs = canonicalize(self.sig, t)
        k = least_sort(self.sig, lhs).kind
        eq_op = ext["eq_ops"].get(id(k))
        if eq_op is None:
            raise ValueError(f"no equality operator for kind {k.top.name}")
        goal = App(eq_op, (lhs, canonicalize(self.sig, t2)))
        tt = ext["tt"]
        problem_vars = vars_of(goal)
        # fresh engines so the internal equality equations are indexed
        sub_engine = VariantEngine(self.module)
        emitted = 0
        for variant in sub_engine.get_variants(goal):
            if variant.term == tt:
                unifier = _percent_rename(self.sig, variant.subst,
                                          problem_vars)
                yield unifier
                emitted += 1
                if bound is not None and emitted >= bound:
                    return


def _nonvar_positions(term: Term, prefix=()):
    if type(term) is Var:
        return
    yield prefix, term
    for i, a in enumerate(term.args, start=1):
        yield from _nonvar_positions(a, prefix + (i,))


def _replace_raw(term, pos, value):
    if not pos:
        return value
    args = list(term.args)
    args[pos[0] - 1] = _replace_raw(args[pos[0] - 1], pos[1:], value)
    return App(term.op, tuple(args))


def _percent_rename(sig, subst: Substitution, problem_vars):
    mapping = {}
    counter = [0]

    def walk(t):
        if type(t) is Var:
            if t not in mapping:
                counter[0] += 1
                mapping[t] = Var(f"%{counter[0]}", t.sort)
        else:
            for a in t.args:
                walk(a)

    for v in sorted(problem_vars, key=term_key):
        t = subst.get(v)
        if t is not None:
            walk(t)
    ren = Substitution(mapping)
    return Substitution({
        v: apply_subst(sig, t, ren)
        for v, t in subst.bindings.items() if v in set(problem_vars)})


def _ensure_eq_extension(module):
    """Extend the module with an internal equality sort/ops for variant
    unification: fresh sort $Truth with constant $tt, one $eq per kind,
    and variant equations $eq(x, x) = $tt."""
    cached = getattr(module, "_eq_extension", None)
    if cached is not None:
        return cached
    from .modules import Equation
    sig = module.signature
    truth = sig.add_sort("$Truth")
    from .signature import Kind
    kind = Kind([truth])
    kind.finish(sig.leq)
    sig.kinds.append(kind)
    sig._leq["$Truth"] = {"$Truth"}
    tt_op = sig.new_operator(("$tt",), [], kind, Attributes(ctor=True))
    tt_op.decls.append(OpDecl((), truth))
    tt = App(tt_op, ())
    eq_ops = {}
    existing_kinds = [k for k in sig.kinds if k is not kind]
    for k in existing_kinds:
        op = sig.new_operator(("$eq", "(", "_", ",", "_", ")"),
                              [k, k], kind, Attributes())
        op.decls.append(OpDecl((k.top, k.top), truth))
        eq_ops[id(k)] = op
        x = Var("$x", k.top)
        module.equations.append(Equation(
            lhs=App(op, (x, x)), rhs=tt, variant=True,
            index=len(module.equations)))
    ext = {"tt": tt, "eq_ops": eq_ops}
    module._eq_extension = ext
    return ext
