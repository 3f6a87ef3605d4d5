"""Order-sorted unification modulo the structural axioms B.

Free, C, U, Ul, Ur, CU, AC and ACU symbols are complete; associative
symbols use word-equation splitting with cycle detection (two variable
occurrences or fewer) or a depth bound (more than two), flagging the
result as possibly incomplete exactly as the reference warnings state.
Problems are solved at the kind level and then split into maximal
sort-consistent specializations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

from .matching import Matcher
from .terms import (App, Substitution, Term, Var, apply_subst, canonicalize,
                    flatten_args, least_sort, term_key, vars_of)

WARN_OPERATOR = ("Warning: Unification modulo the theory of operator {} "
                 "has encountered an instance for which it may not be "
                 "complete.")
WARN_MISSED = ("Warning: Some unifiers may have been missed due to "
               "incomplete unification algorithm(s).")

A_NODE_LIMIT = 5000

# split-depth bound for associative problems with a variable occurring
# more than twice (these use a depth bound rather than cycle detection);
# calibrated so the bounded examples return their documented solutions
A_SPLIT_BOUND = 5


class UnificationError(Exception):
    pass


@dataclass
class UnifierSet:
    unifiers: list[Substitution]
    complete: bool
    warned_ops: tuple[str, ...] = ()


from itertools import count as _counter

# one monotone source for internal fresh names: capture-free by
# construction; presentation renames to compact #1..#k per unifier
_FRESH_NAMES = _counter(1)


class Unify:
    """One unification problem's solver state."""

    def __init__(self, module, matcher=None, minimize=True):
        self.module = module
        self.sig = module.signature
        self.matcher = matcher or Matcher(module)
        self.fresh_count = 0
        self.incomplete = False
        self.minimize = minimize
        self.warned_ops: list[str] = []

    # -- fresh variables ------------------------------------------------------
    def fresh(self, sort) -> Var:
        self.fresh_count += 1
        return Var(f"#{next(_FRESH_NAMES)}", sort)

    # -- public ----------------------------------------------------------------
    def solve(self, pairs, bound=None, rename=True) -> UnifierSet:
        for l, r in pairs:
            self._check_supported(l)
            self._check_supported(r)
        for l, r in pairs:
            lk = least_sort(self.sig, l).kind
            rk = least_sort(self.sig, r).kind
            if lk is not rk:
                raise UnificationError(
                    f"ill-kinded unification problem: {lk.top.name} "
                    f"vs {rk.top.name}")
        problem_vars = []
        for l, r in pairs:
            for v in vars_of(l) + vars_of(r):
                if v not in problem_vars:
                    problem_vars.append(v)
        raw = []
        for subst in self._solve_eqs(list(pairs), Substitution()):
            raw.append(subst.restrict(
                set(problem_vars) | self._range_vars(subst, problem_vars)))
        out = []
        for subst in raw:
            out.extend(self._specialize_sorts(subst, problem_vars))
        if self.minimize:
            out = self._minimal(out, problem_vars)
        if rename:
            out = [self._canonical_rename(s, problem_vars) for s in out]
        else:
            out = [s.restrict(problem_vars) for s in out]
        out = _dedupe_substs(out)
        out.sort(key=lambda s: _subst_key(s))
        if bound is not None:
            out = out[:bound]
        return UnifierSet(out, not self.incomplete,
                          tuple(dict.fromkeys(self.warned_ops)))

    def _range_vars(self, subst, problem_vars):
        out = set()
        for v in problem_vars:
            t = subst.get(v)
            if t is not None:
                out |= set(vars_of(t))
        return out

    def _check_supported(self, term):
        if type(term) is Var:
            return
        a = term.op.attrs
        if a.assoc and not a.comm \
                and (a.identity is not None or a.left_identity is not None
                     or a.right_identity is not None):
            raise UnificationError(
                f"unification modulo assoc plus identity for operator "
                f"{term.op.name} is not supported; turn the identity "
                f"axioms into variant equations and use variant "
                f"unification instead")
        for x in term.args:
            self._check_supported(x)

    # -- the transformation loop ---------------------------------------------------
    def _solve_eqs(self, eqs, subst):
        eqs = [(apply_subst(self.sig, l, subst),
                apply_subst(self.sig, r, subst)) for l, r in eqs]
        while eqs:
            l, r = eqs.pop(0)
            if l == r:
                continue
            if type(l) is not Var and type(r) is Var:
                l, r = r, l
            if type(l) is Var:
                if type(r) is Var:
                    new = subst.compose(self.sig, Substitution({l: r}))
                    yield from self._solve_eqs(eqs, new)
                    return
                if self._occurs(l, r):
                    if r.op.attrs.assoc or r.op.has_any_identity \
                            or r.op.attrs.comm:
                        yield from self._theory_branches(l, r, eqs, subst)
                    return
                new = subst.compose(self.sig, Substitution({l: r}))
                yield from self._solve_eqs(eqs, new)
                return
            # both applications
            if l.op is r.op:
                op = l.op
                a = op.attrs
                if a.assoc and a.comm:
                    yield from self._branch_list(
                        self.ac_branches(op, list(l.args), list(r.args)),
                        eqs, subst)
                    return
                if a.assoc:
                    yield from self._branch_list(
                        self.a_branches(op, flatten_args(op, l.args),
                                        flatten_args(op, r.args)),
                        eqs, subst)
                    return
                if a.comm or op.has_any_identity:
                    yield from self._branch_list(
                        self._binary_branches(op, l, r), eqs, subst)
                    return
                yield from self._solve_eqs(
                    list(zip(l.args, r.args)) + eqs, subst)
                return
            # distinct heads: collapse via identities only
            branches = []
            branches.extend(self._collapse_branches(l, r))
            branches.extend(self._collapse_branches(r, l))
            yield from self._branch_list(branches, eqs, subst)
            return
        yield subst

    def _theory_branches(self, var, term, eqs, subst):
        op = term.op
        if op.attrs.assoc and op.attrs.comm:
            branches = self.ac_branches(op, [var], list(term.args))
        elif op.attrs.assoc:
            branches = self.a_branches(op, [var], flatten_args(op, term.args))
        else:
            branches = self._collapse_branches(term, var)
        yield from self._branch_list(branches, eqs, subst)

    def _branch_list(self, branches, eqs, subst):
        for new_eqs, bindings in branches:
            new_subst = subst
            consistent = True
            extra = []
            for v, t in bindings:
                bound = new_subst.get(v)
                if bound is not None:
                    extra.append((bound, t))
                else:
                    new_subst = new_subst.compose(
                        self.sig, Substitution({v: t}))
            if consistent:
                yield from self._solve_eqs(extra + new_eqs + eqs, new_subst)

    # -- binary theories (C, U, CU, Ul, Ur) --------------------------------------------
    def _decompositions(self, op, term):
        """Ways to view ``term`` as op(x, y) modulo the binary axioms."""
        out = []
        if type(term) is App and term.op is op:
            out.append((term.args[0], term.args[1]))
            if op.attrs.comm:
                out.append((term.args[1], term.args[0]))
        left_id = op.identity_for("left")
        right_id = op.identity_for("right")
        if right_id is not None:
            out.append((term, right_id))
        if left_id is not None:
            out.append((left_id, term))
        if op.attrs.comm and op.attrs.identity is not None:
            out.append((op.attrs.identity, term))
            out.append((term, op.attrs.identity))
        seen, uniq = set(), []
        for d in out:
            if d not in seen:
                seen.add(d)
                uniq.append(d)
        return uniq

    def _binary_branches(self, op, l, r):
        branches = []
        for (l1, l2), (r1, r2) in product(self._decompositions(op, l),
                                          self._decompositions(op, r)):
            branches.append(([(l1, r1), (l2, r2)], []))
        return branches

    def _collapse_branches(self, headed, other):
        """Solutions where ``headed`` collapses to ``other`` via identities."""
        if type(headed) is not Var and headed.op.has_any_identity:
            op = headed.op
            if op.attrs.assoc:
                if op.attrs.comm:
                    return self.ac_branches(op, list(headed.args), [other])
                return self.a_branches(op, flatten_args(op, headed.args),
                                       [other])
            out = []
            for h1, h2 in self._decompositions(op, headed):
                left_id = op.identity_for("left")
                right_id = op.identity_for("right")
                if right_id is not None:
                    out.append(([(h1, other), (h2, right_id)], []))
                if left_id is not None:
                    out.append(([(h1, left_id), (h2, other)], []))
            return out
        return []

    # -- AC and ACU --------------------------------------------------------------------
    def ac_branches(self, op, largs, rargs):
        """Branches solving op(largs) =? op(rargs) modulo AC(U).

        Aliens are abstracted, the induced linear Diophantine equation is
        solved for its minimal basis, and subset selections consistent
        with sort/alien constraints become bindings plus residual
        equations between aliens.
        """
        ident = op.attrs.identity
        largs = list(largs)
        rargs = list(rargs)
        if ident is not None:
            largs = [x for x in largs if x != ident] or [ident]
            rargs = [x for x in rargs if x != ident] or [ident]
            if largs == [ident]:
                return self._all_identity_branches(op, rargs, ident)
            if rargs == [ident]:
                return self._all_identity_branches(op, largs, ident)
        # cancel common atoms
        lrest, rrest = list(largs), list(rargs)
        for x in list(lrest):
            if x in rrest:
                lrest.remove(x)
                rrest.remove(x)
        if not lrest and not rrest:
            return [([], [])]
        if not lrest or not rrest:
            if ident is None:
                return []
            lone = lrest or rrest
            return self._all_identity_branches(op, lone, ident)
        atoms_l = _multiset(lrest)
        atoms_r = _multiset(rrest)
        atoms = list(dict.fromkeys(list(atoms_l) + list(atoms_r)))
        coeffs = [atoms_l.get(a, 0) - atoms_r.get(a, 0) for a in atoms]
        basis = _diophantine_basis(coeffs)
        if not basis:
            return []
        branches = []
        var_atoms = [a for a in atoms if type(a) is Var]
        alien_atoms = [a for a in atoms if type(a) is not Var]
        min_count = 0 if ident is not None else 1
        for size in range(1, len(basis) + 1):
            for chosen in combinations(range(len(basis)), size):
                counts = {a: sum(basis[k][i] for k in chosen)
                          for i, a in enumerate(atoms)}
                if any(counts[a] != 1 for a in alien_atoms):
                    continue
                if any(counts[a] < min_count for a in var_atoms):
                    continue
                fresh = {k: self.fresh(self._list_sort(op)) for k in chosen}
                bindings = []
                new_eqs = []
                ok = True
                for i, a in enumerate(atoms):
                    pieces = []
                    for k in chosen:
                        pieces.extend([fresh[k]] * basis[k][i])
                    if type(a) is Var:
                        value = self._build(op, pieces, ident)
                        if value is None:
                            ok = False
                            break
                        bindings.append((a, value))
                    else:
                        new_eqs.append((a, pieces[0]))
                if ok:
                    branches.append((new_eqs, bindings))
        return branches

    def _all_identity_branches(self, op, args, ident):
        bindings = []
        for a in args:
            if type(a) is Var:
                bindings.append((a, ident))
            elif a != ident:
                return []
        return [([], bindings)]

    def _list_sort(self, op):
        decls = [d for d in op.decls if not d.is_kind_level]
        if decls:
            return decls[0].result_sort
        return op.result_kind.top

    def _build(self, op, pieces, ident):
        if not pieces:
            return ident
        if len(pieces) == 1:
            return pieces[0]
        return canonicalize(self.sig, App(op, tuple(pieces)))

    # -- associative (word equations) ------------------------------------------------------
    def a_branches(self, op, largs, rargs):
        """Pig-pug word unification with cycle detection / depth bound."""
        # length abstraction: a quick unsolvability certificate
        if not self._lengths_feasible(largs, rargs):
            return []
        occurrences = _multiset(
            [v for v in largs + rargs if type(v) is Var])
        bounded_mode = any(n > 2 for n in occurrences.values())
        depth_bound = A_SPLIT_BOUND if bounded_mode else None
        solutions = []
        state_flags = {"cycle": False, "bounded": False, "nodes": 0}

        def key(ls, rs):
            names = {}

            def atom_key(x):
                if type(x) is Var:
                    if x not in names:
                        names[x] = len(names)
                    return ("v", names[x])
                return ("t", x.sort_key())

            return (tuple(atom_key(x) for x in ls), ("|",),
                    tuple(atom_key(x) for x in rs))

        def go(ls, rs, bindings, path, splits):
            state_flags["nodes"] += 1
            if state_flags["nodes"] > A_NODE_LIMIT:
                state_flags["bounded"] = True
                return
            if depth_bound is not None and splits > depth_bound:
                state_flags["bounded"] = True
                return
            if not ls and not rs:
                solutions.append(list(bindings))
                return
            if not ls or not rs:
                return
            if not self._lengths_feasible(ls, rs):
                return
            if not bounded_mode:
                k = key(ls, rs)
                if k in path:
                    state_flags["cycle"] = True
                    return
                path = path | {k}
            h1, h2 = ls[0], rs[0]
            if h1 == h2:
                go(ls[1:], rs[1:], bindings, path, splits)
                return
            v1, v2 = type(h1) is Var, type(h2) is Var
            if v1 and v2:
                sub = {h1: h2}
                go(_sub_list(ls[1:], sub, op), _sub_list(rs[1:], sub, op),
                   bindings + [(h1, h2)], path, splits)
                x1 = self.fresh(h1.sort)
                value = canonicalize(self.sig, App(op, (h2, x1)))
                sub = {h1: value}
                go([x1] + _sub_list(ls[1:], sub, op),
                   _sub_list(rs[1:], sub, op),
                   bindings + [(h1, value)], path, splits + 1)
                y1 = self.fresh(h2.sort)
                value = canonicalize(self.sig, App(op, (h1, y1)))
                sub = {h2: value}
                go(_sub_list(ls[1:], sub, op),
                   [y1] + _sub_list(rs[1:], sub, op),
                   bindings + [(h2, value)], path, splits + 1)
                return
            if v1 or v2:
                var, alien = (h1, h2) if v1 else (h2, h1)
                var_side, other_side = (ls, rs) if v1 else (rs, ls)
                sub = {var: alien}
                new_var_side = _sub_list(var_side[1:], sub, op)
                new_other = _sub_list(other_side[1:], sub, op)
                if v1:
                    go(new_var_side, new_other,
                       bindings + [(var, alien)], path, splits)
                else:
                    go(new_other, new_var_side,
                       bindings + [(var, alien)], path, splits)
                x1 = self.fresh(var.sort)
                value = canonicalize(self.sig, App(op, (alien, x1)))
                sub = {var: value}
                if v1:
                    go([x1] + _sub_list(ls[1:], sub, op),
                       _sub_list(rs[1:], sub, op),
                       bindings + [(var, value)], path, splits + 1)
                else:
                    go(_sub_list(ls[1:], sub, op),
                       [x1] + _sub_list(rs[1:], sub, op),
                       bindings + [(var, value)], path, splits + 1)
                return
            # alien vs alien: unify as a subproblem
            inner = Unify(self.module, self.matcher)
            inner.fresh_count = self.fresh_count
            found = list(inner._solve_eqs([(h1, h2)], Substitution()))
            self.fresh_count = inner.fresh_count
            self.incomplete = self.incomplete or inner.incomplete
            for s in found:
                pairs = list(s.bindings.items())
                sub = dict(s.bindings)
                go(_sub_list(ls[1:], sub, op), _sub_list(rs[1:], sub, op),
                   bindings + pairs, path, splits)

        go(list(largs), list(rargs), [], frozenset(), 0)
        warn = state_flags["bounded"] or (
            state_flags["cycle"] and bool(solutions))
        if warn:
            self.incomplete = True
            if op.name not in self.warned_ops:
                self.warned_ops.append(op.name)
        return [([], b) for b in solutions]

    def _lengths_feasible(self, largs, rargs):
        """False only when the length equation is provably unsolvable."""
        var_coeff: dict[Var, int] = {}
        const = 0
        for x in largs:
            if type(x) is Var:
                var_coeff[x] = var_coeff.get(x, 0) + 1
            else:
                const += 1
        for x in rargs:
            if type(x) is Var:
                var_coeff[x] = var_coeff.get(x, 0) - 1
            else:
                const -= 1
        # sum(d_v * len_v) + const = 0 with len_v >= 1
        target = -const - sum(var_coeff.values())  # with len_v = 1 + m_v
        coeffs = [d for d in var_coeff.values() if d != 0]
        if not coeffs:
            return target == 0
        from math import gcd
        g = 0
        for c in coeffs:
            g = gcd(g, abs(c))
        if target % g != 0:
            return False
        if all(c > 0 for c in coeffs) and target < 0:
            return False
        if all(c < 0 for c in coeffs) and target > 0:
            return False
        return True

    # -- occurs check -------------------------------------------------------------
    def _occurs(self, var, term):
        if type(term) is Var:
            return term == var
        return any(self._occurs(var, a) for a in term.args)

    # -- order-sorted specialization -------------------------------------------------
    def _specialize_sorts(self, subst, problem_vars):
        """Split a kind-level unifier into maximal sorted specializations."""
        fresh_vars = []
        for v, t in subst.items():
            for w in vars_of(t):
                if w not in problem_vars and w not in fresh_vars:
                    fresh_vars.append(w)
        assignments = self._sort_assignments(subst, problem_vars, fresh_vars)
        out = []
        for assign in assignments:
            ren = Substitution({w: Var(w.name, s)
                                for w, s in assign.items()})
            new = Substitution({
                v: apply_subst(self.sig, t, ren)
                for v, t in subst.bindings.items()})
            if all(self.sig.leq(least_sort(self.sig, t), v.sort)
                   for v, t in new.bindings.items()):
                out.append(new)
        return out

    def _sort_assignments(self, subst, problem_vars, fresh_vars):
        if not fresh_vars:
            ok = all(self.sig.leq(least_sort(self.sig, t), v.sort)
                     for v, t in subst.bindings.items())
            return [{}] if ok else []
        # candidate sorts per fresh variable: its kind's sorts plus the kind
        candidates = []
        for w in fresh_vars:
            kind = w.sort.kind
            pool = [kind.top] + list(kind.sorts)
            candidates.append(pool)
        found = []
        for combo in product(*candidates):
            assign = dict(zip(fresh_vars, combo))
            ren = Substitution({w: Var(w.name, s) for w, s in assign.items()})
            try:
                ok = all(
                    self.sig.leq(
                        least_sort(self.sig,
                                   apply_subst(self.sig, t, ren)), v.sort)
                    for v, t in subst.bindings.items())
            except Exception:
                ok = False
            if ok:
                found.append(assign)
        # keep only maximal assignments under pointwise sort order
        maximal = []
        for a in found:
            if not any(b is not a and self._assign_geq(b, a)
                       and not self._assign_geq(a, b) for b in found):
                maximal.append(a)
        uniq = []
        for a in maximal:
            if a not in uniq:
                uniq.append(a)
        return uniq

    def _assign_geq(self, a, b):
        return all(self.sig.leq(b[w], a[w]) for w in a)

    # -- minimality ---------------------------------------------------------------------
    def _minimal(self, substs, problem_vars):
        out = []
        for i, s in enumerate(substs):
            redundant = False
            for j, t in enumerate(substs):
                if i == j:
                    continue
                if self._instance_of(s, t, problem_vars):
                    if self._instance_of(t, s, problem_vars) and j > i:
                        continue  # equivalent: keep the first
                    redundant = True
                    break
            if not redundant:
                out.append(s)
        return out

    def _instance_of(self, s, t, problem_vars):
        """True if s = t . gamma for some gamma (s is an instance of t)."""
        pairs = []
        for v in problem_vars:
            sv = s.get(v, v)
            tv = t.get(v, v)
            pairs.append((tv, sv))
        return self._simultaneous_match(pairs)

    def _simultaneous_match(self, pairs):
        from .matching import match_simultaneously
        return match_simultaneously(self.matcher, pairs)

    # -- presentation -----------------------------------------------------------------
    def _canonical_rename(self, subst, problem_vars, prefix="#"):
        mapping = {}
        counter = [0]

        def walk(t):
            if type(t) is Var:
                if t in problem_vars:
                    return
                if t not in mapping:
                    counter[0] += 1
                    mapping[t] = Var(f"{prefix}{counter[0]}", t.sort)
            else:
                for a in t.args:
                    walk(a)

        for v in sorted(problem_vars, key=term_key):
            t = subst.get(v)
            if t is not None:
                walk(t)
        ren = Substitution(mapping)
        return Substitution({
            v: apply_subst(self.sig, t, ren)
            for v, t in subst.bindings.items() if v in set(problem_vars)})


# -- helpers ---------------------------------------------------------------------

def _multiset(items):
    out = {}
    for x in items:
        out[x] = out.get(x, 0) + 1
    return out


def _sub_list(atoms, mapping, op):
    out = []
    for a in atoms:
        b = mapping.get(a, a) if type(a) is Var else a
        if type(b) is App and b.op is op:
            out.extend(flatten_args(op, b.args))
        else:
            out.append(b)
    return out


def _diophantine_basis(coeffs):
    """Minimal nonzero nonnegative solutions of sum(c_i * x_i) = 0."""
    pos = [c for c in coeffs if c > 0]
    neg = [-c for c in coeffs if c < 0]
    if not pos or not neg:
        return []
    bound_pos = max(neg)
    bound_neg = max(pos)
    bounds = [bound_pos if c > 0 else (bound_neg if c < 0 else 0)
              for c in coeffs]
    solutions = []
    for combo in product(*[range(0, b + 1) for b in bounds]):
        if not any(combo):
            continue
        if sum(c * x for c, x in zip(coeffs, combo)) == 0:
            solutions.append(combo)
    minimal = []
    for s in solutions:
        if not any(t != s and all(a <= b for a, b in zip(t, s))
                   for t in solutions):
            minimal.append(s)
    return minimal


def _subst_key(s: Substitution):
    return tuple(sorted((v.name, v.sort.name, t.sort_key())
                        for v, t in s.bindings.items()))


def _dedupe_substs(substs):
    seen, out = set(), []
    for s in substs:
        k = frozenset(s.bindings.items())
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out


# -- module-level API ----------------------------------------------------------------

def unify(module, pairs, bound=None) -> UnifierSet:
    return Unify(module).solve(pairs, bound)


def ac_unify(module, lhs: Term, rhs: Term) -> list[Substitution]:
    """Complete minimal unifiers of two terms under one AC/ACU head."""
    result = Unify(module).solve([(lhs, rhs)])
    return result.unifiers


def a_unify(module, lhs: Term, rhs: Term):
    """Unifiers under one associative head plus a completeness flag."""
    solver = Unify(module)
    result = solver.solve([(lhs, rhs)])
    return result.unifiers, result.complete
