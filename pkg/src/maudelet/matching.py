"""Complete matching of patterns against subjects modulo the axioms B.

Subjects are canonical forms; their variables are treated as constants.
AC/A heads support extension matching (sub-multiset or contiguous
segment, leaving a residue) so statements apply inside flattened
argument collections.  Identity axioms let pattern variables match the
identity element even when it is syntactically absent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .terms import (App, Substitution, Term, Var, canonicalize, flatten_args,
                    least_sort, term_key)


@dataclass(frozen=True)
class MatchResult:
    subst: Substitution
    residue: tuple = ()          # leftover AC elements
    prefix: tuple = ()           # leftover A prefix
    suffix: tuple = ()           # leftover A suffix

    @property
    def has_residue(self):
        return bool(self.residue or self.prefix or self.suffix)


class Matcher:
    """Matching over one module; ``sorter`` may refine sorts via memberships."""

    def __init__(self, module, sorter=None):
        self.module = module
        self.sig = module.signature
        self.sorter = sorter or (lambda t: least_sort(self.sig, t))

    # -- public -------------------------------------------------------------
    def match_all(self, pattern: Term, subject: Term,
                  extension: bool = False) -> list[MatchResult]:
        """All matches; with ``extension``, AC/A residues are allowed."""
        results: list[MatchResult] = []
        if extension and type(pattern) is App and type(subject) is App \
                and pattern.op is subject.op and pattern.op.attrs.assoc:
            op = pattern.op
            pat_args = tuple(pattern.args)
            subj_args = tuple(subject.args)
            if op.attrs.comm:
                for subst, rest in self._match_ac(op, pat_args, subj_args,
                                                  Substitution()):
                    results.append(MatchResult(subst, residue=tuple(rest)))
            else:
                n = len(subj_args)
                for start in range(n):
                    for subst, end in self._match_a(op, pat_args, subj_args,
                                                    start, Substitution(),
                                                    anchored_end=False):
                        if start == 0 and end == n:
                            results.append(MatchResult(subst))
                        else:
                            results.append(MatchResult(
                                subst, prefix=subj_args[:start],
                                suffix=subj_args[end:]))
            return self._dedupe(results)
        for subst in self._match(pattern, subject, Substitution()):
            results.append(MatchResult(subst))
        return self._dedupe(results)

    @staticmethod
    def _dedupe(results):
        seen, out = set(), []
        for r in results:
            key = (frozenset(r.subst.bindings.items()), r.residue,
                   r.prefix, r.suffix)
            if key not in seen:
                seen.add(key)
                out.append(r)
        out.sort(key=_result_key)
        return out

    # -- core recursion -------------------------------------------------------
    def _match(self, pattern: Term, subject: Term, subst: Substitution):
        if type(pattern) is Var:
            bound = subst.get(pattern)
            if bound is not None:
                if bound == subject:
                    yield subst
                return
            if self.sig.leq(self.sorter(subject), pattern.sort):
                yield subst.bind(pattern, subject)
            return
        op = pattern.op
        a = op.attrs
        if a.special == "nat.s" and self._nat_value(subject) is not None:
            n = self._nat_value(subject)
            if n >= 1:
                lit = App(self.module.nat_literal(n - 1), ())
                yield from self._match(pattern.args[0], lit, subst)
            return
        if a.assoc:
            subj_args = self._flat_subject(op, subject)
            if subj_args is None:
                return
            if a.comm:
                for s, rest in self._match_ac(op, tuple(pattern.args),
                                              tuple(subj_args), subst):
                    if not rest:
                        yield s
            else:
                n = len(subj_args)
                for s, end in self._match_a(op, tuple(pattern.args),
                                            tuple(subj_args), 0, subst,
                                            anchored_end=True):
                    if end == n:
                        yield s
            return
        if op.arity == 2 and (a.comm or op.has_any_identity):
            yield from self._match_binary(op, pattern, subject, subst)
            return
        # free
        if type(subject) is App and subject.op is op \
                and len(subject.args) == len(pattern.args):
            yield from self._match_seq(pattern.args, subject.args, subst)

    def _match_seq(self, pats, subjs, subst):
        if not pats:
            yield subst
            return
        for s in self._match(pats[0], subjs[0], subst):
            yield from self._match_seq(pats[1:], subjs[1:], s)

    def _nat_value(self, term):
        if type(term) is App and not term.args and term.op.pattern[0].isdigit():
            return int(term.op.pattern[0])
        return None

    def _flat_subject(self, op, subject):
        """Subject as an argument list under ``op`` (None if impossible)."""
        if type(subject) is App and subject.op is op:
            return list(subject.args)
        return [subject]  # singleton list view

    # -- binary with comm and/or identity ---------------------------------------
    def _match_binary(self, op, pattern, subject, subst):
        decomps = []
        if type(subject) is App and subject.op is op:
            decomps.append((subject.args[0], subject.args[1]))
            if op.attrs.comm:
                decomps.append((subject.args[1], subject.args[0]))
        ident = op.attrs.identity
        left_id = op.identity_for("left")
        right_id = op.identity_for("right")
        if right_id is not None:
            decomps.append((subject, right_id))
        if left_id is not None:
            decomps.append((left_id, subject))
        if op.attrs.comm and ident is not None:
            pass  # both orders already covered above
        seen = set()
        for d in decomps:
            if d in seen:
                continue
            seen.add(d)
            for s1 in self._match(pattern.args[0], d[0], subst):
                yield from self._match(pattern.args[1], d[1], s1)

    # -- AC / ACU ------------------------------------------------------------------
    def _match_ac(self, op, pat_args, subj_args, subst):
        """Yield (substitution, leftover-elements) pairs."""
        ident = op.attrs.identity
        rigid = [p for p in pat_args if type(p) is not Var]
        variables = [p for p in pat_args if type(p) is Var]

        def go_rigid(pi, remaining, s):
            if pi == len(rigid):
                yield from go_vars(0, remaining, s)
                return
            p = rigid[pi]
            tried = set()
            for k, e in enumerate(remaining):
                if e in tried:
                    continue
                tried.add(e)
                rest = remaining[:k] + remaining[k + 1:]
                for s2 in self._match(p, e, s):
                    yield from go_rigid(pi + 1, rest, s2)

        def go_vars(vi, remaining, s):
            if vi == len(variables):
                yield s, remaining
                return
            v = variables[vi]
            bound = s.get(v)
            if bound is not None:
                need = list(bound.args) if (type(bound) is App
                                            and bound.op is op) else \
                    ([] if bound == ident else [bound])
                rest = _consume(remaining, need)
                if rest is not None:
                    yield from go_vars(vi + 1, rest, s)
                return
            last = vi == len(variables) - 1
            for subset, rest in _submultisets(remaining,
                                              allow_empty=ident is not None):
                value = self._build_ac(op, subset, ident)
                if value is None:
                    continue
                if not self.sig.leq(self.sorter(value), v.sort):
                    continue
                yield from go_vars(vi + 1, rest, s.bind(v, value))

        yield from go_rigid(0, list(subj_args), subst)

    def _build_ac(self, op, elements, ident):
        if not elements:
            return ident
        if len(elements) == 1:
            return elements[0]
        return canonicalize(self.sig, App(op, tuple(
            sorted(elements, key=term_key))))

    # -- A / AU -----------------------------------------------------------------
    def _match_a(self, op, pat_args, subj_args, start, subst, anchored_end):
        """Yield (substitution, end-index); segment starts at ``start``."""
        ident = op.attrs.identity
        n = len(subj_args)

        def go(pi, pos, s):
            if pi == len(pat_args):
                yield s, pos
                return
            p = pat_args[pi]
            if type(p) is Var:
                bound = s.get(p)
                if bound is not None:
                    need = list(bound.args) if (type(bound) is App
                                                and bound.op is op) else \
                        ([] if bound == ident else [bound])
                    if subj_args[pos:pos + len(need)] == tuple(need):
                        yield from go(pi + 1, pos + len(need), s)
                    return
                lo = pos if ident is not None else pos + 1
                for end in range(lo, n + 1):
                    seg = subj_args[pos:end]
                    value = self._build_a(op, seg, ident)
                    if value is None:
                        continue
                    if not self.sig.leq(self.sorter(value), p.sort):
                        continue
                    yield from go(pi + 1, end, s.bind(p, value))
                return
            if pos < n:
                for s2 in self._match(p, subj_args[pos], s):
                    yield from go(pi + 1, pos + 1, s2)

        yield from go(0, start, subst)

    def _build_a(self, op, elements, ident):
        if not elements:
            return ident
        if len(elements) == 1:
            return elements[0]
        return canonicalize(self.sig, App(op, tuple(elements)))

    # -- rebuilding after a rewrite ----------------------------------------------
    def rebuild(self, op, replacement: Term, result: MatchResult) -> Term:
        """Reassemble an AC/A node after rewriting the matched part."""
        if result.residue:
            return canonicalize(self.sig, App(
                op, tuple(result.residue) + (replacement,)))
        if result.prefix or result.suffix:
            return canonicalize(self.sig, App(
                op, tuple(result.prefix) + (replacement,)
                + tuple(result.suffix)))
        return canonicalize(self.sig, replacement)


def skolemize(module, term: Term, table: dict) -> Term:
    """Replace variables by fresh constants so they cannot be re-bound
    when the term is used as a matching subject in subsumption checks."""
    from .signature import Attributes, OpDecl
    sig = module.signature
    if type(term) is Var:
        op = table.get(term)
        if op is None:
            pool = getattr(module, "_skolem_pool", None)
            if pool is None:
                pool = module._skolem_pool = {}
            key = (term.sort.name, len(table))
            op = pool.get(key)
            if op is None:
                op = sig.new_operator((f"$sk{len(table)}",), [],
                                      term.sort.kind, Attributes(ctor=True))
                if not term.sort.is_kind:
                    op.decls.append(OpDecl((), term.sort))
                pool[key] = op
            table[term] = op
        return App(op, ())
    if not term.args:
        return term
    return canonicalize(sig, App(
        term.op, tuple(skolemize(module, a, table) for a in term.args)))


def match_simultaneously(matcher: Matcher, pairs) -> bool:
    """Does one substitution send every pattern to its subject modulo B?

    Subject-side variables are treated as fresh constants.
    """
    from .terms import apply_subst
    table: dict = {}
    grounded = [(pat, skolemize(matcher.module, subj, table))
                for pat, subj in pairs]

    def go(idx, subst):
        if idx == len(grounded):
            return True
        pat, subj = grounded[idx]
        for m in matcher.match_all(
                apply_subst(matcher.sig, pat, subst), subj):
            merged = subst.copy()
            merged.bindings.update(m.subst.bindings)
            if go(idx + 1, merged):
                return True
        return False

    return go(0, Substitution())


def _consume(remaining, need):
    rest = list(remaining)
    for x in need:
        try:
            rest.remove(x)
        except ValueError:
            return None
    return rest


def _submultisets(elements, allow_empty):
    """Sub-multisets in a canonical order, with the complement."""
    n = len(elements)
    sizes = range(0 if allow_empty else 1, n + 1)
    seen = set()
    for size in sizes:
        for idxs in combinations(range(n), size):
            subset = tuple(elements[i] for i in idxs)
            if subset in seen:
                continue
            seen.add(subset)
            idx_set = set(idxs)
            rest = [elements[i] for i in range(n) if i not in idx_set]
            yield list(subset), rest


def _result_key(r: MatchResult):
    bindings = tuple(sorted(
        ((v.name, v.sort.name, t.sort_key()) for v, t in r.subst.bindings.items())))
    return (1 if r.has_residue else 0, bindings,
            tuple(t.sort_key() for t in r.residue),
            tuple(t.sort_key() for t in r.prefix),
            tuple(t.sort_key() for t in r.suffix))
