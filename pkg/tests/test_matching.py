"""Matching modulo B, checked against a brute-force rearrangement oracle."""

import itertools

import pytest

from maudelet.matching import Matcher
from maudelet.parser import parse_term_text, parse_units
from maudelet.terms import App, Var, apply_subst, canonicalize, vars_of


@pytest.fixture(scope="module")
def magma(database):
    return database.get("PFUN")


def canon(mod, text):
    return canonicalize(mod.signature, parse_term_text(mod, text))


class TestBasics:
    def test_variable_matches_anything(self, magma):
        m = Matcher(magma)
        pat = parse_term_text(magma, "M:Magma")
        subj = canon(magma, "[1,2],[3,7]")
        results = m.match_all(pat, subj)
        assert len(results) == 1
        v = vars_of(pat)[0]
        assert results[0].subst.get(v) == subj

    def test_sort_filtering(self, magma):
        m = Matcher(magma)
        pat = parse_term_text(magma, "P:Pair")
        subj = canon(magma, "[1,2],[3,7]")
        assert m.match_all(pat, subj) == []

    def test_idempotency_extension_match(self, magma):
        # [N,M],[N,M] against [1,2],[3,7],[1,2] leaves residue [3,7]
        m = Matcher(magma)
        pat = canon(magma, "[N:Nat,M:Nat],[N:Nat,M:Nat]")
        subj = canon(magma, "[1,2],[3,7],[1,2]")
        results = [r for r in m.match_all(pat, subj, extension=True)
                   if r.has_residue]
        assert len(results) == 1
        r = results[0]
        by_name = {v.name: t for v, t in r.subst.bindings.items()}
        assert by_name["N"] == canon(magma, "1")
        assert by_name["M"] == canon(magma, "2")
        assert list(r.residue) == [canon(magma, "[3,7]")]

    def test_whole_and_position_matches(self, ac_nat):
        # 0 + N against 1 + (0 + 1): at top {N -> 1+1}, inside {N -> 1}
        m = Matcher(ac_nat)
        pat = canon(ac_nat, "0 + N")
        subj = canon(ac_nat, "1 + (0 + 1)")
        whole = m.match_all(pat, subj)
        assert len(whole) == 1
        v = vars_of(pat)[0]
        assert whole[0].subst.get(v) == canon(ac_nat, "1 + 1")
        ext = [r for r in m.match_all(pat, subj, extension=True)
               if r.has_residue]
        assert any(r.subst.get(v) == canon(ac_nat, "1") for r in ext)

    def test_assoc_list_segments(self, hanoi):
        m = Matcher(hanoi)
        pat = canon(hanoi, "L1 D1")
        subj = canon(hanoi, "3 2 1")
        results = m.match_all(pat, subj)
        assert len(results) == 1
        by_name = {v.name: t for v, t in results[0].subst.bindings.items()}
        assert by_name["L1"] == canon(hanoi, "3 2")
        assert by_name["D1"] == canon(hanoi, "1")

    def test_assoc_identity_empty_segment(self, hanoi):
        m = Matcher(hanoi)
        pat = canon(hanoi, "L1 D1")
        subj = canon(hanoi, "7")
        results = m.match_all(pat, subj)
        assert len(results) == 1
        by_name = {v.name: t for v, t in results[0].subst.bindings.items()}
        assert by_name["L1"] == canon(hanoi, "nil")


class TestOracle:
    """matchAll agrees with brute-force enumeration of B-rearrangements."""

    def rearrangements(self, sig, term, depth=0):
        """All raw trees B-equal to a canonical term (bounded)."""
        if type(term) is Var or not term.args:
            return [term]
        op = term.op
        arg_sets = [self.rearrangements(sig, a) for a in term.args]
        results = []
        if op.attrs.assoc and len(term.args) >= 2:
            # all groupings of all permutations (comm) or one order (assoc)
            orders = (itertools.permutations(range(len(term.args)))
                      if op.attrs.comm else [tuple(range(len(term.args)))])
            seen_orders = set()
            for order in orders:
                if order in seen_orders:
                    continue
                seen_orders.add(order)
                for combo in itertools.product(
                        *[arg_sets[i] for i in order]):
                    results.extend(self._groupings(op, list(combo)))
        else:
            for combo in itertools.product(*arg_sets):
                results.append(App(op, tuple(combo)))
                if op.attrs.comm:
                    results.append(App(op, tuple(reversed(combo))))
        return results

    def _groupings(self, op, items):
        if len(items) == 1:
            return [items[0]]
        out = []
        for k in range(1, len(items)):
            for left in self._groupings(op, items[:k]):
                for right in self._groupings(op, items[k:]):
                    out.append(App(op, (left, right)))
        return out

    def syntactic_match(self, pat, subj, subst):
        if type(pat) is Var:
            old = subst.get(pat.name)
            if old is not None:
                return [subst] if old == pat_value(subst, pat) else []
        return []

    def test_ac_matching_complete(self, magma):
        sig = magma.signature
        m = Matcher(magma)
        pat = canon(magma, "[N:Nat,M:Nat], X:Magma")
        subj = canon(magma, "[1,2],[3,7],[1,2]")
        got = m.match_all(pat, subj)
        # oracle: enumerate rearrangements, then structural matching of
        # the binary pattern tree against each
        expected = set()
        pvars = {v.name: v for v in vars_of(pat)}
        for arrangement in self.rearrangements(sig, subj):
            for env in self._struct_match(pat, arrangement, {}, sig):
                expected.add(frozenset(
                    (name, canonicalize(sig, t)) for name, t in env.items()))
        found = set()
        for r in got:
            found.add(frozenset(
                (v.name, t) for v, t in r.subst.bindings.items()))
        assert found == expected
        assert len(got) >= 2  # X absorbs either [3,7] alone or with a pair

    def _struct_match(self, pat, subj, env, sig):
        from maudelet.terms import least_sort
        if type(pat) is Var:
            bound = env.get(pat.name)
            cs = canonicalize(sig, subj)
            if bound is not None:
                if bound == cs:
                    yield env
                return
            if sig.leq(least_sort(sig, cs), pat.sort):
                yield {**env, pat.name: cs}
            return
        if type(subj) is Var or subj.args is None:
            return
        if type(subj) is not App or subj.op is not pat.op \
                or len(subj.args) != len(pat.args):
            return
        envs = [env]
        for p, s in zip(pat.args, subj.args):
            envs = [e2 for e in envs for e2 in self._struct_match(p, s, e, sig)]
        yield from envs


def pat_value(subst, var):
    return subst.get(var.name)
