"""B-unification: the associative examples, AC/C cases, and oracles."""

import itertools

import pytest

from maudelet.parser import parse_term_text, parse_units
from maudelet.terms import (Substitution, Var, apply_subst, canonicalize,
                            least_sort, vars_of)
from maudelet.unification import (WARN_MISSED, WARN_OPERATOR, UnificationError,
                                  Unify, ac_unify, unify)


@pytest.fixture(scope="module")
def nlist(database):
    return database.get("UNIFICATION-A")


def C(mod, text):
    return canonicalize(mod.signature, parse_term_text(mod, text))


class TestAssociative:
    def test_three_linear_vars_five_unifiers(self, nlist):
        res = unify(nlist, [(C(nlist, "X . Y . Z"), C(nlist, "P . Q"))])
        assert len(res.unifiers) == 5
        assert res.complete

    def test_parity_mismatch_no_unifier(self, nlist):
        res = unify(nlist, [(C(nlist, "X . X"), C(nlist, "Y . 1 . Y"))])
        assert res.unifiers == []
        assert res.complete

    def test_cycle_with_infinite_family(self, nlist):
        res = unify(nlist, [(C(nlist, "0 . X"), C(nlist, "X . 0"))])
        assert len(res.unifiers) == 1
        v = next(iter(res.unifiers[0].bindings))
        assert res.unifiers[0].bindings[v] == C(nlist, "0")
        assert not res.complete
        assert res.warned_ops == ("_._",)

    def test_cycle_without_unifiers(self, nlist):
        res = unify(nlist, [(C(nlist, "0 . Q"), C(nlist, "Q . 1"))])
        assert res.unifiers == []
        assert res.complete

    def test_depth_bounded_three_unifiers(self, nlist):
        res = unify(nlist, [(C(nlist, "X . X . X"),
                             C(nlist, "Y . Y . Z . Y"))])
        assert len(res.unifiers) == 3
        assert not res.complete
        # length profiles (|X|, |Y|, |Z|) of the reported family
        profiles = set()
        for s in res.unifiers:
            by = {v.name: t for v, t in s.bindings.items()}
            def size(t):
                if type(t) is Var:
                    return 1
                return len(t.args) if t.args and t.op.name == "_._" else 1
            profiles.add((size(by["X"]), size(by["Y"]), size(by["Z"])))
        assert profiles == {(2, 1, 3), (3, 2, 3), (4, 3, 3)}

    def test_warning_text(self):
        assert "may not be complete" in WARN_OPERATOR
        assert WARN_MISSED.startswith("Warning: Some unifiers may have been "
                                      "missed")


class TestSoundness:
    def test_every_unifier_solves_the_problem(self, nlist):
        sig = nlist.signature
        problems = [
            ("X . Y . Z", "P . Q"),
            ("0 . X", "X . 0"),
            ("X . X . X", "Y . Y . Z . Y"),
        ]
        for a, b in problems:
            l, r = C(nlist, a), C(nlist, b)
            for s in unify(nlist, [(l, r)]).unifiers:
                assert apply_subst(sig, l, s) == apply_subst(sig, r, s)

    def test_minimality(self, nlist):
        res = unify(nlist, [(C(nlist, "X . Y . Z"), C(nlist, "P . Q"))])
        solver = Unify(nlist)
        pv = [v for v in nlist.variables.values()
              if v.name in ("X", "Y", "Z", "P", "Q")]
        for s, t in itertools.permutations(res.unifiers, 2):
            assert not solver._instance_of(s, t, pv) or \
                solver._instance_of(t, s, pv)


class TestAcUnification:
    @pytest.fixture(scope="class")
    def acmod(self, database):
        from maudelet.parser import parse_units
        src = """
        fmod AC-TEST is
          sort Elt .
          ops a b c : -> Elt [ctor] .
          op f : Elt Elt -> Elt [assoc comm] .
          op g : Elt -> Elt [ctor] .
          op h : Elt Elt -> Elt [comm] .
          vars X Y Z W : Elt .
        endfm
        """
        database.insert(parse_units(src)[0])
        return database.get("AC-TEST")

    def test_split_three_constants(self, acmod):
        # X f Y against a f b f c: 2^3 - 2 = 6 ways to split the multiset
        res = unify(acmod, [(C(acmod, "f(X, Y)"), C(acmod, "f(a, f(b, c))"))])
        assert len(res.unifiers) == 6
        assert res.complete

    def test_ground_split_oracle(self, acmod):
        sig = acmod.signature
        lhs = C(acmod, "f(X, Y)")
        rhs = C(acmod, "f(a, f(b, c))")
        unifiers = unify(acmod, [(lhs, rhs)]).unifiers
        xv, yv = vars_of(lhs)
        elements = [C(acmod, t) for t in "abc"]
        splits = set()
        for mask in range(1, 7):
            left = [e for i, e in enumerate(elements) if mask & (1 << i)]
            right = [e for i, e in enumerate(elements)
                     if not mask & (1 << i)]
            f = lhs.op
            from maudelet.terms import App
            mk = lambda els: els[0] if len(els) == 1 else canonicalize(
                sig, App(f, tuple(els)))
            splits.add((mk(left), mk(right)))
        got = {(s.get(xv), s.get(yv)) for s in unifiers}
        assert got == splits

    def test_commutative_swap(self, acmod):
        sig = acmod.signature
        l, r = C(acmod, "h(X, a)"), C(acmod, "h(a, Y)")
        res = unify(acmod, [(l, r)])
        assert res.complete
        for s in res.unifiers:
            assert apply_subst(sig, l, s) == apply_subst(sig, r, s)
        # {X -> a, Y -> a} must be an instance of some returned unifier
        solver = Unify(acmod)
        xv, yv = vars_of(l) + vars_of(r)
        ground = Substitution({xv: C(acmod, "a"), yv: C(acmod, "a")})
        assert any(
            solver._simultaneous_match(
                [(u.get(v, v), ground.get(v, v)) for v in (xv, yv)])
            for u in res.unifiers)

    def test_diophantine_var_only(self, acmod):
        # x1 f x2 =? x3: minimal basis {(1,0,1),(0,1,1)} gives one unifier
        res = unify(acmod, [(C(acmod, "f(X, Y)"), C(acmod, "Z"))])
        assert res.complete
        sig = acmod.signature
        l, r = C(acmod, "f(X, Y)"), C(acmod, "Z")
        for s in res.unifiers:
            assert apply_subst(sig, l, s) == apply_subst(sig, r, s)

    def test_brute_force_ground_completeness(self, acmod):
        """Every small ground unifier is an instance of a returned one."""
        sig = acmod.signature
        lhs = C(acmod, "f(X, g(Y))")
        rhs = C(acmod, "f(g(a), Z)")
        unifiers = unify(acmod, [(lhs, rhs)]).unifiers
        solver = Unify(acmod)
        consts = [C(acmod, t) for t in "ab"]
        from maudelet.terms import App
        gop = C(acmod, "g(a)").op
        fop = lhs.op
        depth1 = consts + [App(gop, (c,)) for c in consts]
        pool = depth1 + [canonicalize(sig, App(fop, (t1, t2)))
                         for t1 in depth1 for t2 in depth1]
        pool = list(dict.fromkeys(pool))
        pvars = vars_of(lhs) + vars_of(rhs)
        checked = instances = 0
        for combo in itertools.product(pool, repeat=len(pvars)):
            theta = Substitution(dict(zip(pvars, combo)))
            if apply_subst(sig, lhs, theta) != apply_subst(sig, rhs, theta):
                continue
            checked += 1
            ok = any(
                solver._simultaneous_match(
                    [(u.get(v, v), theta.get(v, v)) for v in pvars])
                for u in unifiers)
            assert ok, f"ground unifier {theta} not covered"
            instances += 1
        assert checked > 0


class TestErrors:
    def test_assoc_id_rejected(self, hanoi):
        t = C(hanoi, "(0)[3 2 1] (1)[nil] (2)[nil]")
        with pytest.raises(UnificationError, match="variant"):
            unify(hanoi, [(t, t)])

    def test_ill_kinded_rejected(self, nlist):
        with pytest.raises(UnificationError):
            unify(nlist, [(C(nlist, "X"), parse_term_text(nlist, "true"))])
