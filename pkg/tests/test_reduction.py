"""Equational simplification: normal forms, memberships, traces, owise."""

import pytest

from maudelet.parser import parse_term_text
from maudelet.printing import pretty
from maudelet.reduction import RewriteEngine
from maudelet.terms import canonicalize


@pytest.fixture()
def pfun_engine(pfun):
    return RewriteEngine(pfun)


@pytest.fixture()
def ac_engine(ac_nat):
    return RewriteEngine(ac_nat)


class TestPfun:
    def test_idempotency_collapses_duplicates(self, pfun, pfun_engine):
        t = parse_term_text(pfun, "{[1,2],[1,2],[3,7],[5,17],[3,7]}")
        nf = pfun_engine.reduce(t)
        assert pretty(pfun, nf) == "{[1, 2], [3, 7], [5, 17]}"
        assert pfun_engine.sort_of(nf).name == "PFun"

    def test_application(self, pfun, pfun_engine):
        t = parse_term_text(pfun, "{[1,2],[3,7],[5,17]}[3]")
        nf = pfun_engine.reduce(t)
        assert pretty(pfun, nf) == "7"
        assert pfun_engine.sort_of(nf).name == "NzNat"

    def test_empty_relation_is_pfun(self, pfun, pfun_engine):
        t = parse_term_text(pfun, "{null}")
        assert pfun_engine.sort_of(pfun_engine.reduce(t)).name == "PFun"

    def test_single_valued_check(self, pfun, pfun_engine):
        ok = pfun_engine.reduce(parse_term_text(pfun, "{[1,2],[3,7]}"))
        assert pfun_engine.sort_of(ok).name == "PFun"
        bad = pfun_engine.reduce(parse_term_text(pfun, "{[1,2],[1,3]}"))
        assert pfun_engine.sort_of(bad).name == "Rel"

    def test_undefined_application(self, pfun, pfun_engine):
        t = parse_term_text(pfun, "{[1,2]}[9]")
        assert pretty(pfun, pfun_engine.reduce(t)) == "undef"


class TestAcNat:
    def test_three_rewrites(self, ac_nat, ac_engine):
        t = parse_term_text(ac_nat, "(1 + (0 + 1)) + (0 * 1)")
        nf, count = ac_engine.reduce_with_count(t)
        assert pretty(ac_nat, nf) == "1 + 1"
        assert ac_engine.sort_of(nf).name == "NzNat"
        assert count == 3

    def test_trace_matches_listing(self, ac_nat):
        engine = RewriteEngine(ac_nat)
        t = parse_term_text(ac_nat, "(1 + (0 + 1)) + (0 * 1)")
        nf, text = engine.trace_reduce(t)
        assert pretty(ac_nat, nf) == "1 + 1"
        blocks = text.count("*********** equation")
        assert blocks == 3
        lines = [ln for ln in text.splitlines()]
        assert "eq 0 + N = N ." in lines
        assert "eq 0 * N = 0 ." in lines
        # the three steps in order: 0 + 1 -> 1, 0 * 1 -> 0, 0 + 1 + 1 -> 1 + 1
        assert lines.index("0 + 1") < lines.index("0 * 1")
        assert "0 + 1 + 1" in lines
        assert lines[-1] == "rewrites: 3"

    def test_already_normal_empty_trace(self, ac_nat):
        engine = RewriteEngine(ac_nat)
        t = parse_term_text(ac_nat, "1 + 1")
        nf, text = engine.trace_reduce(t)
        assert text.strip() == "rewrites: 0"

    def test_single_step_trace(self, ac_nat):
        engine = RewriteEngine(ac_nat)
        nf, text = engine.trace_reduce(parse_term_text(ac_nat, "0 * 1"))
        assert text.count("*********** equation") == 1
        assert "N --> 1" in text


class TestConditions:
    def test_empty_condition(self, pfun):
        engine = RewriteEngine(pfun)
        from maudelet.terms import Substitution
        assert list(engine.eval_condition((), Substitution()))[0] == \
            Substitution()

    def test_failing_equality_fragment(self, pfun):
        from maudelet.modules import EqualityFragment
        from maudelet.terms import Substitution
        engine = RewriteEngine(pfun)
        one = parse_term_text(pfun, "1")
        zero = parse_term_text(pfun, "0")
        frag = (EqualityFragment(one, zero),)
        assert list(engine.eval_condition(frag, Substitution())) == []
