"""Rule rewriting: one-step application, rewrite, frewrite, search."""

import pytest

from maudelet.parser import parse_term_text
from maudelet.printing import pretty
from maudelet.rules import RuleEngine, SearchQuery
from maudelet.terms import canonicalize


@pytest.fixture()
def hanoi_engine(hanoi):
    return RuleEngine(hanoi)


def hterm(hanoi, text):
    return canonicalize(hanoi.signature, parse_term_text(hanoi, text))


START = "(0)[3 2 1] (1)[nil] (2)[nil]"


class TestRuleStep:
    def test_initial_state_has_two_successors(self, hanoi, hanoi_engine):
        results = hanoi_engine.rule_step(hterm(hanoi, START))
        states = {r[0] for r in results}
        assert states == {
            hterm(hanoi, "(0)[3 2] (1)[1] (2)[nil]"),
            hterm(hanoi, "(0)[3 2] (1)[nil] (2)[1]"),
        }

    def test_no_rule_applies(self, hanoi, hanoi_engine):
        t = hterm(hanoi, "(0)[nil] (1)[nil] (2)[nil]")
        assert hanoi_engine.rule_step(t) == []


class TestRewrite:
    def test_bound_zero_is_identity(self, hanoi, hanoi_engine):
        t = hterm(hanoi, START)
        result, steps = hanoi_engine.rewrite(t, 0)
        assert result == t and steps == 0

    def test_bound_23_matches_paper(self, hanoi, hanoi_engine):
        result, steps = hanoi_engine.rewrite(hterm(hanoi, START), 23)
        assert steps == 23
        assert pretty(hanoi, result) == "(0)[3 2] (1)[1] (2)[nil]"


class TestSearch:
    def test_27_reachable_states(self, hanoi, hanoi_engine):
        goal = parse_term_text(hanoi, "H")
        query = SearchQuery(start=hterm(hanoi, START), mode="*", goal=goal)
        solutions, graph = hanoi_engine.search(query)
        assert len(solutions) == 27
        solved = hterm(hanoi, "(0)[nil] (1)[nil] (2)[3 2 1]")
        assert solved in graph.states

    def test_search_agrees_with_naive_fixpoint(self, hanoi, hanoi_engine):
        # oracle: iterate rule_step to a fixpoint and filter by matching
        start = hterm(hanoi, START)
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for s in frontier:
                for r, *_ in hanoi_engine.rule_step(s):
                    if r not in seen:
                        seen.add(r)
                        nxt.append(r)
            frontier = nxt
        goal = parse_term_text(hanoi, "H")
        query = SearchQuery(start=start, mode="*", goal=goal)
        solutions, graph = hanoi_engine.search(query)
        assert set(graph.states) == seen
        assert len(solutions) == len(seen)

    def test_mode_laws(self, hanoi, hanoi_engine):
        start = hterm(hanoi, START)
        goal = parse_term_text(hanoi, "H")

        def states(mode, max_depth=None):
            sols, graph = hanoi_engine.search(SearchQuery(
                start=start, mode=mode, goal=goal, max_depth=max_depth))
            return {graph.states[i] for i, _ in sols}

        star, plus, one, bang = (states(m) for m in "*+1!")
        assert bang <= star
        assert plus == star - {start}
        sols1, graph1 = hanoi_engine.search(SearchQuery(
            start=start, mode="1", goal=goal))
        assert all(graph1.depths[i] == 1 for i, _ in sols1)
        # depth-bound monotonicity
        for d in range(0, 4):
            assert states("*", d) <= states("*", d + 1)

    def test_solution_bound(self, hanoi, hanoi_engine):
        goal = parse_term_text(hanoi, "H")
        query = SearchQuery(start=hterm(hanoi, START), mode="*", goal=goal,
                            max_solutions=5)
        solutions, _ = hanoi_engine.search(query)
        assert len(solutions) == 5

    def test_edges_are_sound(self, hanoi, hanoi_engine):
        query = SearchQuery(start=hterm(hanoi, START), mode="!",
                            goal=parse_term_text(hanoi, "H"))
        _, graph = hanoi_engine.search(query)
        for src, rule, theta, tgt in graph.edges[:50]:
            succs = {r[0] for r in hanoi_engine.rule_step(graph.states[src])}
            assert graph.states[tgt] in succs
