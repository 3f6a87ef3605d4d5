"""Rule rewriting for system modules: one-step application, rule-fair
``rewrite``, rule-and-position-fair ``frewrite``, and breadth-first
``search`` over the reachable state graph with duplicate elimination.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .reduction import EngineLimit, RewriteEngine
from .terms import (App, Substitution, Term, Var, apply_subst, canonicalize,
                    least_sort)


@dataclass
class SearchQuery:
    start: Term
    mode: str                    # '1' | '+' | '*' | '!'
    goal: Term
    condition: tuple = ()
    max_solutions: int | None = None
    max_depth: int | None = None


@dataclass
class SearchGraph:
    states: list[Term] = field(default_factory=list)
    depths: list[int] = field(default_factory=list)
    edges: list[tuple] = field(default_factory=list)  # (from, rule, subst, to)
    index: dict[Term, int] = field(default_factory=dict)
    solutions: list[tuple] = field(default_factory=list)  # (state, subst)


class RuleEngine(RewriteEngine):
    """Equational engine extended with rule rewriting."""

    def __init__(self, module, limits=None):
        super().__init__(module, limits)
        self._exec_rules = [r for r in module.rules if not r.nonexec]

    # -- one-step application ---------------------------------------------------
    def rule_step(self, term: Term, rules=None, top_only=False):
        """All one-step successors: (result, rule, position, substitution).

        ``term`` must be an equational normal form; results are normal
        forms (rules fire on normalized terms, ground-coherence style).
        """
        out = []
        rules = self._exec_rules if rules is None else rules
        for pos, node in self._rule_positions(term, top_only):
            for rule in rules:
                if not self._kind_matches(rule.lhs, node):
                    continue
                for m in self.matcher.match_all(rule.lhs, node,
                                                extension=True):
                    for theta in self.eval_condition(rule.condition, m.subst):
                        replacement = apply_subst(self.sig, rule.rhs, theta)
                        if m.has_residue:
                            new_node = self.matcher.rebuild(
                                node.op, replacement, m)
                        else:
                            new_node = replacement
                        result = self._replace(term, pos, new_node)
                        self._count_rewrite()
                        if rule.print_spec and self.print_attribute:
                            self.emit_print(rule.print_spec, theta)
                        out.append((self.reduce(result), rule, pos, theta))
        return out

    def _kind_matches(self, lhs, node):
        if type(lhs) is Var:
            return lhs.sort.kind is least_sort(self.sig, node).kind
        return lhs.op.result_kind is least_sort(self.sig, node).kind

    def _rule_positions(self, term: Term, top_only=False):
        """Non-frozen positions, outermost first, left to right."""
        queue = deque([((), term)])
        while queue:
            pos, node = queue.popleft()
            if type(node) is Var:
                continue
            yield pos, node
            if top_only:
                return
            frozen = node.op.attrs.frozen
            if frozen == (-1,):
                continue
            for i, a in enumerate(node.args, start=1):
                arg_slot = min(i, node.op.arity) - 1
                if (arg_slot + 1) in frozen:
                    continue
                queue.append((pos + (i,), a))

    def _replace(self, term, pos, new_node):
        from .terms import replace_at
        return replace_at(self.sig, term, pos, new_node)

    # -- rewrite: rule-fair -------------------------------------------------------
    def rewrite(self, term: Term, bound: int | None = None):
        """Cycle through rules in declaration order; leftmost-outermost redex."""
        current = self.reduce(term)
        rules = self._exec_rules
        if not rules:
            return current, 0
        cursor = 0
        steps = 0
        while bound is None or steps < bound:
            fired = self._rewrite_one(current, rules, cursor)
            if fired is None:
                break
            current, rule_idx = fired
            cursor = (rule_idx + 1) % len(rules)
            steps += 1
        return current, steps

    def _rewrite_one(self, term, rules, cursor):
        n = len(rules)
        for k in range(n):
            rule = rules[(cursor + k) % n]
            for pos, node in self._rule_positions(term):
                if not self._kind_matches(rule.lhs, node):
                    continue
                for m in self.matcher.match_all(rule.lhs, node,
                                                extension=True):
                    for theta in self.eval_condition(rule.condition, m.subst):
                        self._count_rewrite()
                        if rule.print_spec and self.print_attribute:
                            self.emit_print(rule.print_spec, theta)
                        replacement = apply_subst(self.sig, rule.rhs, theta)
                        if m.has_residue:
                            new_node = self.matcher.rebuild(
                                node.op, replacement, m)
                        else:
                            new_node = replacement
                        result = self.reduce(self._replace(term, pos, new_node))
                        return result, (cursor + k) % n
        return None

    # -- frewrite: rule and position fair -------------------------------------------
    def frewrite(self, term: Term, rounds: int | None = None):
        """Round-based traversal; each round rewrites disjoint fragments once."""
        current = self.reduce(term)
        done = 0
        while rounds is None or done < rounds:
            nxt, fired = self._frewrite_round(current)
            if not fired:
                break
            current = nxt
            done += 1
        return current, done

    def _frewrite_round(self, term):
        """One round: repeatedly rewrite over unconsumed top fragments."""
        fired_any = False
        if type(term) is App and term.op.attrs.assoc and term.op.attrs.comm:
            op = term.op
            elements = list(term.args)
            fresh = [True] * len(elements)
            while True:
                hit = self._round_step(op, elements, fresh)
                if hit is None:
                    break
                fired_any = True
                elements, fresh = hit
            rebuilt = self.matcher._build_ac(op, elements,
                                             op.attrs.identity)
            if rebuilt is None:
                rebuilt = term
            return self.reduce(rebuilt), fired_any
        # generic: a single attempt at the whole term per round
        step = self.rule_step(term)
        if step:
            return step[0][0], True
        return term, False

    def _round_step(self, op, elements, fresh):
        """Apply one rule to a sub-multiset of still-fresh elements."""
        fresh_elements = [e for e, f in zip(elements, fresh) if f]
        if not fresh_elements:
            return None
        subject = self.matcher._build_ac(op, fresh_elements, op.attrs.identity)
        if subject is None:
            return None
        for rule in self._exec_rules:
            lhs = rule.lhs
            hits = []  # (theta, consumed elements)
            if type(lhs) is App and lhs.op is op:
                if self._kind_matches(lhs, subject):
                    for m in self.matcher.match_all(lhs, subject,
                                                    extension=True):
                        for theta in self.eval_condition(rule.condition,
                                                         m.subst):
                            hits.append(
                                (theta,
                                 self._consumed_elements(fresh_elements, m)))
                            break
                        if hits:
                            break
            else:
                for e in fresh_elements:
                    if not self._kind_matches(lhs, e):
                        continue
                    for m in self.matcher.match_all(lhs, e, extension=False):
                        for theta in self.eval_condition(rule.condition,
                                                         m.subst):
                            hits.append((theta, [e]))
                            break
                        if hits:
                            break
                    if hits:
                        break
            if not hits:
                continue
            theta, consumed = hits[0]
            self._count_rewrite()
            if rule.print_spec and self.print_attribute:
                self.emit_print(rule.print_spec, theta)
            replacement = self.reduce(apply_subst(self.sig, rule.rhs, theta))
            new_elements, new_fresh = [], []
            for e, f in zip(elements, fresh):
                if f and e in consumed:
                    consumed.remove(e)
                    continue
                new_elements.append(e)
                new_fresh.append(f)
            for piece in self._element_list(op, replacement):
                new_elements.append(piece)
                new_fresh.append(False)
            return new_elements, new_fresh
        return None

    def _consumed_elements(self, fresh_elements, m):
        leftover = list(m.residue)
        consumed = []
        pool = list(fresh_elements)
        for e in pool:
            if e in leftover:
                leftover.remove(e)
            else:
                consumed.append(e)
        return consumed

    def _element_list(self, op, term):
        if type(term) is App and term.op is op:
            return list(term.args)
        if term == op.attrs.identity:
            return []
        return [term]

    # -- search ------------------------------------------------------------------------
    def search(self, query: SearchQuery):
        """Run a breadth-first search; returns (solutions, graph)."""
        graph = SearchGraph()
        solutions = []
        for sol in self.search_iter(query, graph):
            solutions.append(sol)
        return solutions, graph

    def search_iter(self, query: SearchQuery, graph: SearchGraph):
        """Incremental breadth-first search yielding (state index, subst)."""
        start = self.reduce(query.start)
        graph.states.append(start)
        graph.depths.append(0)
        graph.index[start] = 0
        emitted = 0
        frontier = [0]
        checked = 0
        while True:
            while checked < len(graph.states):
                idx = checked
                checked += 1
                for sol in self._goal_matches(query, graph, idx):
                    graph.solutions.append(sol)
                    yield sol
                    emitted += 1
                    if query.max_solutions is not None \
                            and emitted >= query.max_solutions:
                        return
            if not frontier:
                return
            next_frontier = []
            for idx in frontier:
                depth = graph.depths[idx]
                if query.max_depth is not None and depth >= query.max_depth:
                    continue
                for result, rule, pos, theta in self.rule_step(
                        graph.states[idx]):
                    tgt = graph.index.get(result)
                    if tgt is None:
                        tgt = len(graph.states)
                        graph.states.append(result)
                        graph.depths.append(depth + 1)
                        graph.index[result] = tgt
                        next_frontier.append(tgt)
                    graph.edges.append((idx, rule, theta, tgt))
            frontier = next_frontier

    def _goal_matches(self, query: SearchQuery, graph: SearchGraph, idx: int):
        depth = graph.depths[idx]
        if query.mode == "+" and depth == 0:
            return
        if query.mode == "1" and depth != 1:
            return
        if query.mode == "!" and self.rule_step(graph.states[idx]):
            return
        state = graph.states[idx]
        for m in self.matcher.match_all(query.goal, state, extension=False):
            for theta in self.eval_condition(query.condition, m.subst):
                yield idx, theta
                break

    # -- rewrite conditions in rules ---------------------------------------------------
    def solve_rewrite_fragment(self, source: Term, target: Term):
        """Enumerate matches of ``target`` against states reachable from
        ``source`` in zero or more rule steps (bounded breadth-first)."""
        seen = {source}
        queue = deque([source])
        visited = 0
        while queue:
            state = queue.popleft()
            visited += 1
            if visited > self.limits.inner_search_depth:
                raise EngineLimit("rewrite-condition search limit exceeded")
            for m in self.matcher.match_all(target, state, extension=False):
                yield m.subst
            for result, _r, _p, _t in self.rule_step(state):
                if result not in seen:
                    seen.add(result)
                    queue.append(result)
