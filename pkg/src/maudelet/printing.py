"""Mixfix pretty-printing of terms, statements and modules."""

from __future__ import annotations

from .terms import App, Term, Var

BIG = 10 ** 9

_OPENING = set("([{")
_CLOSING = set(")]},")


def _join(elements: list[tuple[str, bool]]) -> str:
    """Join rendered pieces; ``(text, is_literal)`` pairs control spacing."""
    out = []
    for k, (text, lit) in enumerate(elements):
        if k > 0:
            prev_text, prev_lit = elements[k - 1]
            space = True
            if prev_lit and prev_text in _OPENING:
                space = False
            elif lit and (text in _CLOSING or text in _OPENING):
                space = False
            if space:
                out.append(" ")
        out.append(text)
    return "".join(out)


def pretty(module, term: Term, bound: int = BIG, parent_op=None) -> str:
    if type(term) is Var:
        if term.name.startswith(("#", "%")):
            return f"{term.name}:{term.sort.name}"
        return term.name
    op = term.op
    if not term.args:
        return op.pattern[0]
    prec = op.default_prec()
    bounds = op.gather_bounds()
    if op.attrs.assoc and len(term.args) > 2 and len(op.pattern) in (2, 3):
        # flattened associative list
        sep = op.pattern[1] if len(op.pattern) == 3 else None
        elements: list[tuple[str, bool]] = []
        for k, a in enumerate(term.args):
            if k > 0 and sep is not None:
                elements.append((sep, True))
            elements.append((pretty(module, a, bounds[min(k, 1)], op), False))
        text = _join(elements)
    else:
        elements = []
        arg_idx = 0
        for piece in op.pattern:
            if piece == "_":
                elements.append((pretty(module, term.args[arg_idx],
                                        bounds[arg_idx], op), False))
                arg_idx += 1
            else:
                elements.append((piece, True))
        text = _join(elements)
    same_assoc = parent_op is op and op.attrs.assoc
    if prec > bound or (prec == bound and prec > 0 and parent_op is not None
                        and not same_assoc):
        return "(" + text + ")"
    return text


def pretty_sort(sort) -> str:
    return sort.name


def pretty_binding(module, var: Var, term: Term, with_sort=False) -> str:
    name = f"{var.name}:{var.sort.name}" if with_sort else var.name
    return f"{name} --> {pretty(module, term)}"


def pretty_substitution(module, subst, with_sorts=False) -> list[str]:
    return [pretty_binding(module, v, t, with_sorts)
            for v, t in subst.items()]


def pretty_condition(module, condition) -> str:
    from .modules import (EqualityFragment, MatchFragment, RewriteFragment,
                          SortFragment)
    parts = []
    for frag in condition:
        if isinstance(frag, EqualityFragment):
            parts.append(f"{pretty(module, frag.lhs)} = "
                         f"{pretty(module, frag.rhs)}")
        elif isinstance(frag, MatchFragment):
            parts.append(f"{pretty(module, frag.pattern)} := "
                         f"{pretty(module, frag.value)}")
        elif isinstance(frag, SortFragment):
            parts.append(f"{pretty(module, frag.term)} : {frag.sort.name}")
        elif isinstance(frag, RewriteFragment):
            parts.append(f"{pretty(module, frag.source)} => "
                         f"{pretty(module, frag.target)}")
    return " /\\ ".join(parts)


def pretty_statement(module, stmt) -> str:
    from .modules import Equation, Membership, Rule
    if isinstance(stmt, Equation):
        head = "ceq" if stmt.condition else "eq"
        label = f" [{stmt.label}]:" if stmt.label else ""
        text = (f"{head}{label} {pretty(module, stmt.lhs)} = "
                f"{pretty(module, stmt.rhs)}")
    elif isinstance(stmt, Membership):
        head = "cmb" if stmt.condition else "mb"
        label = f" [{stmt.label}]:" if stmt.label else ""
        text = (f"{head}{label} {pretty(module, stmt.term)} : "
                f"{stmt.sort.name}")
    elif isinstance(stmt, Rule):
        head = "crl" if stmt.condition else "rl"
        label = f" [{stmt.label}]:" if stmt.label else ""
        text = (f"{head}{label} {pretty(module, stmt.lhs)} => "
                f"{pretty(module, stmt.rhs)}")
    else:
        return repr(stmt)
    if stmt.condition:
        text += " if " + pretty_condition(module, stmt.condition)
    attrs = []
    if getattr(stmt, "owise", False):
        attrs.append("owise")
    if getattr(stmt, "variant", False):
        attrs.append("variant")
    if getattr(stmt, "nonexec", False):
        attrs.append("nonexec")
    if getattr(stmt, "narrowing", False):
        attrs.append("narrowing")
    if attrs:
        text += " [" + " ".join(attrs) + "]"
    return text + " ."
