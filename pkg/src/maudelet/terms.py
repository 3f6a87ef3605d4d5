"""Terms, substitutions, positions, canonical forms and least sorts.

Terms are immutable.  ``canonicalize`` produces the representative of a
term's B-equivalence class: associative arguments are flattened,
identity elements removed, and commutative argument collections sorted
under a global total term order.  Raw (as-parsed) trees use the same
datatype, so positions can address the unflattened view of examples.
"""

from __future__ import annotations

from .signature import Operator, Signature, Sort


class TermError(Exception):
    pass


def _numeric_aware(name: str):
    """Sort key piece treating numeric names/suffixes numerically."""
    if name.isdigit():
        return (0, int(name), "")
    i = len(name)
    while i > 0 and name[i - 1].isdigit():
        i -= 1
    if i < len(name):
        return (1, 0, name[:i]) + (int(name[i:]),)
    return (1, 0, name)


class Term:
    __slots__ = ("_hash", "_key", "_canon", "_ls")

    def sort_key(self):
        raise NotImplementedError


def term_key(t: "Term"):
    return t.sort_key()


class Var(Term):
    __slots__ = ("name", "sort")

    def __init__(self, name: str, sort: Sort):
        self.name = name
        self.sort = sort
        self._hash = None
        self._key = None
        self._canon = self
        self._ls = sort

    def __eq__(self, other):
        return (self is other
                or (type(other) is Var and self.name == other.name
                    and self.sort is other.sort))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("var", self.name, self.sort.name))
        return self._hash

    def sort_key(self):
        if self._key is None:
            self._key = (2, _numeric_aware(self.name), self.sort.name)
        return self._key

    def __repr__(self):
        return f"Var({self.name}:{self.sort.name})"


class App(Term):
    __slots__ = ("op", "args")

    def __init__(self, op: Operator, args: tuple[Term, ...]):
        self.op = op
        self.args = args
        self._hash = None
        self._key = None
        self._canon = None
        self._ls = None

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not App or self.op is not other.op:
            return False
        if len(self.args) != len(other.args):
            return False
        return self.args == other.args

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("app", id(self.op), self.args))
        return self._hash

    def sort_key(self):
        if self._key is None:
            self._key = (1, (len(self.args),) + _numeric_aware(self.op.name),
                         tuple(a.sort_key() for a in self.args))
        return self._key

    def __repr__(self):
        if not self.args:
            return f"App({self.op.name})"
        return f"App({self.op.name}, {list(self.args)!r})"


def is_var(t: Term) -> bool:
    return type(t) is Var


def mk(op: Operator, *args: Term) -> App:
    return App(op, tuple(args))


# -- canonical forms ------------------------------------------------------

def flatten_args(op: Operator, args) -> list[Term]:
    """Flatten nested applications of the same associative operator."""
    out: list[Term] = []
    for a in args:
        if type(a) is App and a.op is op:
            out.extend(flatten_args(op, a.args))
        else:
            out.append(a)
    return out


def canonicalize(sig: Signature, term: Term) -> Term:
    """B-canonical representative: flat, identity-free, comm-sorted."""
    if term._canon is not None:
        return term._canon
    result = _canon(sig, term)
    term._canon = result
    return result


def _canon(sig: Signature, term: Term) -> Term:
    if type(term) is Var:
        return term
    op: Operator = term.op
    args = [canonicalize(sig, a) for a in term.args]
    a = op.attrs
    if op.arity == 2 and (a.assoc or a.comm or op.has_any_identity):
        if a.assoc:
            args = flatten_args(op, args)
            left_id = op.identity_for("left")
            right_id = op.identity_for("right")
            if left_id is not None or right_id is not None:
                ident = left_id if left_id is not None else right_id
                kept = [x for x in args if x != ident]
                if not kept:
                    result = ident
                    term._canon = result
                    return result
                if len(kept) == 1:
                    term._canon = kept[0]
                    return kept[0]
                args = kept
            if a.comm:
                args.sort(key=term_key)
        else:
            # binary, possibly comm and/or identities
            ident = op.attrs.identity
            if ident is not None and ident in args:
                other = args[1] if args[0] == ident else args[0]
                term._canon = other
                return other
            if op.attrs.left_identity is not None and args[0] == op.attrs.left_identity:
                term._canon = args[1]
                return args[1]
            if op.attrs.right_identity is not None and args[1] == op.attrs.right_identity:
                term._canon = args[0]
                return args[0]
            if a.comm:
                args.sort(key=term_key)
    new = App(op, tuple(args))
    new._canon = new
    term._canon = new
    return new


# -- least sorts ----------------------------------------------------------

def _apply_decls(sig: Signature, op: Operator, arg_sorts) -> Sort:
    """Least result sort of one application step (kind if only kind-level)."""
    for k, s in zip(op.arg_kinds, arg_sorts):
        if s.kind is not k:
            raise TermError(
                f"argument of sort {s.name} outside kind {k.top.name} "
                f"for operator {op.name}")
    best: Sort | None = None
    for d in op.decls:
        if d.is_kind_level:
            continue
        if all(sig.leq(s, ds) for s, ds in zip(arg_sorts, d.arg_sorts)):
            if best is None or sig.leq(d.result_sort, best):
                best = d.result_sort
    return best if best is not None else op.result_kind.top


def least_sort(sig: Signature, term: Term) -> Sort:
    """Least sort from operator declarations (memberships not consulted)."""
    if term._ls is not None:
        return term._ls
    if type(term) is Var:
        return term.sort
    op: Operator = term.op
    arg_sorts = [least_sort(sig, a) for a in term.args]
    if op.attrs.assoc and len(term.args) > 2:
        cur = arg_sorts[0]
        for s in arg_sorts[1:]:
            cur = _apply_decls(sig, op, (cur, s))
        result = cur
    else:
        result = _apply_decls(sig, op, arg_sorts)
    term._ls = result
    return result


# -- positions ------------------------------------------------------------

def subterm_at(term: Term, position) -> Term:
    """Subterm at a position (1-based argument indices)."""
    t = term
    for i in position:
        if type(t) is Var or not 1 <= i <= len(t.args):
            raise TermError(f"invalid position {tuple(position)}")
        t = t.args[i - 1]
    return t


def replace_at(sig: Signature, term: Term, position, value: Term) -> Term:
    """Replace the subterm at a position; the result is canonicalized."""
    return canonicalize(sig, _replace(term, tuple(position), value))


def _replace(term: Term, position, value: Term) -> Term:
    if not position:
        return value
    i = position[0]
    if type(term) is Var or not 1 <= i <= len(term.args):
        raise TermError(f"invalid position {position}")
    args = list(term.args)
    args[i - 1] = _replace(args[i - 1], position[1:], value)
    return App(term.op, tuple(args))


def all_positions(term: Term, prefix=()):
    """All positions of a term, root first, left to right (canonical view)."""
    yield prefix, term
    if type(term) is App:
        for i, a in enumerate(term.args, start=1):
            yield from all_positions(a, prefix + (i,))


def vars_of(term: Term, acc=None) -> list[Var]:
    """Distinct variables in order of first occurrence."""
    if acc is None:
        acc = []
    if type(term) is Var:
        if term not in acc:
            acc.append(term)
    else:
        for a in term.args:
            vars_of(a, acc)
    return acc


# -- substitutions ---------------------------------------------------------

class Substitution:
    """A sort-preserving finite mapping from variables to terms."""

    __slots__ = ("bindings",)

    def __init__(self, bindings: dict[Var, Term] | None = None):
        self.bindings = dict(bindings) if bindings else {}

    def __bool__(self):
        return bool(self.bindings)

    def __eq__(self, other):
        return isinstance(other, Substitution) and self.bindings == other.bindings

    def __hash__(self):
        return hash(frozenset(self.bindings.items()))

    def get(self, v: Var, default=None):
        return self.bindings.get(v, default)

    def items(self):
        return sorted(self.bindings.items(), key=lambda kv: kv[0].sort_key())

    def copy(self) -> "Substitution":
        return Substitution(self.bindings)

    def bind(self, v: Var, t: Term) -> "Substitution":
        new = self.copy()
        new.bindings[v] = t
        return new

    def restrict(self, variables) -> "Substitution":
        keep = set(variables)
        return Substitution({v: t for v, t in self.bindings.items() if v in keep})

    def compose(self, sig: Signature, other: "Substitution") -> "Substitution":
        """self;other — apply ``other`` to self's images, add other's new pairs."""
        out = {v: apply_subst(sig, t, other) for v, t in self.bindings.items()}
        for v, t in other.bindings.items():
            if v not in out:
                out[v] = t
        return Substitution(out)

    def __repr__(self):
        inner = ", ".join(f"{v.name}:{v.sort.name} -> {t!r}"
                          for v, t in self.items())
        return "{" + inner + "}"


def apply_subst(sig: Signature, term: Term, subst: Substitution) -> Term:
    """Instantiate ``term`` by ``subst``; the result is canonical."""
    return canonicalize(sig, _subst_raw(term, subst))


def _subst_raw(term: Term, subst: Substitution) -> Term:
    if type(term) is Var:
        return subst.bindings.get(term, term)
    if not subst.bindings:
        return term
    changed = False
    new_args = []
    for a in term.args:
        b = _subst_raw(a, subst)
        changed = changed or b is not a
        new_args.append(b)
    if not changed:
        return term
    return App(term.op, tuple(new_args))


# -- preregularity check ----------------------------------------------------

def check_preregular(sig: Signature):
    """Offending (operator, argument-sort tuple) pairs lacking a least sort.

    Declarations are closed under commutativity; associativity is checked
    on the binary ranks, which is conservative for exotic signatures.
    """
    from itertools import product

    offending = []
    for op in sig.operators:
        if op.arity == 0:
            continue
        decls = [d for d in op.decls if not d.is_kind_level]
        if op.attrs.comm:
            closed = []
            for d in decls:
                closed.append(d)
                rev = tuple(reversed(d.arg_sorts))
                if rev != d.arg_sorts:
                    from .signature import OpDecl
                    closed.append(OpDecl(rev, d.result_sort))
            decls = closed
        candidate_sorts = []
        for i, kind in enumerate(op.arg_kinds):
            pool = [s for s in kind.sorts
                    if any(sig.leq(s, d.arg_sorts[i]) for d in decls)]
            candidate_sorts.append(pool)
        for combo in product(*candidate_sorts):
            results = [d.result_sort for d in decls
                       if all(sig.leq(s, ds)
                              for s, ds in zip(combo, d.arg_sorts))]
            if not results:
                continue
            minimal = [r for r in results
                       if all(sig.leq(r, other) for other in results)]
            if not minimal:
                offending.append((op, combo))
    return offending
