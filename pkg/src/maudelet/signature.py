"""Order-sorted signatures: sorts, kinds, operators and their axioms."""

from __future__ import annotations

from dataclasses import dataclass, field


class SignatureError(Exception):
    pass


class Sort:
    """A sort, or a kind when ``is_kind`` (kinds act as top supersorts)."""

    __slots__ = ("name", "is_kind", "kind")

    def __init__(self, name: str, is_kind: bool = False):
        self.name = name
        self.is_kind = is_kind
        self.kind: Kind | None = None  # assigned when kinds are computed

    def __repr__(self):
        return f"Sort({self.name})"

    def __str__(self):
        return self.name


class Kind:
    """A connected component of the sort poset, with its top error sort."""

    __slots__ = ("sorts", "top", "maximals")

    def __init__(self, sorts: list[Sort]):
        self.sorts = sorts
        self.maximals: list[Sort] = []
        self.top = Sort("", is_kind=True)
        self.top.kind = self
        for s in sorts:
            s.kind = self

    def finish(self, leq):
        self.maximals = [
            s for s in self.sorts
            if not any(t is not s and leq(s, t) for t in self.sorts)
        ]
        self.top.name = "[" + ",".join(s.name for s in self.maximals) + "]"

    def __repr__(self):
        return f"Kind({self.top.name})"


@dataclass
class OpDecl:
    """One rank declaration of an operator family."""

    arg_sorts: tuple[Sort, ...]
    result_sort: Sort
    is_kind_level: bool = False


@dataclass
class Attributes:
    """Operator attributes; axiom attributes define the structural theory B."""

    assoc: bool = False
    comm: bool = False
    identity: object = None        # Term once resolved
    left_identity: object = None
    right_identity: object = None
    ctor: bool = False
    frozen: tuple[int, ...] = ()
    prec: int | None = None
    gather: tuple[str, ...] | None = None
    special: str | None = None     # builtin evaluation hook name
    extra: tuple = ()              # inert attributes kept verbatim
    id_declared: bool = False      # identity announced (term may be pending)

    def axiom_key(self):
        return (self.assoc, self.comm,
                self.identity is not None,
                self.left_identity is not None,
                self.right_identity is not None)


class Operator:
    """An operator family: one mixfix pattern at one kind-level rank.

    Subsort-overloaded declarations of the same pattern live in one
    family and must share axiom attributes.
    """

    __slots__ = ("pattern", "arg_kinds", "result_kind", "decls", "attrs",
                 "name", "index", "_ident_norm")

    def __init__(self, pattern: tuple[str, ...], arg_kinds, result_kind,
                 attrs: Attributes, index: int):
        self.pattern = pattern
        self.arg_kinds = arg_kinds          # list[Kind]
        self.result_kind = result_kind      # Kind
        self.decls: list[OpDecl] = []
        self.attrs = attrs
        self.name = "".join(p for p in pattern)
        self.index = index                  # declaration order, for determinism
        self._ident_norm = None

    @property
    def arity(self):
        return len(self.arg_kinds)

    @property
    def is_mixfix(self):
        return any(p != "_" for p in self.pattern) and self.arity > 0

    def identity_for(self, side: str):
        """Identity term usable on the given side ('left'/'right'), if any."""
        a = self.attrs
        if a.identity is not None:
            return a.identity
        if side == "left" and a.left_identity is not None:
            return a.left_identity
        if side == "right" and a.right_identity is not None:
            return a.right_identity
        return None

    @property
    def has_any_identity(self):
        a = self.attrs
        return (a.identity is not None or a.left_identity is not None
                or a.right_identity is not None)

    def default_prec(self):
        if self.attrs.prec is not None:
            return self.attrs.prec
        if self.arity == 0 or not self.is_mixfix:
            return 0
        if self.pattern[0] == "_" or self.pattern[-1] == "_":
            return 41
        return 0  # bracket-like: starts and ends with literal tokens

    def gather_bounds(self):
        """Max sub-precedence admitted at each argument slot."""
        prec = self.default_prec()
        bounds = []
        arg_idx = 0
        for i, p in enumerate(self.pattern):
            if p != "_":
                continue
            if self.attrs.gather is not None:
                g = self.attrs.gather[arg_idx]
                bounds.append({"E": prec, "e": prec - 1, "&": 10**9}[g])
            else:
                enclosed = (0 < i < len(self.pattern) - 1
                            and self.pattern[i - 1] != "_"
                            and self.pattern[i + 1] != "_")
                bounds.append(10**9 if enclosed else prec)
            arg_idx += 1
        return bounds

    def __repr__(self):
        return f"Op({self.name}/{self.arity})"


class Signature:
    """Sorts with their subsort order plus the operator families."""

    def __init__(self):
        self.sorts: dict[str, Sort] = {}
        self.subsort_pairs: set[tuple[str, str]] = set()
        self.kinds: list[Kind] = []
        self.operators: list[Operator] = []
        self._leq: dict[str, set[str]] = {}  # sort name -> names of supersorts

    # -- construction ---------------------------------------------------
    def add_sort(self, name: str) -> Sort:
        if name not in self.sorts:
            self.sorts[name] = Sort(name)
        return self.sorts[name]

    def add_subsort(self, sub: str, sup: str):
        if sub not in self.sorts or sup not in self.sorts:
            raise SignatureError(f"unknown sort in subsort {sub} < {sup}")
        self.subsort_pairs.add((sub, sup))

    def close(self):
        """Compute the transitive subsort closure and the kinds."""
        up = {n: {n} for n in self.sorts}
        for sub, sup in self.subsort_pairs:
            up[sub].add(sup)
        changed = True
        while changed:
            changed = False
            for n in up:
                new = set()
                for m in up[n]:
                    new |= up[m]
                if not new <= up[n]:
                    up[n] |= new
                    changed = True
        for n in up:
            if any(m != n and n in up[m] and m in up[n] for m in up[n]):
                raise SignatureError(f"subsort cycle involving sort {n}")
        self._leq = up
        # connected components under the symmetric closure
        adj = {n: set() for n in self.sorts}
        for sub, sup in self.subsort_pairs:
            adj[sub].add(sup)
            adj[sup].add(sub)
        seen = set()
        self.kinds = []
        for n in self.sorts:  # insertion order: deterministic
            if n in seen:
                continue
            comp, stack = [], [n]
            seen.add(n)
            while stack:
                m = stack.pop()
                comp.append(m)
                for p in sorted(adj[m]):
                    if p not in seen:
                        seen.add(p)
                        stack.append(p)
            kind = Kind([self.sorts[m] for m in sorted(comp)])
            kind.finish(self.leq)
            self.kinds.append(kind)

    # -- queries ---------------------------------------------------------
    def leq(self, s1: Sort, s2: Sort) -> bool:
        """Subsort order, with each kind above all sorts of its component."""
        if s2.is_kind:
            return s1.kind is s2.kind or s1 is s2
        if s1.is_kind:
            return s1 is s2
        return s2.name in self._leq.get(s1.name, ())

    def lub_exists(self, s1: Sort, s2: Sort) -> bool:
        return s1.kind is s2.kind

    def glb_candidates(self, sorts):
        """Maximal sorts below all of ``sorts`` (within one kind)."""
        kind = sorts[0].kind
        below = [s for s in kind.sorts if all(self.leq(s, t) for t in sorts)]
        return [s for s in below
                if not any(t is not s and self.leq(s, t) for t in below)]

    def new_operator(self, pattern, arg_kinds, result_kind, attrs) -> Operator:
        op = Operator(tuple(pattern), arg_kinds, result_kind, attrs,
                      len(self.operators))
        self.operators.append(op)
        return op

    def find_operator(self, pattern, arg_kinds, result_kind) -> Operator | None:
        for op in self.operators:
            if (op.pattern == tuple(pattern) and op.arg_kinds == arg_kinds
                    and op.result_kind is result_kind):
                return op
        return None
