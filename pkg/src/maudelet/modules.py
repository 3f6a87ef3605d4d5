"""Theory modules: statements, rules, strategy definitions, module database."""

from __future__ import annotations

from dataclasses import dataclass, field

from .lexer import Token
from .signature import Signature, Sort
from .terms import Substitution, Term, Var


class ModuleError(Exception):
    pass


# -- conditions -------------------------------------------------------------

@dataclass(frozen=True)
class EqualityFragment:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class MatchFragment:
    pattern: Term
    value: Term


@dataclass(frozen=True)
class SortFragment:
    term: Term
    sort: Sort


@dataclass(frozen=True)
class RewriteFragment:
    source: Term
    target: Term


Condition = tuple  # ordered tuple of fragments


# -- statements --------------------------------------------------------------

@dataclass
class Equation:
    lhs: Term
    rhs: Term
    condition: Condition = ()
    label: str | None = None
    owise: bool = False
    variant: bool = False
    nonexec: bool = False
    print_spec: tuple | None = None
    metadata: str | None = None
    index: int = 0

    @property
    def is_conditional(self):
        return bool(self.condition)


@dataclass
class Membership:
    term: Term
    sort: Sort
    condition: Condition = ()
    label: str | None = None
    nonexec: bool = False
    index: int = 0


@dataclass
class Rule:
    lhs: Term
    rhs: Term
    condition: Condition = ()
    label: str | None = None
    narrowing: bool = False
    nonexec: bool = False
    print_spec: tuple | None = None
    metadata: str | None = None
    index: int = 0

    def rewrite_fragments(self):
        return [f for f in self.condition if isinstance(f, RewriteFragment)]


@dataclass
class StrategyDecl:
    name: str
    param_sorts: tuple[Sort, ...]
    subject_sort: Sort | None


@dataclass
class StrategyDef:
    name: str
    params: tuple[Term, ...]      # call patterns matched against call arguments
    body: object                  # strategies.StrategyExpr
    condition: Condition = ()
    index: int = 0


# -- theory modules -----------------------------------------------------------

@dataclass
class RawModule:
    """Surface form of a module: its own declarations, before flattening."""

    name: str
    kind: str                           # 'fmod' | 'mod' | 'smod'
    imports: list[str] = field(default_factory=list)
    sort_decls: list[str] = field(default_factory=list)
    subsort_decls: list[tuple[str, str]] = field(default_factory=list)
    op_decls: list = field(default_factory=list)        # OpSource
    var_decls: list[tuple[str, list[Token]]] = field(default_factory=list)
    statements: list[tuple[str, list[Token]]] = field(default_factory=list)
    strat_decls: list[tuple[str, list[Token]]] = field(default_factory=list)
    no_bool: bool = False


@dataclass
class OpSource:
    pattern_tokens: list[str]           # mixfix pieces ('_' for slots)
    arg_sort_tokens: list[list[Token]]
    result_sort_tokens: list[Token]
    partial: bool                       # declared with ~>
    attr_tokens: list[Token]


class TheoryModule:
    """A flattened module: signature plus executable statements."""

    def __init__(self, name: str, kind: str):
        self.name = name
        self.kind = kind                  # 'fmod' | 'mod' | 'smod'
        self.signature = Signature()
        self.variables: dict[str, Var] = {}
        self.equations: list[Equation] = []
        self.memberships: list[Membership] = []
        self.rules: list[Rule] = []
        self.strategy_decls: dict[str, StrategyDecl] = {}
        self.strategy_defs: list[StrategyDef] = []
        self.has_nat = False
        self.has_qid = False
        self.literal_ops: dict[tuple[str, str], object] = {}
        self.imports: list[str] = []
        self._fresh_sorts: dict[str, Sort] = {}

    # -- builtin literal constants ------------------------------------------
    def nat_literal(self, value: int):
        from .signature import Attributes
        key = ("nat", str(value))
        op = self.literal_ops.get(key)
        if op is None:
            sig = self.signature
            if value == 0:
                sort = sig.sorts.get("Zero") or sig.sorts["Nat"]
            else:
                sort = sig.sorts.get("NzNat") or sig.sorts["Nat"]
            attrs = Attributes(ctor=True, special="nat.literal")
            op = sig.new_operator((str(value),), [], sort.kind, attrs)
            from .signature import OpDecl
            op.decls.append(OpDecl((), sort))
            self.literal_ops[key] = op
        return op

    def qid_literal(self, text: str):
        from .signature import Attributes, OpDecl
        key = ("qid", text)
        op = self.literal_ops.get(key)
        if op is None:
            sig = self.signature
            sort = sig.sorts["Qid"]
            attrs = Attributes(ctor=True, special="qid.literal")
            op = sig.new_operator((text,), [], sort.kind, attrs)
            op.decls.append(OpDecl((), sort))
            self.literal_ops[key] = op
        return op

    def sort_named(self, name: str) -> Sort:
        """Resolve a sort name, accepting ``[S]`` for the kind of ``S``."""
        if name.startswith("[") and name.endswith("]"):
            inner = name[1:-1].split(",")[0]
            base = self.signature.sorts.get(inner)
            if base is None:
                raise ModuleError(f"unknown sort {inner} in kind {name}")
            return base.kind.top
        s = self.signature.sorts.get(name)
        if s is None:
            raise ModuleError(f"unknown sort {name}")
        return s

    def rules_with_label(self, label: str) -> list[Rule]:
        return [r for r in self.rules if r.label == label]

    def __repr__(self):
        return f"TheoryModule({self.name})"


class ModuleDatabase:
    """Named raw modules plus a cache of built (flattened) modules."""

    def __init__(self):
        self.raw: dict[str, RawModule] = {}
        self.built: dict[str, TheoryModule] = {}

    def insert(self, raw: RawModule) -> bool:
        """Register a raw module; returns True if it replaced an old one."""
        replaced = raw.name in self.raw
        self.raw[raw.name] = raw
        if replaced:
            self.built.clear()  # downstream modules may depend on it
        return replaced

    def get(self, name: str) -> TheoryModule:
        if name not in self.built:
            if name not in self.raw:
                raise ModuleError(f"unknown module {name}")
            from .parser import build_module
            self.built[name] = build_module(self.raw[name], self)
        return self.built[name]

    def import_closure(self, raw: RawModule) -> list[RawModule]:
        """Transitive imports in dependency order, then the module itself."""
        out: list[RawModule] = []
        seen: set[str] = set()

        def visit(r: RawModule):
            if r.name in seen:
                return
            seen.add(r.name)
            names = list(r.imports)
            if not r.no_bool and r.name not in ("BOOL", "TRUTH-VALUE"):
                names.append("BOOL")
            for name in names:
                if name not in self.raw:
                    raise ModuleError(
                        f"module {r.name} imports unknown module {name}")
                visit(self.raw[name])
            out.append(r)

        visit(raw)
        return out
