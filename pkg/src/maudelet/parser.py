"""Surface-syntax parsing: modules, statements, and mixfix terms.

Terms are parsed bottom-up over token spans with memoization, filtered
by precedence/gather bounds and kind constraints; associative operators
are parsed flat (n-ary) to avoid regrouping blowups.  Statement and
command layer is keyword-driven.
"""

from __future__ import annotations

from .lexer import Token, split_mixfix, tokenize
from .modules import (EqualityFragment, Equation, MatchFragment, Membership,
                      ModuleDatabase, ModuleError, OpSource, RawModule,
                      RewriteFragment, Rule, SortFragment, StrategyDecl,
                      StrategyDef, TheoryModule)
from .signature import Attributes, OpDecl, SignatureError
from .terms import App, Term, Var, canonicalize, least_sort, vars_of

OPEN = {"(": ")", "[": "]", "{": "}"}
CLOSE = {v: k for k, v in OPEN.items()}

ATTR_KEYWORDS = {
    "assoc", "associative", "comm", "commutative", "ctor", "id:", "left",
    "right", "prec", "gather", "frozen", "format", "metadata", "special",
    "msg", "message", "object", "config", "configuration", "owise",
    "variant", "nonexec", "narrowing", "print", "label", "ditto", "iter",
    "memo", "strat",
}

STATEMENT_KEYWORDS = {
    "sort", "sorts", "subsort", "subsorts", "op", "ops", "var", "vars",
    "eq", "ceq", "mb", "cmb", "rl", "crl", "strat", "strats", "sd", "csd",
    "protecting", "extending", "including", "pr", "ex", "inc",
}


class ParseError(Exception):
    def __init__(self, message, token: Token | None = None):
        if token is not None:
            message = f"{message} (line {token.line}, column {token.column})"
        super().__init__(message)


class AmbiguousParse(ParseError):
    pass


# -- token utilities ----------------------------------------------------------

def split_statements(tokens: list[Token]) -> list[list[Token]]:
    """Split on ``.`` tokens at bracket level 0 that end a line or are
    followed by another declaration keyword (``_._`` stays intact since
    its arguments are never keywords)."""
    out, cur, depth = [], [], 0
    for k, t in enumerate(tokens):
        if t.text in OPEN:
            depth += 1
        elif t.text in CLOSE:
            depth = max(0, depth - 1)
        ends = k + 1 >= len(tokens) or tokens[k + 1].line > t.line \
            or tokens[k + 1].text in STATEMENT_KEYWORDS
        if t.text == "." and t.kind == "identifier" and depth == 0 and ends:
            if cur:
                out.append(cur)
            cur = []
        else:
            cur.append(t)
    if cur:
        out.append(cur)
    return out


def top_level_positions(tokens, text: str, start=0, end=None):
    """Indices of ``text`` tokens at bracket level 0 within [start, end)."""
    end = len(tokens) if end is None else end
    depth = 0
    hits = []
    for k in range(start, end):
        t = tokens[k].text
        if t in OPEN:
            depth += 1
        elif t in CLOSE:
            depth -= 1
        elif depth == 0 and t == text and tokens[k].kind != "string":
            hits.append(k)
    return hits


def matching_close(tokens, i: int) -> int | None:
    """Index of the bracket matching tokens[i], or None."""
    opener = tokens[i].text
    depth = 0
    for k in range(i, len(tokens)):
        t = tokens[k].text
        if t in OPEN:
            depth += 1
        elif t in CLOSE:
            depth -= 1
            if depth == 0:
                return k if t == OPEN[opener] else None
    return None


# -- surface module parsing ----------------------------------------------------

MODULE_OPENERS = {"fmod": "endfm", "mod": "endm", "smod": "endsm"}


def parse_units(source: str) -> list:
    """Split a file into module units (RawModule) and command token lists."""
    tokens = tokenize(source)
    units = []
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.text in MODULE_OPENERS:
            closer = MODULE_OPENERS[t.text]
            for k in range(i + 1, len(tokens)):
                if tokens[k].text == closer:
                    units.append(parse_raw_module(tokens[i:k + 1]))
                    i = k + 1
                    break
            else:
                raise ParseError(f"missing {closer}", t)
        else:
            # one command, terminated like a statement
            stmts = split_statements(tokens[i:])
            if not stmts:
                break
            cmd = stmts[0]
            units.append(cmd)
            consumed = 0
            while consumed < len(tokens) - i:
                tok = tokens[i + consumed]
                consumed += 1
                if tok.text == "." and cmd and tok.line >= cmd[-1].line:
                    break
            i += consumed
    return units


def parse_raw_module(tokens: list[Token]) -> RawModule:
    head = tokens[0].text
    if len(tokens) < 4 or tokens[2].text != "is":
        raise ParseError("malformed module header", tokens[0])
    raw = RawModule(name=tokens[1].text, kind=head)
    body = tokens[3:-1]
    for stmt in split_statements(body):
        _parse_module_statement(raw, stmt)
    return raw


def _parse_module_statement(raw: RawModule, stmt: list[Token]):
    kw = stmt[0].text
    rest = stmt[1:]
    if kw in ("sort", "sorts"):
        raw.sort_decls.extend(t.text for t in rest)
    elif kw in ("subsort", "subsorts"):
        groups, cur = [], []
        for t in rest:
            if t.text == "<":
                groups.append(cur)
                cur = []
            else:
                cur.append(t.text)
        groups.append(cur)
        for a, b in zip(groups, groups[1:]):
            for sub in a:
                for sup in b:
                    raw.subsort_decls.append((sub, sup))
    elif kw in ("protecting", "extending", "including", "pr", "ex", "inc"):
        for t in rest:
            if t.text != "+":
                raw.imports.append(t.text)
    elif kw in ("op", "ops"):
        raw.op_decls.extend(_parse_op_decl(stmt, many=(kw == "ops")))
    elif kw in ("var", "vars"):
        colon = top_level_positions(stmt, ":")
        if not colon:
            raise ParseError("malformed variable declaration", stmt[0])
        names = [t.text for t in stmt[1:colon[-1]]]
        sort_tokens = stmt[colon[-1] + 1:]
        for n in names:
            raw.var_decls.append((n, sort_tokens))
    elif kw in ("eq", "ceq", "mb", "cmb", "rl", "crl", "sd", "csd"):
        raw.statements.append((kw, rest))
    elif kw in ("strat", "strats"):
        raw.strat_decls.append((kw, rest))
    else:
        raise ParseError(f"unknown declaration keyword {kw}", stmt[0])


def _parse_op_decl(stmt: list[Token], many: bool) -> list[OpSource]:
    # op <pattern> : <arg sorts> -> <result> [attrs] .
    tokens = stmt[1:]
    attr_tokens: list[Token] = []
    if tokens and tokens[-1].text == "]":
        depth, start = 0, None
        for k in range(len(tokens) - 1, -1, -1):
            t = tokens[k].text
            if t == "]":
                depth += 1
            elif t == "[":
                depth -= 1
                if depth == 0:
                    start = k
                    break
        if start is not None and start + 1 < len(tokens) - 1 \
                and tokens[start + 1].text in ATTR_KEYWORDS:
            attr_tokens = tokens[start + 1:-1]
            tokens = tokens[:start]
    arrow = None
    for k in range(len(tokens) - 1, -1, -1):
        if tokens[k].text in ("->", "~>"):
            arrow = k
            break
    if arrow is None:
        raise ParseError("operator declaration lacks ->", stmt[0])
    partial = tokens[arrow].text == "~>"
    result_tokens = tokens[arrow + 1:]
    colon = None
    for k in range(arrow):
        if tokens[k].text == ":":
            colon = k
            break
    if colon is None:
        raise ParseError("operator declaration lacks :", stmt[0])
    arg_sort_tokens = _split_sort_names(tokens[colon + 1:arrow])
    pattern_tokens = tokens[:colon]
    out = []
    if many:
        for t in pattern_tokens:
            out.append(OpSource([t.text], arg_sort_tokens,
                                result_tokens, partial, attr_tokens))
    else:
        pieces: list[str] = []
        for t in pattern_tokens:
            if t.kind == "special":
                pieces.append(t.text)
            else:
                pieces.extend(split_mixfix(t.text))
        out.append(OpSource(pieces, arg_sort_tokens,
                            result_tokens, partial, attr_tokens))
    return out


def _split_sort_names(tokens: list[Token]) -> list[list[Token]]:
    out, k = [], 0
    while k < len(tokens):
        if tokens[k].text == "[":
            close = matching_close(tokens, k)
            if close is None:
                raise ParseError("unbalanced [ in sort list", tokens[k])
            out.append(tokens[k:close + 1])
            k = close + 1
        else:
            out.append([tokens[k]])
            k += 1
    return out


def _sort_name(tokens: list[Token]) -> str:
    return "".join(t.text for t in tokens)


# -- attribute parsing -----------------------------------------------------------

def parse_op_attributes(tokens: list[Token]) -> tuple[Attributes, dict]:
    """Returns the attributes; identity terms are left as token lists."""
    attrs = Attributes()
    pending = {}
    extra = []
    k = 0

    def term_tokens_until_keyword(start):
        stop = start
        while stop < len(tokens) and tokens[stop].text not in ATTR_KEYWORDS:
            stop += 1
        return tokens[start:stop], stop

    while k < len(tokens):
        t = tokens[k].text
        if t in ("assoc", "associative"):
            attrs.assoc = True
            k += 1
        elif t in ("comm", "commutative"):
            attrs.comm = True
            k += 1
        elif t == "ctor":
            attrs.ctor = True
            k += 1
        elif t == "id:":
            toks, k = term_tokens_until_keyword(k + 1)
            pending["identity"] = toks
        elif t in ("left", "right") and k + 1 < len(tokens) \
                and tokens[k + 1].text == "id:":
            toks, k = term_tokens_until_keyword(k + 2)
            pending["left_identity" if t == "left" else "right_identity"] = toks
        elif t == "prec":
            attrs.prec = int(tokens[k + 1].text)
            k += 2
        elif t == "gather":
            close = matching_close(tokens, k + 1)
            attrs.gather = tuple(x.text for x in tokens[k + 2:close])
            k = close + 1
        elif t == "frozen":
            if k + 1 < len(tokens) and tokens[k + 1].text == "(":
                close = matching_close(tokens, k + 1)
                attrs.frozen = tuple(int(x.text) for x in tokens[k + 2:close])
                k = close + 1
            else:
                attrs.frozen = (-1,)  # all arguments
                k += 1
        elif t == "special":
            close = matching_close(tokens, k + 1)
            attrs.special = "".join(x.text for x in tokens[k + 2:close])
            k = close + 1
        elif t == "format":
            close = matching_close(tokens, k + 1)
            extra.append(("format", tuple(x.text for x in tokens[k + 2:close])))
            k = close + 1
        elif t == "metadata":
            extra.append(("metadata", tokens[k + 1].text))
            k += 2
        else:
            extra.append((t,))
            k += 1
    attrs.extra = tuple(extra)
    return attrs, pending


def parse_statement_attributes(tokens: list[Token]) -> dict:
    out = {"print": None, "label": None, "metadata": None, "extra": []}
    k = 0
    while k < len(tokens):
        t = tokens[k].text
        if t in ("owise", "variant", "nonexec", "narrowing"):
            out[t] = True
            k += 1
        elif t == "print":
            items = []
            k += 1
            while k < len(tokens) and tokens[k].text not in (
                    "owise", "variant", "nonexec", "narrowing", "metadata",
                    "label"):
                tok = tokens[k]
                if tok.kind == "string":
                    items.append(("text", tok.text[1:-1]))
                else:
                    items.append(("var", tok.text))
                k += 1
            out["print"] = tuple(items)
        elif t == "label":
            out["label"] = tokens[k + 1].text
            k += 2
        elif t == "metadata":
            out["metadata"] = tokens[k + 1].text
            k += 2
        elif t == "format":
            close = matching_close(tokens, k + 1)
            out["extra"].append(("format",) + tuple(
                x.text for x in tokens[k + 2:close]))
            k = close + 1
        else:
            out["extra"].append((t,))
            k += 1
    return out


def strip_statement_attributes(tokens: list[Token]):
    """Split trailing ``[attr...]`` group from a statement body."""
    if tokens and tokens[-1].text == "]":
        depth, start = 0, None
        for k in range(len(tokens) - 1, -1, -1):
            t = tokens[k].text
            if t == "]":
                depth += 1
            elif t == "[":
                depth -= 1
                if depth == 0:
                    start = k
                    break
        if start is not None and start + 1 <= len(tokens) - 1:
            inner = tokens[start + 1:-1]
            if inner and inner[0].text in (
                    "owise", "variant", "nonexec", "narrowing", "print",
                    "metadata", "label", "format", "ditto"):
                return tokens[:start], parse_statement_attributes(inner)
    return tokens, parse_statement_attributes([])


# -- the mixfix term parser -------------------------------------------------------

BIG = 10 ** 9


class TermParser:
    """Bottom-up chart parser for one module's signature."""

    def __init__(self, module: TheoryModule, variables=None):
        self.module = module
        self.sig = module.signature
        self.vars: dict[str, Var] = dict(module.variables)
        if variables:
            self.vars.update(variables)
        self.inline_vars: dict[str, Var] = {}
        self._index()

    def _index(self):
        self.constants: dict[str, list] = {}
        self.anchored: dict[str, list] = {}   # first literal piece -> ops
        self.leading: list = []               # pattern starts with '_'
        for op in self.sig.operators:
            if op.arity == 0:
                self.constants.setdefault(op.pattern[0], []).append(op)
            elif op.attrs.assoc and len(op.pattern) in (2, 3) and \
                    op.pattern[0] == "_" and op.pattern[-1] == "_":
                self.leading.append(op)  # handled by flat parse
            elif op.pattern[0] == "_":
                self.leading.append(op)
            else:
                self.anchored.setdefault(op.pattern[0], []).append(op)

    def refresh(self):
        """Pick up operators created since construction (literals)."""
        self._index()

    # -- public entry ---------------------------------------------------------
    def parse(self, tokens: list[Token], expected_kind=None) -> Term:
        if not tokens:
            raise ParseError("empty term")
        self.tokens = tokens
        self.memo: dict[tuple[int, int], list] = {}
        self.flat_memo: dict = {}
        candidates = self._span(0, len(tokens))
        if expected_kind is not None:
            candidates = [
                (t, p) for (t, p) in candidates
                if self._kind_of(t) is expected_kind]
        if not candidates:
            raise ParseError(
                "no parse for: " + " ".join(t.text for t in tokens),
                tokens[0])
        canon = {}
        for t, _p in candidates:
            canon.setdefault(canonicalize(self.sig, t), t)
        if len(canon) > 1:
            from .printing import pretty
            alts = " vs ".join(pretty(self.module, t) for t in list(canon)[:4])
            raise AmbiguousParse(
                "ambiguous parse: " + alts, tokens[0])
        return candidates[0][0]

    def _kind_of(self, term: Term):
        return least_sort(self.sig, term).kind

    # -- span parsing -----------------------------------------------------------
    def _span(self, i: int, j: int) -> list:
        key = (i, j)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        results: list = []
        self.memo[key] = results
        toks = self.tokens
        if j - i == 1:
            results.extend(self._single(toks[i]))
        if toks[i].text == "(" and matching_close(toks, i) == j - 1 and j - i > 2:
            for t, _p in self._span(i + 1, j - 1):
                results.append((t, 0))
        if j - i == 4 and toks[i].text.endswith(":") and \
                toks[i + 1].text == "[" and toks[i + 3].text == "]":
            v = self._mk_inline_var(toks[i].text[:-1],
                                    "[" + toks[i + 2].text + "]")
            if v is not None:
                results.append((v, 0))
        seen_ops = set()
        for op in self.anchored.get(toks[i].text, ()):
            if id(op) not in seen_ops:
                seen_ops.add(id(op))
                self._try_op(op, i, j, results)
        for op in self.leading:
            if op.attrs.assoc and op.pattern[0] == "_" and op.pattern[-1] == "_":
                self._try_flat(op, i, j, results)
            else:
                self._try_op(op, i, j, results)
        # dedupe structurally
        uniq, out = set(), []
        for t, p in results:
            k = (t, p)
            if k not in uniq:
                uniq.add(k)
                out.append((t, p))
        self.memo[key] = out
        return out

    def _single(self, tok: Token) -> list:
        out = []
        if tok.kind == "string":
            return out
        text = tok.text
        for op in self.constants.get(text, ()):
            out.append((App(op, ()), 0))
        v = self.vars.get(text) or self.inline_vars.get(text)
        if v is not None:
            out.append((v, 0))
        if ":" in text and not text.endswith(":") and not text.startswith("'"):
            name, _, sortname = text.partition(":")
            if name and sortname:
                v = self._mk_inline_var(name, sortname)
                if v is not None:
                    out.append((v, 0))
        if self.module.has_nat and text.isdigit() \
                and text not in self.constants:
            op = self.module.nat_literal(int(text))
            self.constants.setdefault(text, []).append(op)
            out.append((App(op, ()), 0))
        if self.module.has_qid and text.startswith("'") and len(text) > 1:
            op = self.module.qid_literal(text)
            out.append((App(op, ()), 0))
        return out

    def _mk_inline_var(self, name: str, sortname: str):
        try:
            sort = self.module.sort_named(sortname)
        except ModuleError:
            return None
        v = Var(name, sort)
        old = self.inline_vars.get(name)
        if old is not None and old.sort is not sort:
            raise ParseError(
                f"variable {name} used with sorts {old.sort} and {sort}")
        self.inline_vars[name] = v
        return v

    def _try_op(self, op, i, j, results):
        """Match a (non-flat) mixfix pattern against the span."""
        pieces = op.pattern
        bounds = op.gather_bounds()
        toks = self.tokens

        def go(pi, pos, spans):
            if pi == len(pieces):
                if pos == j:
                    self._emit(op, spans, bounds, results)
                return
            p = pieces[pi]
            if p != "_":
                if pos < j and toks[pos].text == p and toks[pos].kind != "string":
                    go(pi + 1, pos + 1, spans)
                return
            nxt = pieces[pi + 1] if pi + 1 < len(pieces) else None
            if nxt is not None and nxt != "_":
                for end in range(pos + 1, j):
                    if toks[end].text == nxt:
                        go(pi + 1, end, spans + [(pos, end)])
            else:
                hi = j if nxt is None else j - 1
                for end in range(pos + 1, hi + 1):
                    go(pi + 1, end, spans + [(pos, end)])

        go(0, i, [])

    def _emit(self, op, spans, bounds, results):
        """Combine argument parses for one pattern instance."""
        arg_lists = []
        for k, (a, b) in enumerate(spans):
            cands = []
            for t, p in self._span(a, b):
                if p > bounds[k]:
                    continue
                try:
                    ls = least_sort(self.sig, t)
                except Exception:
                    continue
                if ls.kind is not op.arg_kinds[k]:
                    continue
                cands.append(t)
            if not cands:
                return
            arg_lists.append(cands)
        prec = op.default_prec()
        from itertools import product
        for combo in product(*arg_lists):
            results.append((App(op, tuple(combo)), prec))

    def _try_flat(self, op, i, j, results):
        """Flat n-ary parse for an associative ``_ lit _`` or ``__`` pattern."""
        key = (id(op), i, j)
        if key in self.flat_memo:
            results.extend(self.flat_memo[key])
            return
        out: list = []
        self.flat_memo[key] = out
        bound = op.gather_bounds()[0]
        prec = op.default_prec()
        kind = op.arg_kinds[0]

        def elements(a, b):
            # parenthesized same-op segments are fine; flattening merges them
            return [t for t, p in self._span(a, b)
                    if p <= bound and self._safe_kind(t) is kind]

        if len(op.pattern) == 3:  # _ lit _
            lit = op.pattern[1]
            cuts = [i] + [k for k in top_level_positions(
                self.tokens, lit, i, j)] + [j]
            if len(cuts) < 3:
                segs = None
            else:
                segs = []
                ok = True
                for a, b in zip(cuts[:-1], cuts[1:]):
                    lo = a if a == i else a + 1
                    es = elements(lo, b)
                    if not es:
                        ok = False
                        break
                    segs.append(es)
                if ok:
                    from itertools import product
                    for combo in product(*segs):
                        out.append((App(op, tuple(combo)), prec))
        else:  # __ juxtaposition: DP over split points
            lists = self._juxt_lists(op, i, j, bound, kind)
            for combo in lists:
                if len(combo) >= 2:
                    out.append((App(op, tuple(combo)), prec))
        results.extend(out)

    def _juxt_lists(self, op, i, j, bound, kind):
        memo_key = ("jx", id(op), i, j)
        if memo_key in self.flat_memo:
            return self.flat_memo[memo_key]
        out = []
        self.flat_memo[memo_key] = out
        for k in range(i + 1, j + 1):
            heads = [t for t, p in self._span(i, k)
                     if p <= bound
                     and (type(t) is not App or t.op is not op)
                     and self._safe_kind(t) is kind]
            if not heads:
                continue
            if k == j:
                for h in heads:
                    out.append((h,))
                continue
            for rest in self._juxt_lists(op, k, j, bound, kind):
                for h in heads:
                    out.append((h,) + rest)
        return out

    def _safe_kind(self, t):
        try:
            return least_sort(self.sig, t).kind
        except Exception:
            return None


# -- condition parsing -------------------------------------------------------------

def parse_condition(parser: TermParser, tokens: list[Token]):
    if not tokens:
        return ()
    fragments = []
    cuts = [-1] + top_level_positions(tokens, "/\\") + [len(tokens)]
    for a, b in zip(cuts[:-1], cuts[1:]):
        frag = tokens[a + 1:b]
        if not frag:
            raise ParseError("empty condition fragment", tokens[0])
        fragments.append(_parse_fragment(parser, frag))
    return tuple(fragments)


def _parse_fragment(parser: TermParser, tokens: list[Token]):
    module = parser.module
    assign = top_level_positions(tokens, ":=")
    if assign:
        k = assign[0]
        value = _parse_balanced(parser, tokens[k + 1:])
        pattern = parser.parse(tokens[:k], expected_kind=_kind(parser, value))
        return MatchFragment(pattern, value)
    arrow = top_level_positions(tokens, "=>")
    if arrow:
        k = arrow[0]
        source = _parse_balanced(parser, tokens[:k])
        target = parser.parse(tokens[k + 1:],
                              expected_kind=_kind(parser, source))
        return RewriteFragment(source, target)
    eq = top_level_positions(tokens, "=")
    if eq:
        k = eq[0]
        lhs = _parse_balanced(parser, tokens[:k])
        rhs = parser.parse(tokens[k + 1:], expected_kind=_kind(parser, lhs))
        return EqualityFragment(lhs, rhs)
    if len(tokens) >= 3 and tokens[-2].text == ":":
        try:
            sort = module.sort_named(tokens[-1].text)
        except ModuleError:
            sort = None
        if sort is not None:
            term = parser.parse(tokens[:-2], expected_kind=sort.kind)
            return SortFragment(term, sort)
    term = parser.parse(tokens, expected_kind=module.sort_named("Bool").kind)
    true = parser.parse(tokenize("true"))
    return EqualityFragment(term, true)


def _parse_balanced(parser: TermParser, tokens):
    return parser.parse(tokens)


def _kind(parser, term):
    return least_sort(parser.sig, term).kind


# -- building a TheoryModule ----------------------------------------------------------

def build_module(raw: RawModule, db: ModuleDatabase,
                 compile_assoc_id: bool = False) -> TheoryModule:
    closure = db.import_closure(raw)
    mod = TheoryModule(raw.name, raw.kind)
    mod.imports = [r.name for r in closure[:-1]]
    sig = mod.signature
    for r in closure:
        for s in r.sort_decls:
            sig.add_sort(s)
    for r in closure:
        for sub, sup in r.subsort_decls:
            try:
                sig.add_subsort(sub, sup)
            except SignatureError as e:
                raise ModuleError(f"in module {r.name}: {e}") from None
    sig.close()
    mod.has_nat = any(r.name == "NAT" for r in closure)
    mod.has_qid = any(r.name == "QID" for r in closure)

    pending_ids = []
    for r in closure:
        for src in r.op_decls:
            _install_operator(mod, r, src, pending_ids)
    _complete_kind_level(mod)
    _install_builtins(mod)

    # identity terms can now be parsed (constants in scope)
    parser = TermParser(mod)
    compiled_identities = []
    for op, field_name, toks in pending_ids:
        term = canonicalize(sig, parser.parse(toks))
        if compile_assoc_id and op.attrs.assoc and not op.attrs.comm:
            # unsupported for unification: identity becomes variant
            # equations instead of a structural axiom
            compiled_identities.append((op, term))
        else:
            setattr(op.attrs, field_name, term)
    for op, ident in compiled_identities:
        _install_identity_equations(mod, op, ident)

    for r in closure:
        for name, sort_tokens in r.var_decls:
            sort = mod.sort_named(_sort_name(sort_tokens))
            mod.variables[name] = Var(name, sort)

    for r in closure:
        for kw, toks in r.strat_decls:
            _install_strat_decl(mod, toks)
    for r in closure:
        for kw, toks in r.statements:
            _install_statement(mod, kw, toks)
    _check_executability(mod)
    return mod


def _install_operator(mod: TheoryModule, raw: RawModule, src: OpSource,
                      pending_ids):
    sig = mod.signature
    try:
        arg_sorts = tuple(mod.sort_named(_sort_name(t))
                          for t in src.arg_sort_tokens)
        result = mod.sort_named(_sort_name(src.result_sort_tokens))
    except ModuleError as e:
        raise ModuleError(f"in module {raw.name}: {e}") from None
    if src.partial:
        result = result.kind.top
    pattern = tuple(src.pattern_tokens)
    slots = sum(1 for p in pattern if p == "_")
    if pattern and slots != len(arg_sorts) and any(p == "_" for p in pattern):
        raise ModuleError(
            f"operator {''.join(pattern)} has {slots} placeholders for "
            f"{len(arg_sorts)} arguments")
    if slots == 0 and len(arg_sorts) > 0:
        # prefix form: f(_,...,_)
        inner = ["_"] * (2 * len(arg_sorts) - 1)
        inner[1::2] = [","] * (len(arg_sorts) - 1)
        pattern = (pattern[0], "(") + tuple(inner) + (")",)
    arg_kinds = [s.kind for s in arg_sorts]
    result_kind = result.kind
    attrs, pending = parse_op_attributes(src.attr_tokens)
    attrs.id_declared = bool(pending)
    op = sig.find_operator(pattern, arg_kinds, result_kind)
    if op is None:
        op = sig.new_operator(pattern, arg_kinds, result_kind, attrs)
        for field_name, toks in pending.items():
            pending_ids.append((op, field_name, toks))
    else:
        old, new = op.attrs, attrs
        if (old.assoc, old.comm, old.id_declared) != \
                (new.assoc, new.comm, new.id_declared):
            raise ModuleError(
                f"subsort-overloaded operator {op.name} redeclared with "
                f"different axiom attributes")
    op.decls.append(OpDecl(arg_sorts, result if not src.partial else
                           result_kind.top,
                           is_kind_level=src.partial))


def _install_identity_equations(mod: TheoryModule, op, ident):
    """The three FVP variant equations replacing an assoc identity."""
    from .modules import Equation
    from .terms import App, Var
    sig = mod.signature
    decls = [d for d in op.decls if not d.is_kind_level]
    sort = decls[0].result_sort if decls else op.result_kind.top
    u = Var("%U", sort)
    v = Var("%V", sort)
    for lhs_args, rhs in (
            ((ident, u), u),
            ((u, ident, v), App(op, (u, v))),
            ((v, ident), v)):
        mod.equations.append(Equation(
            lhs=canonicalize(sig, App(op, tuple(lhs_args))),
            rhs=canonicalize(sig, rhs),
            variant=True, index=len(mod.equations)))


def _complete_kind_level(mod: TheoryModule):
    for op in mod.signature.operators:
        tops = tuple(k.top for k in op.arg_kinds)
        if not any(d.is_kind_level and d.arg_sorts == tops for d in op.decls):
            op.decls.append(OpDecl(tops, op.result_kind.top,
                                   is_kind_level=True))


def _install_builtins(mod: TheoryModule):
    sig = mod.signature
    bool_sort = sig.sorts.get("Bool")
    if bool_sort is None:
        return
    bk = bool_sort.kind
    for kind in sig.kinds:
        for name, special, res in (("==", "builtin.eq", bool_sort),
                                   ("=/=", "builtin.neq", bool_sort)):
            pattern = ("_", name, "_")
            if sig.find_operator(pattern, [kind, kind], bk) is None:
                op = sig.new_operator(pattern, [kind, kind], bk,
                                      Attributes(prec=51, special=special))
                op.decls.append(OpDecl((kind.top, kind.top), res))
        pattern = ("if", "_", "then", "_", "else", "_", "fi")
        if sig.find_operator(pattern, [bk, kind, kind], kind) is None:
            op = sig.new_operator(pattern, [bk, kind, kind], kind,
                                  Attributes(special="builtin.if"))
            op.decls.append(OpDecl((bool_sort, kind.top, kind.top), kind.top))
    for sort_name in list(sig.sorts):
        sort = sig.sorts[sort_name]
        pattern = ("_", "::", sort_name)
        if sig.find_operator(pattern, [sort.kind], bk) is None:
            op = sig.new_operator(pattern, [sort.kind], bk,
                                  Attributes(prec=47, special="builtin.sorttest"))
            op.attrs.extra = (("sorttest", sort_name),)
            op.decls.append(OpDecl((sort.kind.top,), bool_sort))


def _install_strat_decl(mod: TheoryModule, tokens: list[Token]):
    # strat NAME [: sorts] @ sort .
    name = tokens[0].text
    at = [k for k, t in enumerate(tokens) if t.text == "@"]
    params: tuple = ()
    subject = None
    if at:
        subject = mod.sort_named(_sort_name(tokens[at[0] + 1:]))
        middle = tokens[1:at[0]]
        if middle and middle[0].text == ":":
            params = tuple(mod.sort_named(t.text) for t in middle[1:])
    mod.strategy_decls[name] = StrategyDecl(name, params, subject)


def _install_statement(mod: TheoryModule, kw: str, tokens: list[Token]):
    from .strategies import parse_strategy_expr
    sig = mod.signature
    body, attrs = strip_statement_attributes(tokens)
    label = attrs.get("label")
    if len(body) >= 4 and body[0].text == "[" and body[2].text == "]" \
            and body[3].text == ":":
        label = body[1].text
        body = body[4:]
    parser = TermParser(mod)
    condition = ()
    if kw in ("ceq", "cmb", "crl", "csd"):
        if_positions = [k for k in top_level_positions(body, "if")
                        if _iffi_balance(body, k) == 0]
        if not if_positions:
            raise ParseError(f"conditional statement lacks if", tokens[0])
        split = if_positions[-1]
        cond_tokens = body[split + 1:]
        body = body[:split]
    else:
        cond_tokens = []

    if kw in ("eq", "ceq"):
        eqpos = top_level_positions(body, "=")
        if not eqpos:
            raise ParseError("equation lacks =", tokens[0])
        k = eqpos[0]
        lhs = parser.parse(body[:k])
        rhs = parser.parse(body[k + 1:],
                           expected_kind=least_sort(sig, lhs).kind)
        condition = parse_condition(parser, cond_tokens)
        mod.equations.append(Equation(
            lhs=canonicalize(sig, lhs), rhs=canonicalize(sig, rhs),
            condition=condition, label=label,
            owise=attrs.get("owise", False),
            variant=attrs.get("variant", False),
            nonexec=attrs.get("nonexec", False),
            print_spec=attrs.get("print"), metadata=attrs.get("metadata"),
            index=len(mod.equations)))
        if attrs.get("variant") and condition:
            raise ModuleError(
                f"variant equation in {mod.name} must be unconditional")
    elif kw in ("mb", "cmb"):
        colon = top_level_positions(body, ":")
        if not colon:
            raise ParseError("membership lacks :", tokens[0])
        k = colon[-1]
        sort = mod.sort_named(_sort_name(body[k + 1:]))
        term = parser.parse(body[:k], expected_kind=sort.kind)
        condition = parse_condition(parser, cond_tokens)
        mod.memberships.append(Membership(
            term=canonicalize(sig, term), sort=sort, condition=condition,
            label=label, nonexec=attrs.get("nonexec", False),
            index=len(mod.memberships)))
    elif kw in ("rl", "crl"):
        arrow = top_level_positions(body, "=>")
        if not arrow:
            raise ParseError("rule lacks =>", tokens[0])
        k = arrow[0]
        lhs = parser.parse(body[:k])
        rhs = parser.parse(body[k + 1:],
                           expected_kind=least_sort(sig, lhs).kind)
        condition = parse_condition(parser, cond_tokens)
        mod.rules.append(Rule(
            lhs=canonicalize(sig, lhs), rhs=canonicalize(sig, rhs),
            condition=condition, label=label,
            narrowing=attrs.get("narrowing", False),
            nonexec=attrs.get("nonexec", False),
            print_spec=attrs.get("print"), metadata=attrs.get("metadata"),
            index=len(mod.rules)))
    elif kw in ("sd", "csd"):
        assign = top_level_positions(body, ":=")
        if not assign:
            raise ParseError("strategy definition lacks :=", tokens[0])
        k = assign[0]
        call_tokens = body[:k]
        name = call_tokens[0].text
        params: tuple = ()
        if len(call_tokens) > 1:
            if call_tokens[1].text != "(" or call_tokens[-1].text != ")":
                raise ParseError("malformed strategy call", call_tokens[0])
            arg_spans = _split_commas(call_tokens[2:-1])
            params = tuple(parser.parse(span) for span in arg_spans)
        body_expr = parse_strategy_expr(parser, body[k + 1:])
        condition = parse_condition(parser, cond_tokens)
        mod.strategy_defs.append(StrategyDef(
            name=name, params=tuple(canonicalize(sig, p) for p in params),
            body=body_expr, condition=condition,
            index=len(mod.strategy_defs)))
    else:
        raise ParseError(f"unsupported statement keyword {kw}", tokens[0])


def _iffi_balance(tokens, upto):
    bal = 0
    for t in tokens[:upto]:
        if t.text == "if":
            bal += 1
        elif t.text == "fi":
            bal -= 1
    return bal


def _split_commas(tokens: list[Token]) -> list[list[Token]]:
    if not tokens:
        return []
    cuts = [-1] + top_level_positions(tokens, ",") + [len(tokens)]
    spans = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        spans.append(tokens[a + 1:b])
    return spans


def _check_executability(mod: TheoryModule):
    def bound_by(lhs, condition):
        bound = set(vars_of(lhs))
        for frag in condition:
            if isinstance(frag, EqualityFragment):
                need = set(vars_of(frag.lhs)) | set(vars_of(frag.rhs))
                if not need <= bound:
                    return None
            elif isinstance(frag, MatchFragment):
                if not set(vars_of(frag.value)) <= bound:
                    return None
                bound |= set(vars_of(frag.pattern))
            elif isinstance(frag, SortFragment):
                if not set(vars_of(frag.term)) <= bound:
                    return None
            elif isinstance(frag, RewriteFragment):
                if not set(vars_of(frag.source)) <= bound:
                    return None
                bound |= set(vars_of(frag.target))
        return bound

    for stmt in mod.equations:
        bound = bound_by(stmt.lhs, stmt.condition)
        ok = bound is not None and set(vars_of(stmt.rhs)) <= bound
        if not ok and not stmt.nonexec:
            raise ModuleError(
                f"equation in {mod.name} with unbound extra variables "
                f"must be declared nonexec")
    for stmt in mod.rules:
        bound = bound_by(stmt.lhs, stmt.condition)
        ok = bound is not None and set(vars_of(stmt.rhs)) <= bound
        if not ok and not stmt.nonexec:
            raise ModuleError(
                f"rule in {mod.name} with unbound extra variables "
                f"must be declared nonexec (label {stmt.label})")


def parse_term_text(mod: TheoryModule, text: str, variables=None,
                    expected_kind=None) -> Term:
    return TermParser(mod, variables).parse(tokenize(text), expected_kind)
