"""Lexer, mixfix parsing and pretty-printing."""

import pytest

from maudelet.lexer import split_mixfix, tokenize
from maudelet.parser import AmbiguousParse, ParseError, parse_term_text
from maudelet.printing import pretty
from maudelet.terms import canonicalize, least_sort


def texts(tokens):
    return [t.text for t in tokens]


class TestLexer:
    def test_special_chars_split(self):
        assert texts(tokenize("s(N) + M")) == ["s", "(", "N", ")", "+", "M"]

    def test_escaped_identifier_kept_whole(self):
        toks = tokenize("op _`(_`) :")
        assert texts(toks) == ["op", "_`(_`)", ":"]

    def test_empty_input(self):
        assert tokenize("") == []

    def test_comments_stripped(self):
        assert texts(tokenize("a *** gone\nb --- also\nc")) == ["a", "b", "c"]

    def test_string_token(self):
        toks = tokenize('print "[snd]: " A')
        assert toks[1].kind == "string"
        assert toks[1].text == '"[snd]: "'

    def test_round_trip_spacing(self):
        src = "op x{_} : Nat -> Variable ."
        toks = tokenize(src)
        again = tokenize(" ".join(texts(toks)))
        assert texts(again) == texts(toks)

    def test_mixfix_split(self):
        assert split_mixfix("to_from_ack_") == \
            ["to", "_", "from", "_", "ack", "_"]
        assert split_mixfix("_`(_`)") == ["_", "(", "_", ")"]
        assert split_mixfix("__") == ["_", "_"]


class TestTermParsing:
    def test_single_declaration(self, ac_nat):
        t = parse_term_text(ac_nat, "1 + 0")
        assert t.op.name == "_+_"
        assert least_sort(ac_nat.signature, canonicalize(
            ac_nat.signature, t)).name == "Nat"

    def test_term_module_least_sorts(self, term_mod):
        sig = term_mod.signature
        t = parse_term_text(term_mod, "'f['g[x{3},'b,x{1}],'k[x{2}]]")
        assert least_sort(sig, t).name == "NvTerm"
        assert least_sort(sig, parse_term_text(term_mod, "'b")).name == "Qid"
        assert least_sort(sig, parse_term_text(term_mod, "x{3}")).name == \
            "Variable"

    def test_error_term_parses_at_kind(self, term_mod):
        sig = term_mod.signature
        t = parse_term_text(term_mod, "'f['a]['g['c,x{2}],'b]")
        assert least_sort(sig, t).is_kind

    def test_no_parse_reported(self, ac_nat):
        with pytest.raises(ParseError):
            parse_term_text(ac_nat, "1 + + 0")

    def test_ambiguous_parse_reported(self, ac_nat):
        with pytest.raises(AmbiguousParse):
            parse_term_text(ac_nat, "1 + 0 * 1")

    def test_parenthesized_mixed_operators(self, ac_nat):
        t = parse_term_text(ac_nat, "(1 + (0 + 1)) + (0 * 1)")
        c = canonicalize(ac_nat.signature, t)
        assert pretty(ac_nat, c) == "0 + 1 + 1 + (0 * 1)"


class TestPrettyPrinting:
    def test_flattened_assoc(self, ac_nat):
        t = parse_term_text(ac_nat, "(1 + 1) + 1")
        c = canonicalize(ac_nat.signature, t)
        assert pretty(ac_nat, c) == "1 + 1 + 1"

    def test_round_trip(self, ac_nat):
        for text in ["1 + 1 + 1", "(1 + 1) * (0 + 1)", "1 * (1 + 0)"]:
            t = canonicalize(ac_nat.signature, parse_term_text(ac_nat, text))
            back = parse_term_text(ac_nat, pretty(ac_nat, t))
            assert canonicalize(ac_nat.signature, back) == t

    def test_round_trip_term_module(self, term_mod):
        text = "'f['g[x{3},'b,x{1}],'k[x{2}]]"
        t = canonicalize(term_mod.signature, parse_term_text(term_mod, text))
        back = parse_term_text(term_mod, pretty(term_mod, t))
        assert canonicalize(term_mod.signature, back) == t

    def test_hanoi_state_format(self, hanoi):
        t = canonicalize(hanoi.signature, parse_term_text(
            hanoi, "(0)[3 2] (1)[1] (2)[nil]"))
        assert pretty(hanoi, t) == "(0)[3 2] (1)[1] (2)[nil]"


class TestModuleStructure:
    def test_ac_nat_shape(self, ac_nat):
        sig = ac_nat.signature
        user_sorts = {"Nat", "NzNat"}
        assert user_sorts <= set(sig.sorts)
        nat_kind = sig.sorts["Nat"].kind
        assert sig.sorts["NzNat"].kind is nat_kind
        plus = [op for op in sig.operators if op.name == "_+_"]
        assert len(plus) == 1 and len(
            [d for d in plus[0].decls if not d.is_kind_level]) == 2
        user_eqs = [e for e in ac_nat.equations
                    if type(e.lhs).__name__ == "App"
                    and e.lhs.op.name in ("_+_", "_*_")]
        assert len(user_eqs) == 4

    def test_clashing_axioms_rejected(self, database):
        from maudelet.modules import ModuleError
        from maudelet.parser import parse_units
        src = """
        fmod BAD is
          sort S .
          op _+_ : S S -> S [comm] .
          op _+_ : S S -> S .
        endfm
        """
        raw = parse_units(src)[0]
        database.insert(raw)
        with pytest.raises(ModuleError):
            database.get("BAD")

    def test_unknown_import_rejected(self, database):
        from maudelet.modules import ModuleError
        from maudelet.parser import parse_units
        raw = parse_units("fmod LOST is protecting NO-SUCH . endfm")[0]
        database.insert(raw)
        with pytest.raises(ModuleError):
            database.get("LOST")
