"""maudelet: a rewriting-logic engine and symbolic-computation toolkit.

An executable subset of Maude: order-sorted equational rewriting modulo
axioms, rule rewriting and breadth-first search, a strategy-combinator
language, unification modulo axioms, folding variant narrowing, variant
unification, and narrowing-based symbolic reachability.
"""

from .lexer import Token, tokenize
from .modules import ModuleDatabase, TheoryModule
from .terms import (App, Substitution, Term, Var, apply_subst, canonicalize,
                    check_preregular, least_sort, replace_at, subterm_at)

__all__ = [
    "App", "ModuleDatabase", "Substitution", "Term", "TheoryModule",
    "Token", "Var", "apply_subst", "canonicalize", "check_preregular",
    "least_sort", "replace_at", "subterm_at", "tokenize",
]

__version__ = "0.1.0"
