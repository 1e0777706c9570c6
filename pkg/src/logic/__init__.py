"""First-order clauses, the CNF problem parser and unification."""
from .terms import (
    App,
    Clause,
    Literal,
    Origin,
    Problem,
    Role,
    Symbol,
    SymbolKind,
    Term,
    Var,
    clause_symbols,
    is_tautology,
    normalize_variables,
    rename_apart,
)
from .parser import format_clause, format_problem, load_problem, parse_problem
from .unify import Substitution, apply_substitution, match_literal, unify

__all__ = [
    "App",
    "Clause",
    "Literal",
    "Origin",
    "Problem",
    "Role",
    "Symbol",
    "SymbolKind",
    "Term",
    "Var",
    "Substitution",
    "apply_substitution",
    "clause_symbols",
    "format_clause",
    "format_problem",
    "is_tautology",
    "load_problem",
    "match_literal",
    "normalize_variables",
    "parse_problem",
    "rename_apart",
    "unify",
]
