"""Parser and printer for the CNF problem dialect.

    cnf(<name>, <role>, <clause>).

role is `axiom` or `negated_conjecture`; a clause is a `|`-separated list of
literals, optionally wrapped in parentheses; `~` negates; identifiers starting
with an uppercase letter are variables; `$false` is the empty clause;
`%` starts a comment running to the end of the line.
"""
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from src.errors import ParseError, ProblemError
from .terms import App, Clause, Literal, Origin, Problem, Role, Symbol, SymbolKind, Term, Var

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<false>\$false)
  | (?P<lower>[a-z][A-Za-z0-9_]*)
  | (?P<upper>[A-Z][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<quoted>'[^'\n]*')
  | (?P<punct>[(),.|~])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        chunk = match.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.symbols: dict[tuple[str, SymbolKind], Symbol] = {}
        self.variables: dict[str, int] = {}

    # ----- token helpers -----
    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _fail(self, message: str):
        tok = self.current
        found = tok.text or "end of input"
        raise ParseError(f"{message}, found {found!r}", tok.line, tok.column)

    def expect(self, text: str) -> Token:
        if self.current.text != text:
            self._fail(f"expected {text!r}")
        return self.advance()

    def advance(self) -> Token:
        tok = self.current
        self.pos += 1
        return tok

    # ----- grammar -----
    def parse(self, name: str) -> Problem:
        clauses: list[Clause] = []
        axiom_names: set[str] = set()
        while self.current.kind != "eof":
            start = self.current
            clause = self.statement(len(clauses))
            if clause.origin.role == Role.AXIOM:
                if clause.origin.name in axiom_names:
                    raise ProblemError(
                        f"duplicate axiom name {clause.origin.name!r} (line {start.line})"
                    )
                axiom_names.add(clause.origin.name)
            clauses.append(clause)
        if not clauses:
            raise ProblemError("problem contains no clauses")
        return Problem(tuple(clauses), name=name)

    def statement(self, clause_id: int) -> Clause:
        tok = self.current
        if tok.text != "cnf":
            self._fail("expected 'cnf'")
        self.advance()
        self.expect("(")
        name = self.statement_name()
        self.expect(",")
        role_tok = self.current
        if role_tok.kind != "lower":
            self._fail("expected a role")
        try:
            role = Role(role_tok.text)
        except ValueError:
            raise ParseError(f"unsupported role {role_tok.text!r}", role_tok.line, role_tok.column)
        self.advance()
        self.expect(",")
        self.variables = {}
        literals = self.clause()
        self.expect(")")
        self.expect(".")
        return Clause(tuple(literals), clause_id, Origin(role=role, name=name))

    def statement_name(self) -> str:
        tok = self.current
        if tok.kind in ("lower", "int", "quoted"):
            self.advance()
            return tok.text
        self._fail("expected a statement name")

    def clause(self) -> list[Literal]:
        if self.current.text == "(":
            self.advance()
            literals = self.clause()
            self.expect(")")
            return literals
        if self.current.kind == "false":
            self.advance()
            return []
        literals = [self.literal()]
        while self.current.text == "|":
            self.advance()
            literals.append(self.literal())
        return literals

    def literal(self) -> Literal:
        positive = True
        while self.current.text == "~":
            self.advance()
            positive = not positive
        tok = self.current
        if tok.kind != "lower":
            self._fail("expected a predicate")
        self.advance()
        args = self.arguments()
        return Literal(positive, self.symbol(tok, SymbolKind.PREDICATE, len(args)), tuple(args))

    def arguments(self) -> list[Term]:
        if self.current.text != "(":
            return []
        self.advance()
        args = [self.term()]
        while self.current.text == ",":
            self.advance()
            args.append(self.term())
        self.expect(")")
        return args

    def term(self) -> Term:
        tok = self.current
        if tok.kind == "upper":
            self.advance()
            index = self.variables.setdefault(tok.text, len(self.variables))
            return Var(index)
        if tok.kind in ("lower", "int"):
            self.advance()
            args = self.arguments()
            return App(self.symbol(tok, SymbolKind.FUNCTION, len(args)), tuple(args))
        self._fail("expected a term")

    def symbol(self, tok: Token, kind: SymbolKind, arity: int) -> Symbol:
        key = (tok.text, kind)
        known = self.symbols.get(key)
        if known is None:
            known = self.symbols[key] = Symbol(tok.text, arity, kind)
        elif known.arity != arity:
            raise ProblemError(
                f"{kind.value} {tok.text!r} used with arity {arity} and {known.arity} "
                f"(line {tok.line}, column {tok.column})"
            )
        return known


def parse_problem(text: str, name: str = "problem") -> Problem:
    """Parse a CNF problem.

    Raises:
        ParseError: on a syntax error (carries line and column)
        ProblemError: on duplicate axiom names, arity conflicts or an empty file
    """
    return _Parser(text).parse(name)


def load_problem(path: str | Path) -> Problem:
    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), name=path.stem)


def format_clause(clause: Clause) -> str:
    return str(clause)


def format_problem(problem: Problem, header: Optional[str] = None) -> str:
    lines = []
    if header:
        lines.extend(f"% {h}" for h in header.splitlines())
    for clause in problem.clauses:
        role = clause.origin.role.value if clause.origin.role else Role.AXIOM.value
        name = clause.origin.name or f"c{clause.id}"
        lines.append(f"cnf({name}, {role}, {format_clause(clause)}).")
    return "\n".join(lines) + "\n"
