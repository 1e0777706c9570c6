"""Synthetic problem corpora and the ground satisfiability oracle.

A corpus shares one pool of named axioms between all problems. Useful axioms
are links of an implication chain a00 -> a01 -> ...; junk axioms hang side
branches (b, r predicates) off the chain. A problem states a fact a_s(c1),
includes the links from a_s to a_(s+d), some junk and some distractor facts on
other constants, and refutes a_(s+d)(c1). Every minimal proof therefore uses
exactly the problem's chain links and no junk. Decoys drop one link and are
satisfiable.
"""
import itertools
import logging
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, model_validator
from pysat.formula import IDPool
from pysat.solvers import Solver

from src.errors import ProblemError
from src.logic.parser import format_problem, load_problem, parse_problem
from src.logic.terms import App, Problem, Symbol, SymbolKind
from src.logic.unify import apply_substitution

logger = logging.getLogger(__name__)

MANIFEST = "corpus.json"
PROBLEM_SUFFIX = ".p"


class CorpusSpec(BaseModel):
    problems: int = 100
    pool_size: int = 50
    max_depth: int = 5
    decoy_fraction: float = 0.1
    junk_per_problem: int = 8
    distractors: int = 2

    @model_validator(mode="after")
    def _fits(self) -> "CorpusSpec":
        if self.problems < 0 or self.junk_per_problem < 0 or self.distractors < 0:
            raise ValueError("counts must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.pool_size // 2 < self.max_depth:
            raise ValueError(f"pool_size {self.pool_size} too small for chains of depth {self.max_depth}")
        if not 0.0 <= self.decoy_fraction <= 1.0:
            raise ValueError("decoy_fraction must lie in [0, 1]")
        return self


class ProblemEntry(BaseModel):
    name: str
    file: str
    satisfiable: bool
    depth: int


class CorpusManifest(BaseModel):
    spec: CorpusSpec
    seed: int
    useful: list[str]
    junk: list[str]
    problems: list[ProblemEntry]


class Corpus(BaseModel):
    manifest: CorpusManifest
    texts: dict[str, str]

    def problems(self) -> list[Problem]:
        return [parse_problem(self.texts[e.name], e.name) for e in self.manifest.problems]

    @property
    def unsatisfiable(self) -> list[str]:
        return [e.name for e in self.manifest.problems if not e.satisfiable]


# ---------- oracle ----------

def ground_oracle(problem: Problem) -> bool:
    """True iff the (function-free) problem is unsatisfiable.

    Grounds every clause over the problem's constants and hands the
    propositional clause set to a SAT solver.

    Raises:
        ProblemError: if the problem contains function symbols of arity > 0
    """
    constants = [App(c) for c in problem.constants()]
    for symbol in problem.symbols():
        if symbol.kind == SymbolKind.FUNCTION and symbol.arity > 0:
            raise ProblemError(f"{problem.name}: the ground oracle handles function-free problems only")
    if not constants:
        constants = [App(Symbol("c0", 0, SymbolKind.FUNCTION))]
    atoms = IDPool()
    ground: list[list[int]] = []
    for clause in problem.clauses:
        variables = sorted(clause.variables())
        for values in itertools.product(constants, repeat=len(variables)):
            instance = apply_substitution(clause, dict(zip(variables, values)))
            ground.append([
                atoms.id((lit.predicate, lit.args)) * (1 if lit.positive else -1)
                for lit in instance.literals
            ])
    if any(not c for c in ground):
        return True
    with Solver(name="m22", bootstrap_with=ground) as solver:
        return not solver.solve()


# ---------- generation ----------

def _pool(spec: CorpusSpec, rng: np.random.Generator) -> tuple[dict[str, str], dict[str, int]]:
    """Named pool clauses and, for junk, the chain predicate each one hangs off."""
    links = spec.pool_size // 2
    clauses: dict[str, str] = {}
    for k in range(links):
        clauses[f"link_{k:02d}"] = f"~a{k:02d}(X) | a{k + 1:02d}(X)"
    anchor: dict[str, int] = {}
    for j in range(spec.pool_size - links):
        name = f"junk_{j:02d}"
        if j % 2 == 1:
            clauses[name] = f"~b{j - 1:02d}(X) | r{j:02d}(X)"
            anchor[name] = anchor[f"junk_{j - 1:02d}"]
        else:
            k = int(rng.integers(0, links + 1))
            clauses[name] = f"~a{k:02d}(X) | b{j:02d}(X)"
            anchor[name] = k
    return clauses, anchor


def _problem_text(
    spec: CorpusSpec,
    rng: np.random.Generator,
    pool: dict[str, str],
    anchor: dict[str, int],
    decoy: bool,
) -> tuple[str, int]:
    links = spec.pool_size // 2
    depth = int(rng.integers(1, spec.max_depth + 1))
    start = int(rng.integers(0, links - depth + 1))
    chain = [f"link_{k:02d}" for k in range(start, start + depth)]
    if decoy:
        chain.pop(int(rng.integers(0, depth)))

    near = sorted(n for n, k in anchor.items() if start <= k <= start + depth)
    far = sorted(n for n in anchor if n not in near)
    n_near = min(len(near), (spec.junk_per_problem + 1) // 2)
    junk = list(rng.choice(near, size=n_near, replace=False)) if n_near else []
    n_far = min(len(far), spec.junk_per_problem - n_near)
    junk += list(rng.choice(far, size=n_far, replace=False)) if n_far else []
    junk = sorted(str(j) for j in junk)

    lines = [f"cnf(fact_a{start:02d}_c1, axiom, a{start:02d}(c1))."]
    for i in range(spec.distractors):
        k = int(rng.integers(0, links + 1))
        lines.append(f"cnf(fact_a{k:02d}_c{i + 2}, axiom, a{k:02d}(c{i + 2})).")
    for name in sorted(chain + junk):
        lines.append(f"cnf({name}, axiom, ({pool[name]})).")
    lines.append(f"cnf(goal, negated_conjecture, ~a{start + depth:02d}(c1)).")
    return "\n".join(lines) + "\n", depth


def gen_corpus(spec: CorpusSpec, seed: int = 0, out_dir: Optional[str | Path] = None) -> Corpus:
    """Generate a corpus; every problem is checked against the ground oracle.

    With out_dir set, writes one `<name>.p` file per problem plus corpus.json.

    Raises:
        ProblemError: if a generated problem's satisfiability disagrees with its design
    """
    rng = np.random.default_rng(seed)
    pool, anchor = _pool(spec, rng)
    decoys = set(rng.permutation(spec.problems)[: int(round(spec.decoy_fraction * spec.problems))].tolist())
    entries: list[ProblemEntry] = []
    texts: dict[str, str] = {}
    for i in range(spec.problems):
        name = f"chain_{i:03d}"
        text, depth = _problem_text(spec, rng, pool, anchor, i in decoys)
        problem = parse_problem(text, name)
        if ground_oracle(problem) == (i in decoys):
            raise ProblemError(f"{name}: oracle disagrees with the generator")
        kind = "satisfiable decoy" if i in decoys else "unsatisfiable"
        texts[name] = format_problem(problem, header=f"{name}: {kind}, chain depth {depth}")
        entries.append(ProblemEntry(name=name, file=name + PROBLEM_SUFFIX, satisfiable=i in decoys, depth=depth))
    manifest = CorpusManifest(
        spec=spec,
        seed=seed,
        useful=sorted(n for n in pool if n.startswith("link_")),
        junk=sorted(anchor),
        problems=entries,
    )
    corpus = Corpus(manifest=manifest, texts=texts)
    logger.info(f"[CORPUS] {spec.problems} problems, {len(decoys)} decoys, pool of {spec.pool_size}")
    if out_dir is not None:
        write_corpus(corpus, out_dir)
    return corpus


def write_corpus(corpus: Corpus, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for entry in corpus.manifest.problems:
        (out / entry.file).write_text(corpus.texts[entry.name], encoding="utf-8")
    (out / MANIFEST).write_text(corpus.manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return out


def load_corpus(path: str | Path) -> list[Problem]:
    """Problems of a corpus directory, in manifest order when a manifest exists."""
    path = Path(path)
    manifest = path / MANIFEST
    if manifest.exists():
        data = CorpusManifest.model_validate_json(manifest.read_text(encoding="utf-8"))
        return [load_problem(path / e.file) for e in data.problems]
    return [load_problem(p) for p in sorted(path.glob(f"*{PROBLEM_SUFFIX}"))]


# ---------- the crafted function-free corpus ----------

_CRAFTED_UNSAT = {
    "unit_clash": "cnf(p_a, axiom, p(a)).\ncnf(goal, negated_conjecture, ~p(a)).\n",
    "needs_factoring": (
        "cnf(either, axiom, (p(X) | p(Y))).\n"
        "cnf(goal, negated_conjecture, (~p(X) | ~p(Y))).\n"
    ),
    "transitivity": (
        "cnf(r_ab, axiom, r(a, b)).\ncnf(r_bc, axiom, r(b, c)).\n"
        "cnf(trans, axiom, (~r(X, Y) | ~r(Y, Z) | r(X, Z))).\n"
        "cnf(goal, negated_conjecture, ~r(a, c)).\n"
    ),
    "syllogism": (
        "cnf(mortal, axiom, (~man(X) | mortal(X))).\ncnf(socrates, axiom, man(socrates)).\n"
        "cnf(goal, negated_conjecture, ~mortal(socrates)).\n"
    ),
    "case_split": (
        "cnf(cases, axiom, (p(a) | q(a))).\ncnf(p_r, axiom, (~p(X) | r(X))).\n"
        "cnf(q_r, axiom, (~q(X) | r(X))).\ncnf(goal, negated_conjecture, ~r(a)).\n"
    ),
    "symmetry": (
        "cnf(sym, axiom, (~e(X, Y) | e(Y, X))).\ncnf(e_ab, axiom, e(a, b)).\n"
        "cnf(goal, negated_conjecture, ~e(b, a)).\n"
    ),
    "two_constants": (
        "cnf(one_of, axiom, (p(a) | p(b))).\ncnf(not_a, axiom, ~p(a)).\n"
        "cnf(goal, negated_conjecture, ~p(b)).\n"
    ),
}

_CRAFTED_SAT = {
    "unrelated_goal": "cnf(p_a, axiom, p(a)).\ncnf(goal, negated_conjecture, ~q(a)).\n",
    "symmetric_closure": (
        "cnf(sym, axiom, (~r(X, Y) | r(Y, X))).\ncnf(r_ab, axiom, r(a, b)).\n"
        "cnf(goal, negated_conjecture, ~r(a, c)).\n"
    ),
    "open_disjunction": "cnf(either, axiom, (p(X) | q(X))).\ncnf(goal, negated_conjecture, ~p(a)).\n",
    "one_way": (
        "cnf(imp, axiom, (~p(X) | q(X))).\ncnf(q_a, axiom, q(a)).\n"
        "cnf(goal, negated_conjecture, ~p(a)).\n"
    ),
}


def crafted_corpus(seed: int = 7) -> list[tuple[Problem, bool]]:
    """Thirty function-free problems as (problem, satisfiable): 20 unsatisfiable, 10 satisfiable.

    Hand-written classics come first; chain problems fill both classes up.
    """
    found = [(parse_problem(t, n), False) for n, t in _CRAFTED_UNSAT.items()]
    found += [(parse_problem(t, n), True) for n, t in _CRAFTED_SAT.items()]
    n_unsat, n_sat = 20 - len(_CRAFTED_UNSAT), 10 - len(_CRAFTED_SAT)
    spec = CorpusSpec(
        problems=n_unsat + n_sat, pool_size=20, max_depth=4,
        decoy_fraction=n_sat / (n_unsat + n_sat), junk_per_problem=4,
    )
    corpus = gen_corpus(spec, seed)
    sat = {e.name: e.satisfiable for e in corpus.manifest.problems}
    found += [(p, sat[p.name]) for p in corpus.problems()]
    return found
