"""Line-oriented derivation log, the exchange format between prover and trainer.

    # <problem name>
    i <id> <axiom name|$unknown|$goal> <sine level>
    d <id> <rule> <premise ids...>
    s <id>          selected
    p <id>          in proof
    e <id>          the empty clause

Nodes come in topological order; trailer lines are sorted by id.
"""
from pathlib import Path

from src.errors import DerivationError
from src.prover.rules import RuleId
from .dag import Derived, DerivationDag, Initial


def format_log(dag: DerivationDag) -> str:
    lines = [f"# {dag.problem_name}"]
    for node_id, label in dag.nodes.items():
        if isinstance(label, Initial):
            lines.append(f"i {node_id} {label.axiom} {label.sine_level}")
        else:
            premises = " ".join(str(p) for p in label.premises)
            lines.append(f"d {node_id} {label.rule.value} {premises}")
    lines += [f"s {n}" for n in sorted(dag.selected)]
    if dag.proof is not None:
        lines += [f"p {n}" for n in sorted(dag.proof)]
    if dag.empty_clause is not None:
        lines.append(f"e {dag.empty_clause}")
    return "\n".join(lines) + "\n"


def parse_log(text: str) -> DerivationDag:
    dag = DerivationDag()
    proof: set[int] = set()
    has_proof = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        try:
            kind, rest = line[0], line[2:]
            if kind == "#":
                dag.problem_name = rest
            elif kind == "i":
                node_id, tail = rest.split(" ", 1)
                axiom, level = tail.rsplit(" ", 1)
                dag.add_initial(int(node_id), axiom, int(level))
            elif kind == "d":
                fields = rest.split()
                dag.add_derived(int(fields[0]), RuleId(fields[1]), [int(p) for p in fields[2:]])
            elif kind == "s":
                dag.mark_selected(int(rest))
            elif kind == "p":
                has_proof = True
                proof.add(int(rest))
            elif kind == "e":
                dag.empty_clause = int(rest)
            else:
                raise DerivationError(f"unknown record {kind!r}")
        except (ValueError, IndexError) as e:
            raise DerivationError(f"bad derivation log line {lineno}: {line!r} ({e})")
        except DerivationError as e:
            raise DerivationError(f"bad derivation log line {lineno}: {e}")
    if has_proof:
        dag.proof = proof
    return dag


def write_log(dag: DerivationDag, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_log(dag), encoding="utf-8")
    return path


def read_log(path: str | Path) -> DerivationDag:
    return parse_log(Path(path).read_text(encoding="utf-8"))
