"""Benchmark sweeps: prove a set of problems, collect derivations, compare runs."""
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from pydantic import BaseModel
from tqdm import tqdm

from src.derivation.dag import DerivationDag
from src.derivation.log import write_log
from src.errors import AblationError, DerivGuideError
from src.logic.terms import Problem
from src.model.guidance import ModelGuidance
from src.model.network import Ablation, Model
from src.prover.saturation import Limits, Outcome, replay, saturate
from src.prover.selection import SelectorConfig

logger = logging.getLogger(__name__)

QUARANTINED = "quarantined"


class RunRecord(BaseModel):
    problem: str
    outcome: str
    selections: int = 0
    wall_time: float = 0.0
    model_eval_time: float = 0.0
    log_path: Optional[str] = None
    error: Optional[str] = None

    @property
    def solved(self) -> bool:
        return self.outcome == Outcome.PROOF.value

    @property
    def eval_fraction(self) -> float:
        return self.model_eval_time / self.wall_time if self.wall_time > 0 else 0.0


class SweepSummary(BaseModel):
    name: str
    attempted: int
    solved: int
    quarantined: list[str] = []
    baseline: Optional[str] = None
    v_plus: list[str] = []
    v_minus: list[str] = []
    eval_fraction: float = 0.0
    mean_selections: float = 0.0


@dataclass
class Sweep:
    """Records of one sweep plus the in-memory derivations of every attempt."""
    name: str
    records: list[RunRecord]
    dags: dict[str, DerivationDag] = field(default_factory=dict)
    summary: Optional[SweepSummary] = None

    @property
    def solved(self) -> set[str]:
        return {r.problem for r in self.records if r.solved}

    def record(self, problem: str) -> Optional[RunRecord]:
        return next((r for r in self.records if r.problem == problem), None)


_Attempt = tuple[RunRecord, Optional[DerivationDag], str]


def _attempt(problem: Problem, config: SelectorConfig, limits: Limits) -> _Attempt:
    try:
        result = saturate(problem, config, limits)
        outcome = result.outcome.value
        error = None
        if result.solved:
            try:
                replay(result)
            except DerivGuideError as e:
                # a proof that does not replay never reaches training
                outcome, error = QUARANTINED, f"replay failed: {e}"
        record = RunRecord(
            problem=problem.name,
            outcome=outcome,
            selections=result.stats.selections,
            wall_time=result.stats.wall_time,
            model_eval_time=result.stats.model_eval_time,
            error=error,
        )
        return record, result.dag, result.sine.dump()
    except Exception as e:
        return RunRecord(problem=problem.name, outcome=QUARANTINED, error=f"{type(e).__name__}: {e}"), None, ""


def compare(name: str, records: Sequence[RunRecord], baseline: Optional["Sweep"] = None) -> SweepSummary:
    """Solved count, V+/V- against a baseline sweep and mean eval-time fraction."""
    solved = {r.problem for r in records if r.solved}
    summary = SweepSummary(
        name=name,
        attempted=len(records),
        solved=len(solved),
        quarantined=sorted(r.problem for r in records if r.outcome == QUARANTINED),
    )
    timed = [r for r in records if r.wall_time > 0]
    if timed:
        summary.eval_fraction = sum(r.eval_fraction for r in timed) / len(timed)
    if solved:
        summary.mean_selections = sum(r.selections for r in records if r.solved) / len(solved)
    if baseline is not None:
        summary.baseline = baseline.name
        summary.v_plus = sorted(solved - baseline.solved)
        summary.v_minus = sorted(baseline.solved - solved)
    return summary


def run_benchmark(
    problems: Sequence[Problem],
    config: SelectorConfig,
    limits: Limits,
    name: str = "sweep",
    baseline: Optional[Sweep] = None,
    out_dir: Optional[str | Path] = None,
    workers: int = 1,
    progress: bool = True,
) -> Sweep:
    """Prove every problem and summarize; crashes quarantine a problem, never the sweep.

    With out_dir set, solved derivations are written as `<out_dir>/<name>/<problem>.log`
    (after a successful replay) and the records as `<name>/records.jsonl`.
    """
    found: dict[str, _Attempt] = {}
    bar = tqdm(total=len(problems), desc=f"[SWEEP] {name}", disable=not progress, dynamic_ncols=True)
    if workers <= 1:
        for problem in problems:
            found[problem.name] = _attempt(problem, config, limits)
            bar.update()
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_attempt, p, config, limits): p.name for p in problems}
            for future in as_completed(futures):
                problem_name = futures[future]
                try:
                    found[problem_name] = future.result()
                except Exception as e:
                    found[problem_name] = (
                        RunRecord(problem=problem_name, outcome=QUARANTINED, error=f"{type(e).__name__}: {e}"),
                        None,
                        "",
                    )
                bar.update()
    bar.close()

    sweep = Sweep(name, [])
    run_dir = Path(out_dir) / name if out_dir is not None else None
    for problem in problems:
        record, dag, levels = found[problem.name]
        if record.outcome == QUARANTINED:
            logger.warning(f"[SWEEP] {problem.name} quarantined: {record.error}")
        if dag is not None:
            sweep.dags[problem.name] = dag
            if record.solved and run_dir is not None:
                record.log_path = str(write_log(dag, run_dir / f"{problem.name}.log"))
                (run_dir / f"{problem.name}.sine").write_text(levels, encoding="utf-8")
        sweep.records.append(record)

    sweep.summary = compare(name, sweep.records, baseline)
    if run_dir is not None:
        run_dir.mkdir(parents=True, exist_ok=True)
        lines = [r.model_dump_json() for r in sweep.records]
        (run_dir / "records.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    s = sweep.summary
    logger.info(
        f"[SWEEP] {name}: solved {s.solved}/{s.attempted}"
        + (f", V+ {len(s.v_plus)} V- {len(s.v_minus)} vs {s.baseline}" if s.baseline else "")
    )
    return sweep


def load_sweep(path: str | Path, name: Optional[str] = None) -> Sweep:
    """Records of an earlier sweep from `<dir>/records.jsonl` (or the file itself), for V+/V- comparisons."""
    path = Path(path)
    if path.is_dir():
        path = path / "records.jsonl"
    lines = path.read_text(encoding="utf-8").splitlines()
    records = [RunRecord.model_validate_json(line) for line in lines if line.strip()]
    sweep = Sweep(name or path.parent.name, records)
    sweep.summary = compare(sweep.name, records)
    return sweep


def select_revealed_axioms(derivations: Iterable[DerivationDag], m: int) -> list[str]:
    """The m axiom names occurring in the most derivations, ties broken by name."""
    if m < 0:
        raise ValueError("m must be >= 0")
    counts: Counter[str] = Counter()
    for dag in derivations:
        counts.update(dag.axiom_names())
    ranked = sorted(counts, key=lambda name: (-counts[name], name))
    return ranked[:m]


ABLATION_MODES = ("none", "mask_axioms", "generic_rules", "fix_sine", "no_sine")


@dataclass
class AblationSetup:
    guidance: ModelGuidance
    notes: list[str] = field(default_factory=list)


def ablate(model: Model, mode: str, level: Optional[int] = None) -> AblationSetup:
    """Guidance for `model` with one evaluation-time override.

    Raises:
        AblationError: unknown mode, fix_sine without a level, or generic_rules on
            a model whose generic blocks were never trained
    """
    notes: list[str] = []
    if mode == "none":
        ablation = Ablation()
    elif mode == "mask_axioms":
        ablation = Ablation(mask_axioms=True)
    elif mode == "generic_rules":
        if not model.config.has_generic:
            raise AblationError("generic_rules needs a model trained with swapout")
        ablation = Ablation(generic_rules=True)
    elif mode == "fix_sine":
        if level is None or level < 0:
            raise AblationError("fix_sine needs a level >= 0")
        if model.config.use_sine:
            ablation = Ablation(fixed_sine=level)
        else:
            ablation = Ablation()
            notes.append("fix_sine has no effect: the model takes no SInE input")
    elif mode == "no_sine":
        ablation = Ablation()
        if model.config.use_sine:
            notes.append("the model was trained with SInE levels as input")
        else:
            notes.append("the model takes no SInE input")
    else:
        raise AblationError(f"unknown ablation mode {mode!r}; expected one of {', '.join(ABLATION_MODES)}")
    for note in notes:
        logger.warning(f"[SWEEP] ablation {mode}: {note}")
    return AblationSetup(ModelGuidance(model, ablation), notes)
