"""Looping: retrain on every problem solved so far, then sweep again with guidance.

Built as a langgraph StateGraph:

    baseline -> assemble -> train -> sweep -+-> assemble  (more loops)
                                            +-> report -> END
"""
import csv
import logging
from pathlib import Path
from typing import Any, Optional, Sequence

from langgraph.graph import END, StateGraph
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.derivation.batch import DEFAULT_BATCH_NODES, Batch, build_batches
from src.derivation.dag import DerivationDag, merge_dags
from src.errors import DerivationError
from src.logic.terms import Problem
from src.model.guidance import ModelGuidance
from src.model.network import Model, ModelConfig
from src.model.serialize import save_model
from src.prover.saturation import Limits
from src.prover.selection import SelectorConfig, parse_ratio
from src.prover.sine import DEFAULT_TOLERANCE
from src.training.trainer import TrainConfig, TrainResult, train, write_stats
from .benchmark import Sweep, run_benchmark, select_revealed_axioms

logger = logging.getLogger(__name__)

LOOP_COLUMNS = ["loop", "collected", "m", "performance", "baseline_pct", "pct_collected", "cumulative", "strategy"]


class LoopConfig(BaseModel):
    loops: int = 2
    m: int = 50
    n: int = 32
    use_sine: bool = True
    sine_cap: int = 16
    train: TrainConfig = Field(default_factory=TrainConfig)
    # one guided sweep per ratio; a loop's performance is its best sweep
    ratios: list[tuple[int, int]] = [(2, 1)]
    age_weight_ratio: tuple[int, int] = (1, 1)
    sine_tolerance: float = DEFAULT_TOLERANCE
    limits: Limits = Field(default_factory=Limits)
    batch_nodes: int = DEFAULT_BATCH_NODES
    workers: int = 1
    seed: int = 0
    out_dir: Optional[str] = None
    progress: bool = True

    @field_validator("loops")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("loops must be >= 1")
        return value

    @field_validator("m")
    @classmethod
    def _non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("m must be >= 0")
        return value

    @field_validator("ratios", mode="before")
    @classmethod
    def _parse_ratios(cls, value):
        if isinstance(value, str):
            value = value.split(",")
        return [parse_ratio(v) if isinstance(v, str) else v for v in value]

    @field_validator("ratios")
    @classmethod
    def _some_ratio(cls, value: list[tuple[int, int]]) -> list[tuple[int, int]]:
        if not value:
            raise ValueError("at least one selection ratio is needed")
        return value


class LoopRow(BaseModel):
    """One row of the loop table. Loop 0 has no collected, m or pct_collected."""
    loop: int
    collected: Optional[int] = None
    m: Optional[int] = None
    performance: int
    baseline_pct: float = 0.0
    pct_collected: Optional[float] = None
    cumulative: int = 0
    strategy: str = "baseline"


class LoopState(BaseModel):
    """State threaded through the looping graph."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    loop: int = 0
    solved: set[str] = Field(default_factory=set)
    chosen: dict[str, Any] = Field(default_factory=dict)
    chosen_loop: dict[str, int] = Field(default_factory=dict)
    m: int = 0
    revealed: list[str] = Field(default_factory=list)
    batches: list[Any] = Field(default_factory=list)
    model: Optional[Any] = None
    baseline: Optional[Any] = None
    sweeps: list[Any] = Field(default_factory=list)
    train_results: list[Any] = Field(default_factory=list)
    rows: list[LoopRow] = Field(default_factory=list)


class LoopReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rows: list[LoopRow]
    solved: list[str]
    chosen_loop: dict[str, int]
    models: list[Any] = []


def _pct(value: float, reference: float) -> float:
    return 100.0 * value / reference if reference > 0 else 0.0


def write_loop_table(rows: Sequence[LoopRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=LOOP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.model_dump())
    return path


class Looper:
    """Baseline sweep, then alternate training and guided sweeps for `loops - 1` rounds."""

    def __init__(self, problems: Sequence[Problem], config: LoopConfig):
        self.problems = list(problems)
        self.config = config
        self.out = Path(config.out_dir) if config.out_dir is not None else None
        self.graph = self._build_graph()

    def _build_graph(self):
        workflow = StateGraph(LoopState)

        workflow.add_node("baseline", self._baseline_node)
        workflow.add_node("assemble", self._assemble_node)
        workflow.add_node("train", self._train_node)
        workflow.add_node("sweep", self._sweep_node)
        workflow.add_node("report", self._report_node)

        workflow.set_entry_point("baseline")
        workflow.add_conditional_edges(
            "baseline",
            self._should_continue,
            {"continue": "assemble", "end": "report"},
        )
        workflow.add_edge("assemble", "train")
        workflow.add_edge("train", "sweep")
        workflow.add_conditional_edges(
            "sweep",
            self._should_continue,
            {"continue": "assemble", "end": "report"},
        )
        workflow.add_edge("report", END)
        return workflow.compile()

    # ---------- nodes ----------

    def _selector(self, ratio: tuple[int, int] = (2, 1), model: Optional[Model] = None) -> SelectorConfig:
        return SelectorConfig(
            age_weight_ratio=self.config.age_weight_ratio,
            second_level_ratio=ratio,
            guidance=ModelGuidance(model) if model is not None else None,
            sine_tolerance=self.config.sine_tolerance,
        )

    def _sweep(self, name: str, selector: SelectorConfig, baseline: Optional[Sweep]) -> Sweep:
        return run_benchmark(
            self.problems,
            selector,
            self.config.limits,
            name=name,
            baseline=baseline,
            out_dir=self.out,
            workers=self.config.workers,
            progress=self.config.progress,
        )

    def _collect(self, state: LoopState, sweeps: Sequence[Sweep]) -> int:
        """Take one derivation for each newly solved problem; earlier loops win."""
        added = 0
        for sweep in sweeps:
            for name in sorted(sweep.solved):
                if name in state.chosen:
                    continue
                dag: DerivationDag = sweep.dags[name]
                failed = state.baseline.dags.get(name) if state.loop > 0 else None
                if failed is not None:
                    dag = merge_dags(dag, failed)
                state.chosen[name] = dag
                state.chosen_loop[name] = state.loop
                added += 1
        state.solved |= {name for sweep in sweeps for name in sweep.solved}
        return added

    def _baseline_node(self, state: LoopState) -> LoopState:
        logger.info(f"[LOOP] loop 0: baseline sweep over {len(self.problems)} problems")
        baseline = self._sweep("loop0_baseline", self._selector(self.config.ratios[0]), None)
        if not baseline.solved:
            raise DerivationError("loop 0 solved no problems; nothing to train on")
        state.baseline = baseline
        state.sweeps = [baseline]
        self._collect(state, [baseline])
        state.rows.append(LoopRow(
            loop=0,
            performance=len(baseline.solved),
            cumulative=len(state.solved),
        ))
        return state

    def _assemble_node(self, state: LoopState) -> LoopState:
        state.loop += 1
        dags = [state.chosen[name] for name in sorted(state.chosen)]
        state.revealed = select_revealed_axioms(dags, self.config.m)
        state.m = len(state.revealed)
        key_cap = self.config.sine_cap if self.config.use_sine else None
        state.batches = build_batches(dags, self.config.batch_nodes, state.revealed, key_cap)
        logger.info(
            f"[LOOP] loop {state.loop}: {len(dags)} derivations, {state.m} revealed axioms, "
            f"{len(state.batches)} batches"
        )
        return state

    def _train_node(self, state: LoopState) -> LoopState:
        seed = self.config.seed + state.loop
        model_config = ModelConfig(
            n=self.config.n,
            revealed_axioms=state.revealed,
            sine_cap=self.config.sine_cap,
            use_sine=self.config.use_sine,
        )
        train_config = self.config.train.model_copy(update={"seed": self.config.train.seed + state.loop})
        batches: list[Batch] = state.batches
        result: TrainResult = train(batches, Model.initialize(model_config, seed), train_config)
        state.model = result.model
        state.train_results.append(result)
        state.batches = []
        if self.out is not None:
            loop_dir = self.out / f"loop{state.loop}"
            save_model(result.model, loop_dir / "model.dgnm")
            write_stats(result.stats, loop_dir / "train_stats.csv")
        logger.info(
            f"[LOOP] loop {state.loop}: best epoch {result.best_epoch}, val loss {result.best_val_loss:.4f}"
        )
        return state

    def _sweep_node(self, state: LoopState) -> LoopState:
        sweeps = []
        for ratio in self.config.ratios:
            name = f"loop{state.loop}_r{ratio[0]}-{ratio[1]}"
            sweeps.append(self._sweep(name, self._selector(ratio, state.model), state.baseline))
        best = max(sweeps, key=lambda s: len(s.solved))
        if not best.solved:
            raise DerivationError(f"loop {state.loop} solved no problems")
        collected = len(state.chosen)
        self._collect(state, sweeps)
        state.sweeps = sweeps
        base = state.rows[0].performance
        performance = len(best.solved)
        state.rows.append(LoopRow(
            loop=state.loop,
            collected=collected,
            m=state.m,
            performance=performance,
            baseline_pct=_pct(performance - base, base),
            pct_collected=_pct(performance, collected),
            cumulative=len(state.solved),
            strategy=best.name,
        ))
        return state

    def _report_node(self, state: LoopState) -> LoopState:
        for row in state.rows:
            logger.info(
                f"[LOOP] loop {row.loop}: performance {row.performance} "
                f"({row.baseline_pct:+.1f}% vs baseline), cumulative {row.cumulative}"
            )
        if self.out is not None:
            write_loop_table(state.rows, self.out / "loops.csv")
        return state

    # ---------- routing ----------

    def _should_continue(self, state: LoopState) -> str:
        return "continue" if state.loop + 1 < self.config.loops else "end"

    def run(self) -> LoopReport:
        # three nodes per loop plus baseline and report
        limit = 3 * self.config.loops + 10
        final_state = self.graph.invoke(LoopState(), {"recursion_limit": limit})
        if isinstance(final_state, dict):
            final_state = LoopState(**final_state)
        return LoopReport(
            rows=final_state.rows,
            solved=sorted(final_state.solved),
            chosen_loop=final_state.chosen_loop,
            models=[r.model for r in final_state.train_results],
        )


def loop(problems: Sequence[Problem], config: LoopConfig) -> LoopReport:
    """Run the looping procedure and return one LoopRow per loop.

    Raises:
        DerivationError: if any loop solves no problem
    """
    return Looper(problems, config).run()
