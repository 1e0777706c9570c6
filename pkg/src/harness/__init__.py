"""Corpora, benchmark sweeps, ablations and the looping orchestrator."""
from .benchmark import (
    ABLATION_MODES,
    AblationSetup,
    RunRecord,
    Sweep,
    SweepSummary,
    ablate,
    compare,
    load_sweep,
    run_benchmark,
    select_revealed_axioms,
)
from .corpus import Corpus, CorpusSpec, crafted_corpus, gen_corpus, ground_oracle, load_corpus, write_corpus
from .looping import LoopConfig, Looper, LoopReport, LoopRow, LoopState, loop, write_loop_table

__all__ = [
    "ABLATION_MODES",
    "AblationSetup",
    "Corpus",
    "CorpusSpec",
    "LoopConfig",
    "LoopReport",
    "LoopRow",
    "LoopState",
    "Looper",
    "RunRecord",
    "Sweep",
    "SweepSummary",
    "ablate",
    "compare",
    "crafted_corpus",
    "gen_corpus",
    "ground_oracle",
    "load_corpus",
    "load_sweep",
    "loop",
    "run_benchmark",
    "select_revealed_axioms",
    "write_corpus",
    "write_loop_table",
]
