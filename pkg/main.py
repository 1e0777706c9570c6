"""DerivGuide command line: corpora, proving, sweeps, training, looping and ablations."""
import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from src.config import config
from src.derivation import build_batches, read_log, write_log
from src.errors import DerivGuideError
from src.harness import (
    ABLATION_MODES,
    CorpusSpec,
    LoopConfig,
    ablate,
    gen_corpus,
    load_corpus,
    load_sweep,
    loop,
    run_benchmark,
    select_revealed_axioms,
)
from src.harness.looping import LOOP_COLUMNS
from src.logic import load_problem
from src.model import Model, ModelConfig, ModelGuidance, load_model, save_model
from src.prover.saturation import Limits, saturate
from src.prover.selection import SelectorConfig
from src.training import TrainConfig, train, write_stats
from src.training.trainer import STATS_COLUMNS


def _limits(args) -> Limits:
    wall = args.time_limit if args.time_limit and args.time_limit > 0 else None
    return Limits(max_selections=args.max_selections, wall_time=wall)


def _selector(args, guidance=None) -> SelectorConfig:
    return SelectorConfig(
        age_weight_ratio=args.age_weight_ratio,
        second_level_ratio=args.ratio,
        guidance=guidance,
        generic_fallback=getattr(args, "generic_fallback", False),
        sine_tolerance=args.sine_tolerance,
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        alpha_max=args.alpha_max,
        warmup_epochs=args.warmup,
        split=args.split,
        swapout_p=args.swapout,
        workers=args.workers,
        seed=args.seed,
    )


def _print_csv(rows: list[dict], columns: list[str]) -> None:
    writer = csv.DictWriter(sys.stdout, fieldnames=columns)
    writer.writeheader()
    writer.writerows(rows)


# ---------- subcommands ----------

def cmd_gen_corpus(args) -> None:
    spec = CorpusSpec(
        problems=args.problems,
        pool_size=args.pool_size,
        max_depth=args.max_depth,
        decoy_fraction=args.decoys,
        junk_per_problem=args.junk,
        distractors=args.distractors,
    )
    corpus = gen_corpus(spec, args.seed, args.out)
    for entry in corpus.manifest.problems:
        print(entry.model_dump_json())


def cmd_prove(args) -> None:
    problem = load_problem(args.problem)
    guidance = ModelGuidance(load_model(args.model)) if args.model else None
    result = saturate(problem, _selector(args, guidance), _limits(args))
    if args.trace_selections:
        for entry in result.trace:
            print(json.dumps(entry._asdict()))
    if args.log and result.solved:
        write_log(result.dag, args.log)
    print(json.dumps({"problem": problem.name, "outcome": result.outcome.value, **result.stats.model_dump()}))


def cmd_sweep(args) -> None:
    problems = load_corpus(args.problems)
    guidance = ModelGuidance(load_model(args.model)) if args.model else None
    baseline = load_sweep(args.baseline) if args.baseline else None
    sweep = run_benchmark(
        problems, _selector(args, guidance), _limits(args),
        name=args.name, baseline=baseline, out_dir=args.out, workers=args.sweep_workers,
    )
    for record in sweep.records:
        print(record.model_dump_json())
    print(sweep.summary.model_dump_json())


def cmd_train(args) -> None:
    logs = sorted(Path(args.logs).glob("*.log"))
    if not logs:
        raise DerivGuideError(f"no derivation logs under {args.logs}")
    dags = [read_log(p) for p in logs]
    revealed = select_revealed_axioms(dags, args.m)
    model_config = ModelConfig(
        n=args.dim, revealed_axioms=revealed, sine_cap=args.sine_cap, use_sine=not args.no_sine,
    )
    batches = build_batches(dags, args.batch_nodes, revealed, model_config.key_cap)
    result = train(batches, Model.initialize(model_config, args.seed), _train_config(args))
    save_model(result.model, args.out)
    if args.stats:
        write_stats(result.stats, args.stats)
    _print_csv([s.model_dump() for s in result.stats], STATS_COLUMNS)
    print(json.dumps({
        "model": str(args.out),
        "derivations": len(dags),
        "batches": len(batches),
        "best_epoch": result.best_epoch,
        "best_val_loss": result.best_val_loss,
        "tpr": result.best.tpr,
        "tnr": result.best.tnr,
    }))


def cmd_loop(args) -> None:
    loop_config = LoopConfig(
        loops=args.loops,
        m=args.m,
        n=args.dim,
        use_sine=not args.no_sine,
        sine_cap=args.sine_cap,
        train=_train_config(args),
        ratios=args.ratios,
        age_weight_ratio=args.age_weight_ratio,
        sine_tolerance=args.sine_tolerance,
        limits=_limits(args),
        batch_nodes=args.batch_nodes,
        workers=args.sweep_workers,
        seed=args.seed,
        out_dir=args.out,
    )
    report = loop(load_corpus(args.problems), loop_config)
    _print_csv([row.model_dump() for row in report.rows], LOOP_COLUMNS)


def cmd_ablate(args) -> None:
    setup = ablate(load_model(args.model), args.mode, args.level)
    for note in setup.notes:
        print(f"NOTE: {note}", file=sys.stderr)
    problems = load_corpus(args.problems)
    baseline = load_sweep(args.baseline) if args.baseline else None
    sweep = run_benchmark(
        problems, _selector(args, setup.guidance), _limits(args),
        name=args.name or f"ablate_{args.mode}", baseline=baseline, out_dir=args.out,
        workers=args.sweep_workers,
    )
    print(sweep.summary.model_dump_json())


# ---------- argument parsing ----------

def _add_prover_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-selections", type=int, default=config.PROVER_MAX_SELECTIONS,
                        help="Given-clause selections per problem")
    parser.add_argument("--time-limit", type=float, default=config.PROVER_TIME_LIMIT,
                        help="Wall-clock seconds per problem (0 disables)")
    parser.add_argument("--ratio", default=config.SELECTION_RATIO,
                        help="Model-advised : plain selection ratio, e.g. 2:1")
    parser.add_argument("--age-weight-ratio", default=config.AGE_WEIGHT_RATIO,
                        help="Age : weight ratio inside each queue")
    parser.add_argument("--sine-tolerance", type=float, default=config.SINE_TOLERANCE)


def _add_train_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=config.TRAIN_EPOCHS)
    parser.add_argument("--alpha-max", type=float, default=config.ALPHA_MAX)
    parser.add_argument("--warmup", type=int, default=config.WARMUP_EPOCHS, help="Warmup epochs")
    parser.add_argument("--split", type=float, default=config.TRAIN_SPLIT, help="Training fraction of batches")
    parser.add_argument("--swapout", type=float, default=config.SWAPOUT_P, help="Swapout probability")
    parser.add_argument("--workers", type=int, default=config.TRAIN_WORKERS, help="Gradient workers")
    parser.add_argument("--dim", type=int, default=config.EMBEDDING_DIM, help="Embedding dimension n")
    parser.add_argument("--m", type=int, default=config.REVEALED_AXIOMS, help="Revealed axioms")
    parser.add_argument("--sine-cap", type=int, default=config.SINE_CAP)
    parser.add_argument("--no-sine", action="store_true", help="Train without SInE level inputs")
    parser.add_argument("--batch-nodes", type=int, default=config.BATCH_NODES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Saturation proving guided by derivation-history models")
    parser.add_argument("--seed", type=int, default=config.SEED)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="Generate a synthetic problem corpus")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--problems", type=int, default=100)
    p.add_argument("--pool-size", type=int, default=50)
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--decoys", type=float, default=0.1, help="Fraction of satisfiable decoys")
    p.add_argument("--junk", type=int, default=8, help="Junk axioms per problem")
    p.add_argument("--distractors", type=int, default=2)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("prove", help="Prove one problem file")
    p.add_argument("problem", help="CNF problem file")
    p.add_argument("--model", help="Model file for guidance")
    p.add_argument("--generic-fallback", action="store_true",
                   help="Embed untrained rules with the generic blocks")
    p.add_argument("--log", help="Write the derivation log here when a proof is found")
    p.add_argument("--trace-selections", action="store_true", help="Print tick, source, clause id per pick")
    _add_prover_args(p)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("sweep", help="Prove every problem of a corpus directory")
    p.add_argument("problems", help="Corpus directory")
    p.add_argument("--model", help="Model file for guidance")
    p.add_argument("--generic-fallback", action="store_true")
    p.add_argument("--name", default="sweep")
    p.add_argument("--baseline", help="Earlier sweep directory for V+/V-")
    p.add_argument("--out", default=config.WORK_DIR)
    p.add_argument("--sweep-workers", type=int, default=config.SWEEP_WORKERS)
    _add_prover_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="Train a model on derivation logs")
    p.add_argument("logs", help="Directory of derivation logs")
    p.add_argument("--out", required=True, help="Model file to write")
    p.add_argument("--stats", help="Per-epoch stats CSV")
    _add_train_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("loop", help="Alternate training and guided sweeps")
    p.add_argument("problems", help="Corpus directory")
    p.add_argument("--loops", type=int, default=2)
    p.add_argument("--ratios", default=config.SELECTION_RATIO,
                   help="Comma-separated selection ratios tried in every loop")
    p.add_argument("--out", default=config.WORK_DIR)
    p.add_argument("--sweep-workers", type=int, default=config.SWEEP_WORKERS)
    _add_prover_args(p)
    _add_train_args(p)
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("ablate", help="Sweep with one evaluation-time override")
    p.add_argument("problems", help="Corpus directory")
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=ABLATION_MODES, required=True)
    p.add_argument("--level", type=int, help="SInE level for fix_sine")
    p.add_argument("--name")
    p.add_argument("--baseline", help="Earlier sweep directory for V+/V-")
    p.add_argument("--out", default=config.WORK_DIR)
    p.add_argument("--sweep-workers", type=int, default=config.SWEEP_WORKERS)
    _add_prover_args(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if not config.validate():
        return 1
    try:
        args.func(args)
    except (DerivGuideError, ValidationError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
