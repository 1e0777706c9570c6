"""Configuration loader for DerivGuide.

Loads configuration from environment variables and .env file.
Provides defaults for the prover, the model, training and benchmark sweeps.
Library code never reads this module; the CLI turns it into typed configs.
"""
import os
from pathlib import Path

# Load .env file if it exists
env_path = Path(__file__).parent.parent / ".env"
if env_path.exists():
    try:
        from dotenv import load_dotenv
        load_dotenv(env_path)
    except ImportError:
        print("Warning: python-dotenv not installed, using environment variables only")


class Config:
    """Configuration class for DerivGuide."""

    # ==================== Prover Configuration ====================
    PROVER_MAX_SELECTIONS: int = int(os.getenv("PROVER_MAX_SELECTIONS", "2000"))

    # Wall-clock limit per problem in seconds (0 disables it)
    PROVER_TIME_LIMIT: float = float(os.getenv("PROVER_TIME_LIMIT", "10.0"))

    # Model-advised : plain picks
    SELECTION_RATIO: str = os.getenv("SELECTION_RATIO", "2:1")

    # Age : weight picks inside each queue
    AGE_WEIGHT_RATIO: str = os.getenv("AGE_WEIGHT_RATIO", "1:1")

    SINE_TOLERANCE: float = float(os.getenv("SINE_TOLERANCE", "1.5"))

    # ==================== Model Configuration ====================
    EMBEDDING_DIM: int = int(os.getenv("EMBEDDING_DIM", "32"))
    SINE_CAP: int = int(os.getenv("SINE_CAP", "16"))

    # Number of axioms with their own embedding (m)
    REVEALED_AXIOMS: int = int(os.getenv("REVEALED_AXIOMS", "50"))

    # ==================== Training Configuration ====================
    TRAIN_EPOCHS: int = int(os.getenv("TRAIN_EPOCHS", "100"))
    ALPHA_MAX: float = float(os.getenv("ALPHA_MAX", "2.0e-4"))
    WARMUP_EPOCHS: int = int(os.getenv("WARMUP_EPOCHS", "40"))
    TRAIN_SPLIT: float = float(os.getenv("TRAIN_SPLIT", "0.9"))
    SWAPOUT_P: float = float(os.getenv("SWAPOUT_P", "0.0"))
    TRAIN_WORKERS: int = int(os.getenv("TRAIN_WORKERS", "1"))

    # Target node count of a merged batch
    BATCH_NODES: int = int(os.getenv("BATCH_NODES", "20000"))

    # ==================== Runtime Configuration ====================
    SWEEP_WORKERS: int = int(os.getenv("SWEEP_WORKERS", "1"))
    SEED: int = int(os.getenv("SEED", "0"))
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    WORK_DIR: str = os.getenv("WORK_DIR", "runs")

    # ==================== Validation ====================
    @classmethod
    def validate(cls) -> bool:
        """Validate ratios and numeric ranges.

        Returns:
            True if every value is usable, False otherwise.
        """
        valid = True
        for name in ("SELECTION_RATIO", "AGE_WEIGHT_RATIO"):
            parts = getattr(cls, name).split(":")
            if len(parts) != 2 or not all(p.strip().isdigit() for p in parts) or not any(int(p) for p in parts):
                print(f"ERROR: {name} must look like 'a:b' with one positive part, got {getattr(cls, name)!r}")
                valid = False

        positive = [
            ("EMBEDDING_DIM", cls.EMBEDDING_DIM),
            ("SINE_CAP", cls.SINE_CAP),
            ("BATCH_NODES", cls.BATCH_NODES),
            ("TRAIN_WORKERS", cls.TRAIN_WORKERS),
            ("SWEEP_WORKERS", cls.SWEEP_WORKERS),
        ]
        for name, value in positive:
            if value < 1:
                print(f"ERROR: {name} must be >= 1, got {value}")
                valid = False

        non_negative = [
            ("PROVER_MAX_SELECTIONS", cls.PROVER_MAX_SELECTIONS),
            ("PROVER_TIME_LIMIT", cls.PROVER_TIME_LIMIT),
            ("REVEALED_AXIOMS", cls.REVEALED_AXIOMS),
            ("TRAIN_EPOCHS", cls.TRAIN_EPOCHS),
            ("WARMUP_EPOCHS", cls.WARMUP_EPOCHS),
        ]
        for name, value in non_negative:
            if value < 0:
                print(f"ERROR: {name} must be >= 0, got {value}")
                valid = False

        if cls.WARMUP_EPOCHS > cls.TRAIN_EPOCHS:
            print("ERROR: WARMUP_EPOCHS exceeds TRAIN_EPOCHS")
            valid = False
        if not 0.0 < cls.TRAIN_SPLIT < 1.0:
            print(f"ERROR: TRAIN_SPLIT must lie strictly between 0 and 1, got {cls.TRAIN_SPLIT}")
            valid = False
        if not 0.0 <= cls.SWAPOUT_P <= 1.0:
            print(f"ERROR: SWAPOUT_P must lie in [0, 1], got {cls.SWAPOUT_P}")
            valid = False
        if cls.SINE_TOLERANCE < 1.0:
            print(f"ERROR: SINE_TOLERANCE must be >= 1, got {cls.SINE_TOLERANCE}")
            valid = False

        return valid

    @classmethod
    def display(cls) -> None:
        """Display configuration."""
        print("=" * 60)
        print("DERIVGUIDE CONFIGURATION")
        print("=" * 60)

        print("\n[Prover]")
        print(f"  Max Selections: {cls.PROVER_MAX_SELECTIONS}")
        print(f"  Time Limit: {cls.PROVER_TIME_LIMIT}s")
        print(f"  Selection Ratio: {cls.SELECTION_RATIO}")
        print(f"  Age:Weight Ratio: {cls.AGE_WEIGHT_RATIO}")
        print(f"  SInE Tolerance: {cls.SINE_TOLERANCE}")

        print("\n[Model]")
        print(f"  Embedding Dim: {cls.EMBEDDING_DIM}")
        print(f"  SInE Cap: {cls.SINE_CAP}")
        print(f"  Revealed Axioms: {cls.REVEALED_AXIOMS}")

        print("\n[Training]")
        print(f"  Epochs: {cls.TRAIN_EPOCHS} (warmup {cls.WARMUP_EPOCHS})")
        print(f"  Alpha Max: {cls.ALPHA_MAX}")
        print(f"  Split: {cls.TRAIN_SPLIT}")
        print(f"  Swapout: {cls.SWAPOUT_P}")
        print(f"  Workers: {cls.TRAIN_WORKERS}")
        print(f"  Batch Nodes: {cls.BATCH_NODES}")

        print("\n[Runtime]")
        print(f"  Sweep Workers: {cls.SWEEP_WORKERS}")
        print(f"  Seed: {cls.SEED}")
        print(f"  Log Level: {cls.LOG_LEVEL}")
        print(f"  Work Dir: {cls.WORK_DIR}")

        print("=" * 60)


# Singleton instance for easy import
config = Config()
