"""Exception hierarchy shared by all DerivGuide packages."""
from typing import Optional


class DerivGuideError(Exception):
    """Base class for every error raised by this project."""


class ParseError(DerivGuideError):
    """Syntax error in a CNF problem file."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ProblemError(DerivGuideError):
    """A well-formed file that does not describe a valid problem."""


class DerivationError(DerivGuideError):
    """Malformed derivation DAG, missing node or missing proof."""


class ModelError(DerivGuideError):
    """Model and prover/derivation disagree (unknown rule, bad axiom index, cycle)."""


class ModelFormatError(ModelError):
    """Model file with a wrong version or truncated payload."""


class TrainingError(DerivGuideError):
    """Non-finite loss or gradient, or a worker that failed twice."""

    def __init__(self, message: str, epoch: Optional[int] = None, block: Optional[str] = None):
        details = []
        if epoch is not None:
            details.append(f"epoch {epoch}")
        if block is not None:
            details.append(f"block {block}")
        suffix = f" ({', '.join(details)})" if details else ""
        super().__init__(f"{message}{suffix}")
        self.epoch = epoch
        self.block = block


class AblationError(DerivGuideError):
    """Ablation mode that the loaded model cannot support."""
