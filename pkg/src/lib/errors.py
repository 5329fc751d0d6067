"""Exception hierarchy shared by every stage of the registration toolkit."""

from typing import Any, Dict, Optional


class DrrmError(Exception):
    """
    Base error carrying a stable machine code and the stage that raised it.

    Subclasses set ``code`` and ``default_stage``; callers may override the
    stage when the same error can surface from several places.
    """

    code: str = "DrrmError"
    default_stage: str = "core"

    def __init__(self, message: str, stage: Optional[str] = None, **context: Any):
        super().__init__(message)
        self.message = message
        self.stage = stage or self.default_stage
        self.context = context

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for structured logging and JSON output."""
        return {
            "stage": self.stage,
            "code": self.code,
            "message": self.message,
            **self.context,
        }

    def machine_line(self) -> str:
        """Single-line machine-parsable form: ``stage=<s> code=<c> msg=<m>``."""
        return format_machine_line(self.stage, self.code, self.message)

    def __str__(self) -> str:
        return self.message


def format_machine_line(stage: str, code: str, message: str) -> str:
    """Render the single-line error form used on CLI stderr."""
    flat = " ".join(str(message).split())
    return f"stage={stage} code={code} msg={flat}"


class ConfigError(DrrmError):
    code = "ConfigError"
    default_stage = "config"


class FormatError(DrrmError):
    """Malformed text file (mesh, uv, mu, stimulus, CSV)."""

    code = "FormatError"
    default_stage = "io"


class ChecksumMismatch(DrrmError):
    code = "ChecksumMismatch"
    default_stage = "io"


class MissingCaseFile(DrrmError):
    code = "MissingCaseFile"
    default_stage = "io"


class InvalidMesh(DrrmError):
    code = "InvalidMesh"
    default_stage = "mesh"


class InconsistentOrientation(DrrmError):
    code = "InconsistentOrientation"
    default_stage = "mesh"


class NonManifoldEdge(DrrmError):
    code = "NonManifoldEdge"
    default_stage = "mesh"


class MultipleComponents(DrrmError):
    code = "MultipleComponents"
    default_stage = "mesh"


class NotADisk(DrrmError):
    code = "NotADisk"
    default_stage = "flatten"


class SolverFailure(DrrmError):
    code = "SolverFailure"
    default_stage = "solver"


class DegenerateSourceFace(DrrmError):
    code = "DegenerateSourceFace"
    default_stage = "beltrami"


class ConformalSingularity(DrrmError):
    code = "ConformalSingularity"
    default_stage = "beltrami"


class ConstraintInsufficient(DrrmError):
    code = "ConstraintInsufficient"
    default_stage = "beltrami"


class MuOutOfRange(DrrmError):
    code = "MuOutOfRange"
    default_stage = "beltrami"


class NoProgress(DrrmError):
    code = "NoProgress"
    default_stage = "register"


class SigmaNonPositive(DrrmError):
    code = "SigmaNonPositive"
    default_stage = "prf"


class DegenerateSeries(DrrmError):
    code = "DegenerateSeries"
    default_stage = "prf"


class EmptyVertexSet(DrrmError):
    code = "EmptyVertexSet"
    default_stage = "evaluate"


class FlipCountMismatch(DrrmError):
    """The flip count of a stored registration disagrees with its map."""

    code = "FlipCountMismatch"
    default_stage = "evaluate"


class UnknownFormat(DrrmError):
    code = "UnknownFormat"
    default_stage = "report"


class PipelineStageError(DrrmError):
    """Constituent failure re-raised with the pipeline stage that was running."""

    code = "PipelineStageError"
    default_stage = "pipeline"

    def __init__(self, stage: str, cause: BaseException):
        cause_code = getattr(cause, "code", type(cause).__name__)
        super().__init__(str(cause), stage=stage, cause=cause_code)
        self.code = cause_code
        self.cause = cause
