"""Exception types shared across the pipeline."""


class FiggroundError(Exception):
    """Base class for all package errors."""


class ParseError(FiggroundError):
    """Malformed or unusable input data."""


class ConfigError(FiggroundError):
    """Invalid or incomplete pipeline configuration."""


class SchemaError(FiggroundError):
    """A stage received an artifact with the wrong schema version."""


class ModelFormatError(FiggroundError):
    """Model serialization is truncated, corrupt, or version-incompatible."""


class GenerationError(FiggroundError):
    """A synthetic recipe cannot be realized (e.g. buildings cannot fit)."""


class StageError(FiggroundError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
