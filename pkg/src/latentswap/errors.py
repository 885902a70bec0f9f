"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1, data
problems exit 2, runtime/numeric problems exit 3.
"""


class LatentSwapError(Exception):
    """Base class for all package errors."""


class ConfigError(LatentSwapError):
    """Invalid or inconsistent configuration (exit code 1)."""


class ShapeError(ConfigError):
    """Array shapes incompatible with the requested operation."""


class ContractError(LatentSwapError):
    """A documented precondition was violated by the caller."""


class DataError(LatentSwapError):
    """Dataset-level problem, e.g. an empty attribute pool (exit code 2)."""


class AttributeFileParseError(DataError):
    """Malformed attribute annotation file; carries the offending line number."""

    def __init__(self, message, line_number):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class AlignmentError(DataError):
    """Degenerate landmarks that admit no similarity transform."""


class NumericsError(LatentSwapError):
    """A numerical routine left its validated accuracy envelope (exit code 3)."""


class TrainingDivergedError(NumericsError):
    """A loss term became non-finite; names the offending term."""

    def __init__(self, term, value):
        super().__init__(f"training diverged: {term} = {value}")
        self.term = term


class CheckpointError(LatentSwapError):
    """Unreadable, truncated or inconsistent checkpoint; names the artifact."""
