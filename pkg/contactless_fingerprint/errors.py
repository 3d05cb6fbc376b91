"""Exception hierarchy.

Library code raises these; only the command-line entry point turns them into
messages and exit codes. Exit codes are stable and documented in docs/formats.md.
"""


class FingerprintError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ParameterError(FingerprintError, ValueError):
    """An argument violates an operation's precondition."""

    exit_code = 3


class IngestionError(FingerprintError):
    """A dataset or image file could not be read in the expected layout."""

    exit_code = 4

    def __init__(self, message: str, path=None):
        self.path = path
        super().__init__(f"{message}: {path}" if path is not None else message)


class OverwriteRefusedError(FingerprintError):
    """Target directory already holds data."""

    exit_code = 5


class EnrollmentConflictError(FingerprintError):
    """User id is already enrolled."""

    exit_code = 6


class IdentityNotFoundError(FingerprintError, LookupError):
    """Claimed user id has no template."""

    exit_code = 7


class CalibrationError(FingerprintError):
    """Score bounds cannot be derived from the calibration set."""

    exit_code = 8


class TrainingError(FingerprintError):
    """Training could not proceed."""

    exit_code = 9


class NonFiniteError(TrainingError):
    """A tensor went NaN or infinite during training."""

    def __init__(self, tensor_name: str, stage: str):
        self.tensor_name = tensor_name
        self.stage = stage
        super().__init__(f"non-finite values in {stage} tensor '{tensor_name}'")


class CheckpointError(FingerprintError):
    """Checkpoint file is malformed or does not fit the network."""

    exit_code = 10


class ProtocolError(FingerprintError):
    """Evaluation protocol or metric input is invalid."""

    exit_code = 11


class ShapeError(FingerprintError, ValueError):
    """Tensor shape does not fit a network layer."""

    exit_code = 12

    def __init__(self, layer: str, expected, actual):
        self.layer = layer
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"{layer}: expected input shape {self.expected}, got {self.actual}")
