"""Exception types shared across the package."""


class ProcEmuError(Exception):
    """Base class for all package errors."""


class CapabilityError(ProcEmuError):
    """Requested problem size or feature is beyond what a simulator supports."""


class DataError(ProcEmuError):
    """Dataset content is inconsistent or incomplete."""


class TrainingDivergence(ProcEmuError):
    """A loss or parameter became non-finite during training."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class CheckpointMismatch(ProcEmuError):
    """A checkpoint does not belong to the model it is being loaded into."""


class GridRangeError(ProcEmuError):
    """Quadrature grid captures too little of the outcome distribution."""
