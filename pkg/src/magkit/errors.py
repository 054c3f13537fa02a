"""Exception hierarchy shared by every magkit module.

Each class carries the CLI exit code it maps to (1 usage, 2 data, 3 numerical).
"""


class MagkitError(Exception):
    exit_code = 2


class InputError(MagkitError, ValueError):
    """Malformed or out-of-contract input."""

    exit_code = 2


class InsufficientDataError(InputError):
    pass


class DuplicatePointError(InputError):
    """Two points share identical coordinates where distinctness is required."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class NumericalError(MagkitError, ArithmeticError):
    exit_code = 3


class SingularMatrixError(NumericalError):
    """A factorization hit a non-positive (or zero) pivot.

    Attributes:
        pivot_index: position of the failing pivot, or None when unknown.
        pivot_value: value of that pivot at failure time, or None.
        indices: offending point indices when the cause is known (duplicates).
    """

    def __init__(self, message, pivot_index=None, pivot_value=None, indices=()):
        super().__init__(message)
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value
        self.indices = tuple(indices)


class DegenerateAugmentationError(SingularMatrixError):
    """The new point's Schur scalar is not positive: it duplicates a cached point."""


class NotScatteredError(NumericalError):
    """Neumann expansion requested on a space that is not scattered."""


class DisconnectedGraphError(InputError):
    def __init__(self, message, components=()):
        super().__init__(message)
        self.components = [list(c) for c in components]


class AUCUndefinedError(InputError):
    pass


class NoQueryError(MagkitError):
    """Active learning has no unlabeled point left to query."""


class ChecksumError(MagkitError):
    pass


class OfflineError(MagkitError):
    pass
