from typing import Any, Dict, List, Optional, Sequence, Tuple


class SymspaceError(ValueError):
    """Base class for every error raised by the symspace package"""


class InputError(SymspaceError):
    """Malformed or invalid input document"""

    def __init__(self, message: str, location: Optional[Sequence[Any]] = None):
        self.location = tuple(location) if location else ()
        if self.location:
            message = f"{'.'.join(str(part) for part in self.location)}: {message}"
        super().__init__(message)


class DimensionMismatchError(SymspaceError):
    """Operands with incompatible shapes"""


class SingularMatrixError(SymspaceError):
    """A matrix that had to be invertible is not"""

    def __init__(self, message: str, rank: int, size: int):
        self.rank = rank
        self.size = size
        super().__init__(f"{message} (rank {rank} < {size})")


class NotSymplecticError(SymspaceError):
    """A matrix is not in the symplectic algebra or a form is not symplectic"""


class DegenerateNormalSpaceError(SymspaceError):
    """The a_i do not span a symplectic subspace of the expected dimension"""

    def __init__(self, message: str, rank: int, expected: int):
        self.rank = rank
        self.expected = expected
        super().__init__(f"{message}: normal space degenerate (rank {rank}, expected {expected})")


class FamilyNotClosedError(SymspaceError):
    """The stabilization equations have no solution"""

    def __init__(self, message: str, residuals: Optional[Dict[str, Any]] = None):
        self.residuals = residuals or {}
        super().__init__(f"family not closed: {message}")


class NotNilpotentError(SymspaceError):
    """A matrix expected to be nilpotent has a nonzero power at the dimension"""


class OutOfClassError(SymspaceError):
    """Input is valid but outside the class a construction is stated for"""


class HypothesisError(SymspaceError):
    """The hypotheses of a verified statement do not hold for the input"""


class InconsistentStructureError(SymspaceError):
    """Structure constants contradict their own invariants"""


class AlgebraClosureError(SymspaceError):
    """A spanning set is not closed under the bracket"""

    def __init__(self, message: str, pair: Tuple[int, int]):
        self.pair = pair
        super().__init__(f"{message} (pair {pair})")


class ConsistencyError(SymspaceError):
    """Two independent computations of the same quantity disagree"""

    def __init__(self, message: str, details: Optional[List[Any]] = None):
        self.details = details or []
        super().__init__(message)
