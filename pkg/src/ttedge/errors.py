"""Exception types shared across the library."""


class TTEdgeError(Exception):
    """Base class for all library errors."""


class ElementCountMismatch(TTEdgeError):
    """Reshape target holds a different number of elements than the source."""


class ShapeError(TTEdgeError):
    """An array has an extent or rank that an operation cannot accept."""


class DimMismatch(TTEdgeError):
    """Operand dimensions are incompatible for a matrix product or update."""


class ContractDimMismatch(TTEdgeError):
    """Trailing/leading extents of contraction operands do not agree."""


class ShapeMismatch(TTEdgeError):
    """Two tensors expected to share a shape do not."""


class EmptyTensor(TTEdgeError):
    """A pipeline input carries no elements."""


class DegenerateBeta(TTEdgeError):
    """Reflector update requested with q == 0; the column is already zero."""


class BadDims(TTEdgeError):
    """Threshold formula needs at least two tensor dimensions."""


class RankChainBroken(TTEdgeError):
    """Core list violates the boundary or adjacent-rank conditions."""


class SpmOverflow(TTEdgeError):
    """Scratchpad residency would exceed the configured capacity."""


class PhaseSetMismatch(TTEdgeError):
    """Two report lists do not cover the same set of phases."""


class FormatError(TTEdgeError):
    """A binary tensor or core-archive file is malformed."""


class ConfigError(TTEdgeError):
    """A machine configuration document is invalid."""


class NoConvergence(TTEdgeError):
    """Iterative diagonalization exceeded its sweep budget."""

    def __init__(self, sweeps: int, message: str | None = None):
        self.sweeps = sweeps
        super().__init__(message or f"no convergence after {sweeps} sweeps")
