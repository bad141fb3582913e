"""Exception hierarchy shared across the package."""


class IndexLabError(Exception):
    """Base class for all package errors."""


class GridError(IndexLabError):
    """Degenerate or malformed discretization grid."""


class DimensionError(IndexLabError):
    """Operation applied to a grid of unsupported dimension."""


class StructuralError(IndexLabError):
    """Mismatched grids or malformed field data."""


class CompatibilityError(IndexLabError):
    """Commutator or Hermiticity condition violated beyond tolerance."""


class DegeneracyError(IndexLabError):
    """Eigenvalues of a unitarized field are not within tolerance of +/-1."""


class DiscontinuityError(IndexLabError):
    """Rank profile jumps between adjacent grid points."""


class SingularityError(IndexLabError):
    """Matrix too close to singular to unitarize."""

    def __init__(self, message, min_singular_value=None):
        super().__init__(message)
        self.min_singular_value = min_singular_value


class CoverageError(IndexLabError):
    """Invertibility neighborhoods fail to cover the collar."""


class PartitionError(IndexLabError):
    """Partition of unity violates its support constraints."""


class SingularLoopError(IndexLabError):
    """Loop sample hits (or nearly hits) zero."""


class RefinementError(IndexLabError):
    """Loop undersampled: consecutive phase jump of pi or more."""


class FrameDegeneracyError(IndexLabError):
    """Plaquette link determinant too close to zero; refine the grid."""


class InvertibilityError(IndexLabError):
    """Field required to be invertible has a near-zero eigenvalue."""


class DecompositionError(IndexLabError):
    """Clutching decomposition span check failed."""


class TruncationError(IndexLabError):
    """Potential not saturated at the domain walls."""


class DecayMarginError(IndexLabError):
    """Domain too small to resolve exponentially decaying zero modes."""


class ConvergenceError(IndexLabError):
    """Iterative eigensolver failed to converge."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class IndeterminateCountError(IndexLabError):
    """No spectral gap separates candidate zero modes; refine the grid."""


class InstabilityError(IndexLabError):
    """Index disagrees between determinate resolutions."""


class ScenarioError(IndexLabError):
    """Scenario configuration failed to parse or validate."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column
