"""Exception types shared across the package."""


class DhymError(Exception):
    """Base class for package-level errors."""


class GridError(DhymError):
    """Malformed grid request (too few points, anisotropic spacing, ...)."""


class ConfigError(DhymError):
    """Invalid problem configuration; message names the offending field."""


class NonHermitianError(DhymError):
    """Matrix input exceeded the Hermitian-symmetry tolerance."""


class PhaseBranchError(DhymError):
    """Lagrangian phase left the principal branch (0, pi)."""


class StabilityCollapseError(DhymError):
    """Explicit step kept violating the phase guard after repeated halving."""


class NewtonStallError(DhymError):
    """Newton backtracking damped below its floor without progress."""


class LinearSolveError(DhymError):
    """Inner linear solver failed to reach the requested residual."""


class SnapshotFormatError(DhymError):
    """Snapshot file violates the binary layout."""
