"""Exception hierarchy.

Input problems (bad files, malformed models) raise InputError; numeric
identification steps raise IdentificationError subclasses that the pipeline
catches and converts into per-pair / per-candidate diagnostics; violated
internal invariants raise InternalInvariantError and are never swallowed.
"""


class LvcdError(Exception):
    pass


class InputError(LvcdError):
    """Malformed user input: files, dimensions, bad parameter values."""


class InternalInvariantError(LvcdError):
    """A condition the algorithm guarantees was violated. Exit code 2."""


class IdentificationError(LvcdError):
    """Recoverable numeric failure in an identification primitive."""


class LatentBoundError(IdentificationError):
    """No confounder count up to ell_max fits the observed rank pattern."""


class DegeneratePolynomialError(IdentificationError):
    """Leading coefficient of the root polynomial is numerically zero."""


class NoisyRootsError(IdentificationError):
    """Root estimates have non-negligible imaginary parts."""


class IllConditionedSystemError(IdentificationError):
    """Vandermonde recovery system exceeds the condition number cap."""


class UndeterminedTestError(IdentificationError):
    """Single-confounder criterion denominator below floor (tri-state)."""


class DegenerateTriadError(IdentificationError):
    """Triad denominator covariance below floor."""


class CyclicEvidenceError(IdentificationError):
    """Every member of a cluster has a within-cluster ancestor."""


class NoSourceError(IdentificationError):
    """No latent source found for a dependent component."""
