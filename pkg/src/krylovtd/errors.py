"""Exception types raised across the package."""


class KrylovError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(KrylovError):
    """A run configuration is malformed or inconsistent.

    Raised while parsing config dictionaries or CLI input, before any
    numerics start. The CLI maps this to exit code 2.
    """


class StructuralError(KrylovError):
    """An algorithmic invariant that should hold by construction failed.

    Examples: a Krylov basis lost orthonormality beyond tolerance, or a
    recursion produced a negative norm. Indicates a genuine numerical
    breakdown rather than bad user input.
    """


class NumericalError(KrylovError):
    """A numerical tolerance was exceeded during a computation."""


class DegeneracyError(KrylovError):
    """An instantaneous eigenframe could not be tracked through a node.

    Raised when adjacent eigenvalues come closer than the resolvable gap
    at some time node, so branch tracking would be ambiguous there.
    """
