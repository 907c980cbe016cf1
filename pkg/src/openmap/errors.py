"""Exception types raised across the package.

Every class derives from ``ValueError`` so callers that only care about bad
input can catch one thing.
"""


class OpenMapError(ValueError):
    """Base class for all package errors."""


class DimensionError(OpenMapError):
    """Matrix shapes are inconsistent with each other or with a HilbertSpec."""


class ParameterError(OpenMapError):
    """A scalar parameter is out of its admissible range."""


class ValidationError(OpenMapError):
    """An operator or state violates a structural contract (hermiticity, trace, ...)."""


class ContractError(OpenMapError):
    """A precondition of an operation was violated (e.g. non-Hermitian generator)."""


class UnsupportedInputError(OpenMapError):
    """Input is valid in general but not supported by this operation."""


class DegenerateEnvironmentError(OpenMapError):
    """The environment Hamiltonian has zero spectral spread."""


class ScenarioError(OpenMapError):
    """A scenario document could not be parsed or validated."""
