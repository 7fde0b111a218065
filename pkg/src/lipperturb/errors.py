"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`LipPerturbError`, so callers (the CLI in particular) can separate
mathematical/usage failures from genuine bugs.
"""


class LipPerturbError(Exception):
    """Base class for all library errors."""


class StructuralError(LipPerturbError, ValueError):
    """Dimension or space mismatch between objects that must agree."""


class DomainError(LipPerturbError, ValueError):
    """A constant lies outside the range a formula is valid for.

    ``parameter`` names the offending input so reports can point at it.
    """

    def __init__(self, message: str, parameter: str | None = None):
        super().__init__(message)
        self.parameter = parameter


class UnsupportedConfigurationError(LipPerturbError, ValueError):
    pass


class DegenerateSampleError(LipPerturbError, ValueError):
    pass


class InconsistentPairError(LipPerturbError, ValueError):
    pass


class NotVerifiableError(LipPerturbError):
    """No admissible perturbation constants exist on the sample."""


class PreconditionError(LipPerturbError, ValueError):
    pass


class DegenerateNormError(LipPerturbError, ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class NonconvergenceError(LipPerturbError):
    """Raised by solvers; ``certificate`` holds the best iterate found."""

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate
