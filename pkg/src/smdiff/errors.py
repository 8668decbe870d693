"""Exception hierarchy for smdiff."""


class SmdiffError(Exception):
    """Base class for all smdiff errors."""


class DimensionMismatch(SmdiffError):
    """Input sizes are inconsistent with each other or with the declared order."""


class NotConjugateClosed(SmdiffError):
    """A root multiset is not closed under complex conjugation."""


class ConvergenceFailure(SmdiffError):
    """An iterative routine did not reach its tolerance within its budget."""


class InvalidOrder(SmdiffError):
    """A differentiation or filtering order is out of its admissible range."""


class SingularMatrix(SmdiffError):
    """A matrix required to be invertible is singular (or numerically so)."""


class UnstableRoot(SmdiffError):
    """A continuous-time design root has a non-negative real part."""


class UnstableMatrix(SmdiffError):
    """A matrix required to be Schur stable has spectral radius >= 1."""


class InvalidQ(SmdiffError):
    """The Lyapunov weight matrix violates the minimum-eigenvalue requirement."""


class NonFiniteState(SmdiffError):
    """A differentiator state entry left the finite range (divergence)."""


class NoGroundTruth(SmdiffError):
    """Error metrics were requested on a trace that carries no ground truth."""


class Diverged(SmdiffError):
    """A simulation run aborted; ``step`` is the sample index at which it blew up."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"run diverged at step {step}")


class UnknownPreset(SmdiffError):
    """The requested simulation preset name does not exist."""


class ConfigError(SmdiffError):
    """A CLI configuration document failed validation; message names the field."""
