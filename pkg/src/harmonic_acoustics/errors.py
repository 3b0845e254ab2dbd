"""Exception and warning types raised by the solvers."""


class AcousticsError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class AliasError(AcousticsError):
    code = "alias"


class ResonanceError(AcousticsError):
    code = "resonance"

    def __init__(self, message, modes=()):
        super().__init__(message)
        self.modes = list(modes)


class NoConvergence(AcousticsError):
    code = "no_convergence"

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)

    def to_dict(self):
        d = super().to_dict()
        d["history"] = self.history
        return d


class SingularSaddle(AcousticsError):
    code = "singular_saddle"


class IncompatibleData(AcousticsError):
    code = "incompatible_data"


class UnsupportedOrder(AcousticsError):
    code = "unsupported_order"


class NoBracket(AcousticsError):
    code = "no_bracket"


class GridMismatch(AcousticsError):
    code = "grid_mismatch"


class LinearSolveFailure(AcousticsError):
    code = "linear_solve_failure"


class BlowupDetected(AcousticsError):
    code = "blowup"


class ConfigError(AcousticsError):
    code = "config"


class NotStationary(UserWarning):
    """The reference run did not settle to a periodic state."""


class RegularityWarning(UserWarning):
    """A right-hand side depends on poorly resolved derivatives."""
