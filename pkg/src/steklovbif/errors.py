"""Exception hierarchy shared by all modules.

Every error carries a machine-readable ``reason`` code (stable snake_case
string) and an ``exit_code`` used by the command line front end:
1 for violated preconditions / bad inputs, 2 for numerical failures.
"""


class SteklovBifError(Exception):
    """Base class for all package errors."""

    reason = "error"
    exit_code = 1

    def payload(self):
        return {"error": self.reason, "detail": str(self)}


class PreconditionError(SteklovBifError):
    """An operation was called outside its contract."""

    reason = "precondition"
    exit_code = 1


class NumericalError(SteklovBifError):
    """A numerical procedure failed to converge or lost accuracy."""

    reason = "numerical"
    exit_code = 2


class InvalidMeshError(PreconditionError):
    reason = "invalid_mesh"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class AssemblyError(PreconditionError):
    reason = "assembly_failure"


class EigensolverError(NumericalError):
    reason = "eigensolver_failure"


class CutoffExhaustedError(PreconditionError):
    """The closed-factor spectrum is too short for the requested enumeration."""

    reason = "cutoff_exhausted"


class DegenerateInstantError(PreconditionError):
    """Morse index requested at (or too close to) a degeneracy instant."""

    reason = "degenerate_instant"


class NoDegeneracyError(PreconditionError):
    """Degeneracy instants do not exist (boundary mean curvature <= 0)."""

    reason = "no_degeneracy_instants"


class HhatIsSteklovEigenvalueError(PreconditionError):
    """The rescaled mean curvature sits in the Steklov spectrum; the operator
    is degenerate for every t and no certification is attempted."""

    reason = "hhat_in_steklov_spectrum"


class BracketError(NumericalError):
    reason = "bracket_exhausted"


class EpsilonExhaustedError(NumericalError):
    reason = "epsilon_exhausted"


class ConfigError(PreconditionError):
    reason = "bad_config"
