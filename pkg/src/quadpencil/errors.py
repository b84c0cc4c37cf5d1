"""Exception taxonomy for the quadpencil pipeline."""


class QuadPencilError(Exception):
    """Base class for all library errors."""


class DimensionError(QuadPencilError, ValueError):
    """Operands have incompatible dimensions."""


class SymmetryError(QuadPencilError, ValueError):
    """A matrix expected to be symmetric is not."""


class SingularMatrixError(QuadPencilError, ValueError):
    """A matrix expected to be singular/invertible is not."""


class RankError(QuadPencilError, ValueError):
    """A matrix does not have the rank the operation requires."""


class PreconditionError(QuadPencilError, ValueError):
    """An operation precondition was violated by the caller."""


class HypothesisError(QuadPencilError):
    """The smoothness hypothesis (nonzero determinants, squarefree pencil
    determinant) does not hold for the given pair of forms."""

    def __init__(self, reason: str):
        super().__init__(f"smoothness hypothesis fails: {reason}")
        self.reason = reason


class RealInsolvableError(QuadPencilError):
    """The system has no nonzero real solution; carries a definite member
    of the pencil as witness."""

    def __init__(self, witness, signature):
        super().__init__(
            f"no real solution: lambda = {witness} gives a definite form "
            f"with signature [{signature.r},{signature.s}]"
        )
        self.witness = witness
        self.signature = signature


class OracleBudgetError(QuadPencilError):
    """The isotropic-vector search exhausted its enumeration budget."""

    def __init__(self, evaluated: int, radius: int, detail: str = ""):
        msg = f"isotropic search budget exhausted after {evaluated} points (box radius {radius})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.evaluated = evaluated
        self.radius = radius


class OracleExternalError(QuadPencilError):
    """An external isotropic solver misbehaved (malformed or wrong answer)."""

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message if not stderr else f"{message}\nstderr: {stderr}")
        self.stderr = stderr


class DefiniteFormError(QuadPencilError, ValueError):
    """The oracle was asked for an isotropic vector of a definite form."""


class NeedsMorePrecision(QuadPencilError):
    """Internal control flow: a certified sign/pivot decision could not be
    made at the current working precision.  Callers under the adaptive
    precision driver retry at higher precision; it must never escape the
    public API."""


class PrecisionExhaustedError(QuadPencilError):
    """The adaptive precision ladder reached its cap without certifying a
    required decision.  Signals a degenerate instance or a violated caller
    guarantee."""


class InternalInvariantError(QuadPencilError):
    """A mathematically impossible state was reached; indicates a bug."""
