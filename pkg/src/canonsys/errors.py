"""Exception types.  Every domain failure derives from :class:`CanonicalSystemError`."""


class CanonicalSystemError(ValueError):
    """Base class for domain errors (CLI exit code 1)."""


class InvalidHamiltonian(CanonicalSystemError):
    pass


class HamiltonianFormatError(InvalidHamiltonian):
    """Malformed Hamiltonian JSON file."""


class OutOfRange(CanonicalSystemError):
    pass


class DenominatorZero(CanonicalSystemError):
    """The m-function denominator vanished: z is an eigenvalue of the v-side problem."""


class NormalizationZero(CanonicalSystemError):
    """sin(alpha) + m cos(alpha) vanished."""


class NotTraceNormalized(CanonicalSystemError):
    pass


class ScheduleError(CanonicalSystemError):
    pass


class NotAnEigenvalue(CanonicalSystemError):
    pass


class OverflowGuard(CanonicalSystemError):
    """|lambda| * integral of |H| exceeds the safe propagation range."""


class InResolventSetError(CanonicalSystemError):
    """A resolvent was requested at an eigenvalue."""


class NotSelfAdjoint(CanonicalSystemError):
    pass


class IndefiniteMatrix(CanonicalSystemError):
    pass
