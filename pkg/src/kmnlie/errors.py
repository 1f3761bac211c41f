"""Exception hierarchy shared by all kmnlie modules."""


class KmnError(Exception):
    """Base class for every error raised by the package."""


# kernel
class ParseError(KmnError, SyntaxError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownSymbol(KmnError, NameError):
    def __init__(self, name, offset=None):
        where = "" if offset is None else f" at offset {offset}"
        super().__init__(f"unknown symbol {name!r}{where}")
        self.name = name
        self.offset = offset


class OrderOverflow(KmnError):
    pass


class CyclicSubstitution(KmnError):
    pass


class DomainError(KmnError, ValueError):
    pass


class EvalDomain(DomainError):
    pass


class UnboundSymbol(KmnError, NameError):
    pass


# prolongation
class AmbiguousSpan(KmnError):
    pass


# classification
class LinearEquation(KmnError, ValueError):
    pass


class InvalidSpec(KmnError, ValueError):
    pass


class FamilyMismatch(KmnError):
    pass


class NonInvertibleParameterization(KmnError):
    pass


class DegenerateResult(KmnError):
    pass


class NotNormalizable(KmnError):
    pass


# reduction
class UnsupportedGenerator(KmnError):
    pass


class TrivialOrbit(KmnError):
    pass


class ResidualHasX(KmnError):
    pass


class NonSeparable(KmnError):
    pass


class GuardViolation(KmnError, ValueError):
    pass


class SpecMismatch(KmnError, ValueError):
    pass


class DegenerateScaling(KmnError, ValueError):
    pass


# numerics
class StepUnderflow(KmnError):
    def __init__(self, message, where=None, state=None):
        super().__init__(message)
        self.where = where
        self.state = state


class NonFiniteState(KmnError):
    def __init__(self, message, where=None, state=None):
        super().__init__(message)
        self.where = where
        self.state = state


class CFLViolation(KmnError, ValueError):
    pass


class ExtrapolationRequest(KmnError, ValueError):
    pass


class NoOverlap(KmnError, ValueError):
    pass
