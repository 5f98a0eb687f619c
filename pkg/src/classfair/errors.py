"""Exception hierarchy shared by every module."""


class ClassFairError(Exception):
    """Base class for all package errors."""


class StructuralError(ClassFairError):
    """An instance or matching is malformed (unknown ids, broken partition, capacity overflow)."""


class DomainError(ClassFairError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapabilityError(ClassFairError):
    """An exhaustive computation would exceed its configured size guard."""


class ProtocolViolation(ClassFairError):
    """An online algorithm emitted an illegal decision.

    ``step`` is the zero-based arrival index at which the violation happened.
    """

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step
