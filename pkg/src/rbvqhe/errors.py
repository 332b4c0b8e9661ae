"""Exception hierarchy shared across the package."""


class RbvError(Exception):
    """Base class for all package errors."""


class ResourceLimitError(RbvError, MemoryError):
    """Requested statevector would exceed the configured qubit cap."""


class GateError(RbvError, ValueError):
    """Malformed gate: bad arity, duplicate operands, or out-of-range index."""


class ImpossibleBranchError(RbvError, ValueError):
    """A forced measurement branch has (numerically) zero probability."""


class CircuitParseError(RbvError, ValueError):
    """Serialized circuit text could not be parsed."""


class InstanceError(RbvError, ValueError):
    """A BV problem instance is incomplete or malformed."""


class SpecError(RbvError, ValueError):
    """An RCC spec violates its lemma's preconditions."""


class NondeterministicOutcome(RbvError):
    """A circuit that should solve deterministically did not."""

    def __init__(self, message: str, bits: str, probability: float):
        super().__init__(message)
        self.bits = bits
        self.probability = probability


class UnsupportedGateError(RbvError, ValueError):
    """Gate kind not supported by the operation (e.g. MCX in Clifford+T)."""


class ProtocolError(RbvError):
    """Client/server message flow or transcript misuse."""
