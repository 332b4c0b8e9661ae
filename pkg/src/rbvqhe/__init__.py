"""Recursive Bernstein-Vazirani circuits with reduced Toffoli cost, and their
evaluation under T-gate-teleportation quantum homomorphic encryption."""
from .bv import (
    NonrecursiveInstance,
    RecursiveInstance,
    build_nonrecursive_circuit,
    build_recursive_circuit,
    solve,
    validate_instance,
)
from .circuit import Circuit, decompose_to_clifford_t, deserialize, serialize, simulate, t_count
from .errors import (
    CircuitParseError,
    GateError,
    InstanceError,
    NondeterministicOutcome,
    ProtocolError,
    RbvError,
    ResourceLimitError,
    SpecError,
    UnsupportedGateError,
)
from .gates import Gate, GateKind
from .protocol import run_protocol
from .qhe import Mode, PauliKey, decrypt, evaluate, keygen, qotp_decrypt, qotp_encrypt, run_scheme
from .rcc import RccSpec, Variant, cost_report, is_rcc, synthesize_full, synthesize_us
from .statevector import Statevector

__all__ = [
    "Circuit", "CircuitParseError", "Gate", "GateError", "GateKind", "InstanceError", "Mode",
    "NondeterministicOutcome", "NonrecursiveInstance", "PauliKey", "ProtocolError", "RbvError",
    "RccSpec", "RecursiveInstance", "ResourceLimitError", "SpecError", "Statevector",
    "UnsupportedGateError", "Variant", "build_nonrecursive_circuit", "build_recursive_circuit",
    "cost_report", "decompose_to_clifford_t", "decrypt", "deserialize", "evaluate", "is_rcc",
    "keygen", "qotp_decrypt", "qotp_encrypt", "run_protocol", "run_scheme", "serialize",
    "simulate", "solve", "synthesize_full", "synthesize_us", "t_count", "validate_instance",
]
