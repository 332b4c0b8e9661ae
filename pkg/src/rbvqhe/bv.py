"""
Bernstein-Vazirani instances, oracles and full algorithm circuits.

Bit strings are plain ``str`` values of '0'/'1', big-endian: character ``i``
is bit ``i`` and maps to qubit ``i`` of its register.

Recursive (k=2) circuits use one fixed layout::

    register1 = 0 .. n-1
    register2 = n .. 2n-1
    ancilla1  = 2n        (target of U_s)
    ancilla2  = 2n + 1    (target of G)

Both ancillas are prepared in |-> with X then H.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import gates as g
from .circuit import Circuit, simulate
from .errors import InstanceError, NondeterministicOutcome
from .statevector import all_bitstrings, apply_gates, basis_state, marginal_probabilities

DETERMINISM_TOL = 1e-9


def _check_bits(bits: str, n: int | None = None, what: str = "bit string") -> str:
    if not isinstance(bits, str) or not bits or any(c not in "01" for c in bits):
        raise InstanceError(f"{what} {bits!r} is not a non-empty string of 0/1")
    if n is not None and len(bits) != n:
        raise InstanceError(f"{what} {bits!r} has length {len(bits)}, expected {n}")
    return bits


def dot(u: str, v: str) -> int:
    """Inner product mod 2."""
    return sum(a == b == "1" for a, b in zip(u, v)) % 2


def weight(u: str) -> int:
    """Hamming weight |u|."""
    return u.count("1")


def bit_and(u: str, v: str) -> str:
    return "".join("1" if a == b == "1" else "0" for a, b in zip(u, v))


def bit_not(u: str) -> str:
    return "".join("1" if c == "0" else "0" for c in u)


def ones(u: str) -> list[int]:
    return [i for i, c in enumerate(u) if c == "1"]


@dataclass(frozen=True)
class NonrecursiveInstance:
    n: int
    s: str

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InstanceError("n must be >= 1")
        _check_bits(self.s, self.n, "s")


@dataclass(frozen=True)
class RecursiveInstance:
    n: int
    s: str
    s_map: Mapping[str, str]
    g_table: Mapping[str, int]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InstanceError("n must be >= 1")
        _check_bits(self.s, self.n, "s")
        keys = all_bitstrings(self.n)
        missing_s = [k for k in keys if k not in self.s_map]
        missing_g = [k for k in keys if k not in self.g_table]
        if missing_s:
            raise InstanceError(f"s_map is missing entries for x1 in {missing_s}")
        if missing_g:
            raise InstanceError(f"g_table is missing entries for {missing_g}")
        for k, v in self.s_map.items():
            _check_bits(k, self.n, "s_map key")
            _check_bits(v, self.n, f"s_map[{k}]")
        for k, v in self.g_table.items():
            _check_bits(k, self.n, "g_table key")
            if v not in (0, 1):
                raise InstanceError(f"g_table[{k}] = {v!r} is not a bit")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "s": self.s,
            "s_map": dict(sorted(self.s_map.items())),
            "g_table": dict(sorted(self.g_table.items())),
        }

    @classmethod
    def from_dict(cls, data: dict) -> RecursiveInstance:
        try:
            return cls(int(data["n"]), data["s"], dict(data["s_map"]), {k: int(v) for k, v in data["g_table"].items()})
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InstanceError):
                raise
            raise InstanceError(f"malformed instance document: {exc!r}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RecursiveInstance:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Diagnostics:
    ok: bool
    violations: list[str] = field(default_factory=list)
    g_attains_both: bool = True
    g_balanced: bool = False
    g_linear: bool = False
    problems: list[str] = field(default_factory=list)


def validate_instance(inst: RecursiveInstance) -> Diagnostics:
    """Check g(s_map[x1]) == s·x1 for every x1, plus the non-consistency
    conditions: g must take both values and s must be non-zero.

    ``g_balanced`` reports whether g is exactly half zeros; ``g_linear``
    whether g(v) = s·v everywhere (the CNOT-only G case)."""
    violations = [x1 for x1 in all_bitstrings(inst.n) if inst.g_table[inst.s_map[x1]] != dot(inst.s, x1)]
    values = set(inst.g_table.values())
    zeros = sum(1 for v in inst.g_table.values() if v == 0)
    problems = []
    if violations:
        problems.append(f"g(s_x1) != s·x1 for x1 in {violations}")
    if values != {0, 1}:
        problems.append(f"g_table is constant {values.pop()}; it must attain both 0 and 1")
    if weight(inst.s) == 0:
        problems.append("s = 0...0 is degenerate")
    return Diagnostics(
        ok=not problems,
        violations=violations,
        g_attains_both=values == {0, 1},
        g_balanced=2 * zeros == len(inst.g_table),
        g_linear=all(inst.g_table[v] == dot(inst.s, v) for v in inst.g_table),
        problems=problems,
    )


def require_valid(inst: RecursiveInstance) -> None:
    diag = validate_instance(inst)
    if not diag.ok:
        raise InstanceError("; ".join(diag.problems))


def linear_g_table(s: str) -> dict[str, int]:
    return {v: dot(s, v) for v in all_bitstrings(len(s))}


# -- nonrecursive -------------------------------------------------------------

def oracle_nonrecursive(s: str) -> Circuit:
    """CNOT from qubit i to the ancilla (qubit n) for every s_i = 1."""
    _check_bits(s)
    n = len(s)
    return Circuit(n + 1, [g.cnot(i, n) for i in ones(s)], {"register1": list(range(n)), "ancilla1": [n]})


def build_nonrecursive_circuit(inst: NonrecursiveInstance) -> Circuit:
    n = inst.n
    reg = list(range(n))
    c = Circuit(n + 1, labels={"register1": reg, "ancilla1": [n]})
    c.extend([g.x(n), g.h(n)])
    c.extend(g.h(q) for q in reg)
    c.extend(oracle_nonrecursive(inst.s).gates)
    c.extend(g.h(q) for q in reg)
    return c


# -- recursive k=2 ------------------------------------------------------------

def recursive_labels(n: int) -> dict[str, list[int]]:
    return {
        "register1": list(range(n)),
        "register2": list(range(n, 2 * n)),
        "ancilla1": [2 * n],
        "ancilla2": [2 * n + 1],
    }


def oracle_general_k2(inst: RecursiveInstance) -> Circuit:
    """U_s from multi-controlled X gates: one MCX per (x1, j) with s_x1[j] = 1,
    controlled on register 1 matching x1 and on register-2 qubit j."""
    require_valid(inst)
    n = inst.n
    c = Circuit(2 * n + 2, labels=recursive_labels(n))
    for x1 in all_bitstrings(n):
        for j in ones(inst.s_map[x1]):
            c.append(g.mcx(list(range(n)) + [n + j], 2 * n, [int(b) for b in x1] + [1]))
    return c


def oracle_g(inst: RecursiveInstance) -> Circuit:
    """Oracle G on register 2 -> ancilla2.

    CNOTs when g(v) = s·v; otherwise one MCX per v with g(v) = 1 (not RCC)."""
    require_valid(inst)
    n = inst.n
    anc2 = 2 * n + 1
    c = Circuit(2 * n + 2, labels=recursive_labels(n))
    if validate_instance(inst).g_linear:
        c.extend(g.cnot(n + i, anc2) for i in ones(inst.s))
    else:
        for v in all_bitstrings(n):
            if inst.g_table[v]:
                c.append(g.mcx([n + i for i in range(n)], anc2, [int(b) for b in v]))
    return c


def recursive_stages(inst: RecursiveInstance, us: Circuit | None = None) -> list[tuple[str, Circuit]]:
    """The recursive algorithm as labelled segments, in execution order."""
    n = inst.n
    if us is None:
        us = oracle_general_k2(inst)
    elif us.num_qubits != 2 * n + 2:
        raise InstanceError(f"U_s circuit has {us.num_qubits} qubits, expected {2 * n + 2}")
    labels = recursive_labels(n)
    reg1, reg2 = labels["register1"], labels["register2"]
    anc1, anc2 = 2 * n, 2 * n + 1

    def seg(gate_list) -> Circuit:
        return Circuit(2 * n + 2, list(gate_list), labels)

    return [
        ("prepare_ancillas", seg([g.x(anc1), g.h(anc1), g.x(anc2), g.h(anc2)])),
        ("hadamard_all", seg(g.h(q) for q in reg1 + reg2)),
        ("us_first", seg(us.gates)),
        ("hadamard_register2_a", seg(g.h(q) for q in reg2)),
        ("g_oracle", seg(oracle_g(inst).gates)),
        ("hadamard_register2_b", seg(g.h(q) for q in reg2)),
        ("us_second", seg(us.gates)),
        ("hadamard_register1", seg(g.h(q) for q in reg1)),
    ]


def build_recursive_circuit(inst: RecursiveInstance, us: Circuit | None = None) -> Circuit:
    """Full k=2 circuit. ``us`` selects the U_s oracle (defaults to the
    general MCX construction; pass an RCC Toffoli oracle to use that)."""
    require_valid(inst)
    out = Circuit(2 * inst.n + 2, labels=recursive_labels(inst.n))
    for _, segment in recursive_stages(inst, us):
        out.extend(segment.gates)
    return out


# -- solving ------------------------------------------------------------------

def register_distribution(circuit: Circuit, register: str = "register1") -> dict[str, float]:
    qubits = circuit.labels.get(register)
    if not qubits:
        raise InstanceError(f"circuit has no {register!r} label")
    probs = marginal_probabilities(simulate(circuit), qubits)
    k = len(qubits)
    return {format(i, f"0{k}b"): float(p) for i, p in enumerate(probs) if p > 1e-15}


def solve_with_probability(circuit: Circuit) -> tuple[str, float]:
    dist = register_distribution(circuit)
    bits = max(dist, key=dist.get)
    return bits, dist[bits]


def solve(problem) -> str:
    """Measure register 1 of a built circuit (or of the general circuit for an
    instance) and return the outcome, which must be deterministic."""
    if isinstance(problem, RecursiveInstance):
        circuit = build_recursive_circuit(problem)
    elif isinstance(problem, NonrecursiveInstance):
        circuit = build_nonrecursive_circuit(problem)
    else:
        circuit = problem
    bits, p = solve_with_probability(circuit)
    if p < 1 - DETERMINISM_TOL:
        raise NondeterministicOutcome(
            f"top outcome {bits} has probability {p:.6f}; the construction is invalid", bits, p
        )
    return bits


def phase_table(us: Circuit, n: int) -> dict[tuple[str, str], complex]:
    """Phase U_s puts on |x1>|x2>|->|-> for each basis pair, by simulation."""
    out = {}
    for x1 in all_bitstrings(n):
        for x2 in all_bitstrings(n):
            prep = basis_state(x1 + x2 + "11")
            prep = apply_gates(prep, [g.h(2 * n), g.h(2 * n + 1)])
            after = apply_gates(prep, us.gates)
            out[(x1, x2)] = complex(np.vdot(prep.amplitudes, after.amplitudes))
    return out


__all__ = [
    "Diagnostics",
    "NonrecursiveInstance",
    "RecursiveInstance",
    "bit_and",
    "bit_not",
    "build_nonrecursive_circuit",
    "build_recursive_circuit",
    "dot",
    "linear_g_table",
    "ones",
    "oracle_g",
    "oracle_general_k2",
    "oracle_nonrecursive",
    "phase_table",
    "recursive_labels",
    "recursive_stages",
    "register_distribution",
    "require_valid",
    "solve",
    "solve_with_probability",
    "validate_instance",
    "weight",
]
