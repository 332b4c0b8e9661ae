"""Circuit IR: gate lists, Clifford+T lowering, T-counting and JSON I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import gates as g
from .errors import CircuitParseError, GateError, UnsupportedGateError
from .gates import Gate, GateKind
from .statevector import Statevector, apply_gates, new_zero_state

T_PER_TOFFOLI = 7
CNOT_PER_TOFFOLI = 6


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)
    labels: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise GateError("a circuit needs at least one qubit")
        self.gates = list(self.gates)
        for gate in self.gates:
            self._check(gate)

    def _check(self, gate: Gate) -> None:
        for q in gate.qubits:
            if q >= self.num_qubits:
                raise GateError(f"{gate}: qubit {q} out of range for {self.num_qubits} qubits")

    def append(self, gate: Gate) -> Circuit:
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, gate_list: Iterable[Gate]) -> Circuit:
        for gate in gate_list:
            self.append(gate)
        return self

    def __add__(self, other: Circuit) -> Circuit:
        if other.num_qubits != self.num_qubits:
            raise GateError("cannot concatenate circuits of different width")
        return Circuit(self.num_qubits, self.gates + other.gates, {**self.labels, **other.labels})

    def __len__(self) -> int:
        return len(self.gates)

    def inverse(self) -> Circuit:
        return Circuit(self.num_qubits, [gate.inverse() for gate in reversed(self.gates)], dict(self.labels))

    def count(self, *kinds: GateKind) -> int:
        return sum(1 for gate in self.gates if gate.kind in kinds)

    def listing(self) -> str:
        """Human-readable one-gate-per-line listing."""
        lines = [f"# {self.num_qubits} qubits, {len(self.gates)} gates"]
        for name, qubits in sorted(self.labels.items()):
            lines.append(f"# {name}: {qubits}")
        lines += [f"{i:4d}  {gate}" for i, gate in enumerate(self.gates)]
        return "\n".join(lines)


def simulate(circuit: Circuit, state: Statevector | None = None) -> Statevector:
    if state is None:
        state = new_zero_state(circuit.num_qubits)
    elif state.num_qubits != circuit.num_qubits:
        raise GateError(f"state has {state.num_qubits} qubits, circuit has {circuit.num_qubits}")
    return apply_gates(state, circuit.gates)


# -- Clifford+T lowering ------------------------------------------------------

def decompose_toffoli(gate: Gate) -> list[Gate]:
    """Lower a Toffoli to H/T/Tdg/CNOT (7 T-type gates, 6 CNOTs, 2 H).

    Negated controls are framed by X gates, which adds no T gates.
    """
    if gate.kind is not GateKind.TOFFOLI:
        raise UnsupportedGateError(f"decompose_toffoli expects TOFFOLI, got {gate.kind}")
    a, b = gate.controls
    c = gate.target
    core = [
        g.h(c),
        g.cnot(b, c), g.tdg(c),
        g.cnot(a, c), g.t(c),
        g.cnot(b, c), g.tdg(c),
        g.cnot(a, c), g.t(b), g.t(c),
        g.h(c),
        g.cnot(a, b), g.t(a), g.tdg(b),
        g.cnot(a, b),
    ]
    frame = [g.x(q) for q, p in zip(gate.controls, gate.polarity) if p == 0]
    return frame + core + frame


def _lower(gate: Gate) -> list[Gate]:
    if gate.kind is GateKind.MCX:
        raise UnsupportedGateError(f"{gate}: MCX has no Clifford+T lowering here")
    if gate.kind is GateKind.TOFFOLI:
        return decompose_toffoli(gate)
    if gate.kind is GateKind.CNOT and gate.polarity == (0,):
        c = gate.controls[0]
        return [g.x(c), g.cnot(c, gate.target), g.x(c)]
    return [gate]


def decompose_to_clifford_t(circuit: Circuit) -> Circuit:
    out = Circuit(circuit.num_qubits, labels=dict(circuit.labels))
    for gate in circuit.gates:
        out.extend(_lower(gate))
    return out


def is_clifford_t(circuit: Circuit) -> bool:
    return all(
        (gate.kind in g.CLIFFORD or gate.kind in g.T_KINDS) and gate.polarity in ((), (1,))
        for gate in circuit.gates
    )


@dataclass(frozen=True)
class TCountReport:
    t_gates: int
    toffolis_before_decomposition: int
    mcx_before_decomposition: int
    cnots: int

    @property
    def mcx_t_estimate(self) -> int:
        """T gates if every MCX were charged 7 T, as in the lower-bound argument."""
        return self.t_gates + T_PER_TOFFOLI * self.mcx_before_decomposition

    def as_dict(self) -> dict:
        return {
            "t_gates": self.t_gates,
            "toffolis_before_decomposition": self.toffolis_before_decomposition,
            "mcx_before_decomposition": self.mcx_before_decomposition,
            "cnots": self.cnots,
            "mcx_t_estimate": self.mcx_t_estimate,
        }


def t_count(circuit: Circuit) -> TCountReport:
    """T/Tdg count after Toffoli lowering; MCX nodes are reported separately."""
    toffolis = circuit.count(GateKind.TOFFOLI)
    return TCountReport(
        t_gates=circuit.count(GateKind.T, GateKind.TDG) + T_PER_TOFFOLI * toffolis,
        toffolis_before_decomposition=toffolis,
        mcx_before_decomposition=circuit.count(GateKind.MCX),
        cnots=circuit.count(GateKind.CNOT) + CNOT_PER_TOFFOLI * toffolis,
    )


# -- serialization ------------------------------------------------------------

def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "num_qubits": circuit.num_qubits,
        "gates": [
            {"kind": gate.kind.value, "target": gate.target,
             "controls": list(gate.controls), "polarity": list(gate.polarity)}
            for gate in circuit.gates
        ],
        "labels": {k: list(v) for k, v in circuit.labels.items()},
    }


def serialize(circuit: Circuit) -> str:
    return json.dumps(circuit_to_dict(circuit), sort_keys=True, indent=1) + "\n"


def _int_list(value, where: str) -> list[int]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise CircuitParseError(f"{where}: expected a list of integers, got {value!r}")
    return value


def circuit_from_dict(data) -> Circuit:
    if not isinstance(data, dict):
        raise CircuitParseError("top level: expected a JSON object")
    for key in ("num_qubits", "gates"):
        if key not in data:
            raise CircuitParseError(f"top level: missing field {key!r}")
    n = data["num_qubits"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise CircuitParseError(f"num_qubits: expected a positive integer, got {n!r}")
    if not isinstance(data["gates"], list):
        raise CircuitParseError("gates: expected a list")
    labels = data.get("labels", {})
    if not isinstance(labels, dict):
        raise CircuitParseError("labels: expected an object")
    labels = {str(k): _int_list(v, f"labels.{k}") for k, v in labels.items()}

    circuit = Circuit(n, labels=labels)
    kinds = {k.value: k for k in GateKind}
    for i, raw in enumerate(data["gates"]):
        where = f"gates[{i}]"
        if not isinstance(raw, dict):
            raise CircuitParseError(f"{where}: expected an object")
        kind = raw.get("kind")
        if kind not in kinds:
            raise CircuitParseError(f"{where}.kind: unknown gate kind {kind!r}")
        target = raw.get("target")
        if not isinstance(target, int) or isinstance(target, bool):
            raise CircuitParseError(f"{where}.target: expected an integer, got {target!r}")
        controls = _int_list(raw.get("controls", []), f"{where}.controls")
        polarity = raw.get("polarity")
        if polarity is not None:
            polarity = _int_list(polarity, f"{where}.polarity")
        try:
            circuit.append(Gate(kinds[kind], target, tuple(controls), None if polarity is None else tuple(polarity)))
        except GateError as exc:
            raise CircuitParseError(f"{where}: {exc}") from exc
    return circuit


def deserialize(text: str) -> Circuit:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return circuit_from_dict(data)


def layer(kind: GateKind, qubits: Sequence[int]) -> list[Gate]:
    return [Gate(kind, q) for q in qubits]
