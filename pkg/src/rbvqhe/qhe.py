"""
Liang-style quasi-compact quantum homomorphic encryption, simulated exactly.

The client one-time-pads its data with X^a Z^b per qubit. The server runs a
Clifford+T circuit on the ciphertext: Clifford gates only rewrite the key
(classically, on the client's side), while each T/Tdg is followed by gate
teleportation through a fresh EPR pair so that the S^a error can be undone
by an S^a-rotated Bell measurement. Decryption replays the key updates,
performing those measurements in event order, then strips the final pad.

Two evaluation modes:

EAGER
    each rotated Bell measurement happens right after its teleportation and
    the two measured qubits are dropped, so the backend stays at n + 2 qubits.
DEFERRED
    all EPR halves stay in the backend until the client decrypts.

Server-side code never touches key bits or measurement outcomes; in EAGER
mode the server calls back into a ``ClientLedger`` which performs the
measurement on the shared backend and keeps the outcome to itself.
"""
from __future__ import annotations

import enum
import hashlib
import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import gates as g
from .circuit import Circuit, decompose_to_clifford_t, is_clifford_t, simulate, t_count
from .errors import ProtocolError, UnsupportedGateError
from .gates import Gate, GateKind
from .statevector import (
    Statevector,
    apply_gates,
    fidelity,
    measure_bell_rotated,
    new_zero_state,
    permute_qubits,
    remove_qubits,
)

Outcome = tuple[int, int]


class Mode(str, enum.Enum):
    EAGER = "eager"
    DEFERRED = "deferred"


# -- keys and the one-time pad ------------------------------------------------

@dataclass(frozen=True)
class PauliKey:
    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", tuple(int(v) for v in self.a))
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))
        if len(self.a) != len(self.b):
            raise ValueError("key vectors a and b differ in length")
        if any(v not in (0, 1) for v in self.a + self.b):
            raise ValueError("key entries must be bits")

    @property
    def n(self) -> int:
        return len(self.a)

    def qubit(self, w: int) -> Outcome:
        return self.a[w], self.b[w]

    def set(self, w: int, a: int, b: int) -> PauliKey:
        av, bv = list(self.a), list(self.b)
        av[w], bv[w] = a, b
        return PauliKey(av, bv)

    def to_dict(self) -> dict:
        return {"a": "".join(map(str, self.a)), "b": "".join(map(str, self.b))}

    @classmethod
    def from_dict(cls, data: dict) -> PauliKey:
        return cls([int(c) for c in data["a"]], [int(c) for c in data["b"]])

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    @classmethod
    def zero(cls, n: int) -> PauliKey:
        return cls((0,) * n, (0,) * n)


def keygen(n: int, rng: np.random.Generator) -> PauliKey:
    if n < 1:
        raise ValueError("n must be >= 1")
    bits = rng.integers(0, 2, size=2 * n)
    return PauliKey(bits[:n], bits[n:])


def _pad_gates(key: PauliKey, inverse: bool) -> list[Gate]:
    out = []
    for w in range(key.n):
        a, b = key.qubit(w)
        xs = [g.x(w)] if a else []
        zs = [g.z(w)] if b else []
        # X^a Z^b applies Z first; its inverse Z^b X^a applies X first
        out += xs + zs if inverse else zs + xs
    return out


def qotp_encrypt(state: Statevector, key: PauliKey) -> Statevector:
    """X^a Z^b on every qubit."""
    if key.n != state.num_qubits:
        raise ValueError(f"key covers {key.n} qubits, state has {state.num_qubits}")
    return apply_gates(state, _pad_gates(key, inverse=False))


def qotp_decrypt(state: Statevector, key: PauliKey) -> Statevector:
    """Z^b X^a on every qubit: the exact inverse of ``qotp_encrypt``.

    Using X^a Z^b instead would differ only by a global sign."""
    if key.n != state.num_qubits:
        raise ValueError(f"key covers {key.n} qubits, state has {state.num_qubits}")
    return apply_gates(state, _pad_gates(key, inverse=True))


def update_key_clifford(key: PauliKey, gate: Gate) -> PauliKey:
    """Key after pushing ``gate`` through X^a Z^b: g X^a Z^b ~ X^a' Z^b' g."""
    kind = gate.kind
    if kind in (GateKind.X, GateKind.Z):
        return key
    if kind is GateKind.H:
        a, b = key.qubit(gate.target)
        return key.set(gate.target, b, a)
    if kind in (GateKind.S, GateKind.SDG):
        a, b = key.qubit(gate.target)
        return key.set(gate.target, a, a ^ b)
    if kind is GateKind.CNOT and gate.polarity == (1,):
        c, t = gate.controls[0], gate.target
        ac, bc = key.qubit(c)
        at, bt = key.qubit(t)
        return key.set(c, ac, bc ^ bt).set(t, at ^ ac, bt)
    if kind is GateKind.SWAP:
        p, q = gate.controls[0], gate.target
        return key.set(p, *key.qubit(q)).set(q, *key.qubit(p))
    raise UnsupportedGateError(f"{gate} is not a Clifford gate with a key-update rule")


def update_key_t(a: int, b: int, r_a: int, r_b: int, kind: GateKind) -> Outcome:
    """Key of a qubit after teleporting T (or Tdg) with outcome (r_a, r_b)."""
    if kind is GateKind.T:
        return a ^ r_a, a ^ b ^ r_b
    if kind is GateKind.TDG:
        return a ^ r_a, b ^ r_b
    raise UnsupportedGateError(f"{kind} is not T/Tdg")


# -- transcript ---------------------------------------------------------------

@dataclass(frozen=True)
class KeyUpdateStep:
    rule: GateKind
    qubits: tuple[int, ...]
    event_id: int | None = None

    @property
    def gate(self) -> Gate:
        if self.rule in (GateKind.CNOT, GateKind.SWAP):
            return Gate(self.rule, self.qubits[1], (self.qubits[0],))
        return Gate(self.rule, self.qubits[0])

    def to_dict(self) -> dict:
        out: dict = {"rule": self.rule.value, "qubits": list(self.qubits)}
        if self.event_id is not None:
            out["event"] = self.event_id
        return out


@dataclass(frozen=True)
class TeleportEvent:
    event_id: int
    data_qubit: int
    gate: GateKind
    outcome: Outcome | None = None

    def to_dict(self) -> dict:
        r_a, r_b = self.outcome if self.outcome is not None else (None, None)
        return {"id": self.event_id, "qubit": self.data_qubit, "gate": self.gate.value, "r_a": r_a, "r_b": r_b}


@dataclass(frozen=True)
class EvalTranscript:
    mode: Mode
    steps: tuple[KeyUpdateStep, ...]
    events: tuple[TeleportEvent, ...]

    @property
    def m(self) -> int:
        return len(self.events)

    def server_view(self) -> EvalTranscript:
        """The transcript with every measurement outcome blanked."""
        return replace(self, events=tuple(replace(e, outcome=None) for e in self.events))

    def with_outcomes(self, outcomes: dict[int, Outcome]) -> EvalTranscript:
        return replace(self, events=tuple(replace(e, outcome=outcomes.get(e.event_id, e.outcome)) for e in self.events))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "steps": [s.to_dict() for s in self.steps],
            "events": [e.to_dict() for e in self.events],
            "m": self.m,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> EvalTranscript:
        try:
            steps = tuple(
                KeyUpdateStep(GateKind(s["rule"]), tuple(s["qubits"]), s.get("event")) for s in data["steps"]
            )
            events = []
            for e in data["events"]:
                outcome = None if e["r_a"] is None else (int(e["r_a"]), int(e["r_b"]))
                events.append(TeleportEvent(int(e["id"]), int(e["qubit"]), GateKind(e["gate"]), outcome))
            out = cls(Mode(data["mode"]), steps, tuple(events))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed transcript: {exc!r}") from exc
        if "m" in data and data["m"] != out.m:
            raise ProtocolError(f"transcript m={data['m']} but {out.m} events listed")
        return out

    @classmethod
    def from_json(cls, text: str) -> EvalTranscript:
        return cls.from_dict(json.loads(text))


# -- backend ------------------------------------------------------------------

Label = tuple[str, int]  # ("d", w) data qubit, ("c", i)/("s", i) EPR halves


_BELL = apply_gates(new_zero_state(2), [g.h(0), g.cnot(0, 1)])


@dataclass
class EncryptedRegister:
    """The shared quantum backend: a statevector plus the role of each position."""

    state: Statevector
    layout: list[Label]

    @classmethod
    def from_state(cls, state: Statevector) -> EncryptedRegister:
        return cls(state, [("d", w) for w in range(state.num_qubits)])

    def copy(self) -> EncryptedRegister:
        return EncryptedRegister(self.state, list(self.layout))

    def position(self, label: Label) -> int:
        try:
            return self.layout.index(label)
        except ValueError:
            raise ProtocolError(f"qubit {label} is not in the backend") from None

    @property
    def num_data(self) -> int:
        return sum(1 for kind, _ in self.layout if kind == "d")

    def pending_events(self) -> list[int]:
        return sorted({i for kind, i in self.layout if kind != "d"})

    def data_state(self) -> Statevector:
        """Data qubits in canonical order; fails while EPR halves remain."""
        if self.pending_events():
            raise ProtocolError(f"unmeasured teleportation qubits remain: events {self.pending_events()}")
        order = [self.position(("d", w)) for w in range(self.num_data)]
        return permute_qubits(self.state, order)


# -- server -------------------------------------------------------------------

TeleportHook = Callable[[EncryptedRegister, TeleportEvent, Sequence[KeyUpdateStep]], None]


class Server:
    """Evaluates a Clifford+T circuit on encrypted data.

    Holds the backend and the transcript it is building; it is given no key
    and never receives measurement outcomes."""

    def __init__(self, mode: Mode = Mode.EAGER, cap: int | None = None):
        self.mode = Mode(mode)
        self.cap = cap

    def evaluate(self, circuit: Circuit, register: EncryptedRegister, on_teleport: TeleportHook | None = None) -> EvalTranscript:
        if self.mode is Mode.EAGER and on_teleport is None:
            raise ProtocolError("EAGER evaluation needs a client measurement hook")
        if circuit.num_qubits != register.num_data:
            raise ProtocolError(f"circuit has {circuit.num_qubits} qubits, backend holds {register.num_data} data qubits")
        steps: list[KeyUpdateStep] = []
        events: list[TeleportEvent] = []
        for gate in circuit.gates:
            if gate.kind in g.T_KINDS:
                event = self._teleport_t(register, gate, len(events))
                events.append(event)
                steps.append(KeyUpdateStep(gate.kind, (gate.target,), event.event_id))
                if self.mode is Mode.EAGER:
                    on_teleport(register, event, tuple(steps))
            elif gate.kind in g.CLIFFORD and gate.polarity in ((), (1,)):
                mapped = Gate(
                    gate.kind,
                    register.position(("d", gate.target)),
                    tuple(register.position(("d", c)) for c in gate.controls),
                )
                register.state = apply_gates(register.state, [mapped])
                steps.append(KeyUpdateStep(gate.kind, gate.controls + (gate.target,)))
            else:
                raise UnsupportedGateError(f"{gate} is outside the Clifford+T evaluation set")
        return EvalTranscript(self.mode, tuple(steps), tuple(events))

    def _teleport_t(self, register: EncryptedRegister, gate: Gate, event_id: int) -> TeleportEvent:
        w = gate.target
        pos = register.position(("d", w))
        register.state = apply_gates(register.state, [Gate(gate.kind, pos)])
        register.state = register.state.tensor(_BELL, cap=self.cap)
        register.layout += [("c", event_id), ("s", event_id)]
        # SWAP(data, s_i) as a relabelling
        s_pos = len(register.layout) - 1
        register.layout[pos], register.layout[s_pos] = ("s", event_id), ("d", w)
        return TeleportEvent(event_id, w, gate.kind)


# -- client -------------------------------------------------------------------

class ClientLedger:
    """Client-side key bookkeeping: current key, per-step snapshots and the
    rotated-Bell outcomes. Measurements happen strictly in event order.

    ``forced`` pins the outcome of event i to ``forced[i]`` (branch
    enumeration); otherwise outcomes are sampled from ``rng``."""

    def __init__(self, key: PauliKey, rng: np.random.Generator | None = None, forced: Sequence[Outcome] | None = None):
        self.initial_key = key
        self.key = key
        self.rng = rng if rng is not None else np.random.default_rng()
        self.forced = None if forced is None else [tuple(o) for o in forced]
        self.outcomes: dict[int, Outcome] = {}
        self.snapshots: list[PauliKey] = []
        self.measurements = 0
        self._cursor = 0
        self._next_event = 0

    def advance(self, steps: Sequence[KeyUpdateStep], upto: int) -> None:
        """Apply key updates for ``steps[cursor:upto]``."""
        for step in steps[self._cursor:upto]:
            if step.event_id is None:
                self.key = update_key_clifford(self.key, step.gate)
            else:
                if step.event_id not in self.outcomes:
                    raise ProtocolError(f"event {step.event_id} has no measurement outcome yet")
                w = step.qubits[0]
                a, b = self.key.qubit(w)
                self.key = self.key.set(w, *update_key_t(a, b, *self.outcomes[step.event_id], step.rule))
            self.snapshots.append(self.key)
            self._cursor += 1

    def measure_event(self, register: EncryptedRegister, event: TeleportEvent) -> None:
        """S^a-rotated Bell measurement of (s_i, c_i) with a = current key bit."""
        if event.event_id != self._next_event:
            raise ProtocolError(f"event {event.event_id} measured out of order; expected {self._next_event}")
        a = self.key.a[event.data_qubit]
        branch = None
        if self.forced is not None:
            if event.event_id >= len(self.forced):
                raise ProtocolError(f"no forced outcome for event {event.event_id}")
            branch = self.forced[event.event_id]
        q1 = register.position(("s", event.event_id))
        q2 = register.position(("c", event.event_id))
        bell, post = measure_bell_rotated(register.state, q1, q2, a, rng=self.rng, branch=branch)
        register.state = remove_qubits(post, [q1, q2])
        for label in (("s", event.event_id), ("c", event.event_id)):
            register.layout.remove(label)
        self.outcomes[event.event_id] = (bell.a, bell.b)
        self.measurements += 1
        self._next_event += 1

    def record_outcome(self, event: TeleportEvent) -> None:
        """Accept an outcome measured earlier (EAGER transcript replay)."""
        if event.event_id != self._next_event:
            raise ProtocolError(f"event {event.event_id} replayed out of order; expected {self._next_event}")
        if event.outcome is None:
            raise ProtocolError(f"incomplete transcript: event {event.event_id} has no outcome")
        self.outcomes[event.event_id] = event.outcome
        self._next_event += 1

    def eager_hook(self, register: EncryptedRegister, event: TeleportEvent, steps: Sequence[KeyUpdateStep]) -> None:
        # steps[-1] is this event's own T step; its update needs the outcome
        self.advance(steps, len(steps) - 1)
        self.measure_event(register, event)
        self.advance(steps, len(steps))

    def decrypt(self, register: EncryptedRegister, transcript: EvalTranscript) -> tuple[Statevector, PauliKey]:
        """Replay ``transcript`` from the initial key, measuring pending events
        (DEFERRED) or consuming recorded outcomes (EAGER), then strip the pad."""
        if self._cursor:
            raise ProtocolError("ledger has already consumed steps; use a fresh ledger to decrypt")
        events = {e.event_id: e for e in transcript.events}
        if sorted(events) != list(range(len(events))):
            raise ProtocolError("incomplete transcript: event ids are not 0..m-1")
        for idx, step in enumerate(transcript.steps):
            if step.event_id is None:
                continue
            if step.event_id not in events:
                raise ProtocolError(f"incomplete transcript: step {idx} references unknown event {step.event_id}")
            self.advance(transcript.steps, idx)
            event = events[step.event_id]
            if transcript.mode is Mode.EAGER:
                self.record_outcome(event)
            else:
                self.measure_event(register, event)
        self.advance(transcript.steps, len(transcript.steps))
        return qotp_decrypt(register.data_state(), self.key), self.key


# -- top-level operations -----------------------------------------------------

def teleport_t_gate(
    register: EncryptedRegister,
    data_qubit: int,
    kind: GateKind,
    key_bits: Outcome,
    mode: Mode = Mode.EAGER,
    rng: np.random.Generator | None = None,
    branch: Outcome | None = None,
    event_id: int = 0,
    cap: int | None = None,
) -> tuple[Outcome | None, TeleportEvent]:
    """One homomorphic T/Tdg on ``data_qubit`` whose key bits are ``key_bits``.

    EAGER returns the updated key bits and the filled event; DEFERRED leaves
    the EPR halves in ``register`` and returns (None, unfilled event)."""
    server = Server(mode, cap)
    event = server._teleport_t(register, Gate(kind, data_qubit), event_id)
    if mode is Mode.DEFERRED:
        return None, event
    key = PauliKey.zero(register.num_data).set(data_qubit, *key_bits)
    ledger = ClientLedger(key, rng, None if branch is None else [branch] * (event_id + 1))
    ledger._next_event = event_id
    ledger.measure_event(register, event)
    outcome = ledger.outcomes[event_id]
    return update_key_t(*key_bits, *outcome, kind), replace(event, outcome=outcome)


def evaluate(
    circuit: Circuit,
    encrypted: Statevector,
    key: PauliKey,
    mode: Mode = Mode.EAGER,
    rng: np.random.Generator | None = None,
    forced: Sequence[Outcome] | None = None,
    cap: int | None = None,
) -> tuple[EncryptedRegister, EvalTranscript]:
    """Server evaluation with the client's ledger attached (EAGER).

    The returned transcript is the client's copy: in EAGER mode its events
    carry the outcomes the ledger measured."""
    register = EncryptedRegister.from_state(encrypted)
    server = Server(mode, cap)
    if mode is Mode.EAGER:
        ledger = ClientLedger(key, rng, forced)
        transcript = server.evaluate(circuit, register, ledger.eager_hook)
        return register, transcript.with_outcomes(ledger.outcomes)
    return register, server.evaluate(circuit, register)


def decrypt(
    register: EncryptedRegister,
    transcript: EvalTranscript,
    initial_key: PauliKey,
    rng: np.random.Generator | None = None,
    forced: Sequence[Outcome] | None = None,
) -> tuple[Statevector, PauliKey]:
    return ClientLedger(initial_key, rng, forced).decrypt(register.copy(), transcript)


@dataclass
class SchemeReport:
    mode: Mode
    m: int
    circuit_gates: int
    clifford_gates: int
    client_measurements: int
    fidelity: float
    initial_key: PauliKey
    final_key: PauliKey
    transcript: EvalTranscript
    key_snapshots: list[PauliKey] = field(repr=False)
    plaintext_out: Statevector = field(repr=False)
    expected: Statevector = field(repr=False)

    def to_dict(self, include_keys: bool = True) -> dict:
        out = {
            "mode": self.mode.value,
            "m": self.m,
            "circuit_gates": self.circuit_gates,
            "clifford_gates": self.clifford_gates,
            "client_measurements": self.client_measurements,
            "fidelity": round(self.fidelity, 12),
            "final_key_digest": self.final_key.digest(),
        }
        if include_keys:
            out["initial_key"] = self.initial_key.to_dict()
            out["final_key"] = self.final_key.to_dict()
            out["key_snapshots"] = [k.to_dict() for k in self.key_snapshots]
        return out


def run_scheme(
    circuit: Circuit,
    plaintext: Statevector | None = None,
    rng: np.random.Generator | None = None,
    mode: Mode = Mode.EAGER,
    forced: Sequence[Outcome] | None = None,
    key: PauliKey | None = None,
    cap: int | None = None,
) -> SchemeReport:
    """Setup, key generation, encryption, evaluation and decryption in one go.

    Toffolis are lowered to Clifford+T first; M is the resulting T/Tdg count."""
    rng = rng if rng is not None else np.random.default_rng()
    lowered = circuit if is_clifford_t(circuit) else decompose_to_clifford_t(circuit)
    m = t_count(lowered).t_gates
    if plaintext is None:
        plaintext = new_zero_state(circuit.num_qubits)
    if key is None:
        key = keygen(circuit.num_qubits, rng)
    encrypted = qotp_encrypt(plaintext, key)

    register = EncryptedRegister.from_state(encrypted)
    server = Server(mode, cap)
    eval_ledger = ClientLedger(key, rng, forced)
    transcript = server.evaluate(lowered, register, eval_ledger.eager_hook if mode is Mode.EAGER else None)
    transcript = transcript.with_outcomes(eval_ledger.outcomes)

    dec_ledger = ClientLedger(key, rng, forced)
    out, final_key = dec_ledger.decrypt(register, transcript)
    transcript = transcript.with_outcomes(dec_ledger.outcomes)

    expected = simulate(lowered, plaintext)
    return SchemeReport(
        mode=Mode(mode),
        m=m,
        circuit_gates=len(lowered),
        clifford_gates=len(lowered) - m,
        client_measurements=eval_ledger.measurements + dec_ledger.measurements,
        fidelity=fidelity(out, expected),
        initial_key=key,
        final_key=final_key,
        transcript=transcript,
        key_snapshots=dec_ledger.snapshots,
        plaintext_out=out,
        expected=expected,
    )


def all_branches(m: int) -> list[tuple[Outcome, ...]]:
    """Every assignment of rotated-Bell outcomes to m events (4^m)."""
    return list(itertools.product([(0, 0), (0, 1), (1, 0), (1, 1)], repeat=m))


def replay_transcript(
    circuit: Circuit, plaintext: Statevector, key: PauliKey, transcript: EvalTranscript, cap: int | None = None
) -> SchemeReport:
    """Re-run the scheme with the outcomes pinned to those in ``transcript``."""
    if any(e.outcome is None for e in transcript.events):
        raise ProtocolError("transcript has unmeasured events; nothing to replay")
    forced = [e.outcome for e in sorted(transcript.events, key=lambda e: e.event_id)]
    return run_scheme(circuit, plaintext, mode=transcript.mode, forced=forced, key=key, cap=cap)
