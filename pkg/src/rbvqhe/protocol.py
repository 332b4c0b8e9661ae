"""
Client/server message flow around the QHE engine.

Client and server share one process. Everything they exchange goes through
a ``Channel`` as serialized ``ProtocolMessage`` JSON, in the fixed order
SETUP -> ENCRYPTED_INPUT -> EVAL_RESULT -> DECRYPT_REPORT. Quantum data
cannot be serialized, so messages carry opaque references into a shared
``BackendStore``. Key generation and encryption are client-local steps and
produce no message.
"""
from __future__ import annotations

import enum
import json
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit, circuit_from_dict, circuit_to_dict, decompose_to_clifford_t, is_clifford_t, simulate, t_count
from .errors import ProtocolError
from .qhe import (
    ClientLedger,
    EncryptedRegister,
    EvalTranscript,
    Mode,
    Outcome,
    PauliKey,
    SchemeReport,
    Server,
    keygen,
    qotp_encrypt,
)
from .statevector import Statevector, fidelity, new_zero_state


class MessageKind(str, enum.Enum):
    SETUP = "SETUP"
    ENCRYPTED_INPUT = "ENCRYPTED_INPUT"
    EVAL_RESULT = "EVAL_RESULT"
    DECRYPT_REPORT = "DECRYPT_REPORT"


PROTOCOL_ORDER = list(MessageKind)


@dataclass(frozen=True)
class ProtocolMessage:
    kind: MessageKind
    payload: str

    @classmethod
    def make(cls, kind: MessageKind, body: dict) -> ProtocolMessage:
        return cls(MessageKind(kind), json.dumps(body, sort_keys=True))

    def body(self) -> dict:
        return json.loads(self.payload)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind.value, "payload": self.payload}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ProtocolMessage:
        data = json.loads(text)
        return cls(MessageKind(data["kind"]), data["payload"])


class Channel:
    """In-memory FIFO that only carries serialized messages and rejects any
    message arriving out of protocol order."""

    def __init__(self) -> None:
        self._wire: deque[str] = deque()
        self._next = 0
        self.log: list[str] = []

    def send(self, message: ProtocolMessage) -> None:
        if self._next >= len(PROTOCOL_ORDER) or message.kind is not PROTOCOL_ORDER[self._next]:
            expected = PROTOCOL_ORDER[self._next].value if self._next < len(PROTOCOL_ORDER) else "nothing"
            raise ProtocolError(f"out-of-order message {message.kind.value}; expected {expected}")
        self._next += 1
        wire = message.to_json()
        self._wire.append(wire)
        self.log.append(wire)

    def receive(self, kind: MessageKind) -> ProtocolMessage:
        if not self._wire:
            raise ProtocolError(f"waiting for {kind.value} but the channel is empty")
        message = ProtocolMessage.from_json(self._wire.popleft())
        if message.kind is not kind:
            raise ProtocolError(f"expected {kind.value}, received {message.kind.value}")
        return message


class BackendStore:
    """Shared quantum backend, addressed by opaque references."""

    def __init__(self) -> None:
        self._items: dict[str, EncryptedRegister] = {}

    def put(self, register: EncryptedRegister) -> str:
        ref = f"state-{len(self._items)}"
        self._items[ref] = register
        return ref

    def get(self, ref: str) -> EncryptedRegister:
        try:
            return self._items[ref]
        except KeyError:
            raise ProtocolError(f"unknown state reference {ref}") from None


class ClientParty:
    def __init__(self, rng: np.random.Generator, mode: Mode, forced: Sequence[Outcome] | None = None, key: PauliKey | None = None):
        self.rng = rng
        self.mode = Mode(mode)
        self.forced = forced
        self._key = key
        self._eval_ledger: ClientLedger | None = None
        self._dec_ledger: ClientLedger | None = None
        self.circuit: Circuit | None = None
        self.plaintext: Statevector | None = None

    def setup(self, circuit: Circuit) -> ProtocolMessage:
        self.circuit = circuit if is_clifford_t(circuit) else decompose_to_clifford_t(circuit)
        return ProtocolMessage.make(MessageKind.SETUP, {"m": t_count(self.circuit).t_gates, "mode": self.mode.value})

    def encrypt(self, plaintext: Statevector, store: BackendStore) -> ProtocolMessage:
        if self.circuit is None:
            raise ProtocolError("setup must precede encryption")
        if self._key is None:
            self._key = keygen(plaintext.num_qubits, self.rng)
        self.plaintext = plaintext
        self._eval_ledger = ClientLedger(self._key, self.rng, self.forced)
        ref = store.put(EncryptedRegister.from_state(qotp_encrypt(plaintext, self._key)))
        return ProtocolMessage.make(
            MessageKind.ENCRYPTED_INPUT, {"circuit": circuit_to_dict(self.circuit), "state_ref": ref}
        )

    @property
    def measurement_hook(self):
        """Opaque callable the server invokes in EAGER mode; returns nothing."""
        ledger = self._eval_ledger

        def hook(register, event, steps) -> None:
            ledger.eager_hook(register, event, steps)

        return hook

    def decrypt(self, message: ProtocolMessage, store: BackendStore) -> tuple[ProtocolMessage, SchemeReport]:
        body = message.body()
        transcript = EvalTranscript.from_dict(body["transcript"])
        if any(e.outcome is not None for e in transcript.events):
            raise ProtocolError("server transcript must not carry measurement outcomes")
        transcript = transcript.with_outcomes(self._eval_ledger.outcomes)
        register = store.get(body["state_ref"])
        self._dec_ledger = ClientLedger(self._key, self.rng, self.forced)
        out, final_key = self._dec_ledger.decrypt(register, transcript)
        transcript = transcript.with_outcomes(self._dec_ledger.outcomes)
        expected = simulate(self.circuit, self.plaintext)
        fid = fidelity(out, expected)
        m = transcript.m
        report = SchemeReport(
            mode=self.mode,
            m=m,
            circuit_gates=len(self.circuit),
            clifford_gates=len(self.circuit) - m,
            client_measurements=self._eval_ledger.measurements + self._dec_ledger.measurements,
            fidelity=fid,
            initial_key=self._key,
            final_key=final_key,
            transcript=transcript,
            key_snapshots=self._dec_ledger.snapshots,
            plaintext_out=out,
            expected=expected,
        )
        reply = ProtocolMessage.make(
            MessageKind.DECRYPT_REPORT,
            {"final_key_digest": final_key.digest(), "fidelity": round(fid, 12), "m": m,
             "client_measurements": report.client_measurements},
        )
        return reply, report


class ServerParty:
    def __init__(self, cap: int | None = None):
        self.cap = cap
        self.m: int | None = None
        self.mode: Mode | None = None
        self.transcript: EvalTranscript | None = None

    def setup(self, message: ProtocolMessage) -> None:
        body = message.body()
        self.m, self.mode = int(body["m"]), Mode(body["mode"])

    def evaluate(self, message: ProtocolMessage, store: BackendStore, hook=None) -> ProtocolMessage:
        if self.mode is None:
            raise ProtocolError("SETUP must precede ENCRYPTED_INPUT")
        body = message.body()
        circuit = circuit_from_dict(body["circuit"])
        register = store.get(body["state_ref"])
        transcript = Server(self.mode, self.cap).evaluate(circuit, register, hook)
        if transcript.m != self.m:
            raise ProtocolError(f"setup announced M={self.m} but evaluation teleported {transcript.m} gates")
        self.transcript = transcript.server_view()
        return ProtocolMessage.make(
            MessageKind.EVAL_RESULT, {"transcript": self.transcript.to_dict(), "state_ref": body["state_ref"]}
        )


@dataclass
class ProtocolRun:
    report: SchemeReport
    messages: list[str] = field(default_factory=list)


def run_protocol(
    circuit: Circuit,
    plaintext: Statevector | None = None,
    rng: np.random.Generator | None = None,
    mode: Mode = Mode.EAGER,
    forced: Sequence[Outcome] | None = None,
    key: PauliKey | None = None,
    cap: int | None = None,
) -> ProtocolRun:
    """The five-step scheme with client and server talking over a ``Channel``."""
    rng = rng if rng is not None else np.random.default_rng()
    plaintext = plaintext if plaintext is not None else new_zero_state(circuit.num_qubits)
    channel, store = Channel(), BackendStore()
    client, server = ClientParty(rng, mode, forced, key), ServerParty(cap)

    channel.send(client.setup(circuit))
    server.setup(channel.receive(MessageKind.SETUP))
    channel.send(client.encrypt(plaintext, store))
    hook = client.measurement_hook if Mode(mode) is Mode.EAGER else None
    channel.send(server.evaluate(channel.receive(MessageKind.ENCRYPTED_INPUT), store, hook))
    reply, report = client.decrypt(channel.receive(MessageKind.EVAL_RESULT), store)
    channel.send(reply)
    channel.receive(MessageKind.DECRYPT_REPORT)
    return ProtocolRun(report, list(channel.log))


@dataclass
class RunReport:
    instance: dict
    t_count: int
    m: int | None = None
    fidelity: float | None = None
    measured_s: str | None = None
    probability: float | None = None
    client_measurements: int | None = None
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_time: bool = True) -> dict:
        out = {
            "instance": self.instance,
            "t_count": self.t_count,
            "m": self.m,
            "fidelity": None if self.fidelity is None else round(self.fidelity, 12),
            "measured_s": self.measured_s,
            "probability": None if self.probability is None else round(self.probability, 12),
            "client_measurements": self.client_measurements,
            **self.extra,
        }
        if include_time:
            out["wall_time"] = round(self.wall_time, 4)
        return out


class Stopwatch:
    def __enter__(self) -> Stopwatch:
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc) -> None:
        self.elapsed = time.perf_counter() - self.start
