import dataclasses
import inspect
import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbvqhe import gates as g
from rbvqhe.catalog import LEMMA1_S11
from rbvqhe.circuit import Circuit, decompose_to_clifford_t, simulate, t_count
from rbvqhe.errors import ProtocolError, ResourceLimitError, UnsupportedGateError
from rbvqhe.gates import Gate, GateKind
from rbvqhe.qhe import (
    ClientLedger,
    EncryptedRegister,
    EvalTranscript,
    Mode,
    PauliKey,
    Server,
    all_branches,
    decrypt,
    evaluate,
    keygen,
    qotp_decrypt,
    qotp_encrypt,
    replay_transcript,
    run_scheme,
    teleport_t_gate,
    update_key_clifford,
    update_key_t,
)
from rbvqhe.rcc import synthesize_full
from rbvqhe.statevector import (
    apply_gates,
    basis_state,
    equal_up_to_global_phase,
    marginal_probabilities,
    new_zero_state,
    random_state,
)
from rbvqhe.verify import all_keys, key_averaged_density, key_rule_cases, random_clifford_t_circuit

PLUS = apply_gates(new_zero_state(1), [g.h(0)])


def key1(a, b):
    return PauliKey(np.array([a]), np.array([b]))


def key2(a0, b0, a1, b1):
    return PauliKey(np.array([a0, a1]), np.array([b0, b1]))


# -- keys and QOTP ------------------------------------------------------------

def test_keygen_reproducible():
    assert keygen(4, np.random.default_rng(7)) == keygen(4, np.random.default_rng(7))


def test_keygen_length():
    key = keygen(3, np.random.default_rng(0))
    assert key.n == 3 and len(key.a) == 3 and len(key.b) == 3


def test_keygen_marginals():
    bits = np.array([np.concatenate([k.a, k.b]) for k in (keygen(2, np.random.default_rng(s)) for s in range(10_000))])
    assert np.all(np.abs(bits.mean(axis=0) - 0.5) < 0.05)


def test_key_serialization():
    key = key2(1, 0, 0, 1)
    assert key.to_dict() == {"a": "10", "b": "01"}
    assert PauliKey.from_dict(key.to_dict()) == key
    assert len(key.digest()) == 64


def test_zero_key_is_identity(rng):
    psi = random_state(2, rng)
    assert np.allclose(qotp_encrypt(psi, PauliKey.zero(2)).amplitudes, psi.amplitudes)


@pytest.mark.parametrize("key", all_keys(2), ids=lambda k: f"{k.to_dict()}")
def test_qotp_involution(key, rng):
    psi = random_state(2, rng)
    assert np.allclose(qotp_decrypt(qotp_encrypt(psi, key), key).amplitudes, psi.amplitudes, atol=1e-12)


def test_qotp_plus_state_is_maximally_mixed():
    rho = key_averaged_density(PLUS.amplitudes)
    assert np.allclose(rho, np.eye(2) / 2, atol=1e-9)


@pytest.mark.parametrize("n", [1, 2])
def test_qotp_mixedness(n, rng):
    for _ in range(10):
        rho = key_averaged_density(random_state(n, rng).amplitudes)
        assert np.allclose(rho, np.eye(2**n) / 2**n, atol=1e-9)


def test_qotp_key_width_checked(rng):
    with pytest.raises(ValueError):
        qotp_encrypt(random_state(2, rng), PauliKey.zero(1))


# -- key-update rules ---------------------------------------------------------

def test_h_rule_swaps_bits():
    for a, b in itertools.product((0, 1), repeat=2):
        assert update_key_clifford(key1(a, b), g.h(0)).qubit(0) == (b, a)
    assert update_key_clifford(key1(1, 0), g.h(0)).qubit(0) == (0, 1)


def test_x_rule_keeps_key():
    assert update_key_clifford(key1(1, 1), g.x(0)).qubit(0) == (1, 1)


def test_cnot_rule_example():
    new = update_key_clifford(key2(1, 0, 0, 0), g.cnot(0, 1))
    assert (new.qubit(0), new.qubit(1)) == ((1, 0), (1, 0))


@pytest.mark.parametrize("gate, n", key_rule_cases(), ids=lambda v: str(v))
def test_clifford_rule_commutation_oracle(gate, n, rng):
    for key in all_keys(n):
        new = update_key_clifford(key, gate)
        for _ in range(100):
            psi = random_state(n, rng)
            lhs = apply_gates(qotp_encrypt(psi, key), [gate])
            rhs = qotp_encrypt(apply_gates(psi, [gate]), new)
            assert equal_up_to_global_phase(lhs, rhs, 1e-10)


def test_non_clifford_has_no_rule():
    with pytest.raises(UnsupportedGateError):
        update_key_clifford(key1(0, 0), g.t(0))
    with pytest.raises(UnsupportedGateError):
        update_key_t(0, 0, 0, 0, GateKind.H)


@pytest.mark.parametrize("a", [0, 1])
@pytest.mark.parametrize("b", [0, 1])
def test_s_error_identity(a, b, rng):
    # T X^a Z^b |phi> = (S†)^a X^a Z^(a^b) T |phi>
    phi = random_state(1, rng)
    lhs = apply_gates(qotp_encrypt(phi, key1(a, b)), [g.t(0)])
    rhs = apply_gates(qotp_encrypt(apply_gates(phi, [g.t(0)]), key1(a, a ^ b)), [g.sdg(0)] * a)
    assert equal_up_to_global_phase(lhs, rhs, 1e-10)


# -- T teleportation ----------------------------------------------------------

def _teleport(psi, kind, a, b, branch):
    register = EncryptedRegister.from_state(qotp_encrypt(psi, key1(a, b)))
    new_bits, event = teleport_t_gate(register, 0, kind, (a, b), branch=branch)
    return qotp_decrypt(register.data_state(), key1(*new_bits)), event


@pytest.mark.parametrize("branch", list(itertools.product((0, 1), repeat=2)))
def test_teleport_zero_state(branch):
    out, event = _teleport(basis_state("0"), GateKind.T, 0, 0, branch)
    assert equal_up_to_global_phase(out, basis_state("0"), 1e-9)
    assert event.outcome == branch


@pytest.mark.parametrize("branch", list(itertools.product((0, 1), repeat=2)))
def test_teleport_plus_with_key_11(branch):
    out, _ = _teleport(PLUS, GateKind.T, 1, 1, branch)
    assert equal_up_to_global_phase(out, apply_gates(PLUS, [g.t(0)]), 1e-9)


@pytest.mark.parametrize("kind", [GateKind.T, GateKind.TDG])
def test_teleport_all_keys_and_branches(kind, rng):
    for a, b, ra, rb in itertools.product((0, 1), repeat=4):
        psi = random_state(1, rng)
        out, _ = _teleport(psi, kind, a, b, (ra, rb))
        assert equal_up_to_global_phase(out, apply_gates(psi, [Gate(kind, 0)]), 1e-9)


def test_teleport_rules():
    assert update_key_t(1, 0, 0, 1, GateKind.T) == (1, 0)
    assert update_key_t(1, 0, 0, 1, GateKind.TDG) == (1, 1)


def test_teleport_deferred_leaves_epr_halves():
    register = EncryptedRegister.from_state(PLUS)
    bits, event = teleport_t_gate(register, 0, GateKind.T, (0, 0), mode=Mode.DEFERRED)
    assert bits is None and event.outcome is None
    assert register.state.num_qubits == 3
    assert register.pending_events() == [0]
    with pytest.raises(ProtocolError):
        register.data_state()


# -- evaluation ---------------------------------------------------------------

def test_clifford_circuit_has_no_events(rng):
    c = Circuit(2, [g.h(0), g.cnot(0, 1), g.s(1)])
    _, transcript = evaluate(c, random_state(2, rng), key2(1, 1, 0, 1), rng=rng)
    assert transcript.m == 0 and len(transcript.steps) == 3


def test_single_t_gives_one_event(rng):
    key = key1(1, 0)
    register, transcript = evaluate(Circuit(1, [g.t(0)]), qotp_encrypt(PLUS, key), key, rng=rng)
    assert transcript.m == 1
    event = transcript.events[0]
    assert event.gate is GateKind.T and event.outcome is not None
    out, final = decrypt(register, transcript, key)
    assert final.qubit(0) == update_key_t(1, 0, *event.outcome, GateKind.T)
    assert equal_up_to_global_phase(out, apply_gates(PLUS, [g.t(0)]), 1e-9)


def test_steps_cover_every_gate(rng):
    c = random_clifford_t_circuit(2, 3, rng)
    _, transcript = evaluate(c, new_zero_state(2), PauliKey.zero(2), rng=rng)
    assert [s.rule for s in transcript.steps] == [gate.kind for gate in c.gates]
    assert [s.event_id for s in transcript.steps if s.event_id is not None] == list(range(transcript.m))


def test_evaluate_rejects_toffoli(rng):
    with pytest.raises(UnsupportedGateError):
        evaluate(Circuit(3, [g.toffoli(0, 1, 2)]), new_zero_state(3), PauliKey.zero(3))


def test_s11_circuit_has_28_events(rng):
    lowered = decompose_to_clifford_t(synthesize_full(LEMMA1_S11))
    key = keygen(6, rng)
    _, transcript = evaluate(lowered, qotp_encrypt(new_zero_state(6), key), key, rng=rng)
    assert transcript.m == 28


def test_identity_circuit_round_trip(rng):
    psi = random_state(2, rng)
    report = run_scheme(Circuit(2), psi, rng=rng)
    assert equal_up_to_global_phase(report.plaintext_out, psi, 1e-12)


@pytest.mark.parametrize("mode", list(Mode))
def test_hth_all_keys_all_branches(mode, rng):
    c = Circuit(1, [g.h(0), g.t(0), g.h(0)])
    psi = random_state(1, rng)
    want = simulate(c, psi)
    for key in all_keys(1):
        for branch in all_branches(1):
            report = run_scheme(c, psi, mode=mode, forced=list(branch), key=key)
            assert equal_up_to_global_phase(report.plaintext_out, want, 1e-9)


def test_lemma1_s11_end_to_end(rng):
    report = run_scheme(synthesize_full(LEMMA1_S11), rng=rng)
    probs = marginal_probabilities(report.plaintext_out, [0, 1])
    assert probs[int("11", 2)] == pytest.approx(1.0, abs=1e-9)
    assert report.m == report.client_measurements == 28


def test_m_equals_t_count(rng):
    c = synthesize_full(LEMMA1_S11)
    assert run_scheme(c, rng=rng).m == t_count(c).t_gates


def test_client_measurements_ignore_clifford_count(rng):
    base = Circuit(2, [g.t(0), g.tdg(1)])
    padded = Circuit(2, [g.h(0), g.cnot(0, 1), g.t(0), g.s(1), g.h(1), g.tdg(1), g.cnot(1, 0)] + [g.h(0)] * 20)
    assert run_scheme(base, rng=rng).client_measurements == 2
    assert run_scheme(padded, rng=rng).client_measurements == 2


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), m=st.integers(0, 3))
def test_round_trip_property(seed, n, m):
    rng = np.random.default_rng(seed)
    c = random_clifford_t_circuit(n, m, rng)
    psi = random_state(n, rng)
    key = keygen(n, rng)
    want = simulate(c, psi)
    for branch in all_branches(m):
        report = run_scheme(c, psi, forced=list(branch), key=key)
        assert equal_up_to_global_phase(report.plaintext_out, want, 1e-9)


# -- deferred mode ------------------------------------------------------------

@pytest.mark.parametrize("n, m", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_eager_deferred_equivalence(n, m, rng):
    for _ in range(5):
        c = random_clifford_t_circuit(n, m, rng)
        psi = random_state(n, rng)
        key = keygen(n, rng)
        for branch in all_branches(m):
            eager = run_scheme(c, psi, mode=Mode.EAGER, forced=list(branch), key=key)
            deferred = run_scheme(c, psi, mode=Mode.DEFERRED, forced=list(branch), key=key)
            assert equal_up_to_global_phase(eager.plaintext_out, deferred.plaintext_out, 1e-9)
            assert eager.final_key == deferred.final_key


def test_deferred_backend_grows_by_two_per_t(rng):
    c = Circuit(1, [g.t(0), g.h(0), g.t(0)])
    register = EncryptedRegister.from_state(PLUS)
    transcript = Server(Mode.DEFERRED).evaluate(c, register)
    assert register.state.num_qubits == 1 + 2 * transcript.m
    assert register.pending_events() == [0, 1]


def test_deferred_out_of_order_measurement_rejected(rng):
    c = Circuit(1, [g.t(0), g.t(0)])
    register = EncryptedRegister.from_state(PLUS)
    transcript = Server(Mode.DEFERRED).evaluate(c, register)
    ledger = ClientLedger(PauliKey.zero(1), rng)
    with pytest.raises(ProtocolError, match="out of order"):
        ledger.measure_event(register, transcript.events[1])


def test_deferred_respects_qubit_cap(rng):
    c = Circuit(1, [g.t(0)] * 3)
    with pytest.raises(ResourceLimitError):
        run_scheme(c, PLUS, rng=rng, mode=Mode.DEFERRED, cap=6)
    run_scheme(c, PLUS, rng=rng, mode=Mode.DEFERRED, cap=7)


def test_deferred_lemma1_s11_exceeds_default_cap(rng):
    with pytest.raises(ResourceLimitError):
        run_scheme(synthesize_full(LEMMA1_S11), rng=rng, mode=Mode.DEFERRED)


# -- information boundary -----------------------------------------------------

def test_server_never_sees_key_or_outcomes(rng):
    assert "key" not in inspect.signature(Server.evaluate).parameters
    assert "key" not in inspect.signature(Server.__init__).parameters
    c = Circuit(1, [g.h(0), g.t(0), g.s(0), g.tdg(0)])
    ledger = ClientLedger(key1(1, 1), rng)
    server = Server(Mode.EAGER)
    transcript = server.evaluate(c, EncryptedRegister.from_state(qotp_encrypt(PLUS, key1(1, 1))), ledger.eager_hook)
    assert all(e.outcome is None for e in transcript.events)
    assert len(ledger.outcomes) == 2
    assert not any("key" in name for name in vars(server))


def test_server_view_blanks_outcomes(rng):
    key = key1(0, 1)
    _, transcript = evaluate(Circuit(1, [g.t(0)]), qotp_encrypt(PLUS, key), key, rng=rng)
    assert transcript.events[0].outcome is not None
    view = transcript.server_view().to_dict()
    assert view["events"][0]["r_a"] is None and view["events"][0]["r_b"] is None
    assert "key" not in json.dumps(view)


def test_hook_failure_leaves_no_outcome_on_server(rng):
    def hook(register, event, steps):
        return None

    transcript = Server(Mode.EAGER).evaluate(Circuit(1, [g.t(0)]), EncryptedRegister.from_state(PLUS), hook)
    assert transcript.events[0].outcome is None


# -- transcripts --------------------------------------------------------------

def test_transcript_json_round_trip(rng):
    report = run_scheme(Circuit(2, [g.h(0), g.t(0), g.cnot(0, 1), g.tdg(1), g.swap(0, 1)]), rng=rng)
    text = report.transcript.to_json()
    back = EvalTranscript.from_json(text)
    assert back == report.transcript
    data = json.loads(text)
    assert data["m"] == 2
    assert set(data["events"][0]) == {"id", "qubit", "gate", "r_a", "r_b"}


def test_transcript_m_mismatch_rejected(rng):
    report = run_scheme(Circuit(1, [g.t(0)]), rng=rng)
    data = report.transcript.to_dict()
    data["m"] = 5
    with pytest.raises(ProtocolError):
        EvalTranscript.from_dict(data)


def test_malformed_transcript_rejected():
    with pytest.raises(ProtocolError):
        EvalTranscript.from_dict({"mode": "eager", "steps": [{"rule": "NOPE", "qubits": [0]}], "events": []})


def test_replay_reproduces_fidelity_and_key(rng):
    c = Circuit(2, [g.h(0), g.t(0), g.cnot(0, 1), g.t(1), g.h(1), g.tdg(0)])
    psi = random_state(2, rng)
    report = run_scheme(c, psi, rng=rng)
    again = replay_transcript(c, psi, report.initial_key, EvalTranscript.from_json(report.transcript.to_json()))
    assert again.final_key == report.final_key
    assert again.fidelity == pytest.approx(report.fidelity, abs=1e-12)


def test_eager_decrypt_needs_outcomes(rng):
    key = key1(1, 0)
    register, transcript = evaluate(Circuit(1, [g.t(0)]), qotp_encrypt(PLUS, key), key, rng=rng)
    with pytest.raises(ProtocolError, match="no outcome"):
        decrypt(register, transcript.server_view(), key)


def test_key_snapshots_follow_steps(rng):
    c = Circuit(1, [g.h(0), g.t(0), g.s(0)])
    report = run_scheme(c, PLUS, rng=rng, key=key1(1, 0))
    assert len(report.key_snapshots) == 3
    assert report.key_snapshots[0].qubit(0) == (0, 1)
    assert report.key_snapshots[-1] == report.final_key
    assert "key_snapshots" in report.to_dict() and "key_snapshots" not in report.to_dict(include_keys=False)


def test_report_is_plain_data():
    assert dataclasses.is_dataclass(run_scheme(Circuit(1, [g.t(0)]), rng=np.random.default_rng(0)))
