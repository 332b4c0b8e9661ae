import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbvqhe import gates as g
from rbvqhe.catalog import LEMMA1_S11
from rbvqhe.circuit import (
    Circuit,
    decompose_to_clifford_t,
    decompose_toffoli,
    deserialize,
    is_clifford_t,
    serialize,
    simulate,
    t_count,
)
from rbvqhe.errors import CircuitParseError, GateError, UnsupportedGateError
from rbvqhe.gates import GateKind
from rbvqhe.rcc import RccSpec, Variant, synthesize_full
from rbvqhe.statevector import apply_gates, equal_up_to_global_phase, random_state
from rbvqhe.verify import random_clifford_t_circuit, unitaries_equal_up_to_phase, unitary

T_KINDS = (GateKind.T, GateKind.TDG)


def test_append_h():
    c = Circuit(1).append(g.h(0))
    assert len(c) == 1


def test_target_equal_control_rejected():
    with pytest.raises(GateError):
        Circuit(2).append(g.cnot(1, 1))


def test_out_of_range_rejected():
    with pytest.raises(GateError):
        Circuit(2).append(g.h(2))


def test_toffoli_on_five_qubits():
    c = Circuit(5).append(g.toffoli(1, 3, 4))
    assert c.gates[0].controls == (1, 3)


@pytest.mark.parametrize(
    "build",
    [
        lambda: g.toffoli(0, 1, 2).__class__(GateKind.TOFFOLI, 2, (0,)),
        lambda: g.cnot(0, 1).__class__(GateKind.CNOT, 1, (0, 2)),
        lambda: g.h(0).__class__(GateKind.H, 0, (1,)),
        lambda: g.mcx([], 0),
        lambda: g.cnot(0, 1, polarity=2),
    ],
)
def test_gate_arity_checks(build):
    with pytest.raises(GateError):
        build()


@pytest.mark.parametrize("polarity", [(1, 1), (0, 1), (1, 0), (0, 0)])
def test_toffoli_decomposition_matches_unitary(polarity):
    gate = g.toffoli(0, 1, 2, polarity)
    parts = decompose_toffoli(gate)
    assert unitaries_equal_up_to_phase(unitary(parts, 3), unitary([gate], 3), 1e-10)
    assert sum(p.kind in T_KINDS for p in parts) == 7
    assert {p.kind for p in parts} <= {GateKind.H, GateKind.T, GateKind.TDG, GateKind.CNOT, GateKind.X}


def test_negated_control_frame_adds_no_t():
    parts = decompose_toffoli(g.toffoli(0, 1, 2, (0, 1)))
    assert parts[0] == g.x(0) and parts[-1] == g.x(0)
    plain = decompose_toffoli(g.toffoli(0, 1, 2))
    assert parts[1:-1] == plain


def test_decomposition_on_random_states(rng):
    gate = g.toffoli(2, 0, 1)
    parts = decompose_toffoli(gate)
    for _ in range(1000):
        psi = random_state(3, rng)
        assert equal_up_to_global_phase(apply_gates(psi, parts), apply_gates(psi, [gate]), 1e-10)


def test_decompose_non_toffoli_rejected():
    with pytest.raises(UnsupportedGateError):
        decompose_toffoli(g.h(0))


def test_two_toffolis_give_14_t():
    c = Circuit(4, [g.toffoli(0, 1, 3), g.toffoli(1, 2, 3)])
    lowered = decompose_to_clifford_t(c)
    assert lowered.count(*T_KINDS) == 14
    assert t_count(c).t_gates == 14


def test_clifford_circuit_unchanged():
    c = Circuit(2, [g.h(0), g.cnot(0, 1), g.s(1)])
    assert decompose_to_clifford_t(c) == c
    assert t_count(c).t_gates == 0


def test_mcx_lowering_rejected():
    c = Circuit(4, [g.mcx([0, 1, 2], 3)])
    with pytest.raises(UnsupportedGateError):
        decompose_to_clifford_t(c)


def test_negated_cnot_lowered_to_plain():
    c = Circuit(2, [g.cnot(0, 1, polarity=0)])
    lowered = decompose_to_clifford_t(c)
    assert is_clifford_t(lowered)
    assert np.allclose(simulate(lowered).amplitudes, simulate(c).amplitudes)


def test_lowering_preserves_semantics_of_lemma1_s11():
    c = synthesize_full(LEMMA1_S11)
    lowered = decompose_to_clifford_t(c)
    assert is_clifford_t(lowered) and not is_clifford_t(c)
    assert equal_up_to_global_phase(simulate(lowered), simulate(c), 1e-10)


@pytest.mark.parametrize("s, expected", [("11", 28), ("001", 14), ("111", 42)])
def test_lemma1_t_counts(s, expected):
    circuit = synthesize_full(RccSpec(Variant.LEMMA1, s))
    assert t_count(circuit).t_gates == expected
    assert t_count(decompose_to_clifford_t(circuit)).t_gates == expected


def test_t_count_invariant_for_toffoli_only():
    c = synthesize_full(LEMMA1_S11)
    report = t_count(c)
    assert report.t_gates == 7 * report.toffolis_before_decomposition


def test_mcx_reported_separately():
    report = t_count(Circuit(4, [g.mcx([0, 1, 2], 3), g.t(0)]))
    assert report.t_gates == 1
    assert report.mcx_before_decomposition == 1
    assert report.mcx_t_estimate == 8


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m1=st.integers(0, 4), m2=st.integers(0, 4), tof=st.integers(0, 3))
def test_t_count_additive(seed, m1, m2, tof):
    rng = np.random.default_rng(seed)
    c1 = random_clifford_t_circuit(3, m1, rng)
    c1.extend(g.toffoli(0, 1, 2) for _ in range(tof))
    c2 = random_clifford_t_circuit(3, m2, rng)
    assert t_count(c1 + c2).t_gates == t_count(c1).t_gates + t_count(c2).t_gates


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(0, 5))
def test_serialization_round_trip(seed, m):
    c = random_clifford_t_circuit(3, m, np.random.default_rng(seed))
    c.append(g.toffoli(2, 0, 1, (0, 1))).append(g.mcx([0, 1], 2, [1, 0])).append(g.swap(0, 2))
    text = serialize(c)
    assert deserialize(text) == c
    assert serialize(deserialize(text)) == text


def test_lemma1_s11_round_trip():
    c = synthesize_full(LEMMA1_S11)
    back = deserialize(serialize(c))
    assert back == c
    assert back.labels["register1"] == [0, 1]


def test_serialized_keys_sorted():
    text = serialize(Circuit(2, [g.cnot(0, 1)], {"register1": [0]}))
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert text.endswith("\n")


@pytest.mark.parametrize(
    "doc, locus",
    [
        ({"num_qubits": 2, "gates": [{"kind": "FOO", "target": 0}]}, "gates[0].kind"),
        ({"num_qubits": 2, "gates": [{"kind": "H", "target": "x"}]}, "gates[0].target"),
        ({"num_qubits": 2, "gates": [{"kind": "H", "target": 0}, {"kind": "CNOT", "target": 5, "controls": [0]}]}, "gates[1]"),
        ({"num_qubits": 2, "gates": [{"kind": "CNOT", "target": 1, "controls": "0"}]}, "gates[0].controls"),
        ({"gates": []}, "num_qubits"),
        ({"num_qubits": 0, "gates": []}, "num_qubits"),
        ([], "top level"),
    ],
)
def test_parse_errors_carry_locus(doc, locus):
    with pytest.raises(CircuitParseError, match=locus.replace("[", r"\[").replace("]", r"\]")):
        deserialize(json.dumps(doc))


def test_malformed_json_reports_position():
    with pytest.raises(CircuitParseError, match="line 1 column"):
        deserialize('{"num_qubits": 2, "gates": [}')


def test_inverse_circuit_undoes(rng):
    c = random_clifford_t_circuit(3, 3, rng)
    c.append(g.toffoli(0, 1, 2))
    psi = random_state(3, rng)
    assert np.allclose(simulate(c + c.inverse(), psi).amplitudes, psi.amplitudes, atol=1e-10)
