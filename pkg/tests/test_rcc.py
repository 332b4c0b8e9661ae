import pytest

from rbvqhe.bv import RecursiveInstance, build_recursive_circuit, dot, solve_with_probability, validate_instance
from rbvqhe.catalog import GENERAL_S11_INSTANCE, LEMMA1_S11, LEMMA1_S111_SWAPPED, LEMMA3_S111, NON_TOFFOLI_INSTANCE
from rbvqhe.circuit import Circuit
from rbvqhe.errors import SpecError
from rbvqhe.gates import GateKind
from rbvqhe.rcc import (
    RccSpec,
    Variant,
    all_specs,
    cost_report,
    enumerate_permutations,
    instance_from_spec,
    is_rcc,
    synthesize_full,
    synthesize_us,
)
from rbvqhe.statevector import all_bitstrings


def solves(spec):
    bits, p = solve_with_probability(synthesize_full(spec))
    return bits == spec.s and p == pytest.approx(1.0, abs=1e-9)


# -- instance construction ----------------------------------------------------

def test_lemma1_s11_map_and_g():
    inst = instance_from_spec(LEMMA1_S11)
    assert inst.s_map == {"00": "00", "01": "01", "10": "10", "11": "11"}
    assert inst.g_table == {"00": 0, "01": 1, "10": 1, "11": 0}


def test_lemma2_example_map():
    inst = instance_from_spec(RccSpec(Variant.LEMMA2, "001", s_sup="011"))
    assert inst.s_map == {
        "000": "000", "001": "001", "010": "010", "011": "011",
        "100": "000", "101": "001", "110": "010", "111": "011",
    }


def test_lemma3_third_position_map():
    inst = instance_from_spec(LEMMA3_S111)
    for x1, v in inst.s_map.items():
        assert v == ("001" if dot("111", x1) else "000")
    assert inst.s_map["010"] == "001"


def test_lemma4_s11_map():
    inst = instance_from_spec(RccSpec(Variant.LEMMA4, "11"))
    assert inst.s_map == {"00": "11", "01": "10", "10": "01", "11": "00"}


def test_swapped_permutation_map():
    inst = instance_from_spec(LEMMA1_S111_SWAPPED)
    assert inst.s_map["001"] == "010"
    assert inst.s_map["010"] == "001"
    assert inst.s_map["101"] == "110"
    assert inst.s_map["110"] == "101"


# -- spec validation ----------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(variant=Variant.LEMMA1, s="000"), "degenerate"),
        (dict(variant=Variant.LEMMA1, s="1x"), "not a bit string"),
        (dict(variant=Variant.LEMMA2, s="001", s_sup="001"), "must exceed"),
        (dict(variant=Variant.LEMMA2, s="001", s_sup="110"), "cover every 1"),
        (dict(variant=Variant.LEMMA2, s="001"), "needs an 3-bit s_sup"),
        (dict(variant=Variant.LEMMA3, s="101", s1_position=1), "must be 1"),
        (dict(variant=Variant.LEMMA3, s="101", s1_position=7), "out of range"),
        (dict(variant=Variant.LEMMA4, s="111"), "even"),
        (dict(variant=Variant.LEMMA1, s="101", permutation=(1, 0, 2)), "where s is 0"),
        (dict(variant=Variant.LEMMA1, s="11", permutation=(0, 0)), "not a permutation"),
        (dict(variant=Variant.LEMMA2, s="001", s_sup="011", permutation=(0, 1, 2)), "LEMMA1/LEMMA4 only"),
        (dict(variant=Variant.LEMMA1, s="11", s_sup="11"), "only applies to LEMMA2"),
    ],
)
def test_spec_errors_are_named(kwargs, message):
    with pytest.raises(SpecError, match=message):
        RccSpec(**kwargs)


def test_lemma3_defaults_to_lowest_one():
    assert RccSpec(Variant.LEMMA3, "011").s1_position == 1


def test_spec_json_round_trip():
    for spec in (LEMMA1_S11, LEMMA1_S111_SWAPPED, LEMMA3_S111, RccSpec(Variant.LEMMA2, "001", s_sup="111")):
        assert RccSpec.from_json(spec.to_json()) == spec


@pytest.mark.parametrize(
    "doc",
    [{"variant": "LEMMA9", "s": "11"}, {"s": "11"}, {"variant": "LEMMA1", "s": "11", "extra": 1}, []],
)
def test_spec_document_errors(doc):
    with pytest.raises(SpecError):
        RccSpec.from_dict(doc)


# -- synthesis ----------------------------------------------------------------

def test_lemma1_s11_toffolis():
    us = synthesize_us(LEMMA1_S11)
    assert [(gate.controls, gate.target) for gate in us.gates] == [((0, 2), 4), ((1, 3), 4)]


def test_toffoli_order_is_irrelevant():
    us = synthesize_us(LEMMA1_S11)
    flipped = Circuit(us.num_qubits, list(reversed(us.gates)), us.labels)
    bits, p = solve_with_probability(build_recursive_circuit(instance_from_spec(LEMMA1_S11), flipped))
    assert bits == "11" and p == pytest.approx(1.0, abs=1e-9)


def test_lemma2_uses_two_toffolis():
    assert len(synthesize_us(RccSpec(Variant.LEMMA2, "001", s_sup="011"))) == 2


def test_lemma3_shares_register2_control():
    us = synthesize_us(LEMMA3_S111)
    assert len(us) == 3
    assert {gate.controls[1] for gate in us.gates} == {3 + 2}


def test_lemma4_uses_negated_register1_controls():
    us = synthesize_us(RccSpec(Variant.LEMMA4, "11"))
    assert all(gate.polarity == (0, 1) for gate in us.gates)


@pytest.mark.parametrize("spec", [LEMMA1_S11, LEMMA1_S111_SWAPPED, LEMMA3_S111, RccSpec(Variant.LEMMA4, "11")])
def test_worked_specs_solve(spec):
    assert solves(spec)


@pytest.mark.parametrize("sup", ["011", "101", "111"])
def test_lemma2_all_supersets_of_001(sup):
    spec = RccSpec(Variant.LEMMA2, "001", s_sup=sup)
    assert validate_instance(instance_from_spec(spec)).ok
    assert solves(spec)


# -- permutations -------------------------------------------------------------

def test_s111_has_five_permutations():
    assert len(enumerate_permutations(RccSpec(Variant.LEMMA1, "111"))) == 5


def test_s11_has_one_permutation():
    assert len(enumerate_permutations(LEMMA1_S11)) == 1


def test_s101_permutations_solve():
    perms = enumerate_permutations(RccSpec(Variant.LEMMA1, "101"))
    assert len(perms) == 1
    assert all(solves(spec) for spec in perms)


def test_permutation_keeps_g_values():
    base = instance_from_spec(RccSpec(Variant.LEMMA1, "111"))
    for spec in enumerate_permutations(RccSpec(Variant.LEMMA1, "111")):
        inst = instance_from_spec(spec)
        for x1 in all_bitstrings(3):
            assert inst.g_table[inst.s_map[x1]] == base.g_table[base.s_map[x1]]


def test_permutations_need_two_ones():
    with pytest.raises(SpecError):
        enumerate_permutations(RccSpec(Variant.LEMMA1, "100"))


# -- exhaustive sweep ---------------------------------------------------------

def test_spec_counts():
    assert [len(all_specs(n)) for n in (1, 2, 3)] == [2, 12, 45]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_every_spec_valid_bounded_and_solving(n):
    for spec in all_specs(n):
        assert validate_instance(instance_from_spec(spec)).ok, spec
        assert len(synthesize_us(spec)) <= n, spec
        assert synthesize_us(spec).count(GateKind.TOFFOLI) == len(synthesize_us(spec))
        assert solves(spec), spec


# -- recognition --------------------------------------------------------------

def test_is_rcc_lemma1_s11():
    assert is_rcc(instance_from_spec(LEMMA1_S11)) == LEMMA1_S11


def test_is_rcc_non_toffoli_instance():
    assert validate_instance(NON_TOFFOLI_INSTANCE).ok
    assert is_rcc(NON_TOFFOLI_INSTANCE) is None


def test_is_rcc_lemma2():
    spec = RccSpec(Variant.LEMMA2, "001", s_sup="101")
    assert is_rcc(instance_from_spec(spec)) == spec


@pytest.mark.parametrize("n", [2, 3])
def test_is_rcc_recognizes_every_family_member(n):
    for spec in all_specs(n):
        found = is_rcc(instance_from_spec(spec))
        assert found is not None
        assert instance_from_spec(found) == instance_from_spec(spec)


def test_is_rcc_rejects_nonlinear_g():
    assert is_rcc(GENERAL_S11_INSTANCE) is None


def test_is_rcc_rejects_invalid():
    inst = RecursiveInstance(2, "11", {x: "00" for x in all_bitstrings(2)}, {"00": 0, "01": 1, "10": 1, "11": 0})
    assert is_rcc(inst) is None


# -- cost accounting ----------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_cost_lemma1_all_ones(n):
    report = cost_report(RccSpec(Variant.LEMMA1, "1" * n))
    assert report.t_gates == 14 * n
    assert report.toffolis == n


def test_cost_single_one_needs_one_toffoli():
    assert cost_report(RccSpec(Variant.LEMMA1, "0100")).toffolis == 1


def test_cost_general_n4():
    report = cost_report(4)
    assert report.mcx_general == 16
    assert report.t_gates_general_lower_bound == 112
    assert report.mcx_single_application_lower_bound == 7


def test_cost_general_n2_matches_rcc():
    assert cost_report(2).t_gates_general_lower_bound == 28 == cost_report(LEMMA1_S11).t_gates


def test_cost_rejects_zero_width():
    with pytest.raises(SpecError):
        cost_report(0)
