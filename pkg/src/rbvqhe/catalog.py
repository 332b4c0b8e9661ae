"""Worked instances used by the CLI, the verify suites and the tests."""
from __future__ import annotations

from .bv import RecursiveInstance
from .rcc import RccSpec, Variant

# general MCX example: s=11, g(00)=0, g(01)=g(10)=g(11)=1, s00=s11=00
GENERAL_S11_INSTANCE = RecursiveInstance(
    n=2,
    s="11",
    s_map={"00": "00", "01": "01", "10": "10", "11": "00"},
    g_table={"00": 0, "01": 1, "10": 1, "11": 1},
)

LEMMA1_S11 = RccSpec(Variant.LEMMA1, "11")
# s=111 with register-2 controls 2 and 3 swapped
LEMMA1_S111_SWAPPED = RccSpec(Variant.LEMMA1, "111", permutation=(0, 2, 1))
# s=111, every Toffoli shares the third register-2 qubit
LEMMA3_S111 = RccSpec(Variant.LEMMA3, "111", s1_position=2)
LEMMA2_S001 = RccSpec(Variant.LEMMA2, "001", s_sup="011")
LEMMA4_S11 = RccSpec(Variant.LEMMA4, "11")

# half of the s_x1 replaced by 111; consistent but not Toffoli-implementable
NON_TOFFOLI_INSTANCE = RecursiveInstance(
    n=3,
    s="111",
    s_map={
        "000": "000", "001": "111", "010": "111", "011": "011",
        "100": "111", "101": "101", "110": "110", "111": "111",
    },
    g_table={v: v.count("1") % 2 for v in ("000", "001", "010", "011", "100", "101", "110", "111")},
)

WORKED_SPECS: dict[str, RccSpec] = {
    "lemma1-s11": LEMMA1_S11,
    "lemma1-s111-swapped": LEMMA1_S111_SWAPPED,
    "lemma3-s111": LEMMA3_S111,
    "lemma2-s001": LEMMA2_S001,
    "lemma4-s11": LEMMA4_S11,
}
