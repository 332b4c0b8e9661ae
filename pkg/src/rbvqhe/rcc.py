"""
Toffoli-only ("T-lineal", reduced circuit complexity) k=2 BV circuits.

Four families build U_s from at most n Toffolis, all with g(v) = s·v so
that G is CNOT-only:

- LEMMA1: s_x1 = x1 AND s; Toffoli(reg1 i, reg2 i) per 1-bit i of s.
- LEMMA2: s_x1 = x1 AND s_sup for a strict superset s_sup of s.
- LEMMA3: s_x1 = e_p if s·x1 = 1 else 0; every Toffoli shares reg2 qubit p.
- LEMMA4: s_x1 = s AND NOT x1 for even |s|; register-1 controls negated.

LEMMA1 and LEMMA4 accept a permutation of the register-2 controls over the
1-positions of s. A permutation is a full list ``perm`` of length n with
``perm[i]`` the register-2 position that bit ``i`` moves to; positions where
s is 0 must be fixed points.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass

from . import gates as g
from .bv import (
    RecursiveInstance,
    bit_and,
    bit_not,
    build_recursive_circuit,
    dot,
    linear_g_table,
    ones,
    recursive_labels,
    validate_instance,
    weight,
)
from .circuit import T_PER_TOFFOLI, Circuit
from .errors import SpecError
from .statevector import all_bitstrings


class Variant(str, enum.Enum):
    LEMMA1 = "LEMMA1"
    LEMMA2 = "LEMMA2"
    LEMMA3 = "LEMMA3"
    LEMMA4 = "LEMMA4"


@dataclass(frozen=True)
class RccSpec:
    variant: Variant
    s: str
    s_sup: str | None = None
    s1_position: int | None = None
    permutation: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.permutation is not None:
            object.__setattr__(self, "permutation", tuple(int(p) for p in self.permutation))
        if self.variant is Variant.LEMMA3 and self.s1_position is None and "1" in str(self.s):
            object.__setattr__(self, "s1_position", self.s.index("1"))
        check_spec(self)

    @property
    def n(self) -> int:
        return len(self.s)

    def to_dict(self) -> dict:
        out: dict = {"variant": self.variant.value, "s": self.s}
        if self.s_sup is not None:
            out["s_sup"] = self.s_sup
        if self.s1_position is not None:
            out["s1_position"] = self.s1_position
        if self.permutation is not None:
            out["permutation"] = list(self.permutation)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data) -> RccSpec:
        if not isinstance(data, dict):
            raise SpecError("spec document must be a JSON object")
        unknown = set(data) - {"variant", "s", "s_sup", "s1_position", "permutation"}
        if unknown:
            raise SpecError(f"unknown spec fields {sorted(unknown)}")
        if "variant" not in data or "s" not in data:
            raise SpecError("spec needs 'variant' and 's'")
        try:
            variant = Variant(data["variant"])
        except ValueError:
            raise SpecError(f"unknown variant {data['variant']!r}") from None
        return cls(variant, data["s"], data.get("s_sup"), data.get("s1_position"), data.get("permutation"))

    @classmethod
    def from_json(cls, text: str) -> RccSpec:
        return cls.from_dict(json.loads(text))


def _bits_ok(bits) -> bool:
    return isinstance(bits, str) and bool(bits) and all(c in "01" for c in bits)


def check_spec(spec: RccSpec) -> None:
    """Raise ``SpecError`` naming the first violated precondition."""
    s = spec.s
    if not _bits_ok(s):
        raise SpecError(f"s={s!r} is not a bit string")
    if weight(s) == 0:
        raise SpecError("s = 0...0 is degenerate: g could never take the value 1")
    n = len(s)
    v = spec.variant
    if spec.s_sup is not None and v is not Variant.LEMMA2:
        raise SpecError(f"s_sup only applies to LEMMA2, not {v.value}")
    if spec.s1_position is not None and v is not Variant.LEMMA3:
        raise SpecError(f"s1_position only applies to LEMMA3, not {v.value}")
    if spec.permutation is not None and v not in (Variant.LEMMA1, Variant.LEMMA4):
        raise SpecError(f"permutations are defined for LEMMA1/LEMMA4 only, not {v.value}")

    if v is Variant.LEMMA2:
        sup = spec.s_sup
        if sup is None or not _bits_ok(sup) or len(sup) != n:
            raise SpecError(f"LEMMA2 needs an {n}-bit s_sup, got {sup!r}")
        if bit_and(sup, s) != s:
            raise SpecError(f"LEMMA2: s_sup={sup} must cover every 1 of s={s}")
        if not weight(sup) > weight(s):
            raise SpecError(f"LEMMA2: |s_sup|={weight(sup)} must exceed |s|={weight(s)}")
    elif v is Variant.LEMMA3:
        p = spec.s1_position
        if not isinstance(p, int) or not 0 <= p < n:
            raise SpecError(f"LEMMA3: s1_position={p!r} out of range for n={n}")
        if s[p] != "1":
            raise SpecError(f"LEMMA3: |s AND s_1| must be 1 but s[{p}] = 0")
    elif v is Variant.LEMMA4 and weight(s) % 2:
        raise SpecError(f"LEMMA4 needs even |s|, got |s|={weight(s)}")

    if spec.permutation is not None:
        perm = spec.permutation
        if sorted(perm) != list(range(n)):
            raise SpecError(f"permutation {list(perm)} is not a permutation of range({n})")
        moved = [i for i in range(n) if perm[i] != i]
        if any(s[i] == "0" for i in moved):
            raise SpecError(f"permutation {list(perm)} moves positions where s is 0")


def _permute(bits: str, perm: tuple[int, ...] | None) -> str:
    if perm is None:
        return bits
    out = ["0"] * len(bits)
    for i, c in enumerate(bits):
        out[perm[i]] = c
    return "".join(out)


def _unit(n: int, p: int) -> str:
    return "0" * p + "1" + "0" * (n - p - 1)


def s_map_for(spec: RccSpec) -> dict[str, str]:
    n, s = spec.n, spec.s
    out = {}
    for x1 in all_bitstrings(n):
        if spec.variant is Variant.LEMMA1:
            val = _permute(bit_and(x1, s), spec.permutation)
        elif spec.variant is Variant.LEMMA2:
            val = bit_and(x1, spec.s_sup)
        elif spec.variant is Variant.LEMMA3:
            val = _unit(n, spec.s1_position) if dot(s, x1) else "0" * n
        else:
            val = _permute(bit_and(s, bit_not(x1)), spec.permutation)
        out[x1] = val
    return out


def instance_from_spec(spec: RccSpec) -> RecursiveInstance:
    return RecursiveInstance(spec.n, spec.s, s_map_for(spec), linear_g_table(spec.s))


def synthesize_us(spec: RccSpec) -> Circuit:
    """U_s as Toffolis targeting ancilla1, in ascending register-1 position.

    The Toffolis commute (all are diagonal in the |-> ancilla frame), so the
    order carries no meaning."""
    n, s = spec.n, spec.s
    anc1 = 2 * n
    perm = spec.permutation or tuple(range(n))
    c = Circuit(2 * n + 2, labels=recursive_labels(n))
    if spec.variant is Variant.LEMMA1:
        c.extend(g.toffoli(i, n + perm[i], anc1) for i in ones(s))
    elif spec.variant is Variant.LEMMA2:
        c.extend(g.toffoli(i, n + i, anc1) for i in ones(spec.s_sup))
    elif spec.variant is Variant.LEMMA3:
        c.extend(g.toffoli(i, n + spec.s1_position, anc1) for i in ones(s))
    else:
        c.extend(g.toffoli(i, n + perm[i], anc1, (0, 1)) for i in ones(s))
    return c


def synthesize_full(spec: RccSpec) -> Circuit:
    return build_recursive_circuit(instance_from_spec(spec), synthesize_us(spec))


def enumerate_permutations(spec: RccSpec) -> list[RccSpec]:
    """All |s|! - 1 non-identity register-2 permutations of a LEMMA1/LEMMA4 spec."""
    if spec.variant not in (Variant.LEMMA1, Variant.LEMMA4):
        raise SpecError(f"permutations are defined for LEMMA1/LEMMA4 only, not {spec.variant.value}")
    positions = ones(spec.s)
    if len(positions) < 2:
        raise SpecError("permutations need |s| >= 2")
    out = []
    for image in itertools.permutations(positions):
        perm = list(range(spec.n))
        for src, dst in zip(positions, image):
            perm[src] = dst
        if perm != list(range(spec.n)):
            out.append(RccSpec(spec.variant, spec.s, permutation=tuple(perm)))
    return out


def all_specs(n: int) -> list[RccSpec]:
    """Every spec of every family at width n (all s != 0, s_sup,
    s1_position and permutations)."""
    out: list[RccSpec] = []
    for s in all_bitstrings(n):
        if weight(s) == 0:
            continue
        for variant in (Variant.LEMMA1, Variant.LEMMA4):
            if variant is Variant.LEMMA4 and weight(s) % 2:
                continue
            base = RccSpec(variant, s)
            out.append(base)
            if weight(s) >= 2:
                out.extend(enumerate_permutations(base))
        for sup in all_bitstrings(n):
            if bit_and(sup, s) == s and weight(sup) > weight(s):
                out.append(RccSpec(Variant.LEMMA2, s, s_sup=sup))
        for p in ones(s):
            out.append(RccSpec(Variant.LEMMA3, s, s1_position=p))
    return out


def _match(spec: RccSpec, inst: RecursiveInstance) -> bool:
    return s_map_for(spec) == dict(inst.s_map)


def _derive_perm(inst: RecursiveInstance, probe) -> tuple[int, ...] | None:
    # for each 1-position i of s, probe(i) is an x1 whose unpermuted s_x1 is e_i
    n, s = inst.n, inst.s
    perm = list(range(n))
    for i in ones(s):
        val = inst.s_map[probe(i)]
        if weight(val) != 1:
            return None
        perm[i] = val.index("1")
    if sorted(perm) != list(range(n)):
        return None
    return None if perm == list(range(n)) else tuple(perm)


def is_rcc(inst: RecursiveInstance) -> RccSpec | None:
    """Return a spec reproducing ``inst`` exactly if it belongs to one of the
    four families (permutations included), else None."""
    if not validate_instance(inst).ok or not validate_instance(inst).g_linear:
        return None
    n, s = inst.n, inst.s
    candidates: list[RccSpec] = []

    def attempt(build):
        try:
            candidates.append(build())
        except SpecError:
            pass

    attempt(lambda: RccSpec(Variant.LEMMA1, s, permutation=_derive_perm(inst, lambda i: _unit(n, i))))
    attempt(lambda: RccSpec(Variant.LEMMA2, s, s_sup=inst.s_map["1" * n]))
    hits = [inst.s_map[x1] for x1 in all_bitstrings(n) if dot(s, x1)]
    if hits and weight(hits[0]) == 1:
        attempt(lambda: RccSpec(Variant.LEMMA3, s, s1_position=hits[0].index("1")))
    attempt(lambda: RccSpec(Variant.LEMMA4, s, permutation=_derive_perm(inst, lambda i: bit_not(_unit(n, i)))))
    for spec in candidates:
        if _match(spec, inst):
            return spec
    return None


@dataclass(frozen=True)
class CostReport:
    n: int
    toffolis: int
    t_gates: int
    mcx_general: int
    t_gates_general_lower_bound: int
    mcx_single_application_lower_bound: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "toffolis": self.toffolis,
            "t_gates": self.t_gates,
            "mcx_general": self.mcx_general,
            "t_gates_general_lower_bound": self.t_gates_general_lower_bound,
            "mcx_single_application_lower_bound": self.mcx_single_application_lower_bound,
        }


def cost_report(spec_or_n: RccSpec | int) -> CostReport:
    """T-gate accounting of the RCC circuit against the general MCX one.

    ``toffolis`` is per U_s application; U_s runs twice, hence 14 T per
    Toffoli. The general construction needs 2^(n-1) MCX per application
    (2^n for both), charged at 7 T each, and at least 2^(n-1) - 1 MCX in
    a single application even after n helper Toffolis. Passing an int n
    gives the worst case |s| = n."""
    if isinstance(spec_or_n, RccSpec):
        n = spec_or_n.n
        toffolis = len(synthesize_us(spec_or_n))
    else:
        n = int(spec_or_n)
        if n < 1:
            raise SpecError("n must be >= 1")
        toffolis = n
    return CostReport(
        n=n,
        toffolis=toffolis,
        t_gates=2 * T_PER_TOFFOLI * toffolis,
        mcx_general=2**n,
        t_gates_general_lower_bound=T_PER_TOFFOLI * 2**n,
        mcx_single_application_lower_bound=2 ** (n - 1) - 1,
    )
