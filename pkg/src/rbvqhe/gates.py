"""Gate kinds, the ``Gate`` record and the single-qubit matrices behind them."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import GateError


class GateKind(str, enum.Enum):
    X = "X"
    Z = "Z"
    H = "H"
    S = "S"
    SDG = "Sdg"
    T = "T"
    TDG = "Tdg"
    CNOT = "CNOT"
    SWAP = "SWAP"
    TOFFOLI = "TOFFOLI"
    MCX = "MCX"

    def __str__(self) -> str:
        return self.value


SINGLE_QUBIT = frozenset(
    {GateKind.X, GateKind.Z, GateKind.H, GateKind.S, GateKind.SDG, GateKind.T, GateKind.TDG}
)
CLIFFORD = frozenset(
    {GateKind.X, GateKind.Z, GateKind.H, GateKind.S, GateKind.SDG, GateKind.CNOT, GateKind.SWAP}
)
T_KINDS = frozenset({GateKind.T, GateKind.TDG})
# kinds that flip the target conditioned on the controls
CONTROLLED_X = frozenset({GateKind.CNOT, GateKind.TOFFOLI, GateKind.MCX})

_INV_SQRT2 = 1 / np.sqrt(2)
_W = np.exp(1j * np.pi / 4)

MATRICES: dict[GateKind, np.ndarray] = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2,
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, _W]], dtype=complex),
    GateKind.TDG: np.array([[1, 0], [0, np.conj(_W)]], dtype=complex),
}
for _m in MATRICES.values():
    _m.setflags(write=False)

_INVERSE = {
    GateKind.S: GateKind.SDG,
    GateKind.SDG: GateKind.S,
    GateKind.T: GateKind.TDG,
    GateKind.TDG: GateKind.T,
}


@dataclass(frozen=True)
class Gate:
    """One gate application.

    ``controls`` carry an aligned ``polarity`` (1 fires on |1>, 0 on |0>).
    SWAP stores its second operand as the single entry of ``controls``; the
    polarity is meaningless there and fixed to 1.
    """

    kind: GateKind
    target: int
    controls: tuple[int, ...] = ()
    polarity: tuple[int, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        controls = tuple(int(c) for c in self.controls)
        object.__setattr__(self, "controls", controls)
        polarity = (1,) * len(controls) if self.polarity is None else tuple(int(p) for p in self.polarity)
        object.__setattr__(self, "polarity", polarity)
        object.__setattr__(self, "target", int(self.target))

        if len(polarity) != len(controls):
            raise GateError(f"{kind}: polarity length {len(polarity)} != {len(controls)} controls")
        if any(p not in (0, 1) for p in polarity):
            raise GateError(f"{kind}: polarity entries must be 0 or 1")
        if kind in SINGLE_QUBIT and controls:
            raise GateError(f"{kind} takes no controls")
        if kind in (GateKind.CNOT, GateKind.SWAP) and len(controls) != 1:
            raise GateError(f"{kind} needs exactly 1 control operand, got {len(controls)}")
        if kind is GateKind.SWAP and polarity != (1,):
            raise GateError("SWAP has no control polarity")
        if kind is GateKind.TOFFOLI and len(controls) != 2:
            raise GateError(f"TOFFOLI needs exactly 2 controls, got {len(controls)}")
        if kind is GateKind.MCX and len(controls) < 1:
            raise GateError("MCX needs at least one control")
        ops = self.qubits
        if any(q < 0 for q in ops):
            raise GateError(f"{kind}: negative qubit index in {ops}")
        if len(set(ops)) != len(ops):
            raise GateError(f"{kind}: duplicate qubit operands {ops}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + (self.target,)

    def inverse(self) -> Gate:
        return Gate(_INVERSE.get(self.kind, self.kind), self.target, self.controls, self.polarity)

    def __str__(self) -> str:
        if self.kind in SINGLE_QUBIT:
            return f"{self.kind}({self.target})"
        if self.kind is GateKind.SWAP:
            return f"SWAP({self.controls[0]},{self.target})"
        ctrl = ",".join(("" if p else "~") + str(c) for c, p in zip(self.controls, self.polarity))
        return f"{self.kind}({ctrl}->{self.target})"


# terse constructors used throughout the builders and tests
def x(q: int) -> Gate:
    return Gate(GateKind.X, q)


def z(q: int) -> Gate:
    return Gate(GateKind.Z, q)


def h(q: int) -> Gate:
    return Gate(GateKind.H, q)


def s(q: int) -> Gate:
    return Gate(GateKind.S, q)


def sdg(q: int) -> Gate:
    return Gate(GateKind.SDG, q)


def t(q: int) -> Gate:
    return Gate(GateKind.T, q)


def tdg(q: int) -> Gate:
    return Gate(GateKind.TDG, q)


def cnot(control: int, target: int, polarity: int = 1) -> Gate:
    return Gate(GateKind.CNOT, target, (control,), (polarity,))


def swap(a: int, b: int) -> Gate:
    return Gate(GateKind.SWAP, b, (a,))


def toffoli(c1: int, c2: int, target: int, polarity: tuple[int, int] = (1, 1)) -> Gate:
    return Gate(GateKind.TOFFOLI, target, (c1, c2), polarity)


def mcx(controls, target: int, polarity=None) -> Gate:
    return Gate(GateKind.MCX, target, tuple(controls), None if polarity is None else tuple(polarity))
