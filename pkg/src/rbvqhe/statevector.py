"""
Dense statevector simulator.

Conventions:
- Qubit 0 is the most significant bit of a basis label, so measured bit
  strings read left to right in qubit order.
- ``Statevector`` values are treated as immutable; every operation returns a
  new object.
- Measurement runs in one of two modes: Born-rule sampling from a
  ``numpy.random.Generator``, or a caller-chosen ``branch`` (used for
  exhaustive branch enumeration).
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import gates as g
from .errors import GateError, ImpossibleBranchError, ResourceLimitError
from .gates import Gate, GateKind

DEFAULT_QUBIT_CAP = 26
BRANCH_EPS = 1e-12


def qubit_cap() -> int:
    """Current qubit cap; ``RBVQHE_QUBIT_CAP`` overrides the default."""
    raw = os.environ.get("RBVQHE_QUBIT_CAP")
    return int(raw) if raw else DEFAULT_QUBIT_CAP


def _check_cap(num_qubits: int, cap: int | None) -> None:
    cap = qubit_cap() if cap is None else cap
    if num_qubits > cap:
        raise ResourceLimitError(f"{num_qubits} qubits exceeds the cap of {cap}")


class Statevector:
    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes, *, normalize: bool = False, cap: int | None = None):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else 0
        if amps.size == 0 or 2**n != amps.size:
            raise ValueError(f"amplitude vector length {amps.size} is not a power of two")
        if n < 1:
            raise ValueError("a statevector needs at least one qubit")
        _check_cap(n, cap)
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1) > 1e-9:
            raise ValueError(f"amplitudes are not normalized (norm={norm})")
        amps.setflags(write=False)
        self.num_qubits = n
        self.amplitudes = amps

    @classmethod
    def _raw(cls, amps: np.ndarray, n: int) -> Statevector:
        # trusted internal constructor: no checks, takes ownership of amps
        out = cls.__new__(cls)
        amps.setflags(write=False)
        out.num_qubits = n
        out.amplitudes = amps
        return out

    def tensor(self, other: Statevector, cap: int | None = None) -> Statevector:
        """``self ⊗ other``; ``other``'s qubits are appended after ours."""
        n = self.num_qubits + other.num_qubits
        _check_cap(n, cap)
        return Statevector._raw(np.kron(self.amplitudes, other.amplitudes), n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"Statevector(num_qubits={self.num_qubits})"


@dataclass(frozen=True)
class MeasurementOutcome:
    bits: str
    probability: float
    post_state: Statevector


@dataclass(frozen=True)
class BellOutcome:
    a: int
    b: int
    probability: float = 1.0


def new_zero_state(num_qubits: int, cap: int | None = None) -> Statevector:
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    _check_cap(num_qubits, cap)
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = 1
    return Statevector._raw(amps, num_qubits)


def basis_state(bits: str, cap: int | None = None) -> Statevector:
    """Computational basis state |bits>, qubit 0 leftmost."""
    state = new_zero_state(len(bits), cap)
    amps = np.zeros_like(state.amplitudes)
    amps[int(bits, 2)] = 1
    return Statevector._raw(amps, len(bits))


def random_state(num_qubits: int, rng: np.random.Generator) -> Statevector:
    """Haar-ish random pure state (normalized complex Gaussian)."""
    v = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return Statevector(v, normalize=True)


def _check_indices(qubits: Sequence[int], n: int) -> None:
    for q in qubits:
        if not 0 <= q < n:
            raise GateError(f"qubit index {q} out of range for {n} qubits")
    if len(set(qubits)) != len(qubits):
        raise GateError(f"duplicate qubit operands {tuple(qubits)}")


def apply_matrix(psi: np.ndarray, matrix: np.ndarray, target: int, controls=(), polarity=()) -> None:
    """In place: apply a 2x2 matrix to ``target`` of tensor ``psi`` (shape (2,)*n),
    restricted to the slice where every control equals its polarity."""
    idx: list = [slice(None)] * psi.ndim
    for c, p in zip(controls, polarity):
        idx[c] = p
    sub = psi[tuple(idx)]
    axis = target - sum(1 for c in controls if c < target)
    sub[...] = np.moveaxis(np.tensordot(matrix, sub, axes=([1], [axis])), 0, axis)


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    return apply_gates(state, [gate])


def apply_gates(state: Statevector, gate_list: Iterable[Gate]) -> Statevector:
    # one copy for the whole run instead of one per gate
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n).copy()
    for gate in gate_list:
        _check_indices(gate.qubits, n)
        if gate.kind is GateKind.SWAP:
            psi = np.swapaxes(psi, gate.controls[0], gate.target).copy()
        elif gate.kind in g.CONTROLLED_X:
            apply_matrix(psi, g.MATRICES[GateKind.X], gate.target, gate.controls, gate.polarity)
        else:
            apply_matrix(psi, g.MATRICES[gate.kind], gate.target)
    return Statevector._raw(psi.reshape(-1), n)


def marginal_probabilities(state: Statevector, qubits: Sequence[int]) -> np.ndarray:
    """Joint distribution of ``qubits`` as a flat array indexed by the bit
    string read in the given qubit order."""
    n = state.num_qubits
    _check_indices(qubits, n)
    probs = state.probabilities().reshape((2,) * n)
    rest = [q for q in range(n) if q not in qubits]
    probs = np.transpose(probs, list(qubits) + rest).reshape(2 ** len(qubits), -1)
    return probs.sum(axis=1)


def _project(state: Statevector, qubits: Sequence[int], bits: str, prob: float) -> Statevector:
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n)
    out = np.zeros_like(psi)
    idx: list = [slice(None)] * n
    for q, bit in zip(qubits, bits):
        idx[q] = int(bit)
    idx_t = tuple(idx)
    out[idx_t] = psi[idx_t] / np.sqrt(prob)
    return Statevector._raw(out.reshape(-1), n)


def measure_computational(
    state: Statevector,
    qubits: Sequence[int],
    rng: np.random.Generator | None = None,
    branch: str | None = None,
) -> MeasurementOutcome:
    """Projective Z-basis measurement of ``qubits``.

    Pass ``branch`` to select an outcome instead of sampling; a branch with
    probability below 1e-12 raises ``ImpossibleBranchError``.
    """
    qubits = list(qubits)
    probs = marginal_probabilities(state, qubits)
    k = len(qubits)
    if branch is None:
        if rng is None:
            rng = np.random.default_rng()
        index = int(rng.choice(probs.size, p=probs / probs.sum()))
        branch = format(index, f"0{k}b") if k else ""
    else:
        if len(branch) != k or any(c not in "01" for c in branch):
            raise ValueError(f"branch {branch!r} is not a {k}-bit string")
        index = int(branch, 2)
    prob = float(probs[index])
    if prob < BRANCH_EPS:
        raise ImpossibleBranchError(f"branch {branch} on qubits {qubits} has probability {prob:.3g}")
    return MeasurementOutcome(branch, prob, _project(state, qubits, branch, prob))


def measurement_branches(state: Statevector, qubits: Sequence[int]) -> list[MeasurementOutcome]:
    """Every outcome of ``qubits`` with non-negligible probability."""
    probs = marginal_probabilities(state, qubits)
    k = len(qubits)
    return [
        MeasurementOutcome(format(i, f"0{k}b"), float(p), _project(state, qubits, format(i, f"0{k}b"), float(p)))
        for i, p in enumerate(probs)
        if p >= BRANCH_EPS
    ]


def remove_qubits(state: Statevector, qubits: Sequence[int], tol: float = 1e-9) -> Statevector:
    """Drop qubits that sit in a definite computational basis state.

    Only valid after those qubits were measured (or are otherwise unentangled
    basis states); raises ``ValueError`` otherwise.
    """
    n = state.num_qubits
    _check_indices(qubits, n)
    if len(qubits) >= n:
        raise ValueError("cannot remove every qubit")
    psi = state.amplitudes.reshape((2,) * n)
    probs = marginal_probabilities(state, qubits)
    index = int(np.argmax(probs))
    if probs[index] < 1 - tol:
        raise ValueError(f"qubits {list(qubits)} are not in a definite basis state")
    bits = format(index, f"0{len(qubits)}b")
    idx: list = [slice(None)] * n
    for q, bit in zip(qubits, bits):
        idx[q] = int(bit)
    out = np.array(psi[tuple(idx)]).reshape(-1)
    out = out / np.linalg.norm(out)
    return Statevector._raw(out, n - len(qubits))


def permute_qubits(state: Statevector, order: Sequence[int]) -> Statevector:
    """New state whose qubit ``i`` is the old qubit ``order[i]``."""
    n = state.num_qubits
    if sorted(order) != list(range(n)):
        raise ValueError(f"{list(order)} is not a permutation of range({n})")
    psi = np.transpose(state.amplitudes.reshape((2,) * n), list(order)).reshape(-1).copy()
    return Statevector._raw(psi, n)


def measure_bell_rotated(
    state: Statevector,
    q1: int,
    q2: int,
    s_exponent: int,
    rng: np.random.Generator | None = None,
    branch: tuple[int, int] | None = None,
) -> tuple[BellOutcome, Statevector]:
    """Measure (q1, q2) in the S^u-rotated Bell basis, u = ``s_exponent``.

    The basis elements are (S^-u Z^b X^a ⊗ I)|Φ00>. The measurement is done by
    undoing the rotation (S^u on q1), un-Bell-ing (CNOT q1->q2, H on q1) and
    reading q1 -> b, q2 -> a. In the returned state q1 is left in |b> and
    q2 in |a>.
    """
    if s_exponent not in (0, 1):
        raise ValueError("s_exponent must be 0 or 1")
    _check_indices([q1, q2], state.num_qubits)
    rotate = [g.s(q1)] if s_exponent else []
    state = apply_gates(state, rotate + [g.cnot(q1, q2), g.h(q1)])
    forced = None if branch is None else f"{branch[1]}{branch[0]}"
    out = measure_computational(state, [q1, q2], rng=rng, branch=forced)
    b, a = int(out.bits[0]), int(out.bits[1])
    return BellOutcome(a, b, out.probability), out.post_state


def equal_up_to_global_phase(x, y, tol: float = 1e-9) -> bool:
    """True iff ||x - φ·y|| <= tol for the unit phase φ anchored at y's
    largest-magnitude amplitude."""
    xa = x.amplitudes if isinstance(x, Statevector) else np.asarray(x, dtype=complex)
    ya = y.amplitudes if isinstance(y, Statevector) else np.asarray(y, dtype=complex)
    if xa.shape != ya.shape:
        raise ValueError(f"dimension mismatch: {xa.shape} vs {ya.shape}")
    k = int(np.argmax(np.abs(ya)))
    if abs(ya[k]) == 0:
        return bool(np.linalg.norm(xa) <= tol)
    phase = xa[k] / ya[k]
    phase = phase / abs(phase) if abs(phase) > 0 else 1.0
    return bool(np.linalg.norm(xa - phase * ya) <= tol)


def fidelity(x: Statevector, y: Statevector) -> float:
    """|<x|y>|^2 for pure states."""
    if x.num_qubits != y.num_qubits:
        raise ValueError("dimension mismatch")
    return float(abs(np.vdot(x.amplitudes, y.amplitudes)) ** 2)


def all_bitstrings(n: int) -> list[str]:
    return ["".join(bits) for bits in itertools.product("01", repeat=n)]
