"""Self-check suites behind ``rbvqhe verify``."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import gates as g
from .bv import NonrecursiveInstance, build_nonrecursive_circuit, build_recursive_circuit, solve_with_probability, validate_instance
from .catalog import GENERAL_S11_INSTANCE, WORKED_SPECS
from .circuit import Circuit, decompose_to_clifford_t, decompose_toffoli, t_count
from .gates import Gate, GateKind
from .qhe import (
    EncryptedRegister,
    Mode,
    PauliKey,
    all_branches,
    qotp_decrypt,
    qotp_encrypt,
    run_scheme,
    teleport_t_gate,
    update_key_clifford,
)
from .rcc import RccSpec, Variant, all_specs, cost_report, instance_from_spec, synthesize_full
from .statevector import Statevector, all_bitstrings, apply_gates, basis_state, equal_up_to_global_phase, random_state

PROB_TOL = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteResult:
    suite: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        failures = [{"name": c.name, "detail": c.detail} for c in self.checks if not c.passed]
        return {
            "suite": self.suite,
            "passed": self.passed,
            "total": len(self.checks),
            "succeeded": len(self.checks) - len(failures),
            "failures": failures,
        }


# -- helpers shared with the tests -------------------------------------------

def unitary(gate_list: list[Gate], n: int) -> np.ndarray:
    cols = [apply_gates(basis_state(bits), gate_list).amplitudes for bits in all_bitstrings(n)]
    return np.stack(cols, axis=1)


def unitaries_equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> bool:
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    phase = u[k] / v[k]
    return abs(abs(phase) - 1) < tol and np.allclose(u, phase * v, atol=tol, rtol=0)


CLIFFORD_1Q = (GateKind.H, GateKind.S, GateKind.SDG, GateKind.X, GateKind.Z)


def random_clifford_t_circuit(
    n: int, t_gates: int, rng: np.random.Generator, cliffords: int = 6
) -> Circuit:
    """``t_gates`` T/Tdg gates at random positions among ``cliffords`` random
    Clifford gates (CNOT included when n >= 2)."""
    kinds = list(CLIFFORD_1Q) + ([GateKind.CNOT] if n >= 2 else [])
    slots = ["c"] * cliffords + ["t"] * t_gates
    rng.shuffle(slots)
    c = Circuit(n)
    for slot in slots:
        if slot == "t":
            c.append(Gate(GateKind.T if rng.integers(2) else GateKind.TDG, int(rng.integers(n))))
            continue
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind is GateKind.CNOT:
            ctl, tgt = (int(q) for q in rng.choice(n, size=2, replace=False))
            c.append(g.cnot(ctl, tgt))
        else:
            c.append(Gate(kind, int(rng.integers(n))))
    return c


def key_rule_cases() -> list[tuple[Gate, int]]:
    """(gate, width) for every rule: five 1-qubit gates, CNOT and SWAP."""
    return [(Gate(k, 0), 1) for k in CLIFFORD_1Q] + [(g.cnot(0, 1), 2), (g.swap(0, 1), 2)]


def all_keys(n: int) -> list[PauliKey]:
    out = []
    for bits in itertools.product((0, 1), repeat=2 * n):
        out.append(PauliKey(np.array(bits[:n]), np.array(bits[n:])))
    return out


# -- suites -------------------------------------------------------------------

def suite_key_rules(rng: np.random.Generator, states: int = 100) -> list[Check]:
    checks = []
    for gate, n in key_rule_cases():
        for key in all_keys(n):
            new = update_key_clifford(key, gate)
            ok = True
            for _ in range(states):
                psi = random_state(n, rng)
                lhs = apply_gates(qotp_encrypt(psi, key), [gate])
                rhs = qotp_encrypt(apply_gates(psi, [gate]), new)
                if not equal_up_to_global_phase(lhs.amplitudes, rhs.amplitudes, 1e-10):
                    ok = False
                    break
            checks.append(Check(f"{gate} key={key.to_dict()}", ok))
    return checks


def suite_teleport(rng: np.random.Generator) -> list[Check]:
    checks = []
    for kind in (GateKind.T, GateKind.TDG):
        for a, b in itertools.product((0, 1), repeat=2):
            for branch in itertools.product((0, 1), repeat=2):
                psi = random_state(1, rng)
                key = PauliKey(np.array([a]), np.array([b]))
                register = EncryptedRegister.from_state(qotp_encrypt(psi, key))
                new_bits, _ = teleport_t_gate(register, 0, kind, (a, b), branch=branch)
                out = qotp_decrypt(register.data_state(), PauliKey(np.array([new_bits[0]]), np.array([new_bits[1]])))
                want = apply_gates(psi, [Gate(kind, 0)])
                ok = equal_up_to_global_phase(out.amplitudes, want.amplitudes, 1e-9)
                checks.append(Check(f"{kind.value} a={a} b={b} r={branch}", ok))
    return checks


def suite_toffoli(rng: np.random.Generator) -> list[Check]:
    checks = []
    for pol in itertools.product((0, 1), repeat=2):
        gate = g.toffoli(0, 1, 2, pol)
        parts = decompose_toffoli(gate)
        same = unitaries_equal_up_to_phase(unitary(parts, 3), unitary([gate], 3))
        n_t = sum(p.kind in (GateKind.T, GateKind.TDG) for p in parts)
        checks.append(Check(f"toffoli polarity={pol}", same and n_t == 7, f"T count {n_t}"))
    return checks


def suite_nonrecursive(rng: np.random.Generator, max_n: int = 8) -> list[Check]:
    checks = []
    for n in range(1, max_n + 1):
        for s in all_bitstrings(n):
            bits, p = solve_with_probability(build_nonrecursive_circuit(NonrecursiveInstance(n, s)))
            checks.append(Check(f"nonrecursive s={s}", bits == s and p > 1 - PROB_TOL, f"{bits} p={p}"))
    return checks


def _spec_check(name: str, spec: RccSpec) -> Check:
    inst = instance_from_spec(spec)
    diag = validate_instance(inst)
    bits, p = solve_with_probability(synthesize_full(spec))
    ok = diag.ok and bits == spec.s and p > 1 - PROB_TOL
    return Check(name, ok, f"valid={diag.ok} measured={bits} p={p:.12f}")


def suite_worked_examples(rng: np.random.Generator) -> list[Check]:
    bits, p = solve_with_probability(build_recursive_circuit(GENERAL_S11_INSTANCE))
    checks = [Check("general s=11", bits == GENERAL_S11_INSTANCE.s and p > 1 - PROB_TOL, f"{bits} p={p}")]
    checks += [_spec_check(name, spec) for name, spec in WORKED_SPECS.items()]
    return checks


def suite_tcount_law(rng: np.random.Generator, max_n: int = 6) -> list[Check]:
    checks = []
    for n in range(1, max_n + 1):
        circuit = decompose_to_clifford_t(synthesize_full(RccSpec(Variant.LEMMA1, "1" * n)))
        got = t_count(circuit).t_gates
        checks.append(Check(f"lemma1 n={n} t_count", got == 14 * n, f"{got} vs {14 * n}"))
        cost = cost_report(n)
        ok = cost.mcx_general == 2**n and cost.mcx_single_application_lower_bound == 2 ** (n - 1) - 1
        checks.append(Check(f"general n={n} mcx", ok, str(cost.as_dict())))
    return checks


def key_averaged_density(psi: np.ndarray) -> np.ndarray:
    n = int(np.log2(psi.size))
    rho = np.zeros((psi.size, psi.size), dtype=complex)
    keys = all_keys(n)
    for key in keys:
        v = qotp_encrypt(Statevector(psi), key).amplitudes
        rho += np.outer(v, v.conj())
    return rho / len(keys)


def suite_qotp(rng: np.random.Generator, samples: int = 10) -> list[Check]:
    checks = []
    for n in (1, 2):
        for i in range(samples):
            rho = key_averaged_density(random_state(n, rng).amplitudes)
            ok = np.allclose(rho, np.eye(2**n) / 2**n, atol=1e-9, rtol=0)
            checks.append(Check(f"qotp n={n} sample={i}", ok))
    return checks


def suite_round_trip(rng: np.random.Generator, circuits: int = 200) -> list[Check]:
    checks = []
    for i in range(circuits):
        m = int(rng.integers(0, 4))
        circuit = random_clifford_t_circuit(2, m, rng)
        psi = random_state(2, rng)
        worst = 1.0
        for branch in all_branches(m):
            report = run_scheme(circuit, psi, rng=rng, forced=list(branch))
            worst = min(worst, report.fidelity)
        checks.append(Check(f"round-trip #{i} m={m}", worst > 1 - PROB_TOL, f"min fidelity {worst}"))
    return checks


def suite_eager_deferred(rng: np.random.Generator, cases: int = 50) -> list[Check]:
    checks = []
    for i in range(cases):
        m = 1 if i < cases // 2 else 2
        circuit = random_clifford_t_circuit(1, m, rng, cliffords=4)
        psi = random_state(1, rng)
        key = all_keys(1)[int(rng.integers(4))]
        ok = True
        for branch in all_branches(m):
            eager = run_scheme(circuit, psi, mode=Mode.EAGER, forced=list(branch), key=key)
            deferred = run_scheme(circuit, psi, mode=Mode.DEFERRED, forced=list(branch), key=key)
            ok &= equal_up_to_global_phase(eager.plaintext_out.amplitudes, deferred.plaintext_out.amplitudes, 1e-9)
        checks.append(Check(f"eager/deferred #{i} m={m}", bool(ok)))
    return checks


def _exhaustive(n: int) -> Callable[[np.random.Generator], list[Check]]:
    def run(rng: np.random.Generator) -> list[Check]:
        return [_spec_check(f"{spec.to_dict()}", spec) for spec in all_specs(n)]

    return run


SUITES: dict[str, Callable[[np.random.Generator], list[Check]]] = {
    "key-rules": suite_key_rules,
    "teleport": suite_teleport,
    "toffoli": suite_toffoli,
    "nonrecursive": suite_nonrecursive,
    "worked-examples": suite_worked_examples,
    "tcount-law": suite_tcount_law,
    "qotp": suite_qotp,
    "round-trip": suite_round_trip,
    "eager-deferred": suite_eager_deferred,
    "rcc-exhaustive-n2": _exhaustive(2),
    "rcc-exhaustive-n3": _exhaustive(3),
}


def run_suite(name: str, seed: int = 0) -> list[SuiteResult]:
    """Run one suite (or every suite for ``all``) with a seeded RNG."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(name)
    return [SuiteResult(n, SUITES[n](np.random.default_rng(seed))) for n in names]
