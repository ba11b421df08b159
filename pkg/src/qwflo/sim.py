"""Statevector simulation of RY/CNOT circuits with shot sampling and Pauli expectations.

Bit order is little-endian: qubit 0 is the least-significant bit of a basis
index and the rightmost character of a bitstring.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, DomainError, UnsupportedBasisError

MAX_QUBITS = 22
DEFAULT_SHOTS = 4096
NORM_TOL = 1e-10


@dataclass(frozen=True)
class Gate:
    name: str  # "ry" or "cx"
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __str__(self) -> str:
        if self.name == "ry":
            return f"ry({float(self.angle)!r}) q{self.qubits[0]}"
        return f"cx q{self.qubits[0]} q{self.qubits[1]}"


@dataclass
class Circuit:
    qubit_count: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.qubit_count <= MAX_QUBITS:
            raise DomainError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.qubit_count}")

    def _check(self, q: int) -> None:
        if not 0 <= q < self.qubit_count:
            raise DomainError(f"qubit {q} out of range for {self.qubit_count} qubits")

    def ry(self, qubit: int, angle: float) -> "Circuit":
        self._check(qubit)
        self.gates.append(Gate("ry", (qubit,), float(angle)))
        return self

    def cx(self, control: int, target: int) -> "Circuit":
        self._check(control)
        self._check(target)
        if control == target:
            raise DomainError("CNOT control and target must differ")
        self.gates.append(Gate("cx", (control, target)))
        return self

    def extend(self, other: "Circuit") -> "Circuit":
        if other.qubit_count != self.qubit_count:
            raise DomainError("cannot join circuits of different widths")
        self.gates.extend(other.gates)
        return self

    @property
    def rotation_count(self) -> int:
        return sum(g.name == "ry" for g in self.gates)

    @property
    def cnot_count(self) -> int:
        return sum(g.name == "cx" for g in self.gates)

    def __str__(self) -> str:
        return "\n".join([f"qubits {self.qubit_count}", *map(str, self.gates)])


@dataclass(frozen=True, eq=False)
class Statevector:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        n = a.size.bit_length() - 1
        if a.ndim != 1 or a.size != 1 << n or n < 1:
            raise DomainError("statevector length must be a power of two")
        if abs(np.vdot(a, a).real - 1.0) > NORM_TOL:
            raise DomainError("statevector is not normalized")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def qubit_count(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _apply_ry(psi: np.ndarray, n: int, q: int, angle: float) -> None:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    v = psi.reshape(1 << (n - q - 1), 2, 1 << q)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = c * a0 - s * a1
    v[:, 1, :] = s * a0 + c * a1


def _apply_cx(psi: np.ndarray, n: int, control: int, target: int) -> None:
    v = psi.reshape([2] * n)
    # axis 0 of the reshaped tensor is the most-significant qubit
    idx = [slice(None)] * n
    idx[n - 1 - control] = 1
    sub = v[tuple(idx)]
    t_axis = n - 1 - target
    t_axis -= t_axis > n - 1 - control
    sub[...] = np.flip(sub, axis=t_axis).copy()


def run_circuit(circuit: Circuit) -> Statevector:
    n = circuit.qubit_count
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        if g.name == "ry":
            _apply_ry(psi, n, g.qubits[0], g.angle)
        else:
            _apply_cx(psi, n, *g.qubits)
    return Statevector(psi)


@dataclass(frozen=True)
class PauliString:
    """Pauli letters indexed by qubit; ``label`` renders them with qubit 0 rightmost."""

    letters: str

    def __post_init__(self):
        if not self.letters or set(self.letters) - set("IXYZ"):
            raise DomainError(f"invalid Pauli letters {self.letters!r}")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        return cls(label[::-1])

    @classmethod
    def from_sparse(cls, n: int, terms: dict[int, str] | Iterable[tuple[int, str]]) -> "PauliString":
        letters = ["I"] * n
        for q, p in dict(terms).items():
            if not 0 <= q < n:
                raise DomainError(f"qubit {q} out of range for {n} qubits")
            letters[q] = p
        return cls("".join(letters))

    @property
    def label(self) -> str:
        return self.letters[::-1]

    @property
    def qubit_count(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(i for i, p in enumerate(self.letters) if p != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    def __str__(self) -> str:
        return "".join(f"{p}{i}" for i, p in enumerate(self.letters) if p != "I") or "I"


def exact_expectation(state: Statevector, observable: PauliString) -> float:
    """``<psi|P|psi>``; the all-identity string gives 1."""
    n = state.qubit_count
    if observable.qubit_count != n:
        raise DomainError(f"observable acts on {observable.qubit_count} qubits, state has {n}")
    a = state.amplitudes
    idx = np.arange(a.size)
    flip = 0
    n_y = 0
    phase_mask = 0
    for q, p in enumerate(observable.letters):
        if p in "XY":
            flip |= 1 << q
        if p in "YZ":
            phase_mask |= 1 << q
        n_y += p == "Y"
    # P|b> = i^{n_y} (-1)^{popcount(b & phase_mask)} |b ^ flip>
    parity = np.zeros(a.size, dtype=np.int64)
    masked = idx & phase_mask
    for q in range(n):
        parity ^= (masked >> q) & 1
    p_psi = np.empty_like(a)
    p_psi[idx ^ flip] = (1j**n_y) * np.where(parity, -1.0, 1.0) * a
    return float(np.vdot(a, p_psi).real)


@dataclass(frozen=True)
class CountsTable:
    shots: int
    counts: dict[str, int]

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise DomainError("counts do not sum to the shot total")
        if any(v < 0 for v in self.counts.values()):
            raise DomainError("negative count")
        widths = {len(b) for b in self.counts}
        if len(widths) > 1:
            raise DomainError("bitstrings of mixed width")

    @property
    def qubit_count(self) -> int:
        return len(next(iter(self.counts))) if self.counts else 0

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["bitstring", "count"])
            for b in sorted(self.counts):
                w.writerow([b, self.counts[b]])

    @classmethod
    def from_csv(cls, path: str | Path) -> "CountsTable":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        counts = {r["bitstring"]: int(r["count"]) for r in rows}
        return cls(sum(counts.values()), counts)


def sample_counts(state: Statevector, shots: int = DEFAULT_SHOTS, seed: int = 0) -> CountsTable:
    if shots < 1:
        raise DomainError("shots must be at least 1")
    rng = np.random.default_rng(seed)
    p = state.probabilities()
    p = p / p.sum()
    hits = rng.multinomial(shots, p)
    n = state.qubit_count
    counts = {format(i, f"0{n}b"): int(c) for i, c in enumerate(hits) if c}
    return CountsTable(shots, counts)


def expectation_from_counts(counts: CountsTable, support: Iterable[int]) -> float:
    """Signed parity average: ``(1/S) sum_b (-1)^{w_support(b)} C_b``."""
    support = sorted(set(support))
    if not support:
        raise DomainError("support must be non-empty")
    n = counts.qubit_count
    if support[0] < 0 or support[-1] >= n:
        raise DomainError(f"support {support} outside {n} qubits")
    total = 0
    for bits, c in counts.counts.items():
        w = sum(bits[n - 1 - q] == "1" for q in support)
        total += -c if w & 1 else c
    return total / counts.shots


def _check_disjoint(observables: Sequence[PauliString]) -> None:
    seen: set[int] = set()
    for obs in observables:
        if seen & obs.support:
            raise ContractViolation(f"observable {obs} overlaps an earlier support")
        seen |= obs.support


def multi_expectations(counts: CountsTable, observables: Sequence[PauliString]) -> list[float]:
    """All disjoint-support observables from one counts table."""
    _check_disjoint(observables)
    return [expectation_from_counts(counts, obs.support) for obs in observables]


def basis_plan(observables: Sequence[PauliString]) -> Circuit:
    """Pre-measurement rotations mapping each X letter to a Z-basis readout."""
    if not observables:
        raise DomainError("basis_plan needs at least one observable")
    _check_disjoint(observables)
    n = observables[0].qubit_count
    plan = Circuit(n)
    for obs in observables:
        if obs.qubit_count != n:
            raise DomainError("observables of mixed width")
        for q, p in enumerate(obs.letters):
            if p == "Y":
                raise UnsupportedBasisError("Y-basis measurement is not supported")
            if p == "X":
                plan.ry(q, -math.pi / 2)
    return plan


def measure(circuit: Circuit, observables: Sequence[PauliString], shots: int = DEFAULT_SHOTS,
            seed: int = 0) -> list[float]:
    """Run ``circuit`` plus its basis plan once and read every observable from the same counts."""
    full = Circuit(circuit.qubit_count, list(circuit.gates)).extend(basis_plan(observables))
    counts = sample_counts(run_circuit(full), shots, seed)
    return multi_expectations(counts, observables)

