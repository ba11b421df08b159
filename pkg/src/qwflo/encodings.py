"""Qubit-efficient encodings: Pauli correlators (PCE) and single-qubit Z/X slots (SQOE)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CapacityError, ConfigurationError, DomainError
from .sim import (
    DEFAULT_SHOTS,
    Circuit,
    PauliString,
    exact_expectation,
    measure,
    run_circuit,
)

PCE = "pce"
SQOE = "sqoe"
X_SCALE = 0.3
X_SHIFT = 3.5
DEFAULT_STEP_SCALE = 5.0


@dataclass(frozen=True)
class PceConfig:
    qubits: int
    body: int

    def __post_init__(self):
        if self.qubits < 2:
            raise ConfigurationError("PCE needs at least two qubits")
        if not 1 <= self.body <= self.qubits:
            raise ConfigurationError(f"correlator body k={self.body} outside [1, {self.qubits}]")

    @property
    def capacity(self) -> int:
        return 3 * math.comb(self.qubits, self.body)


@dataclass(frozen=True)
class EncodingMap:
    kind: str
    observables: tuple[PauliString, ...]

    def __len__(self) -> int:
        return len(self.observables)

    def to_text(self) -> str:
        lines = [f"{self.kind} {len(self.observables)}"]
        lines += [f"{i} {obs.label}" for i, obs in enumerate(self.observables)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EncodingMap":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        kind, count = lines[0][0], int(lines[0][1])
        obs = [PauliString.from_label(label) for _, label in lines[1:]]
        if len(obs) != count:
            raise ConfigurationError(f"encoding map lists {len(obs)} observables, header says {count}")
        return cls(kind, tuple(obs))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


def pce_enumerate(n: int, k: int, N: int) -> EncodingMap:
    """First ``N`` weight-``k`` correlators: all-X block, then all-Y, then all-Z."""
    cfg = PceConfig(n, k)
    if cfg.capacity < N:
        raise CapacityError(f"3*C({n},{k}) = {cfg.capacity} correlators cannot hold {N} variables")
    out = []
    for letter in "XYZ":
        for support in combinations(range(n), k):
            if len(out) == N:
                break
            out.append(PauliString.from_sparse(n, {q: letter for q in support}))
    return EncodingMap(PCE, tuple(out))


def pce_min_qubits(N: int, k: int) -> int:
    n = max(k, 2)
    while 3 * math.comb(n, k) < N:
        n += 1
    return n


def pce_build_ansatz(n: int, k: int, params: Sequence[float] | None = None) -> tuple[Circuit, int]:
    """``k+1`` blocks of [RY layer, linear CNOT chain, RY layer]; returns the circuit and its parameter count."""
    if n < 2:
        raise DomainError("the ansatz needs at least two qubits for an entangler")
    if k < 1:
        raise DomainError("correlator body must be at least 1")
    count = 2 * (k + 1) * n
    theta = np.zeros(count) if params is None else np.asarray(params, dtype=float)
    if theta.size != count:
        raise DomainError(f"ansatz takes {count} parameters, got {theta.size}")
    circ = Circuit(n)
    it = iter(theta.tolist())
    for _ in range(k + 1):
        for q in range(n):
            circ.ry(q, next(it))
        for q in range(n - 1):
            circ.cx(q, q + 1)
        for q in range(n):
            circ.ry(q, next(it))
    return circ, count


def pce_expectations(encoding: EncodingMap, n: int, k: int, params: Sequence[float]) -> np.ndarray:
    circ, _ = pce_build_ansatz(n, k, params)
    state = run_circuit(circ)
    return np.array([exact_expectation(state, obs) for obs in encoding.observables])


@dataclass(frozen=True)
class SqoeConfig:
    """Slot layout for ``variables`` binaries over ``qubits`` physical qubits.

    Parameter ``i`` drives variable ``2i`` through ``Z`` and ``2i+1`` through
    the transformed ``X``.  Parameters live in a persistent store and are
    placed on qubit ``i mod qubits``; with ``gapped`` only even qubits carry
    parameters, leaving idle neighbours between active ones.
    """

    variables: int
    qubits: int
    cycling: bool = True
    gapped: bool = False
    step_scale: float = DEFAULT_STEP_SCALE
    x_scale: float = X_SCALE
    x_shift: float = X_SHIFT

    def __post_init__(self):
        if self.qubits < 1:
            raise ConfigurationError("SQOE needs at least one qubit")
        if self.variables < 1:
            raise ConfigurationError("SQOE needs at least one variable")
        if self.step_scale <= 0:
            raise ConfigurationError("step scale t must be positive")
        if not self.cycling and 2 * self.active_qubits < self.variables:
            raise CapacityError(f"{self.active_qubits} active qubits hold at most "
                                f"{2 * self.active_qubits} variables without cycling")

    @property
    def parameters(self) -> int:
        return (self.variables + 1) // 2

    @property
    def active_qubits(self) -> int:
        return max(1, self.qubits // 2) if self.gapped else self.qubits

    def qubit_of(self, param: int) -> int:
        slot = param % self.active_qubits
        return 2 * slot if self.gapped else slot

    def slot_map(self) -> list[tuple[int, str]]:
        return [(self.qubit_of(v // 2), "Z" if v % 2 == 0 else "X") for v in range(self.variables)]

    def batches(self) -> list[list[int]]:
        """Parameters sharing one circuit execution: consecutive runs of ``active_qubits``."""
        a = self.active_qubits
        return [list(range(s, min(s + a, self.parameters))) for s in range(0, self.parameters, a)]

    def variables_of(self, param: int) -> list[int]:
        return [v for v in (2 * param, 2 * param + 1) if v < self.variables]

    def encoding_map(self) -> EncodingMap:
        return EncodingMap(SQOE, tuple(PauliString.from_sparse(self.qubits, {q: axis})
                                       for q, axis in self.slot_map()))


def sqoe_assign(N: int, q: int, cycling: bool = True, gapped: bool = False,
                step_scale: float = DEFAULT_STEP_SCALE) -> SqoeConfig:
    return SqoeConfig(N, q, cycling, gapped, step_scale)


def sqoe_raw(theta: np.ndarray, cfg: SqoeConfig) -> np.ndarray:
    """Analytic slot values: ``cos(theta)`` on Z and ``sin(0.3 (theta - 3.5))`` on X."""
    theta = np.asarray(theta, dtype=float)
    raw = np.empty(2 * theta.size)
    raw[0::2] = np.cos(theta)
    raw[1::2] = np.sin(cfg.x_scale * (theta - cfg.x_shift))
    return raw[:cfg.variables]


def sqoe_expectations(theta: Sequence[float], cfg: SqoeConfig, shots: int | None = None,
                      seed: int = 0, params: Sequence[int] | None = None) -> np.ndarray:
    """Per-variable raw values; exact by default, sampled when ``shots`` is given.

    In shot mode each batch runs two circuits: ``RY(theta)`` read in Z and
    ``RY(0.3 (theta - 3.5))`` read in X, each sharing one counts table across
    the batch.  ``params`` restricts evaluation to those parameters (other
    entries are NaN).
    """
    theta = np.asarray(theta, dtype=float)
    if theta.size != cfg.parameters:
        raise DomainError(f"expected {cfg.parameters} parameters, got {theta.size}")
    if not np.all(np.isfinite(theta)):
        raise DomainError("theta must be finite")
    if shots is None:
        raw = sqoe_raw(theta, cfg)
        if params is None:
            return raw
        out = np.full(cfg.variables, np.nan)
        for p in params:
            out[cfg.variables_of(p)] = raw[cfg.variables_of(p)]
        return out
    wanted = set(range(cfg.parameters) if params is None else params)
    out = np.full(cfg.variables, np.nan)
    rng = np.random.default_rng(seed)
    for batch in cfg.batches():
        batch = [p for p in batch if p in wanted]
        if not batch:
            continue
        zc, xc = Circuit(cfg.qubits), Circuit(cfg.qubits)
        z_obs, x_obs = [], []
        for p in batch:
            q = cfg.qubit_of(p)
            zc.ry(q, theta[p])
            z_obs.append(PauliString.from_sparse(cfg.qubits, {q: "Z"}))
            xc.ry(q, cfg.x_scale * (theta[p] - cfg.x_shift))
            x_obs.append(PauliString.from_sparse(cfg.qubits, {q: "X"}))
        z_vals = measure(zc, z_obs, shots, int(rng.integers(2**63)))
        x_vals = measure(xc, x_obs, shots, int(rng.integers(2**63)))
        for p, zv, xv in zip(batch, z_vals, x_vals):
            out[2 * p] = zv
            if 2 * p + 1 < cfg.variables:
                out[2 * p + 1] = xv
    return out


def decode_spins(raw: Sequence[float], t: float = DEFAULT_STEP_SCALE) -> tuple[np.ndarray, np.ndarray]:
    """Relaxed spins ``tanh(t raw)`` and the rounded layout (``raw > 0`` means occupied)."""
    if t <= 0:
        raise DomainError("step scale t must be positive")
    raw = np.asarray(raw, dtype=float)
    return np.tanh(t * raw), (raw > 0).astype(int)
