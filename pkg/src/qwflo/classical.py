"""Classical baselines: exhaustive search, simulated annealing, validity checks."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, DomainError
from .farm import FarmProblem, Layout, site_positions
from .qubo import MAX_EXACT_SITES, QuboMatrix

# bits enumerated densely inside one block of the exhaustive search
_BLOCK_BITS = 12


@dataclass
class SolveReport:
    layout: np.ndarray
    cost: float
    optimal: bool
    evaluations: int
    wall_time: float
    method: str = ""

    @property
    def turbines(self) -> int:
        return int(self.layout.sum())


def _bit_table(b: int) -> np.ndarray:
    idx = np.arange(2**b, dtype=np.int64)
    return ((idx[:, None] >> np.arange(b)) & 1).astype(float)


def enumerate_costs(q: QuboMatrix) -> np.ndarray:
    """Cost of every layout, indexed by ``sum(x_i << i)``."""
    n = q.dimension
    if n > MAX_EXACT_SITES:
        raise CapabilityError(f"exhaustive enumeration is capped at N={MAX_EXACT_SITES}, got {n}")
    A = q.matrix
    b = min(n, _BLOCK_BITS)
    xl = _bit_table(b)
    low = np.einsum("ki,ij,kj->k", xl, A[:b, :b], xl)
    hi_bits = n - b
    if hi_bits == 0:
        return low + q.offset
    xh_all = _bit_table(hi_bits)
    cross = 2.0 * A[:b, b:]
    hh = A[b:, b:]
    out = np.empty(2**n)
    block = 2**b
    for hi, xh in enumerate(xh_all):
        out[hi * block:(hi + 1) * block] = low + xl @ (cross @ xh) + xh @ hh @ xh
    return out + q.offset


def brute_force(q: QuboMatrix) -> SolveReport:
    """Global minimum by exhaustive search, lowest layout integer winning ties.

    The low bits are evaluated as a dense block; the high bits are walked in
    Gray-code order so each step updates the block's linear term and constant
    with a single row of the matrix.
    """
    n = q.dimension
    if n > MAX_EXACT_SITES:
        raise CapabilityError(f"brute force is capped at N={MAX_EXACT_SITES}, got {n}")
    start = time.perf_counter()
    A = q.matrix
    b = min(n, _BLOCK_BITS)
    xl = _bit_table(b)
    low = np.einsum("ki,ij,kj->k", xl, A[:b, :b], xl)
    hi_bits = n - b

    xh = np.zeros(hi_bits)
    lin = np.zeros(b)  # 2 A_lh x_h
    hfield = np.zeros(hi_bits)  # A_hh x_h
    const = 0.0
    hi_int = 0
    best_cost, best_int = math.inf, -1
    for step in range(2**hi_bits):
        if step:
            k = (step & -step).bit_length() - 1
            sign = 1.0 - 2.0 * xh[k]
            col = b + k
            const += sign * (2.0 * hfield[k] - 2.0 * A[col, col] * xh[k] + A[col, col])
            hfield += sign * A[b:, col]
            lin += sign * 2.0 * A[:b, col]
            xh[k] += sign
            hi_int ^= 1 << k
        costs = low + xl @ lin + const
        i = int(np.argmin(costs))
        c = float(costs[i])
        cand = i + (hi_int << b)
        if c < best_cost or (c == best_cost and cand < best_int):
            best_cost, best_int = c, cand
    layout = np.array([(best_int >> i) & 1 for i in range(n)], dtype=int)
    x = layout.astype(float)
    # report the directly evaluated cost, not the incrementally accumulated one
    best_cost = float(x @ A @ x)
    return SolveReport(layout, best_cost + q.offset, True, 2**n, time.perf_counter() - start, "exact")


@dataclass(frozen=True)
class AnnealSchedule:
    sweeps: int = 2000
    decay: float = 0.999
    # None selects the largest off-diagonal |Q_ij|
    initial_temperature: float | None = None

    def extended(self, factor: int) -> "AnnealSchedule":
        """``factor`` times as many sweeps at the same per-sweep cooling rate."""
        return AnnealSchedule(self.sweeps * factor, self.decay, self.initial_temperature)


def default_temperature(q: QuboMatrix) -> float:
    """Largest coupling magnitude; the diagonal only if there are no couplings."""
    a = np.abs(q.matrix)
    off = a - np.diag(np.diag(a))
    t = float(off.max(initial=0.0)) or float(a.max(initial=0.0))
    return t if t > 0 else 1.0


def simulated_annealing(q: QuboMatrix, schedule: AnnealSchedule | None = None, seed: int = 0) -> SolveReport:
    """Single-flip Metropolis annealing with a geometric schedule; returns the best layout seen."""
    schedule = schedule or AnnealSchedule()
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    A = q.matrix
    n = q.dimension
    diag = np.diag(A).copy()
    x = rng.integers(0, 2, n).astype(float)
    local = A @ x
    cost = float(x @ A @ x)
    best_cost, best_x = cost, x.copy()
    temp = schedule.initial_temperature
    if temp is None:
        temp = default_temperature(q)
    for _ in range(schedule.sweeps):
        order = rng.permutation(n)
        draws = rng.random(n)
        for i, u in zip(order.tolist(), draws.tolist()):
            sign = 1.0 - 2.0 * x[i]
            delta = sign * (2.0 * local[i] - 2.0 * diag[i] * x[i] + diag[i])
            if delta <= 0.0 or u < math.exp(-delta / temp):
                x[i] += sign
                local += sign * A[:, i]
                cost += delta
                if cost < best_cost:
                    best_cost, best_x = cost, x.copy()
        temp *= schedule.decay
    # recompute to shed accumulated rounding
    best_cost = float(best_x @ A @ best_x)
    return SolveReport(best_x.astype(int), best_cost + q.offset, False, schedule.sweeps * n,
                       time.perf_counter() - start, "anneal")


@dataclass
class ValidityRecord:
    turbines: int
    count_ok: bool
    spacing_violations: list[tuple[int, int]] = field(default_factory=list)
    avoided_sites: list[int] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.count_ok and not self.spacing_violations and not self.avoided_sites


def check_validity(problem: FarmProblem, layout, threshold: float = 0.5) -> ValidityRecord:
    """Count, spacing and avoidance checks; sites with avoidance weight above ``threshold`` must stay empty."""
    occ = np.asarray(layout.occupancy if isinstance(layout, Layout) else layout, dtype=int).ravel()
    if occ.size != problem.n_sites:
        raise DomainError(f"layout length {occ.size} does not match {problem.n_sites} sites")
    sites = np.flatnonzero(occ)
    pairs = []
    if problem.min_spacing:
        pos = site_positions(problem.grid)
        for a_i, a in enumerate(sites):
            for c in sites[a_i + 1:]:
                if math.dist(pos[a], pos[c]) < problem.min_spacing:
                    pairs.append((int(a), int(c)))
    avoided = []
    if problem.avoidance is not None:
        avoided = [int(s) for s in sites if problem.avoidance[s] > threshold]
    return ValidityRecord(int(sites.size), int(sites.size) == problem.max_turbines, pairs, avoided)
