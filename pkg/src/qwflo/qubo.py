"""QUBO assembly for windfarm layouts, the spin (Ising) form, and lambda scans."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, ConfigurationError, DomainError
from .farm import AS_PRINTED, FarmProblem, Layout, site_positions, thrust_coefficient, wake_geometry

SYMMETRY_TOL = 1e-12
MAX_EXACT_SITES = 24


@dataclass(frozen=True, eq=False)
class QuboMatrix:
    """Symmetric cost matrix with a scalar offset: ``f(x) = x^T Q x + offset``."""

    matrix: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"QUBO matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("QUBO matrix has non-finite entries")
        if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(m))):
            raise DomainError("QUBO matrix must be symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def __add__(self, other: "QuboMatrix") -> "QuboMatrix":
        return QuboMatrix(self.matrix + other.matrix, self.offset + other.offset)

    def scaled(self, factor: float) -> "QuboMatrix":
        return QuboMatrix(self.matrix * factor, self.offset * factor)


@dataclass(frozen=True, eq=False)
class IsingModel:
    """``f(s) = s^T H s + h . s + offset`` with zero-diagonal symmetric ``H``."""

    couplings: np.ndarray
    fields: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        H = np.array(self.couplings, dtype=float)
        h = np.array(self.fields, dtype=float).ravel()
        if H.shape != (h.size, h.size):
            raise DomainError("couplings and fields have inconsistent sizes")
        H.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "couplings", H)
        object.__setattr__(self, "fields", h)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dimension(self) -> int:
        return self.fields.size


def _as_vector(x, n: int) -> np.ndarray:
    if isinstance(x, Layout):
        x = x.occupancy
    v = np.asarray(x, dtype=float).ravel()
    if v.size != n:
        raise DomainError(f"vector of length {v.size} does not match dimension {n}")
    return v


# ---------------------------------------------------------------------------
# construction


def wake_loss_matrix(problem: FarmProblem) -> np.ndarray:
    """Directed pair losses: entry ``(i, j)`` is ``sum_d p_d (v_d^3 - u_ij^3) / 3`` for ``j`` in the wake of ``i``."""
    n = problem.n_sites
    loss = np.zeros((n, n))
    t = problem.turbine
    for arr in problem.regime:
        if arr.probability == 0 or arr.free_speed == 0:
            continue
        mask, along = wake_geometry(problem, arr)
        if not mask.any():
            continue
        ct = thrust_coefficient(t, arr.free_speed)
        ratio = t.rotor_radius / (t.rotor_radius + t.wake_expansion * np.where(mask, along, 0.0))
        deficit = (1.0 - math.sqrt(1.0 - ct)) * ratio**2
        u = arr.free_speed * (deficit if problem.jensen_interpretation == AS_PRINTED else 1.0 - deficit)
        v3 = arr.free_speed**3
        loss += np.where(mask, arr.probability * (v3 - u**3) / 3.0, 0.0)
    return loss


def power_qubo(problem: FarmProblem) -> QuboMatrix:
    """Negated linear-superposition power as a symmetric QUBO."""
    gain = sum(a.probability * a.free_speed**3 / 3.0 for a in problem.regime)
    loss = wake_loss_matrix(problem)
    q = 0.5 * (loss + loss.T)
    q[np.diag_indices_from(q)] = -gain
    return QuboMatrix(q)


def count_constraint(n: int, m: int) -> QuboMatrix:
    """``(sum(x) - m)^2`` expanded with ``x_i^2 = x_i``."""
    if not 0 <= m <= n:
        raise DomainError(f"turbine budget {m} outside [0, {n}]")
    q = np.ones((n, n))
    np.fill_diagonal(q, 1.0 - 2.0 * m)
    return QuboMatrix(q, float(m * m))


def spacing_constraint(problem: FarmProblem) -> QuboMatrix:
    """One unit of penalty per occupied pair closer than the minimum spacing."""
    n = problem.n_sites
    e = problem.min_spacing
    if not e:
        return QuboMatrix(np.zeros((n, n)))
    pos = site_positions(problem.grid)
    dist = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
    q = np.where(dist < e, 0.5, 0.0)
    np.fill_diagonal(q, 0.0)
    return QuboMatrix(q)


def avoidance_constraint(p: Sequence[float], n: int | None = None) -> QuboMatrix:
    p = np.asarray(p, dtype=float).ravel()
    if n is not None and p.size != n:
        raise ConfigurationError(f"avoidance vector has length {p.size}, expected {n}")
    if np.any((p < 0) | (p > 1)):
        raise ConfigurationError("avoidance entries must lie in [0, 1]")
    return QuboMatrix(np.diag(p))


def constraint_qubos(problem: FarmProblem) -> tuple[QuboMatrix, QuboMatrix, QuboMatrix]:
    n = problem.n_sites
    c3 = avoidance_constraint(problem.avoidance, n) if problem.avoidance is not None else QuboMatrix(np.zeros((n, n)))
    return count_constraint(n, problem.max_turbines), spacing_constraint(problem), c3


def assemble_qubo(problem: FarmProblem) -> QuboMatrix:
    lam1, lam2, lam3 = problem.weights
    c1, c2, c3 = constraint_qubos(problem)
    return power_qubo(problem) + c1.scaled(lam1) + c2.scaled(lam2) + c3.scaled(lam3)


# ---------------------------------------------------------------------------
# evaluation and spin form


def evaluate_qubo(q: QuboMatrix, x) -> float:
    v = _as_vector(x, q.dimension)
    return float(v @ q.matrix @ v + q.offset)


def to_ising(q: QuboMatrix) -> IsingModel:
    """Substitute ``x = (1 + s) / 2`` exactly, keeping every constant in the offset."""
    Q = q.matrix
    if np.max(np.abs(Q - Q.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.max(np.abs(Q), initial=0.0)):
        raise DomainError("to_ising needs a symmetric matrix")
    H = Q / 4.0
    np.fill_diagonal(H, 0.0)
    h = (Q.sum(axis=0) + Q.sum(axis=1)) / 4.0
    offset = Q.sum() / 4.0 + np.trace(Q) / 4.0 + q.offset
    return IsingModel(H, h, offset)


def evaluate_ising(model: IsingModel, s) -> float:
    v = np.asarray(s, dtype=float).ravel()
    if v.size != model.dimension:
        raise DomainError(f"spin vector of length {v.size} does not match dimension {model.dimension}")
    return float(v @ model.couplings @ v + model.fields @ v + model.offset)


def spins_from_layout(x) -> np.ndarray:
    return 2.0 * np.asarray(x, dtype=float) - 1.0


# ---------------------------------------------------------------------------
# heatmaps and text formats


def heatmap_data(q: QuboMatrix) -> np.ndarray:
    """``log10 |Q_ij|`` with NaN marking exact zeros."""
    a = np.abs(q.matrix)
    out = np.full(a.shape, np.nan)
    nz = a != 0
    out[nz] = np.log10(a[nz])
    return out


def write_heatmap_csv(data: np.ndarray, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in data:
            fh.write(",".join("" if np.isnan(v) else f"{v:.6f}" for v in row) + "\n")


def format_qubo(q: QuboMatrix) -> str:
    """Plain text: ``N offset`` header then ``i j value`` for nonzero ``i <= j``."""
    lines = [f"{q.dimension} {q.offset!r}"]
    rows, cols = np.nonzero(np.triu(q.matrix))
    for i, j in zip(rows, cols):
        lines.append(f"{i} {j} {float(q.matrix[i, j])!r}")
    return "\n".join(lines) + "\n"


def parse_qubo(text: str) -> QuboMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigurationError("empty QUBO document")
    head = lines[0].split()
    n, offset = int(head[0]), float(head[1])
    m = np.zeros((n, n))
    for ln in lines[1:]:
        i, j, val = ln.split()
        i, j = int(i), int(j)
        if i > j:
            raise ConfigurationError(f"QUBO entries must be listed with i <= j, got {i} {j}")
        m[i, j] = m[j, i] = float(val)
    return QuboMatrix(m, offset)


def save_qubo(q: QuboMatrix, path: str | Path) -> None:
    Path(path).write_text(format_qubo(q), encoding="utf-8")


def load_qubo(path: str | Path) -> QuboMatrix:
    return parse_qubo(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# lambda scan


@dataclass(frozen=True)
class LambdaPoint:
    lam: float
    turbines: int
    gap: float
    cost: float


def lambda_scan(
    problem: FarmProblem,
    lambdas: Sequence[float],
    solver: Callable[[QuboMatrix], np.ndarray] | None = None,
) -> list[LambdaPoint]:
    """Optimal turbine count and best-to-second-best cost gap for each weight.

    ``solver`` maps a QUBO to the vector of all ``2**N`` costs in layout-integer
    order.  The objective is linear in the weight, so the power part and the
    summed penalties are enumerated once and recombined per ``lam``.
    """
    n = problem.n_sites
    if n > MAX_EXACT_SITES:
        raise CapabilityError(f"lambda scan needs exhaustive search; N={n} exceeds {MAX_EXACT_SITES}")
    if solver is None:
        from .classical import enumerate_costs as solver
    c1, c2, c3 = constraint_qubos(problem)
    power_costs = solver(power_qubo(problem))
    penalty_costs = solver(c1 + c2 + c3)
    counts = _popcounts(n)
    out = []
    for lam in lambdas:
        costs = power_costs + lam * penalty_costs
        best = int(np.argmin(costs))
        low = costs[best]
        # float noise must not count as a distinct second level
        above = costs[costs > low + 1e-9 * max(1.0, abs(low))]
        gap = float(above.min() - low) if above.size else 0.0
        out.append(LambdaPoint(float(lam), int(counts[best]), gap, float(costs[best])))
    return out


def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.int64)
    counts = np.zeros(idx.size, dtype=np.int64)
    for b in range(n):
        counts += (idx >> b) & 1
    return counts
