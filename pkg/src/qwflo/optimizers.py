"""Outer loops for the encodings: simplex search over PCE ansatz angles and SGD over SQOE angles."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .classical import check_validity
from .encodings import (
    DEFAULT_STEP_SCALE,
    PceConfig,
    SqoeConfig,
    decode_spins,
    pce_build_ansatz,
    pce_enumerate,
    pce_expectations,
    sqoe_expectations,
    sqoe_raw,
)
from .errors import ConfigurationError, DomainError
from .farm import FarmProblem, layout_power, site_positions
from .qubo import IsingModel, evaluate_ising, power_qubo

NELDER_MEAD = "nelder-mead"
COBYLA = "cobyla"

# angles placing (Z-slot, X-slot) raw values in each sign quadrant
_QUADRANT_THETA = {(1, 1): 5.5, (1, 0): 0.5, (0, 1): 4.2, (0, 0): 2.5}


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 2000
    batch: int | None = None  # None: min(q, ceil(N/8))
    h_min: float = 0.05
    h_max: float = math.pi
    learning_rate: float = 10.0
    stall_window: int = 200
    seed: int = 0
    shots: int | None = None  # None: exact expectations
    method: str = NELDER_MEAD
    step_scale: float = DEFAULT_STEP_SCALE
    normalize: bool = True

    def __post_init__(self):
        if not 0 < self.h_min <= self.h_max:
            raise ConfigurationError("need 0 < h_min <= h_max")
        if self.max_iterations < 1 or self.stall_window < 1:
            raise ConfigurationError("iteration budget and stall window must be positive")
        if self.batch is not None and self.batch < 1:
            raise ConfigurationError("batch must be positive")
        if self.shots is not None and self.shots < 1:
            raise ConfigurationError("shots must be positive")
        if self.method not in (NELDER_MEAD, COBYLA):
            raise ConfigurationError(f"unknown simplex method {self.method!r}")
        if self.step_scale <= 0:
            raise ConfigurationError("step scale must be positive")


@dataclass
class RunResult:
    layout: np.ndarray
    cost: float
    relaxed_cost: float
    power: float | None
    turbines: int
    valid: bool | None
    iterations: int
    wall_time: float
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    method: str = ""
    seed: int = 0

    def write_trace(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "relaxed_cost", "best_cost"])
            for it, rc, bc in self.trace:
                w.writerow([it, repr(rc), repr(bc)])


def relaxed_cost(model: IsingModel, raw: Sequence[float], t: float = DEFAULT_STEP_SCALE) -> float:
    s, _ = decode_spins(raw, t)
    return evaluate_ising(model, s)


def local_gradient_cost_delta(model: IsingModel, s: Sequence[float], changed: Iterable[int],
                              new_values: Sequence[float]) -> float:
    """Cost change from setting ``s[changed] = new_values``, touching only those rows and columns."""
    changed = np.asarray(list(changed), dtype=int)
    if changed.size == 0:
        return 0.0
    s = np.asarray(s, dtype=float)
    if changed.min() < 0 or changed.max() >= s.size:
        raise DomainError("changed variable index out of range")
    H = model.couplings
    d = np.asarray(new_values, dtype=float) - s[changed]
    rows = H[changed]
    cols = H[:, changed]
    return float(d @ (rows @ s) + d @ (s @ cols) + d @ H[np.ix_(changed, changed)] @ d
                 + model.fields[changed] @ d)


def normalized(model: IsingModel) -> IsingModel:
    """Divide by the largest coupling or field magnitude so step sizes are scale-free."""
    scale = max(np.max(np.abs(model.couplings), initial=0.0), np.max(np.abs(model.fields), initial=0.0))
    if scale == 0:
        return model
    return IsingModel(model.couplings / scale, model.fields / scale, model.offset / scale)


# ---------------------------------------------------------------------------
# derivative-free minimizers


@dataclass
class MinimizeOutcome:
    x: np.ndarray
    fun: float
    evaluations: int
    iterations: int


def nelder_mead(fun: Callable[[np.ndarray], float], x0: Sequence[float], max_iterations: int = 2000,
                stall_window: int = 200, step: float = 0.5, xtol: float = 1e-10,
                ftol: float = 1e-12) -> MinimizeOutcome:
    """scipy's Nelder-Mead with an axis-aligned start simplex and a stall window."""
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0, x0 + step * np.eye(x0.size)])
    state = {"best": math.inf, "since": 0, "iterations": 0}

    def stop_on_stall(intermediate_result):
        state["iterations"] += 1
        if intermediate_result.fun < state["best"]:
            state["best"], state["since"] = intermediate_result.fun, 0
        else:
            state["since"] += 1
            if state["since"] >= stall_window:
                raise StopIteration

    res = scipy_minimize(fun, x0, method="Nelder-Mead", callback=stop_on_stall,
                         options={"maxiter": max_iterations, "initial_simplex": simplex,
                                  "xatol": xtol, "fatol": ftol, "maxfev": np.inf})
    return MinimizeOutcome(np.asarray(res.x), float(res.fun), int(res.nfev), state["iterations"])


def minimize(fun: Callable[[np.ndarray], float], x0: Sequence[float], method: str = NELDER_MEAD,
             max_iterations: int = 2000, stall_window: int = 200, step: float = 0.5) -> MinimizeOutcome:
    """Common entry point for the derivative-free methods."""
    if method == NELDER_MEAD:
        return nelder_mead(fun, x0, max_iterations, stall_window, step)
    if method == COBYLA:
        res = scipy_minimize(fun, np.asarray(x0, dtype=float), method="COBYLA",
                             options={"maxiter": max_iterations, "rhobeg": step})
        return MinimizeOutcome(np.asarray(res.x), float(res.fun), int(res.nfev), int(res.nfev))
    raise ConfigurationError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# result bookkeeping


class _BestTracker:
    def __init__(self, model: IsingModel, frozen: np.ndarray):
        self.model = model
        self.frozen = frozen
        self.cost = math.inf
        self.layout: np.ndarray | None = None
        self.relaxed = math.inf

    def offer(self, raw: np.ndarray, relaxed: float) -> None:
        x = (raw > 0).astype(int)
        x[self.frozen] = 0
        c = evaluate_ising(self.model, 2.0 * x - 1.0)
        if c < self.cost:
            self.cost, self.layout, self.relaxed = c, x, relaxed


def _finish(tracker: _BestTracker, problem: FarmProblem | None, iterations: int, start: float,
            trace, method: str, seed: int) -> RunResult:
    layout = tracker.layout
    power = valid = None
    if problem is not None:
        power = layout_power(problem, layout)
        valid = check_validity(problem, layout).valid
    return RunResult(layout, tracker.cost, tracker.relaxed, power, int(layout.sum()), valid, iterations,
                     time.perf_counter() - start, trace, method, seed)


# ---------------------------------------------------------------------------
# SQOE stochastic gradient descent


def _frozen_mask(n: int, frozen: Iterable[int] | None) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    if frozen is not None:
        mask[list(frozen)] = True
    return mask


def relaxed_spins(theta: np.ndarray, cfg: SqoeConfig, frozen: np.ndarray, t: float) -> np.ndarray:
    s, _ = decode_spins(sqoe_raw(theta, cfg), t)
    s[frozen] = -1.0
    return s


def _slot_raw(angle: float, cfg: SqoeConfig) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(cfg.x_scale * (angle - cfg.x_shift))])


def sqoe_gradient(model: IsingModel, cfg: SqoeConfig, theta: np.ndarray, params: Sequence[int],
                  steps: Sequence[float], t: float, frozen: np.ndarray | None = None) -> np.ndarray:
    """Exact-expectation central differences for ``params`` via local cost deltas."""
    frozen = _frozen_mask(cfg.variables, None) if frozen is None else frozen
    s = relaxed_spins(theta, cfg, frozen, t)
    grads = np.zeros(len(params))
    for j, (p, h) in enumerate(zip(params, steps)):
        var = [v for v in cfg.variables_of(p) if not frozen[v]]
        if not var:
            continue
        slot = np.array([_slot_raw(theta[p] + h, cfg), _slot_raw(theta[p] - h, cfg)])
        local = [v - 2 * p for v in var]
        pair = [local_gradient_cost_delta(model, s, var, np.tanh(t * row[local])) for row in slot]
        grads[j] = (pair[0] - pair[1]) / (2.0 * h)
    return grads


def _shot_gradient(model, cfg, theta, params, steps, t, frozen, s, shots, rng):
    plus, minus = theta.copy(), theta.copy()
    plus[params] += steps
    minus[params] -= steps
    raw_p = sqoe_expectations(plus, cfg, shots, int(rng.integers(2**63)), params)
    raw_m = sqoe_expectations(minus, cfg, shots, int(rng.integers(2**63)), params)
    grads = np.zeros(len(params))
    for j, (p, h) in enumerate(zip(params, steps)):
        var = [v for v in cfg.variables_of(p) if not frozen[v]]
        if var:
            dp = local_gradient_cost_delta(model, s, var, np.tanh(t * raw_p[var]))
            dm = local_gradient_cost_delta(model, s, var, np.tanh(t * raw_m[var]))
            grads[j] = (dp - dm) / (2.0 * h)
    return grads


def sgd_optimize_sqoe(model: IsingModel, cfg: SqoeConfig, opt: OptimizerConfig | None = None,
                      problem: FarmProblem | None = None, theta0: Sequence[float] | None = None,
                      frozen: Iterable[int] | None = None) -> RunResult:
    """Random-batch SGD on the relaxed cost; returns the best rounded layout seen.

    Each iteration draws a batch of parameters and a half-step ``h`` per
    parameter, estimates every gradient component from the two variables
    that parameter drives, then updates the whole batch at once.
    """
    opt = opt or OptimizerConfig()
    if model.dimension != cfg.variables:
        raise DomainError(f"model has {model.dimension} variables, encoding has {cfg.variables}")
    start = time.perf_counter()
    rng = np.random.default_rng(opt.seed)
    t = opt.step_scale
    work = normalized(model) if opt.normalize else model
    frozen_mask = _frozen_mask(cfg.variables, frozen)
    theta = (rng.uniform(0.0, 2.0 * math.pi, cfg.parameters) if theta0 is None
             else np.array(theta0, dtype=float))
    if theta.size != cfg.parameters:
        raise DomainError(f"expected {cfg.parameters} initial angles, got {theta.size}")
    eligible = np.array([p for p in range(cfg.parameters)
                         if any(not frozen_mask[v] for v in cfg.variables_of(p))], dtype=int)
    batch = opt.batch or min(cfg.qubits, math.ceil(cfg.variables / 8))
    batch = max(1, min(batch, eligible.size)) if eligible.size else 0

    def current_raw() -> np.ndarray:
        if opt.shots is None:
            return sqoe_raw(theta, cfg)
        return sqoe_expectations(theta, cfg, opt.shots, int(rng.integers(2**63)))

    tracker = _BestTracker(model, frozen_mask)
    raw = current_raw()
    s = np.tanh(t * raw)
    s[frozen_mask] = -1.0
    rc = evaluate_ising(model, s)
    tracker.offer(raw, rc)
    trace = [(0, rc, tracker.cost)]
    since = 0
    it = 0
    for it in range(1, opt.max_iterations + 1):
        if batch == 0:
            break
        params = np.sort(rng.choice(eligible, size=batch, replace=False))
        steps = rng.uniform(opt.h_min, opt.h_max, size=batch)
        if opt.shots is None:
            g = sqoe_gradient(work, cfg, theta, params, steps, t, frozen_mask)
        else:
            g = _shot_gradient(work, cfg, theta, params, steps, t, frozen_mask, s, opt.shots, rng)
        theta[params] -= opt.learning_rate * g
        if opt.shots is None:
            raw = sqoe_raw(theta, cfg)
        else:
            fresh = sqoe_expectations(theta, cfg, opt.shots, int(rng.integers(2**63)), params)
            upd = ~np.isnan(fresh)
            raw[upd] = fresh[upd]
        s = np.tanh(t * raw)
        s[frozen_mask] = -1.0
        rc = evaluate_ising(model, s)
        before = tracker.cost
        tracker.offer(raw, rc)
        trace.append((it, rc, tracker.cost))
        since = 0 if tracker.cost < before else since + 1
        if since >= opt.stall_window:
            break
    return _finish(tracker, problem, it, start, trace, "sqoe", opt.seed)


def warm_start(problem: FarmProblem, cfg: SqoeConfig, threshold: float = 0.5) -> tuple[np.ndarray, set[int]]:
    """Initial angles and frozen variables from avoidance data and the turbine budget.

    Sites with avoidance weight above ``threshold`` are frozen empty.  Of the
    rest, the ``M`` with the largest single-site power gain start occupied
    (ties broken by index, skipping sites that would break the minimum
    spacing while enough others remain); every other variable starts empty.
    """
    n = problem.n_sites
    if cfg.variables != n:
        raise DomainError(f"encoding covers {cfg.variables} variables, problem has {n}")
    p = np.zeros(n) if problem.avoidance is None else np.asarray(problem.avoidance, dtype=float)
    frozen = {int(i) for i in np.flatnonzero(p > threshold)}
    m = problem.max_turbines
    if len(frozen) > n - m:
        raise ConfigurationError(f"{len(frozen)} frozen sites leave fewer than {m} free sites")
    gain = -np.diag(power_qubo(problem).matrix)
    ranked = sorted((i for i in range(n) if i not in frozen), key=lambda i: (-gain[i], i))
    chosen: list[int] = []
    if problem.min_spacing:
        # greedy pass keeping the spacing constraint, then top up in rank order
        pos = site_positions(problem.grid)
        for i in ranked:
            if len(chosen) < m and all(math.dist(pos[i], pos[j]) >= problem.min_spacing for j in chosen):
                chosen.append(i)
    chosen += [i for i in ranked if i not in chosen][:m - len(chosen)]
    chosen = set(chosen)
    x = np.array([int(i in chosen) for i in range(n)])
    theta = np.empty(cfg.parameters)
    for k in range(cfg.parameters):
        z = x[2 * k]
        xs = x[2 * k + 1] if 2 * k + 1 < n else 0
        theta[k] = _QUADRANT_THETA[(z, xs)]
    return theta, frozen


# ---------------------------------------------------------------------------
# PCE simplex search


def simplex_optimize_pce(model: IsingModel, pce: PceConfig, opt: OptimizerConfig | None = None,
                         problem: FarmProblem | None = None) -> RunResult:
    """Derivative-free minimization of the relaxed cost over the ansatz angles."""
    opt = opt or OptimizerConfig()
    start = time.perf_counter()
    rng = np.random.default_rng(opt.seed)
    t = opt.step_scale
    n_vars = model.dimension
    encoding = pce_enumerate(pce.qubits, pce.body, n_vars)
    _, n_params = pce_build_ansatz(pce.qubits, pce.body)
    work = normalized(model) if opt.normalize else model
    tracker = _BestTracker(model, np.zeros(n_vars, dtype=bool))
    trace: list[tuple[int, float, float]] = []

    def objective(params: np.ndarray) -> float:
        raw = pce_expectations(encoding, pce.qubits, pce.body, params)
        full = relaxed_cost(model, raw, t)
        tracker.offer(raw, full)
        trace.append((len(trace), full, tracker.cost))
        return relaxed_cost(work, raw, t)

    x0 = rng.uniform(0.0, 2.0 * math.pi, n_params)
    out = minimize(objective, x0, opt.method, opt.max_iterations, opt.stall_window)
    return _finish(tracker, problem, out.iterations, start, trace, "pce", opt.seed)
