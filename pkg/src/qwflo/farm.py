"""Windfarm physics: grids, wind regimes, turbines, Jensen wakes and layout power.

Conventions
-----------
* Sites are numbered row-major from the top-left corner, zero-based.  Site
  ``i`` sits at ``(col * spacing, row * spacing)`` with ``row = i // L`` and
  ``col = i % L``; the y axis points *down* the grid (towards the south).
* ``direction_deg`` is the bearing the wind blows *from*, clockwise from grid
  north (up).  Wind from 0 degrees therefore pushes wakes towards larger row
  numbers.
* Power is the dimensionless-probability-weighted ``v**3 / 3`` proxy ("model
  power"); no conversion to watts is attempted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

AS_PRINTED = "as_printed"
ONE_MINUS_DEFICIT = "one_minus_deficit"
JENSEN_INTERPRETATIONS = (AS_PRINTED, ONE_MINUS_DEFICIT)
DEFAULT_JENSEN = ONE_MINUS_DEFICIT

# relative tolerance for the point-in-cone test
_GEOM_EPS = 1e-9


@dataclass(frozen=True)
class WindArrangement:
    direction_deg: float
    free_speed: float
    probability: float

    def __post_init__(self):
        if not math.isfinite(self.direction_deg):
            raise ConfigurationError("wind direction must be finite")
        object.__setattr__(self, "direction_deg", float(self.direction_deg) % 360.0)
        if self.free_speed < 0:
            raise ConfigurationError(f"free speed must be >= 0, got {self.free_speed}")
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigurationError(f"probability must lie in [0, 1], got {self.probability}")


@dataclass(frozen=True)
class WindRegime:
    arrangements: tuple[WindArrangement, ...]

    def __post_init__(self):
        arrangements = tuple(self.arrangements)
        object.__setattr__(self, "arrangements", arrangements)
        if not arrangements:
            raise ConfigurationError("a wind regime needs at least one arrangement")
        total = sum(a.probability for a in arrangements)
        if abs(total - 1.0) > 1e-6:
            raise ConfigurationError(f"regime probabilities sum to {total}, expected 1")

    @classmethod
    def from_table(cls, rows: Iterable[Sequence[float]], normalize: bool = False) -> "WindRegime":
        """Build a regime from ``(direction, speed, probability)`` rows.

        With ``normalize=True`` the probabilities are rescaled to sum to one,
        which is needed for tabulated data that was rounded at source.
        """
        rows = [tuple(map(float, r)) for r in rows]
        if normalize:
            total = sum(r[2] for r in rows)
            if total <= 0:
                raise ConfigurationError("cannot normalize a regime with zero total probability")
            rows = [(d, v, p / total) for d, v, p in rows]
        return cls(tuple(WindArrangement(d, v, p) for d, v, p in rows))

    @classmethod
    def unidirectional(cls, direction_deg: float, speed: float) -> "WindRegime":
        return cls((WindArrangement(direction_deg, speed, 1.0),))

    def __len__(self):
        return len(self.arrangements)

    def __iter__(self):
        return iter(self.arrangements)


@dataclass(frozen=True)
class TurbineSpec:
    rotor_radius: float
    hub_height: float
    wake_expansion: float
    thrust_table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        table = tuple((float(s), float(c)) for s, c in self.thrust_table)
        object.__setattr__(self, "thrust_table", table)
        if self.rotor_radius <= 0:
            raise ConfigurationError("rotor radius must be positive")
        if self.wake_expansion <= 0:
            raise ConfigurationError("wake expansion factor must be positive")
        speeds = [s for s, _ in table]
        if any(b <= a for a, b in zip(speeds, speeds[1:])):
            raise ConfigurationError("thrust table speeds must be strictly increasing")
        if any(not 0.0 < c < 1.0 for _, c in table):
            raise ConfigurationError("thrust coefficients must lie strictly between 0 and 1")


@dataclass(frozen=True)
class GridSpec:
    side_count: int
    side_length: float

    def __post_init__(self):
        if int(self.side_count) != self.side_count or self.side_count < 2:
            raise ConfigurationError(f"grid side count must be an integer >= 2, got {self.side_count}")
        if self.side_length <= 0:
            raise ConfigurationError("grid side length must be positive")

    @property
    def spacing(self) -> float:
        return self.side_length / (self.side_count - 1)

    @property
    def n_sites(self) -> int:
        return self.side_count * self.side_count

    @classmethod
    def from_resolution(cls, side_length: float, resolution: float) -> "GridSpec":
        """Grid whose side count is ``floor(side / resolution) + 1``."""
        return cls(int(math.floor(side_length / resolution)) + 1, side_length)


@dataclass(frozen=True)
class FarmProblem:
    grid: GridSpec
    turbine: TurbineSpec
    regime: WindRegime
    max_turbines: int
    min_spacing: float | None = None
    avoidance: tuple[float, ...] | None = None
    weights: tuple[float, float, float] = (200.0, 200.0, 200.0)
    jensen_interpretation: str = DEFAULT_JENSEN
    # only used by illustrative fixtures; physical presets leave wakes uncapped
    wake_length_cap: float | None = None
    name: str = "custom"

    def __post_init__(self):
        n = self.grid.n_sites
        if not 0 <= self.max_turbines <= n:
            raise ConfigurationError(f"max_turbines must lie in [0, {n}], got {self.max_turbines}")
        if self.min_spacing is not None and self.min_spacing < 0:
            raise ConfigurationError("minimum spacing must be non-negative")
        if self.avoidance is not None:
            p = tuple(float(v) for v in self.avoidance)
            if len(p) != n:
                raise ConfigurationError(f"avoidance vector has length {len(p)}, expected {n}")
            if any(not 0.0 <= v <= 1.0 for v in p):
                raise ConfigurationError("avoidance entries must lie in [0, 1]")
            object.__setattr__(self, "avoidance", p)
        w = tuple(float(v) for v in self.weights)
        if len(w) != 3 or any(v < 0 for v in w):
            raise ConfigurationError("weights must be three non-negative numbers")
        object.__setattr__(self, "weights", w)
        if self.jensen_interpretation not in JENSEN_INTERPRETATIONS:
            raise ConfigurationError(f"unknown Jensen interpretation {self.jensen_interpretation!r}")

    @property
    def n_sites(self) -> int:
        return self.grid.n_sites

    def with_weights(self, lam1: float, lam2: float | None = None, lam3: float | None = None) -> "FarmProblem":
        """Copy with new constraint weights; a single value is applied to all three."""
        lam2 = lam1 if lam2 is None else lam2
        lam3 = lam1 if lam3 is None else lam3
        return replace(self, weights=(lam1, lam2, lam3))


@dataclass(frozen=True)
class Layout:
    occupancy: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(v) for v in self.occupancy)
        if any(v not in (0, 1) for v in occ):
            raise DomainError("layout entries must be 0 or 1")
        object.__setattr__(self, "occupancy", occ)

    @classmethod
    def from_sites(cls, n: int, sites: Iterable[int]) -> "Layout":
        occ = [0] * n
        for s in sites:
            occ[s] = 1
        return cls(tuple(occ))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.occupancy, dtype=float)

    def __len__(self):
        return len(self.occupancy)


# ---------------------------------------------------------------------------
# geometry and wake physics


def site_position(grid: GridSpec, index: int) -> tuple[float, float]:
    if not 0 <= index < grid.n_sites:
        raise IndexError(f"site index {index} outside [0, {grid.n_sites})")
    row, col = divmod(index, grid.side_count)
    return (col * grid.spacing, row * grid.spacing)


def site_positions(grid: GridSpec) -> np.ndarray:
    """``(N, 2)`` array of all site coordinates in metres."""
    idx = np.arange(grid.n_sites)
    return np.stack([(idx % grid.side_count) * grid.spacing, (idx // grid.side_count) * grid.spacing], axis=1)


def wake_expansion_factor(hub_height: float, roughness: float, constant: float = 0.5) -> float:
    """Empirical ``A / log10(h / z0)`` wake growth rate."""
    return constant / math.log10(hub_height / roughness)


def wake_radius(turbine: TurbineSpec, distance: float) -> float:
    if distance < 0:
        raise DomainError(f"distance must be non-negative, got {distance}")
    return turbine.rotor_radius + turbine.wake_expansion * distance


def thrust_coefficient(turbine: TurbineSpec, speed: float) -> float:
    """Piecewise-linear thrust lookup, clamped to the end values of the table."""
    if not turbine.thrust_table:
        raise ConfigurationError("turbine has an empty thrust table")
    if speed < 0:
        raise DomainError("speed must be non-negative")
    speeds, cts = zip(*turbine.thrust_table)
    return float(np.interp(speed, speeds, cts))


def _deficit_factor(turbine: TurbineSpec, ct: float, distance):
    if ct >= 1:
        raise DomainError(f"thrust coefficient {ct} >= 1 has no real induction")
    ratio = turbine.rotor_radius / (turbine.rotor_radius + turbine.wake_expansion * distance)
    return (1.0 - math.sqrt(1.0 - ct)) * ratio**2


def reduced_windspeed(
    turbine: TurbineSpec,
    free_speed: float,
    distance: float,
    interpretation: str = DEFAULT_JENSEN,
) -> float:
    """Wind speed seen ``distance`` metres downwind of a turbine.

    ``"as_printed"`` returns ``v * D`` where ``D = (1 - sqrt(1 - C_T)) (r_t / r_w)**2``;
    ``"one_minus_deficit"`` returns the conventional ``v * (1 - D)``.
    """
    if distance < 0 or free_speed < 0:
        raise DomainError("distance and free speed must be non-negative")
    if interpretation not in JENSEN_INTERPRETATIONS:
        raise ConfigurationError(f"unknown Jensen interpretation {interpretation!r}")
    if free_speed == 0:
        return 0.0
    deficit = _deficit_factor(turbine, thrust_coefficient(turbine, free_speed), distance)
    if interpretation == AS_PRINTED:
        return free_speed * deficit
    return free_speed * (1.0 - deficit)


def flow_vector(direction_deg: float) -> np.ndarray:
    """Unit vector the wind blows *towards*, in grid (x right, y down) coordinates."""
    th = math.radians(direction_deg)
    return np.array([-math.sin(th), math.cos(th)])


def _relative_offsets(points_from: np.ndarray, points_to: np.ndarray, direction_deg: float):
    """Downwind and crosswind offsets of every ``to`` point relative to every ``from`` point."""
    fx, fy = flow_vector(direction_deg)
    dx = points_to[None, :, 0] - points_from[:, None, 0]
    dy = points_to[None, :, 1] - points_from[:, None, 1]
    along = dx * fx + dy * fy
    across = -dx * fy + dy * fx
    return along, across


def wake_geometry(problem: FarmProblem, arrangement: WindArrangement):
    """Directed wake membership for all site pairs under one arrangement.

    Returns ``(mask, along)`` where ``mask[i, j]`` is true when site ``j`` lies
    in the wake cone of a turbine at ``i`` and ``along[i, j]`` is the downwind
    distance from ``i`` to ``j``.
    """
    pos = site_positions(problem.grid)
    along, across = _relative_offsets(pos, pos, arrangement.direction_deg)
    t = problem.turbine
    tol = _GEOM_EPS * problem.grid.spacing
    mask = (along > tol) & (np.abs(across) <= t.rotor_radius + t.wake_expansion * along + tol)
    if problem.wake_length_cap is not None:
        mask &= along <= problem.wake_length_cap + tol
    return mask, along


def wake_set(problem: FarmProblem, source: int, arrangement: WindArrangement) -> list[tuple[int, float]]:
    """Sites in the wake of ``source`` as ``(site, downwind distance)`` pairs, by site index."""
    if not 0 <= source < problem.n_sites:
        raise IndexError(f"site index {source} outside [0, {problem.n_sites})")
    mask, along = wake_geometry(problem, arrangement)
    return [(int(j), float(along[source, j])) for j in np.flatnonzero(mask[source])]


def layout_power(problem: FarmProblem, layout: Layout | Sequence[int]) -> float:
    """Linear-superposition model power of a layout.

    Every occupied site earns ``p v**3 / 3`` per arrangement and loses
    ``p (v**3 - u**3) / 3`` for each occupied site in whose wake it sits.
    """
    occ = layout.occupancy if isinstance(layout, Layout) else tuple(int(v) for v in layout)
    if len(occ) != problem.n_sites:
        raise DomainError(f"layout length {len(occ)} does not match {problem.n_sites} sites")
    occupied = [i for i, v in enumerate(occ) if v]
    total = 0.0
    for arr in problem.regime:
        v3 = arr.free_speed**3
        for i in occupied:
            loss = 0.0
            for j, dist in wake_set(problem, i, arr):
                if occ[j]:
                    u = reduced_windspeed(problem.turbine, arr.free_speed, dist, problem.jensen_interpretation)
                    loss += (v3 - u**3) / 3.0
            total += arr.probability * (v3 / 3.0 - loss)
    return total


def windspeed_field(problem: FarmProblem, turbines: Sequence[tuple[float, float]], resolution: int) -> np.ndarray:
    """Probability-weighted effective wind speed on a ``resolution x resolution`` raster.

    The raster spans the square ``[0, W_L]**2`` with the same orientation as
    the site grid (row 0 at the top).  Each upwind turbine whose wake cone
    covers a point removes ``v * (1 - sqrt(1 - C_T)) (r_t / r_w)**2`` from the
    free speed; deficits add linearly and the per-arrangement speed is clamped
    at zero.
    """
    if resolution < 2:
        raise DomainError("field resolution must be at least 2")
    side = problem.grid.side_length
    pts = np.asarray(turbines, dtype=float).reshape(-1, 2)
    tol = _GEOM_EPS * side
    if pts.size and (pts.min() < -tol or pts.max() > side + tol):
        raise DomainError("turbine lies outside the field bounds")
    axis = np.linspace(0.0, side, resolution)
    xx, yy = np.meshgrid(axis, axis)
    cells = np.stack([xx.ravel(), yy.ravel()], axis=1)
    t = problem.turbine
    field = np.zeros(len(cells))
    for arr in problem.regime:
        speed = np.full(len(cells), arr.free_speed)
        if len(pts) and arr.free_speed > 0:
            along, across = _relative_offsets(pts, cells, arr.direction_deg)
            inside = (along > tol) & (np.abs(across) <= t.rotor_radius + t.wake_expansion * np.maximum(along, 0) + tol)
            ct = thrust_coefficient(t, arr.free_speed)
            ratio = t.rotor_radius / (t.rotor_radius + t.wake_expansion * np.maximum(along, 0))
            deficit = arr.free_speed * (1.0 - math.sqrt(1.0 - ct)) * ratio**2
            speed = np.maximum(speed - np.where(inside, deficit, 0.0).sum(axis=0), 0.0)
        field += arr.probability * speed
    return field.reshape(resolution, resolution)


# ---------------------------------------------------------------------------
# Katic-Jensen variant


def kj_partial_overlap_area(r_t: float, r_w: float, center_offset: float) -> float:
    """Area of the rotor disc (radius ``r_t``) covered by a wake disc (radius ``r_w``)."""
    if r_t <= 0 or r_w <= 0 or center_offset < 0:
        raise DomainError("radii must be positive and the offset non-negative")
    d = center_offset
    if d + r_t <= r_w:
        return math.pi * r_t**2
    if d + r_w <= r_t:
        return math.pi * r_w**2
    if d >= r_t + r_w:
        return 0.0
    alpha = math.acos(min(1.0, max(-1.0, (r_w**2 + d**2 - r_t**2) / (2 * r_w * d))))
    beta = math.acos(min(1.0, max(-1.0, (r_t**2 + d**2 - r_w**2) / (2 * r_t * d))))
    return 0.5 * r_w**2 * (2 * alpha - math.sin(2 * alpha)) + 0.5 * r_t**2 * (2 * beta - math.sin(2 * beta))


def kj_interference(turbine: TurbineSpec, free_speed: float, distance: float, offset: float) -> float:
    """Single-turbine interference term ``U_kj`` of the Katic-Jensen model."""
    if distance <= 0:
        raise DomainError("interferer distance must be positive")
    ct = thrust_coefficient(turbine, free_speed)
    rt = turbine.rotor_radius
    area = kj_partial_overlap_area(rt, wake_radius(turbine, distance), abs(offset))
    return (1.0 - math.sqrt(1.0 - ct)) * (1.0 + turbine.wake_expansion * distance / rt) ** -2 * area / (math.pi * rt**2)


def kj_waked_speed(
    turbine: TurbineSpec,
    free_speed: float,
    interferers: Sequence[tuple[float, float]],
) -> float:
    """Speed at a turbine waked by ``(downwind distance, crosswind offset)`` interferers.

    Interferences combine as a root sum of squares.
    """
    if not interferers or free_speed == 0:
        return float(free_speed)
    terms = [kj_interference(turbine, free_speed, d, o) for d, o in interferers]
    deficit = math.sqrt(sum(u * u for u in terms))
    return max(free_speed * (1.0 - deficit), 0.0)


# ---------------------------------------------------------------------------
# serialization


def problem_to_dict(problem: FarmProblem) -> dict:
    return {
        "name": problem.name,
        "grid": {"side_count": problem.grid.side_count, "side_length": problem.grid.side_length},
        "turbine": {
            "rotor_radius": problem.turbine.rotor_radius,
            "hub_height": problem.turbine.hub_height,
            "wake_expansion": problem.turbine.wake_expansion,
            "thrust_table": [list(r) for r in problem.turbine.thrust_table],
        },
        "regime": [[a.direction_deg, a.free_speed, a.probability] for a in problem.regime],
        "max_turbines": problem.max_turbines,
        "min_spacing": problem.min_spacing,
        "avoidance": None if problem.avoidance is None else list(problem.avoidance),
        "weights": list(problem.weights),
        "jensen_interpretation": problem.jensen_interpretation,
        "wake_length_cap": problem.wake_length_cap,
    }


def problem_from_dict(data: dict) -> FarmProblem:
    try:
        grid = GridSpec(int(data["grid"]["side_count"]), float(data["grid"]["side_length"]))
        t = data["turbine"]
        turbine = TurbineSpec(
            float(t["rotor_radius"]),
            float(t.get("hub_height", 0.0)),
            float(t["wake_expansion"]),
            tuple(tuple(r) for r in t.get("thrust_table", ())),
        )
        regime = WindRegime.from_table(data["regime"], normalize=bool(data.get("normalize_regime", False)))
        avoidance = data.get("avoidance")
        if isinstance(avoidance, str):
            avoidance = read_avoidance(avoidance)
        return FarmProblem(
            grid=grid,
            turbine=turbine,
            regime=regime,
            max_turbines=int(data["max_turbines"]),
            min_spacing=data.get("min_spacing"),
            avoidance=None if avoidance is None else tuple(avoidance),
            weights=tuple(data.get("weights", (200.0, 200.0, 200.0))),
            jensen_interpretation=data.get("jensen_interpretation", DEFAULT_JENSEN),
            wake_length_cap=data.get("wake_length_cap"),
            name=data.get("name", "custom"),
        )
    except KeyError as exc:
        raise ConfigurationError(f"problem document is missing field {exc}") from None


def load_problem(path: str | Path) -> FarmProblem:
    with open(path, encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))


def save_problem(problem: FarmProblem, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2)


def read_avoidance(path: str | Path) -> list[float]:
    """Read a flat whitespace-separated avoidance vector in site order."""
    return [float(tok) for tok in Path(path).read_text(encoding="utf-8").split()]


def parse_avoidance(text: str) -> list[float]:
    return [float(tok) for tok in text.split()]


def format_avoidance(values: Sequence[float]) -> str:
    return " ".join(f"{v:g}" for v in values) + "\n"


def write_field_csv(field: np.ndarray, path: str | Path) -> None:
    np.savetxt(path, field, delimiter=",", fmt="%.6f")
