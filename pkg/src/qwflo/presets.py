"""Built-in test farms: Windfarms A and B, Alltwalis, and the Mosetti regime."""

from __future__ import annotations

from importlib import resources

from .errors import ConfigurationError
from .farm import FarmProblem, GridSpec, TurbineSpec, WindRegime, parse_avoidance

DEFAULT_LAMBDA = 200.0

NORTH_SEA_REGIME = (
    (0, 9.77, 0.063),
    (30, 8.34, 0.059),
    (60, 7.93, 0.055),
    (90, 10.18, 0.078),
    (120, 8.14, 0.083),
    (150, 8.24, 0.065),
    (180, 9.05, 0.114),
    (210, 11.59, 0.146),
    (240, 12.11, 0.121),
    (270, 11.90, 0.085),
    (300, 10.38, 0.064),
    (330, 8.14, 0.067),
)

# tabulated probabilities sum to 0.99; normalized on load
ALLTWALIS_REGIME = (
    (0, 4.65, 0.08),
    (30, 1.55, 0.03),
    (60, 1.55, 0.04),
    (90, 4.65, 0.07),
    (120, 3.10, 0.05),
    (150, 6.20, 0.08),
    (180, 7.97, 0.12),
    (210, 9.30, 0.14),
    (240, 7.97, 0.12),
    (270, 4.65, 0.08),
    (300, 6.20, 0.09),
    (330, 6.20, 0.09),
)

OFFSHORE_THRUST = (
    (4, 0.7000000000),
    (5, 0.722386304),
    (6, 0.773588333),
    (7, 0.773285946),
    (8, 0.767899317),
    (9, 0.732727569),
    (10, 0.688896343),
    (11, 0.623028669),
    (12, 0.500046699),
    (13, 0.373661747),
    (14, 0.293230676),
    (15, 0.238407400),
    (16, 0.196441644),
    (17, 0.163774674),
    (18, 0.137967245),
    (19, 0.117309371),
    (20, 0.100578122),
    (21, 0.086883163),
    (22, 0.075565832),
    (23, 0.066131748),
    (24, 0.058204932),
    (25, 0.051495998),
)

SWT_2_3_93_THRUST = (
    (2.5, 0.85),
    (3.75, 0.85),
    (5.0, 0.82),
    (6.25, 0.82),
    (7.5, 0.82),
    (8.75, 0.82),
    (10.0, 0.8),
    (11.25, 0.62),
    (12.5, 0.4),
    (13.75, 0.3),
    (15.0, 0.2),
    (16.25, 0.15),
    (17.5, 0.1),
    (18.75, 0.08),
    (20.0, 0.05),
)

OFFSHORE_TURBINE = TurbineSpec(rotor_radius=82.0, hub_height=107.0, wake_expansion=0.094, thrust_table=OFFSHORE_THRUST)
ALLTWALIS_TURBINE = TurbineSpec(rotor_radius=46.5, hub_height=90.0, wake_expansion=0.154, thrust_table=SWT_2_3_93_THRUST)

WINDFARM_A_SIDE = 3940.0
WINDFARM_B_SIDE = 7872.0
ALLTWALIS_SIDE = 1581.13
ALLTWALIS_MIN_SPACING = 465.0

SUPPORTED_SIZES = {
    "windfarm_a": (4, 7, 9),
    "windfarm_b": (7, 9),
    "alltwalis": (7, 8, 9),
}
PRESET_NAMES = ("windfarm_a", "windfarm_b", "alltwalis", "mosetti_swr")


def north_sea_regime() -> WindRegime:
    return WindRegime.from_table(NORTH_SEA_REGIME)


def alltwalis_regime() -> WindRegime:
    return WindRegime.from_table(ALLTWALIS_REGIME, normalize=True)


def mosetti_regime(speed: float = 12.0) -> WindRegime:
    """Second Mosetti benchmark: constant speed every 10 degrees, equal weights."""
    return WindRegime.from_table([(10 * k, speed, 1 / 36) for k in range(36)])


def alltwalis_avoidance(side_count: int) -> tuple[float, ...]:
    text = resources.files("qwflo").joinpath("data", f"alltwalis_p{side_count}.txt").read_text(encoding="utf-8")
    values = parse_avoidance(text)
    if len(values) != side_count**2:
        raise ConfigurationError(f"avoidance data for L={side_count} has {len(values)} entries")
    return tuple(values)


def load_preset(name: str, side_count: int, lam: float = DEFAULT_LAMBDA) -> FarmProblem:
    """Fully populated problem for a named test farm at grid size ``side_count``."""
    weights = (lam, lam, lam)
    if name == "mosetti_swr":
        grid = GridSpec(side_count, WINDFARM_A_SIDE)
        return FarmProblem(grid, OFFSHORE_TURBINE, mosetti_regime(), min(16, grid.n_sites),
                           weights=weights, name=f"{name}_L{side_count}")
    if name not in SUPPORTED_SIZES:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    if side_count not in SUPPORTED_SIZES[name]:
        raise ConfigurationError(f"preset {name!r} is defined for L in {SUPPORTED_SIZES[name]}, not {side_count}")
    label = f"{name}_L{side_count}"
    if name == "windfarm_a":
        return FarmProblem(GridSpec(side_count, WINDFARM_A_SIDE), OFFSHORE_TURBINE, north_sea_regime(), 16,
                           weights=weights, name=label)
    if name == "windfarm_b":
        return FarmProblem(GridSpec(side_count, WINDFARM_B_SIDE), OFFSHORE_TURBINE, north_sea_regime(), 49,
                           weights=weights, name=label)
    return FarmProblem(
        GridSpec(side_count, ALLTWALIS_SIDE),
        ALLTWALIS_TURBINE,
        alltwalis_regime(),
        10,
        min_spacing=ALLTWALIS_MIN_SPACING,
        avoidance=alltwalis_avoidance(side_count),
        weights=weights,
        name=label,
    )
