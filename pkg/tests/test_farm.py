import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FLAT_THRUST, small_problem
from qwflo.errors import ConfigurationError, DomainError
from qwflo.farm import (
    AS_PRINTED,
    ONE_MINUS_DEFICIT,
    FarmProblem,
    GridSpec,
    Layout,
    TurbineSpec,
    WindArrangement,
    WindRegime,
    kj_interference,
    kj_partial_overlap_area,
    kj_waked_speed,
    layout_power,
    load_problem,
    reduced_windspeed,
    save_problem,
    site_position,
    site_positions,
    thrust_coefficient,
    wake_expansion_factor,
    wake_radius,
    wake_set,
    windspeed_field,
)
from qwflo.presets import (
    ALLTWALIS_TURBINE,
    NORTH_SEA_REGIME,
    OFFSHORE_THRUST,
    OFFSHORE_TURBINE,
    SUPPORTED_SIZES,
    alltwalis_regime,
    load_preset,
    north_sea_regime,
)


class TestTypes:
    def test_direction_normalized(self):
        assert WindArrangement(370.0, 5.0, 1.0).direction_deg == pytest.approx(10.0)
        assert WindArrangement(-30.0, 5.0, 1.0).direction_deg == pytest.approx(330.0)

    @pytest.mark.parametrize("args", [(0, -1.0, 0.5), (0, 5.0, -0.1), (0, 5.0, 1.5)])
    def test_arrangement_rejects(self, args):
        with pytest.raises(ConfigurationError):
            WindArrangement(*args)

    def test_regime_must_sum_to_one(self):
        with pytest.raises(ConfigurationError):
            WindRegime.from_table([(0, 5, 0.5), (90, 5, 0.4)])
        r = WindRegime.from_table([(0, 5, 0.5), (90, 5, 0.4)], normalize=True)
        assert sum(a.probability for a in r) == pytest.approx(1.0, abs=1e-12)

    def test_empty_regime(self):
        with pytest.raises(ConfigurationError):
            WindRegime(())

    @pytest.mark.parametrize("table", [((5, 0.5), (4, 0.6)), ((5, 1.0),), ((5, 0.0),)])
    def test_turbine_rejects_bad_thrust(self, table):
        with pytest.raises(ConfigurationError):
            TurbineSpec(10.0, 50.0, 0.1, table)

    def test_grid_spacing(self):
        g = GridSpec(4, 3940.0)
        assert g.spacing == pytest.approx(3940.0 / 3)
        assert g.n_sites == 16

    def test_grid_from_resolution(self):
        assert GridSpec.from_resolution(3940.0, 1313.4).side_count == 3

    def test_problem_checks_avoidance_length(self):
        with pytest.raises(ConfigurationError):
            small_problem(avoidance=(0.0,) * 5)

    def test_layout_from_sites(self):
        assert Layout.from_sites(4, [1, 3]).occupancy == (0, 1, 0, 1)


class TestGeometry:
    @pytest.mark.parametrize("L,side,index,expected", [
        (10, 9.0, 0, (0.0, 0.0)),
        (10, 9.0, 14, (4.0, 1.0)),
        (4, 3940.0, 5, (1313.3333333, 1313.3333333)),
    ])
    def test_site_position(self, L, side, index, expected):
        assert site_position(GridSpec(L, side), index) == pytest.approx(expected)

    @pytest.mark.parametrize("index", [-1, 16])
    def test_site_position_bounds(self, index):
        with pytest.raises(IndexError):
            site_position(GridSpec(4, 1.0), index)

    @pytest.mark.parametrize("turbine,dist,expected", [
        (OFFSHORE_TURBINE, 0.0, 82.0),
        (OFFSHORE_TURBINE, 1000.0, 176.0),
        (ALLTWALIS_TURBINE, 100.0, 61.9),
    ])
    def test_wake_radius(self, turbine, dist, expected):
        assert wake_radius(turbine, dist) == pytest.approx(expected)

    def test_wake_radius_negative(self):
        with pytest.raises(DomainError):
            wake_radius(OFFSHORE_TURBINE, -1.0)

    @given(st.floats(0, 1e4), st.floats(0, 1e4))
    def test_wake_radius_affine_increasing(self, a, b):
        lo, hi = sorted((a, b))
        if hi - lo > 1e-6:
            assert wake_radius(OFFSHORE_TURBINE, hi) > wake_radius(OFFSHORE_TURBINE, lo)
        mid = wake_radius(OFFSHORE_TURBINE, (a + b) / 2)
        assert mid == pytest.approx((wake_radius(OFFSHORE_TURBINE, a) + wake_radius(OFFSHORE_TURBINE, b)) / 2)

    def test_wake_expansion_factor(self):
        assert wake_expansion_factor(90.0, 0.05) == pytest.approx(0.5 / math.log10(1800.0))


class TestThrust:
    @pytest.mark.parametrize("speed,expected", [
        (12.0, 0.500046699),
        (3.0, 0.70),
        (4.5, 0.711193152),
        (40.0, 0.051495998),
    ])
    def test_lookup(self, speed, expected):
        assert thrust_coefficient(OFFSHORE_TURBINE, speed) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("speed,ct", OFFSHORE_THRUST)
    def test_reproduces_nodes(self, speed, ct):
        assert thrust_coefficient(OFFSHORE_TURBINE, speed) == ct

    def test_empty_table(self):
        t = TurbineSpec(10.0, 50.0, 0.1, ())
        with pytest.raises(ConfigurationError):
            thrust_coefficient(t, 5.0)


class TestReducedSpeed:
    def test_as_printed_at_zero_distance(self):
        expected = 12 * (1 - math.sqrt(1 - 0.500046699))
        assert reduced_windspeed(OFFSHORE_TURBINE, 12.0, 0.0, AS_PRINTED) == pytest.approx(expected)
        assert expected == pytest.approx(3.51511, abs=1e-5)

    def test_one_minus_deficit_at_zero_distance(self):
        expected = 12 * math.sqrt(1 - 0.500046699)
        assert reduced_windspeed(OFFSHORE_TURBINE, 12.0, 0.0, ONE_MINUS_DEFICIT) == pytest.approx(expected)

    @pytest.mark.parametrize("mode", [AS_PRINTED, ONE_MINUS_DEFICIT])
    def test_zero_free_speed(self, mode):
        assert reduced_windspeed(OFFSHORE_TURBINE, 0.0, 500.0, mode) == 0.0

    def test_far_field(self):
        assert reduced_windspeed(OFFSHORE_TURBINE, 12.0, 1e9, AS_PRINTED) == pytest.approx(0.0, abs=1e-9)
        assert reduced_windspeed(OFFSHORE_TURBINE, 12.0, 1e9, ONE_MINUS_DEFICIT) == pytest.approx(12.0)

    def test_deficit_factor_monotone_in_distance(self):
        # the deficit shrinks with distance under both readings
        d = np.linspace(0, 5000, 50)
        printed = [reduced_windspeed(OFFSHORE_TURBINE, 12.0, x, AS_PRINTED) for x in d]
        conventional = [reduced_windspeed(OFFSHORE_TURBINE, 12.0, x) for x in d]
        assert np.all(np.diff(printed) <= 0)
        assert np.all(np.diff(conventional) >= 0)

    def test_thrust_of_one_is_rejected(self):
        t = TurbineSpec(10.0, 50.0, 0.1, ((0.0, 0.5),))
        object.__setattr__(t, "thrust_table", ((0.0, 1.0),))
        with pytest.raises(DomainError):
            reduced_windspeed(t, 5.0, 10.0)

    def test_negative_distance(self):
        with pytest.raises(DomainError):
            reduced_windspeed(OFFSHORE_TURBINE, 12.0, -1.0)


class TestWakeSet:
    def test_fig3_shape(self, fig3_problem):
        arr = fig3_problem.regime.arrangements[0]
        sites = sorted(j for j, _ in wake_set(fig3_problem, 14, arr))
        expected = sorted([23, 24, 25] + list(range(32, 37)) + list(range(41, 48)))
        assert sites == expected

    def test_fig3_distances(self, fig3_problem):
        arr = fig3_problem.regime.arrangements[0]
        dist = dict(wake_set(fig3_problem, 14, arr))
        assert dist[24] == pytest.approx(1.0)
        assert dist[41] == pytest.approx(3.0)

    def test_downwind_row_is_empty(self):
        p = small_problem(L=4, direction=0.0)
        arr = p.regime.arrangements[0]
        for source in range(12, 16):
            assert wake_set(p, source, arr) == []

    def test_probability_does_not_change_geometry(self):
        p = small_problem(L=4)
        a = WindArrangement(30.0, 8.0, 1.0)
        b = WindArrangement(30.0, 8.0, 0.0)
        assert wake_set(p, 5, a) == wake_set(p, 5, b)

    @pytest.mark.parametrize("direction", [0.0, 45.0, 90.0, 200.0])
    def test_reversed_wind_swaps_membership(self, direction):
        p = small_problem(L=5)
        fwd = WindArrangement(direction, 10.0, 1.0)
        back = WindArrangement(direction + 180.0, 10.0, 1.0)
        for i in range(p.n_sites):
            for j, _ in wake_set(p, i, fwd):
                assert i in {k for k, _ in wake_set(p, j, back)}

    def test_translation_equivariance(self, fig3_problem):
        arr = fig3_problem.regime.arrangements[0]
        base = {j - 14 for j, _ in wake_set(fig3_problem, 14, arr)}
        shifted = {j - 25 for j, _ in wake_set(fig3_problem, 25, arr)}
        assert base == shifted

    @pytest.mark.parametrize("direction,expected", [(90.0, [0, 1]), (270.0, [1, 2])])
    def test_direction_convention(self, direction, expected):
        # wind from the east (90) blows westward: the eastmost site shades the others
        p = small_problem(L=3, direction=direction)
        arr = p.regime.arrangements[0]
        src = 2 if direction == 90.0 else 0
        assert sorted(j for j, _ in wake_set(p, src, arr)) == expected


class TestLayoutPower:
    def test_empty(self):
        p = load_preset("windfarm_a", 4)
        assert layout_power(p, [0] * 16) == 0.0

    def test_single_turbine(self):
        p = load_preset("mosetti_swr", 4)
        layout = [0] * 16
        layout[5] = 1
        assert layout_power(p, layout) == pytest.approx(12**3 / 3)

    def test_pair_by_hand(self):
        p = small_problem(L=2, direction=0.0)
        layout = [1, 0, 1, 0]
        u = reduced_windspeed(p.turbine, 12.0, 1000.0)
        assert layout_power(p, layout) == pytest.approx(2 * 576 - (1728 - u**3) / 3)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            layout_power(small_problem(), [1, 0])

    @given(st.lists(st.integers(0, 1), min_size=16, max_size=16))
    def test_wakes_only_subtract(self, bits):
        p = load_preset("windfarm_a", 4)
        single = sum(a.probability * a.free_speed**3 / 3 for a in p.regime)
        assert layout_power(p, bits) <= sum(bits) * single + 1e-9


class TestField:
    def test_uniform_without_turbines(self):
        p = small_problem()
        f = windspeed_field(p, [], 10)
        assert np.allclose(f, 12.0)

    def test_single_turbine_wedge(self):
        p = small_problem(L=3, direction=0.0)
        f = windspeed_field(p, [(500.0, 0.0)], 41)
        # row index grows downwind; column 20 is the turbine's centreline
        assert f[10, 20] < 12.0
        assert f[10, 0] == pytest.approx(12.0)
        assert f[0, 20] == pytest.approx(12.0)
        width = [np.sum(f[r] < 12.0 - 1e-9) for r in (5, 20, 40)]
        assert width == sorted(width)

    def test_two_aligned_turbines_deeper(self):
        p = small_problem(L=3, direction=0.0)
        one = windspeed_field(p, [(500.0, 0.0)], 21)
        both = windspeed_field(p, [(500.0, 0.0), (500.0, 500.0)], 21)
        assert both[-1, 10] < one[-1, 10]
        assert np.all(both <= one + 1e-12)

    def test_out_of_bounds(self):
        with pytest.raises(DomainError):
            windspeed_field(small_problem(), [(5000.0, 0.0)], 10)


class TestKaticJensen:
    def test_full_containment(self):
        assert kj_partial_overlap_area(50, 100, 0) == pytest.approx(math.pi * 2500)

    def test_disjoint(self):
        assert kj_partial_overlap_area(50, 100, 200) == 0.0

    def test_lens_of_unit_circles(self):
        # independent midpoint-rule integration of the lens area
        n = 200_000
        x = (np.arange(n) + 0.5) / n
        half = np.minimum(np.sqrt(1 - x**2), np.sqrt(1 - (x - 1) ** 2))
        lens = 2 * np.sum(half) / n
        assert kj_partial_overlap_area(1, 1, 1) == pytest.approx(lens, rel=1e-6)
        assert lens == pytest.approx(1.2284, abs=1e-4)

    @pytest.mark.parametrize("r_t,r_w", [(50, 100), (1, 1), (30, 45)])
    def test_continuity(self, r_t, r_w):
        eps = 1e-10
        for boundary in (r_w - r_t, r_t + r_w):
            if boundary <= 0:
                continue
            lo = kj_partial_overlap_area(r_t, r_w, boundary - eps)
            hi = kj_partial_overlap_area(r_t, r_w, boundary + eps)
            assert abs(lo - hi) < 1e-9 * max(1.0, r_t * r_w) + 1e-6 * eps * r_t

    def test_no_interferers(self):
        assert kj_waked_speed(OFFSHORE_TURBINE, 10.0, []) == 10.0

    def test_single_centerline(self):
        d = 600.0
        ct = thrust_coefficient(OFFSHORE_TURBINE, 10.0)
        expected = 10 * (1 - (1 - math.sqrt(1 - ct)) * (1 + 0.094 * d / 82) ** -2)
        assert kj_waked_speed(OFFSHORE_TURBINE, 10.0, [(d, 0.0)]) == pytest.approx(expected, rel=1e-12)

    def test_root_sum_square(self):
        one = 10.0 - kj_waked_speed(OFFSHORE_TURBINE, 10.0, [(700.0, 30.0)])
        two = 10.0 - kj_waked_speed(OFFSHORE_TURBINE, 10.0, [(700.0, 30.0)] * 2)
        assert two == pytest.approx(math.sqrt(2) * one, rel=1e-12)

    def test_interference_requires_positive_distance(self):
        with pytest.raises(DomainError):
            kj_interference(OFFSHORE_TURBINE, 10.0, 0.0, 0.0)


class TestPresets:
    @pytest.mark.parametrize("name", sorted(SUPPORTED_SIZES))
    def test_regimes_sum_to_one(self, name):
        p = load_preset(name, SUPPORTED_SIZES[name][0])
        assert sum(a.probability for a in p.regime) == pytest.approx(1.0, abs=1e-6)

    def test_windfarm_a(self):
        p = load_preset("windfarm_a", 4)
        assert (p.max_turbines, p.grid.side_length, len(p.regime)) == (16, 3940.0, 12)
        assert p.weights == (200.0, 200.0, 200.0)

    def test_alltwalis(self):
        p = load_preset("alltwalis", 7)
        assert (p.max_turbines, p.min_spacing, p.turbine.wake_expansion) == (10, 465.0, 0.154)
        assert len(p.avoidance) == 49

    def test_mosetti(self):
        p = load_preset("mosetti_swr", 5)
        assert len(p.regime) == 36
        assert all(a.probability == pytest.approx(1 / 36) and a.free_speed == 12.0 for a in p.regime)

    def test_alltwalis_normalized(self):
        raw = 0.99
        assert sum(a.probability for a in alltwalis_regime()) == pytest.approx(1.0)
        assert alltwalis_regime().arrangements[6].probability == pytest.approx(0.12 / raw)

    def test_north_sea_table(self):
        assert [a.free_speed for a in north_sea_regime()] == [row[1] for row in NORTH_SEA_REGIME]

    @pytest.mark.parametrize("name,L", [("windfarm_a", 5), ("windfarm_b", 4), ("nowhere", 4)])
    def test_unsupported(self, name, L):
        with pytest.raises(ConfigurationError):
            load_preset(name, L)

    @pytest.mark.parametrize("L", [7, 8, 9])
    def test_alltwalis_budget_fits(self, L):
        # enough free, mutually spaced sites exist for the full budget
        p = load_preset("alltwalis", L)
        pos = site_positions(p.grid)
        chosen = []
        for i in range(p.n_sites):
            if p.avoidance[i] <= 0.5 and all(math.dist(pos[i], pos[j]) >= p.min_spacing for j in chosen):
                chosen.append(i)
        assert len(chosen) >= p.max_turbines


class TestSerialization:
    def test_round_trip(self, tmp_path):
        p = load_preset("alltwalis", 8)
        save_problem(p, tmp_path / "p.json")
        q = load_problem(tmp_path / "p.json")
        assert q == p

    def test_avoidance_file_reference(self, tmp_path):
        (tmp_path / "p.txt").write_text("0 1 0 1\n")
        doc = {
            "grid": {"side_count": 2, "side_length": 100.0},
            "turbine": {"rotor_radius": 5.0, "wake_expansion": 0.1, "thrust_table": [list(r) for r in FLAT_THRUST]},
            "regime": [[0, 8.0, 1.0]],
            "max_turbines": 1,
            "avoidance": str(tmp_path / "p.txt"),
        }
        (tmp_path / "p.json").write_text(json.dumps(doc))
        assert load_problem(tmp_path / "p.json").avoidance == (0.0, 1.0, 0.0, 1.0)

    def test_missing_field(self, tmp_path):
        (tmp_path / "p.json").write_text(json.dumps({"grid": {"side_count": 2, "side_length": 1.0}}))
        with pytest.raises(ConfigurationError):
            load_problem(tmp_path / "p.json")

    def test_with_weights(self):
        p = load_preset("windfarm_a", 4).with_weights(10.0)
        assert p.weights == (10.0, 10.0, 10.0)
        assert isinstance(p, FarmProblem)
