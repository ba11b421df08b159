import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qwflo.encodings import (
    SQOE,
    EncodingMap,
    PceConfig,
    decode_spins,
    pce_build_ansatz,
    pce_enumerate,
    pce_expectations,
    pce_min_qubits,
    sqoe_assign,
    sqoe_expectations,
    sqoe_raw,
)
from qwflo.errors import CapacityError, ConfigurationError, DomainError
from qwflo.sim import PauliString, exact_expectation, run_circuit

# (N, k, n, rotations, CNOTs) for every PCE configuration that was run
GATE_TABLE = [
    (16, 1, 6, 24, 10),
    (16, 2, 4, 24, 9),
    (16, 3, 5, 40, 16),
    (16, 4, 6, 60, 25),
    (49, 1, 17, 68, 32),
    (49, 6, 8, 112, 49),
    (49, 10, 12, 264, 121),
    (64, 2, 8, 48, 21),
    (64, 3, 7, 56, 24),
    (64, 4, 7, 70, 30),
    (64, 6, 8, 112, 49),
    (81, 2, 8, 48, 21),
    (81, 3, 7, 56, 24),
    (81, 7, 9, 144, 64),
    (81, 8, 10, 180, 81),
]


class TestPce:
    def test_z_block_of_three_qubits(self):
        enc = pce_enumerate(3, 2, 9)
        z_block = {str(p) for p in enc.observables[6:]}
        assert z_block == {"Z0Z1", "Z0Z2", "Z1Z2"}
        assert [str(p) for p in enc.observables[:3]] == ["X0X1", "X0X2", "X1X2"]

    def test_capacity(self):
        assert PceConfig(4, 2).capacity == 18
        assert len(pce_enumerate(4, 2, 16)) == 16

    def test_capacity_error(self):
        with pytest.raises(CapacityError):
            pce_enumerate(2, 1, 7)

    @pytest.mark.parametrize("n,k", [(1, 1), (4, 0), (4, 5)])
    def test_bad_config(self, n, k):
        with pytest.raises(ConfigurationError):
            PceConfig(n, k)

    @pytest.mark.parametrize("N,k,n,rot,cx", GATE_TABLE)
    def test_gate_table(self, N, k, n, rot, cx):
        assert 3 * math.comb(n, k) >= N
        circ, count = pce_build_ansatz(n, k)
        assert (circ.rotation_count, circ.cnot_count, count) == (rot, cx, rot)

    @pytest.mark.parametrize("N,k,n,rot,cx", GATE_TABLE)
    def test_observables_distinct_with_uniform_weight(self, N, k, n, rot, cx):
        enc = pce_enumerate(n, k, N)
        assert len({p.letters for p in enc.observables}) == N
        assert {p.weight for p in enc.observables} == {k}

    def test_min_qubits(self):
        assert pce_min_qubits(16, 2) == 4
        assert pce_min_qubits(49, 1) == 17
        assert pce_min_qubits(81, 3) == 7

    def test_ansatz_needs_two_qubits(self):
        with pytest.raises(DomainError):
            pce_build_ansatz(1, 1)

    def test_param_count_checked(self):
        with pytest.raises(DomainError):
            pce_build_ansatz(3, 1, np.zeros(5))

    def test_expectations_are_exact(self, rng):
        n, k = 4, 2
        enc = pce_enumerate(n, k, 16)
        params = rng.uniform(0, 2 * math.pi, 2 * (k + 1) * n)
        state = run_circuit(pce_build_ansatz(n, k, params)[0])
        got = pce_expectations(enc, n, k, params)
        assert np.allclose(got, [exact_expectation(state, p) for p in enc.observables])

    def test_even_y_correlators_can_be_nonzero(self, rng):
        # real amplitudes make every odd-weight Y string vanish, even ones survive
        n, k = 4, 2
        params = rng.uniform(0, 2 * math.pi, 2 * (k + 1) * n)
        vals = pce_expectations(pce_enumerate(n, k, 12), n, k, params)
        assert np.any(np.abs(vals[6:12]) > 1e-6)
        odd = pce_expectations(pce_enumerate(n, 1, 12), n, 1, rng.uniform(0, 6, 2 * 2 * n))
        assert np.allclose(odd[4:8], 0.0)


class TestSqoeAssign:
    def test_exact_fit(self):
        cfg = sqoe_assign(16, 8)
        assert cfg.slot_map() == [(q, a) for q in range(8) for a in "ZX"]
        assert cfg.batches() == [list(range(8))]

    def test_partial_fill(self):
        assert sqoe_assign(3, 2).slot_map() == [(0, "Z"), (0, "X"), (1, "Z")]

    def test_cycling_store(self):
        cfg = sqoe_assign(81, 20)
        assert cfg.parameters == 41
        assert [len(b) for b in cfg.batches()] == [20, 20, 1]
        assert cfg.qubit_of(40) == 0

    def test_no_cycling_capacity(self):
        with pytest.raises(CapacityError):
            sqoe_assign(17, 8, cycling=False)
        assert sqoe_assign(16, 8, cycling=False).parameters == 8

    def test_gapped_leaves_idle_neighbours(self):
        cfg = sqoe_assign(20, 7, gapped=True)
        used = {cfg.qubit_of(p) for p in range(cfg.parameters)}
        assert used == {0, 2, 4}
        assert cfg.active_qubits == 7 // 2

    @pytest.mark.parametrize("q", [0, -1])
    def test_zero_qubits(self, q):
        with pytest.raises(ConfigurationError):
            sqoe_assign(4, q)

    @given(st.integers(1, 120), st.integers(1, 30))
    def test_slots_unique_per_batch(self, n, q):
        cfg = sqoe_assign(n, q)
        for batch in cfg.batches():
            slots = [(cfg.qubit_of(p), a) for p in batch for a in "ZX"]
            assert len(slots) == len(set(slots))
        covered = sorted(v for p in range(cfg.parameters) for v in cfg.variables_of(p))
        assert covered == list(range(n))

    def test_encoding_map(self, tmp_path):
        enc = sqoe_assign(5, 2).encoding_map()
        assert enc.kind == SQOE
        assert [p.label for p in enc.observables] == ["IZ", "IX", "ZI", "XI", "IZ"]
        assert all(p.weight == 1 for p in enc.observables)
        enc.save(tmp_path / "m.txt")
        assert EncodingMap.from_text((tmp_path / "m.txt").read_text()) == enc


class TestSqoeValues:
    def test_theta_zero(self):
        raw = sqoe_raw(np.array([0.0]), sqoe_assign(2, 1))
        assert raw[0] == 1.0
        assert raw[1] == pytest.approx(-0.8674, abs=1e-4)

    def test_shift_zero_crossing(self):
        assert sqoe_raw(np.array([3.5]), sqoe_assign(2, 1))[1] == 0.0

    def test_quarter_turn(self):
        assert sqoe_raw(np.array([math.pi / 2]), sqoe_assign(1, 1))[0] == pytest.approx(0.0, abs=1e-15)

    def test_sign_coverage(self):
        theta = np.linspace(0, 2 * math.pi, 400, endpoint=False)
        pairs = {(bool(z > 0), bool(x > 0)) for z, x in zip(np.cos(theta), np.sin(0.3 * (theta - 3.5)))}
        assert len(pairs) == 4

    def test_expectations_match_analytic(self, rng):
        cfg = sqoe_assign(11, 3)
        theta = rng.uniform(0, 2 * math.pi, cfg.parameters)
        assert np.array_equal(sqoe_expectations(theta, cfg), sqoe_raw(theta, cfg))

    def test_subset_is_nan_elsewhere(self):
        cfg = sqoe_assign(6, 3)
        out = sqoe_expectations(np.zeros(3), cfg, params=[1])
        assert np.isnan(out[[0, 1, 4, 5]]).all() and not np.isnan(out[[2, 3]]).any()

    @pytest.mark.parametrize("theta", [[0.0, np.nan], [1.0]])
    def test_input_checks(self, theta):
        with pytest.raises(DomainError):
            sqoe_expectations(theta, sqoe_assign(4, 2))

    def test_shot_mode_converges(self):
        shots = 4096
        rng = np.random.default_rng(11)
        cfg = sqoe_assign(40, 8)
        bad = 0
        for k in range(100):
            theta = rng.uniform(0, 2 * math.pi, cfg.parameters)
            diff = np.abs(sqoe_expectations(theta, cfg, shots=shots, seed=k) - sqoe_raw(theta, cfg))
            bad += int(np.sum(diff > 5 / math.sqrt(shots)))
        assert bad <= 40  # one percent of the comparisons

    def test_shot_mode_deterministic(self):
        cfg = sqoe_assign(9, 2)
        theta = np.linspace(0, 6, cfg.parameters)
        a = sqoe_expectations(theta, cfg, shots=256, seed=4)
        assert np.array_equal(a, sqoe_expectations(theta, cfg, shots=256, seed=4))

    def test_x_slot_is_a_real_x_measurement(self):
        # the sampled X value agrees with the exact <X> of the shifted rotation
        from qwflo.sim import Circuit

        phi = 0.3 * (5.0 - 3.5)
        exact = exact_expectation(run_circuit(Circuit(1).ry(0, phi)), PauliString("X"))
        sampled = sqoe_expectations([5.0], sqoe_assign(2, 1), shots=200_000, seed=0)[1]
        assert sampled == pytest.approx(exact, abs=0.01)


class TestDecode:
    def test_saturation(self):
        s, x = decode_spins([1.0], t=1e6)
        assert s[0] == pytest.approx(1.0) and x[0] == 1

    def test_tie_break(self):
        s, x = decode_spins([0.0])
        assert s[0] == 0 and x[0] == 0

    def test_value(self):
        s, x = decode_spins([0.5], t=2)
        assert s[0] == pytest.approx(0.7616, abs=1e-4) and x[0] == 1

    def test_bad_t(self):
        with pytest.raises(DomainError):
            decode_spins([0.1], t=0)

    @given(arrays(float, 8, elements=st.floats(-1, 1)), st.floats(0.01, 10))
    def test_open_interval_and_odd(self, raw, t):
        s, _ = decode_spins(raw, t)
        neg, _ = decode_spins(-raw, t)
        assert np.all(np.abs(s) < 1)
        assert np.array_equal(neg, -s)
