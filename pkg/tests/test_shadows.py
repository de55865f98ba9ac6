import itertools
import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf

from entropybench.ansatz import build_circuit, evolve_noisy
from entropybench.shadows import (
    BASES,
    BASIS_CHANGE,
    SnapshotSet,
    collect_snapshots,
    derandomized_settings,
    gamma,
    purity_estimate,
    resample_randomized,
    run_protocol,
    sample_bound,
    sample_settings,
    setting_probabilities,
    shadow_purity,
)
from entropybench.sim import DensityMatrix, NoiseModel, index_to_bits, new_zero_state, purity

KET = [np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)]


def snapshot_matrix(setting, bits):
    """Explicit ``kron_q (3 U^dag |b><b| U - I)`` for one outcome."""
    factors = []
    for basis, bit in zip(setting, bits):
        u = BASIS_CHANGE[basis]
        proj = u.conj().T @ np.outer(KET[bit], KET[bit]) @ u
        factors.append(3 * proj - np.eye(2))
    return reduce(np.kron, factors)


def literal_estimate(snaps):
    """Pair sum over distinct settings and all outcome pairs, with no shortcuts."""
    m = len(snaps)
    averaged = [
        sum(snapshot_matrix(s, b) for b in block) / len(block) for s, block in zip(snaps.settings, snaps.outcomes)
    ]
    total = 0.0
    for i in range(m):
        for j in range(i):
            total += np.trace(averaged[i] @ averaged[j]).real
    return 2 * total / (m * (m - 1))


def literal_gamma_estimate(snaps):
    """Same pair sum written with the per-qubit ``9 gamma - 4`` product."""
    m = len(snaps)
    total = 0.0
    for i in range(m):
        for j in range(i):
            ui, uj = snaps.settings[i], snaps.settings[j]
            acc = 0.0
            for a in snaps.outcomes[i]:
                for b in snaps.outcomes[j]:
                    acc += math.prod(9 * gamma(x, int(s), y, int(t)) - 4 for x, s, y, t in zip(ui, a, uj, b))
            total += acc / (len(snaps.outcomes[i]) * len(snaps.outcomes[j]))
    return 2 * total / (m * (m - 1))


def random_state(n, rng, rank=None):
    dim = 2**n
    a = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho))


class TestGamma:
    def test_table_examples(self):
        assert gamma("Z", 0, "Z", 0) == 1
        assert gamma("X", 0, "Z", 1) == 0.5
        assert gamma("X", 0, "X", 1) == 0

    @pytest.mark.parametrize("u,s,u2,s2", list(itertools.product(BASES, (0, 1), BASES, (0, 1))))
    def test_matches_overlap_and_is_symmetric(self, u, s, u2, s2):
        amp = KET[s].conj() @ BASIS_CHANGE[u] @ BASIS_CHANGE[u2].conj().T @ KET[s2]
        assert gamma(u, s, u2, s2) == pytest.approx(abs(amp) ** 2, abs=1e-14)
        assert gamma(u, s, u2, s2) == gamma(u2, s2, u, s)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            gamma("W", 0, "Z", 0)


class TestSettings:
    def test_count_and_width(self):
        out = sample_settings(3, 50, np.random.default_rng(0))
        assert len(out) == 50 and all(len(s) == 3 and set(s) <= set(BASES) for s in out)

    def test_uniform_per_position(self):
        out = np.array([list(s) for s in sample_settings(2, 50_000, np.random.default_rng(1))])
        for pos in range(2):
            for basis in BASES:
                assert np.mean(out[:, pos] == basis) == pytest.approx(1 / 3, abs=0.01)

    def test_seeded(self):
        assert sample_settings(3, 20, np.random.default_rng(9)) == sample_settings(3, 20, np.random.default_rng(9))

    def test_at_least_two(self):
        with pytest.raises(ValueError):
            sample_settings(2, 1, np.random.default_rng(0))

    def test_derandomized(self):
        assert derandomized_settings(1) == ["X", "Y", "Z"]
        assert len(derandomized_settings(2)) == 9
        three = derandomized_settings(3)
        assert len(three) == 27 == len(set(three))


class TestSnapshots:
    def test_z_eigenstate(self):
        out = collect_snapshots(new_zero_state(1), "Z", 200, np.random.default_rng(0))
        assert not out.any()

    def test_x_basis_on_zero_is_fair(self):
        out = collect_snapshots(new_zero_state(1), "X", 10_000, np.random.default_rng(0))
        assert out.mean() == pytest.approx(0.5, abs=0.02)

    def test_plus_state_in_x_basis(self):
        plus = DensityMatrix.from_statevector(np.array([1, 1]) / np.sqrt(2))
        assert not collect_snapshots(plus, "X", 200, np.random.default_rng(0)).any()

    def test_y_eigenstate(self):
        plus_i = DensityMatrix.from_statevector(np.array([1, 1j]) / np.sqrt(2))
        assert not collect_snapshots(plus_i, "Y", 200, np.random.default_rng(0)).any()

    def test_snapshot_set_validation(self):
        with pytest.raises(ValueError):
            SnapshotSet(["XZ"], [])
        with pytest.raises(ValueError):
            SnapshotSet(["XQ"], [np.zeros((2, 2), dtype=np.uint8)])
        with pytest.raises(ValueError):
            SnapshotSet(["XZ"], [np.zeros((2, 3), dtype=np.uint8)])


class TestEstimator:
    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 3), m=st.integers(2, 5), k=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
    def test_fast_form_equals_literal_sums(self, n, m, k, seed):
        rng = np.random.default_rng(seed)
        rho = random_state(n, rng)
        snaps = run_protocol(rho, sample_settings(n, m, rng), k, rng)
        fast = purity_estimate(snaps)
        assert fast == pytest.approx(literal_estimate(snaps), abs=1e-10)
        assert fast == pytest.approx(literal_gamma_estimate(snaps), abs=1e-10)

    def test_repeated_settings_handled(self):
        rng = np.random.default_rng(3)
        snaps = run_protocol(random_state(2, rng), ["XZ", "XZ", "YY"], 5, rng)
        assert purity_estimate(snaps) == pytest.approx(literal_estimate(snaps), abs=1e-10)

    @pytest.mark.parametrize("n", [1, 2])
    @pytest.mark.parametrize("kind", ["pure", "mixed", "maximal"])
    def test_exact_expectation_is_purity(self, n, kind):
        rng = np.random.default_rng(n)
        rho = {
            "pure": random_state(n, rng, rank=1),
            "mixed": random_state(n, rng),
            "maximal": DensityMatrix.maximally_mixed(n),
        }[kind]
        # expected snapshot pair product with probabilities in place of samples
        outcomes = []
        for setting in derandomized_settings(n):
            probs = setting_probabilities(rho, setting)
            for idx, bits in enumerate(index_to_bits(np.arange(2**n), n)):
                outcomes.append((setting, bits, probs[idx] / 3**n))
        total = 0.0
        for (u, a, pa), (v, b, pb) in itertools.product(outcomes, repeat=2):
            total += pa * pb * math.prod(9 * gamma(x, int(s), y, int(t)) - 4 for x, s, y, t in zip(u, a, v, b))
        assert total == pytest.approx(purity(rho), abs=1e-10)

    def test_maximally_mixed_two_qubits(self):
        est = shadow_purity(DensityMatrix.maximally_mixed(2), 243, 100, np.random.default_rng(5))
        assert est == pytest.approx(0.25, abs=0.1)

    @pytest.mark.parametrize("kind", ["pure", "mid", "maximal"])
    def test_unbiased_randomized_protocol(self, kind):
        rng = np.random.default_rng(17)
        rho = {
            "pure": random_state(2, rng, rank=1),
            "mid": evolve_noisy(build_circuit(2, 4, 1), NoiseModel(0.05, 0.1))[-1],
            "maximal": DensityMatrix.maximally_mixed(2),
        }[kind]
        runs = np.array([shadow_purity(rho, 100, 20, rng) for _ in range(200)])
        stderr = runs.std(ddof=1) / np.sqrt(len(runs))
        assert abs(runs.mean() - purity(rho)) < 3 * stderr

    def test_estimates_not_clipped(self):
        rng = np.random.default_rng(0)
        values = [shadow_purity(DensityMatrix.maximally_mixed(3), 3, 1, rng) for _ in range(200)]
        assert min(values) < 0 or max(values) > 1

    def test_needs_two_settings(self):
        with pytest.raises(ValueError):
            purity_estimate(SnapshotSet(["Z"], [np.zeros((1, 1), dtype=np.uint8)]))


def derandomized_expectation(rho):
    """Exact mean of the 27-setting estimator: average ``Tr[A_m A_m']`` over distinct setting pairs."""
    n = rho.n
    means = []
    for setting in derandomized_settings(n):
        probs = setting_probabilities(rho, setting)
        bits = index_to_bits(np.arange(2**n), n)
        means.append(sum(p * snapshot_matrix(setting, b) for p, b in zip(probs, bits)))
    total = sum(means)
    pair_sum = np.trace(total @ total).real - sum(np.trace(a @ a).real for a in means)
    m = len(means)
    return pair_sum / (m * (m - 1))


class TestDerandomized:
    def test_offset_formula(self):
        rho = evolve_noisy(build_circuit(3, 6, 837), NoiseModel(0, 0))[-1]
        means = []
        for setting in derandomized_settings(3):
            probs = setting_probabilities(rho, setting)
            means.append(sum(p * snapshot_matrix(setting, b) for p, b in zip(probs, index_to_bits(np.arange(8), 3))))
        # averaging every setting's mean snapshot recovers the state exactly
        np.testing.assert_allclose(sum(means) / 27, rho.data, atol=1e-12)
        closed = (729 * purity(rho) - sum(np.trace(a @ a).real for a in means)) / 702
        assert derandomized_expectation(rho) == pytest.approx(closed, abs=1e-12)
        assert abs(closed - 1) > 0.05

    def test_offset_persists_at_large_shot_counts(self):
        rho = evolve_noisy(build_circuit(3, 6, 837), NoiseModel(0, 0))[-1]
        expected = derandomized_expectation(rho)
        rng = np.random.default_rng(2)
        universe = derandomized_settings(3)
        runs = np.array([purity_estimate(run_protocol(rho, universe, 10_000, rng)) for _ in range(20)])
        stderr = runs.std(ddof=1) / np.sqrt(len(runs))
        assert abs(runs.mean() - expected) < 4 * stderr + 1e-3
        assert abs(runs.mean() - 1) > 3 * stderr


class TestBound:
    def test_two_qubits(self):
        # ceil(ln(40) * 544 * 16 / 0.01), evaluated with mpmath at 50 digits
        assert sample_bound(2, 0.1, 0.05) == 3_210_801

    def test_unit_log_factor(self):
        assert sample_bound(1, 1.0, 2 / math.e**2) == 4352

    @pytest.mark.parametrize("n", range(1, 8))
    def test_width_scaling(self, n):
        assert sample_bound(n + 1, 0.1, 0.05) / sample_bound(n, 0.1, 0.05) == pytest.approx(4, rel=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 10), eps=st.floats(0.01, 1), delta=st.floats(1e-6, 0.99))
    def test_formula(self, n, eps, delta):
        exact = math.log(2 / delta) * 544 * 4**n / eps**2
        assert exact - 1e-6 * exact <= sample_bound(n, eps, delta) < exact + 1

    @settings(max_examples=300, deadline=None)
    @given(n=st.integers(1, 10), eps=st.floats(0.01, 1), delta=st.floats(1e-6, 0.99))
    def test_matches_high_precision_ceiling(self, n, eps, delta):
        mp.dps = 40
        exact = mp.ceil(mp.log(2 / mpf(delta)) * 544 * mpf(4) ** n / mpf(eps) ** 2)
        assert sample_bound(n, eps, delta) == int(exact)

    @pytest.mark.parametrize("eps,delta", [(0, 0.1), (1.5, 0.1), (0.1, 0), (0.1, 1)])
    def test_invalid(self, eps, delta):
        with pytest.raises(ValueError):
            sample_bound(2, eps, delta)


def _datasets(n, reps, shots, seed):
    rng = np.random.default_rng(seed)
    rho = evolve_noisy(build_circuit(n, 3, 4), NoiseModel(0.01, 0.05))[-1]
    universe = derandomized_settings(n)
    return [run_protocol(rho, universe, shots, rng) for _ in range(reps)]


class TestResampling:
    def test_size(self):
        data = _datasets(3, 2, 5, 0)
        out = resample_randomized(data, 50, np.random.default_rng(1), method=1)
        assert len(out) == 50 and out.n == 3

    def test_method_two_cycles_repetitions(self):
        # repetition r holds r + 1 shots per setting, so block length reveals its origin
        data = [SnapshotSet(["X", "Y", "Z"], [np.zeros((r + 1, 1), dtype=np.uint8)] * 3) for r in range(3)]
        rng = np.random.default_rng(0)
        out = resample_randomized(data, 40, rng, method=2)
        seen = {}
        for setting, block in zip(out.settings, out.outcomes):
            seen.setdefault(setting, []).append(len(block))
        for origins in seen.values():
            assert origins == [1 + (k % 3) for k in range(len(origins))]
        assert any(len(v) >= 4 for v in seen.values())

    def test_method_one_uses_one_repetition(self):
        data = [SnapshotSet(["X", "Y", "Z"], [np.zeros((r + 1, 1), dtype=np.uint8)] * 3) for r in range(3)]
        out = resample_randomized(data, 30, np.random.default_rng(0), method=1, repetition=2)
        assert {len(b) for b in out.outcomes} == {3}

    def test_method_one_mean_matches_randomized(self):
        rho = evolve_noisy(build_circuit(3, 3, 4), NoiseModel(0.008, 0.054))[-1]
        universe = derandomized_settings(3)
        resampled, randomized = [], []
        for seed in range(40):
            rng = np.random.default_rng(seed)
            data = [run_protocol(rho, universe, 1000, rng) for _ in range(3)]
            resampled.append(purity_estimate(resample_randomized(data, 50, rng, method=1)))
            randomized.append(shadow_purity(rho, 50, 1000, rng))
        diff = np.mean(resampled) - np.mean(randomized)
        sigma = math.sqrt(np.var(resampled, ddof=1) / 40 + np.var(randomized, ddof=1) / 40)
        assert abs(diff) < 2 * sigma

    def test_missing_settings(self):
        data = [SnapshotSet(["X", "Y"], [np.zeros((1, 1), dtype=np.uint8)] * 2)]
        with pytest.raises(ValueError):
            resample_randomized(data, 5, np.random.default_rng(0), method=1)

    def test_unknown_method(self):
        data = _datasets(1, 1, 1, 0)
        with pytest.raises(ValueError):
            resample_randomized(data, 5, np.random.default_rng(0), method=3)
