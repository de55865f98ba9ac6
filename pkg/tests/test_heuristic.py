import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from entropybench.ansatz import build_circuit, evolve_noisy
from entropybench.heuristic import (
    FitProblem,
    FitResult,
    ModelParams,
    PurityCurve,
    asymptotic_entropy_density,
    depth_threshold_dstar,
    fit,
    fit_per_curve,
    global_p_from_local,
    model_purity,
    purity_from_global_p,
    rate_from_probability,
)
from entropybench.shadows import shadow_purity
from entropybench.sim import NoiseModel, apply_depolarizing, purity

P1, P2 = 0.008, 0.054


def synthetic_curves(params, widths=(2, 3, 4, 5, 6), depths=range(1, 21)):
    return [PurityCurve(n, [(d, model_purity(n, d, params), None) for d in depths]) for n in widths]


def readout_purity(rho, pm):
    """Mean shadows estimate under symmetric readout flips ``pm``.

    A flip in the measured basis shrinks that qubit's Pauli component by
    ``1 - 2 pm``, the same as single-qubit depolarising with ``p = 2 pm``.
    """
    for q in range(rho.n):
        rho = apply_depolarizing(rho, [q], 2 * pm)
    return purity(rho)


class TestModel:
    @pytest.mark.parametrize("n", [1, 3, 7])
    def test_zero_depth(self, n):
        assert model_purity(n, 0, ModelParams(0.3, 0.2)) == 1.0

    def test_infinite_depth_limit(self):
        assert abs(model_purity(4, 10**6, ModelParams(0, 0.01)) - 1 / 16) <= 1e-9

    def test_reference_value(self):
        # (7/8)(exp(-1.56) - 1) + 1 evaluated with mpmath at 50 digits
        assert model_purity(3, 5, ModelParams(P1, P2)) == pytest.approx(0.30886906230066914, abs=1e-14)

    def test_broadcasts(self):
        out = model_purity(np.array([2, 3]), np.array([[1], [2]]), ModelParams(P1, P2))
        assert out.shape == (2, 2)
        assert out[1, 0] == pytest.approx(model_purity(2, 2, ModelParams(P1, P2)))

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            model_purity(0, 1, ModelParams(0, 0))
        with pytest.raises(ValueError):
            ModelParams(-1, 0)

    @settings(max_examples=60, deadline=None)
    @given(
        n=st.integers(1, 8),
        depth=st.integers(0, 40),
        a1=st.floats(1e-4, 0.05),
        a2=st.floats(1e-4, 0.1),
        beta=st.floats(1e-4, 0.1),
    )
    @example(n=6, depth=24, a1=0.03125, a2=0.0625, beta=0.0625)
    def test_strictly_decreasing(self, n, depth, a1, a2, beta):
        params = ModelParams(a1, a2, beta)
        base = model_purity(n, depth, params)
        h = 1e-3
        # once the excess over 2**-n drops below float resolution the model
        # is flat in doubles, so only demand a strict drop above that floor
        resolvable = base - 2.0**-n > 1e-9
        bumped = [model_purity(n, depth + 1, params), model_purity(n, depth, ModelParams(a1, a2, beta + h))]
        if depth > 0:
            bumped.append(model_purity(n, depth, ModelParams(a1 + h, a2, beta)))
            if n > 1:
                bumped.append(model_purity(n, depth, ModelParams(a1, a2 + h, beta)))
        for value in bumped:
            assert value <= base
            if resolvable:
                assert value < base


class TestGlobalProbability:
    def test_noiseless(self):
        assert global_p_from_local(4, 10, 0, 0) == 0

    def test_single_qubit_single_layer(self):
        assert global_p_from_local(1, 1, 0.5, 0.3) == pytest.approx(0.75)

    @pytest.mark.parametrize("n", range(1, 9))
    @pytest.mark.parametrize("depth", [0, 1, 2, 5, 13, 27, 50])
    def test_two_forms_agree(self, n, depth):
        big_p = global_p_from_local(n, depth, P1, P2)
        params = ModelParams(rate_from_probability(P1), rate_from_probability(P2))
        assert model_purity(n, depth, params) == pytest.approx(purity_from_global_p(n, big_p), abs=1e-12)


class TestAsymptotics:
    def test_density_at_zero(self):
        assert asymptotic_entropy_density(0, ModelParams(0.1, 0.1)) == 0

    def test_density_linear_branch(self):
        # 2 (0.0016) 100 / ln 2, evaluated with mpmath
        value = asymptotic_entropy_density(100, ModelParams(3e-4, 1e-3))
        assert value == pytest.approx(0.46166241308446829, abs=1e-12)

    def test_density_saturates_past_threshold(self):
        params = ModelParams(3e-4, 1e-3)
        d_star = depth_threshold_dstar(params)
        assert asymptotic_entropy_density(d_star, params) == pytest.approx(1)
        assert asymptotic_entropy_density(d_star * 1.5, params) == 1

    def test_reference_threshold(self):
        d_star = depth_threshold_dstar(ModelParams(3e-4, 1e-3))
        assert d_star == pytest.approx(216.60849392498291, abs=1e-9)
        assert math.ceil(d_star) == 217

    def test_constructed_threshold(self):
        assert depth_threshold_dstar(ModelParams(0, math.log(2) / 2)) == pytest.approx(1)

    def test_halving_rates_doubles(self):
        a = depth_threshold_dstar(ModelParams(2e-3, 5e-3))
        assert depth_threshold_dstar(ModelParams(1e-3, 2.5e-3)) == pytest.approx(2 * a)

    def test_noiseless_threshold_undefined(self):
        with pytest.raises(ValueError):
            depth_threshold_dstar(ModelParams(0, 0))


class TestObjective:
    @pytest.mark.parametrize("mode", ["ratio", "free", "alpha2_only"])
    @pytest.mark.parametrize("fit_beta", [False, True])
    def test_gradient_matches_finite_differences(self, mode, fit_beta):
        rng = np.random.default_rng([len(mode), int(fit_beta)])
        curves = synthetic_curves(ModelParams(0.01, 0.04, 0.02))
        for curve in curves:
            curve.points = [(d, y * (1 + 0.05 * rng.normal()), 0.01) for d, y, _ in curve.points]
        problem = FitProblem(curves, P1, P2, fit_beta=fit_beta, mode=mode, weighted=True)
        for _ in range(4):
            x = rng.uniform(-6, -1, size=problem.size)
            grad = problem.gradient(x)
            h = 1e-6
            numeric = np.array(
                [(problem.cost(x + h * e) - problem.cost(x - h * e)) / (2 * h) for e in np.eye(problem.size)]
            )
            np.testing.assert_allclose(grad, numeric, rtol=1e-6, atol=1e-9 * max(1, abs(grad).max()))

    def test_excludes_non_positive_points(self):
        curves = synthetic_curves(ModelParams(P1, P2), widths=(3,))
        curves[0].points[4] = (5, -0.01, None)
        curves[0].points[7] = (8, 0.0, None)
        assert FitProblem(curves, P1, P2).excluded == 2

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            fit([PurityCurve(2, [(1, 0.9, None), (2, 0.8, None)])], P1, P2)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            FitProblem(synthetic_curves(ModelParams(P1, P2)), P1, P2, mode="magic")

    def test_depths_must_increase(self):
        with pytest.raises(ValueError):
            PurityCurve(2, [(2, 0.5, None), (1, 0.6, None)])


class TestFit:
    def test_self_consistency(self):
        result = fit(synthetic_curves(ModelParams(P1, P2)), P1, P2)
        assert result.converged
        assert result.theta == pytest.approx(1, abs=1e-6)
        assert result.residual_rms < 1e-10

    def test_ratio_constraint_exact(self):
        result = fit(synthetic_curves(ModelParams(0.01, 0.03)), P1, P2)
        assert result.params.alpha2 / result.params.alpha1 == pytest.approx(P2 / P1, rel=1e-12)

    def test_free_mode_recovers_both(self):
        truth = ModelParams(0.006, 0.07)
        result = fit(synthetic_curves(truth), P1, P2, mode="free")
        assert result.params.alpha1 == pytest.approx(truth.alpha1, rel=1e-5)
        assert result.params.alpha2 == pytest.approx(truth.alpha2, rel=1e-5)
        assert result.theta is None

    def test_alpha2_only(self):
        result = fit(synthetic_curves(ModelParams(0, 0.05)), P1, P2, mode="alpha2_only")
        assert result.params.alpha1 == 0
        assert result.params.alpha2 == pytest.approx(0.05, rel=1e-6)

    def test_beta_recovered_from_model_data(self):
        truth = ModelParams(P1, P2, 0.03)
        result = fit(synthetic_curves(truth), P1, P2, fit_beta=True)
        assert result.params.beta == pytest.approx(0.03, rel=1e-5)

    def test_density_matrix_curves(self):
        curves = []
        for n in range(2, 7):
            states = evolve_noisy(build_circuit(n, 20, 837), NoiseModel(P1, P2))
            curves.append(PurityCurve(n, [(d + 1, purity(s), None) for d, s in enumerate(states)]))
        result = fit(curves, P1, P2)
        assert result.residual_rms <= 0.02
        assert abs(result.params.alpha1 / P1 - 1) <= 0.3
        assert abs(result.params.alpha2 / P2 - 1) <= 0.3

    def test_readout_sampling_oracle(self):
        pm = 0.03
        rho = evolve_noisy(build_circuit(2, 3, 837), NoiseModel(P1, P2))[-1]
        rng = np.random.default_rng(0)
        runs = np.array([shadow_purity(rho, 50, 200, rng, (pm, pm)) for _ in range(300)])
        stderr = runs.std(ddof=1) / np.sqrt(len(runs))
        assert abs(runs.mean() - readout_purity(rho, pm)) < 3 * stderr

    def test_beta_from_readout_simulation(self):
        pm = 0.03
        curves = []
        for n in range(2, 7):
            states = evolve_noisy(build_circuit(n, 20, 837), NoiseModel(P1, P2))
            curves.append(PurityCurve(n, [(d + 1, readout_purity(s, pm), None) for d, s in enumerate(states)]))
        result = fit(curves, P1, P2, fit_beta=True)
        assert abs(result.params.beta / pm - 1) <= 0.5

    def test_per_curve(self):
        results = fit_per_curve(synthetic_curves(ModelParams(P1, P2), widths=(2, 4)), P1, P2)
        assert sorted(results) == [2, 4]
        assert all(r.theta == pytest.approx(1, abs=1e-6) for r in results.values())

    def test_weighted_uses_stderr(self):
        curves = synthetic_curves(ModelParams(P1, P2), widths=(3,))
        curves[0].points = [(d, y, 1e-3) for d, y, _ in curves[0].points]
        # one wild point with a huge error bar barely moves the weighted fit
        d, y, _ = curves[0].points[5]
        curves[0].points[5] = (d, y + 0.2, 10.0)
        weighted = fit(curves, P1, P2, weighted=True)
        plain = fit(curves, P1, P2)
        assert abs(weighted.theta - 1) < abs(plain.theta - 1)

    def test_report_round_trip(self):
        result = fit(synthetic_curves(ModelParams(P1, P2, 0.01)), P1, P2, fit_beta=True)
        again = FitResult.from_report(result.to_report())
        assert again == result
