import numpy as np
import pytest

from driftreg.averaging import AveragingRegressor, StepOutcome, blend_normals
from driftreg.linalg import normalize


def fitted_model(alpha=0.5):
    model = AveragingRegressor(1, alpha=alpha)
    model.init_base([[0.0], [1.0], [2.0]], [0.0, 1.0, 2.0])  # exact y = x
    return model


class TestInitBase:
    def test_exact_line(self):
        model = fitted_model()
        intercept, coeffs = model.weights()
        assert intercept == pytest.approx(0.0, abs=1e-12)
        assert coeffs[0] == pytest.approx(1.0, abs=1e-12)

    def test_constant_target(self):
        model = AveragingRegressor(1)
        model.init_base([[0.0], [1.0]], [3.0, 3.0])
        intercept, coeffs = model.weights()
        assert intercept == pytest.approx(3.0, abs=1e-12)
        assert coeffs[0] == pytest.approx(0.0, abs=1e-12)

    def test_hand_solved_fit(self):
        model = AveragingRegressor(1)
        model.init_base([[0.0], [1.0], [2.0]], [1.0, 1.0, 4.0])
        intercept, coeffs = model.weights()
        assert intercept == pytest.approx(0.5, abs=1e-12)
        assert coeffs[0] == pytest.approx(1.5, abs=1e-12)

    def test_double_init_rejected(self):
        model = fitted_model()
        with pytest.raises(RuntimeError):
            model.init_base([[0.0]], [0.0])


class TestPartialFit:
    def test_coincident_batch_skipped(self):
        model = fitted_model()
        before = model.weights()
        trace = model.partial_fit([[3.0], [4.0], [5.0]], [3.0, 4.0, 5.0])
        assert trace.outcome is StepOutcome.SKIPPED_COINCIDENT
        after = model.weights()
        assert after[0] == before[0]
        np.testing.assert_array_equal(after[1], before[1])
        assert model.updates_applied == 0

    def test_symmetric_crossing_gives_horizontal_line(self):
        # Base y = x blended with y = 2 - x at alpha 0.5: the unit normals
        # average to (0, -1/sqrt(2)) and the surfaces cross at (1, 1),
        # so the new base is the horizontal line y = 1.
        model = fitted_model(alpha=0.5)
        trace = model.partial_fit([[0.0], [1.0], [2.0]], [2.0, 1.0, 0.0])
        assert trace.outcome is StepOutcome.UPDATED
        np.testing.assert_allclose(trace.p_int, [1.0, 1.0], atol=1e-9)
        np.testing.assert_allclose(trace.v_base, normalize([1.0, -1.0]), atol=1e-12)
        np.testing.assert_allclose(trace.v_inc, normalize([-1.0, -1.0]), atol=1e-12)
        np.testing.assert_allclose(trace.v_avg, [0.0, -1.0 / np.sqrt(2)], atol=1e-12)
        intercept, coeffs = model.weights()
        assert intercept == pytest.approx(1.0, abs=1e-9)
        assert coeffs[0] == pytest.approx(0.0, abs=1e-9)

    def test_alpha_one_replaces_base(self):
        model = fitted_model(alpha=1.0)
        model.partial_fit([[0.0], [1.0], [2.0]], [2.0, 1.0, 0.0])
        intercept, coeffs = model.weights()
        assert intercept == pytest.approx(2.0, abs=1e-9)
        assert coeffs[0] == pytest.approx(-1.0, abs=1e-9)

    def test_parallel_batch_uses_midpoint(self):
        model = fitted_model(alpha=0.5)
        trace = model.partial_fit([[0.0], [1.0], [2.0]], [2.0, 3.0, 4.0])  # y = x + 2
        assert trace.outcome is StepOutcome.PARALLEL_MIDPOINT
        np.testing.assert_allclose(trace.p_int, [0.0, 1.0], atol=1e-9)
        intercept, coeffs = model.weights()
        assert intercept == pytest.approx(1.0, abs=1e-9)
        assert coeffs[0] == pytest.approx(1.0, abs=1e-9)

    def test_new_base_passes_through_intersection(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            m = int(rng.integers(1, 5))
            model = AveragingRegressor(m, alpha=float(rng.uniform(0.05, 1.0)))
            x0 = rng.normal(size=(3 * m + 3, m))
            model.init_base(x0, rng.normal() + x0 @ rng.normal(size=m))
            x1 = rng.normal(size=(3 * m + 3, m))
            trace = model.partial_fit(x1, rng.normal() + x1 @ rng.normal(size=m))
            if trace.outcome not in (StepOutcome.UPDATED, StepOutcome.PARALLEL_MIDPOINT):
                continue
            predicted = model.base.predict(trace.p_int[:-1][np.newaxis, :])[0]
            assert abs(predicted - trace.p_int[-1]) <= 1e-9 * (1 + abs(trace.p_int[-1]))

    def test_stationary_stream_stays_on_concept(self):
        rng = np.random.default_rng(20)
        coeffs = np.array([2.0, -3.0, 0.5])
        intercept = 4.0
        model = AveragingRegressor(3, alpha=0.5)
        x = rng.uniform(-5, 5, size=(30, 3))
        model.init_base(x, intercept + x @ coeffs)
        for _ in range(25):
            xb = rng.uniform(-5, 5, size=(15, 3))
            trace = model.partial_fit(xb, intercept + xb @ coeffs)
            got_intercept, got_coeffs = model.weights()
            assert trace.outcome in (
                StepOutcome.SKIPPED_COINCIDENT,
                StepOutcome.UPDATED,
                StepOutcome.PARALLEL_MIDPOINT,
            )
            assert abs(got_intercept - intercept) <= 1e-6
            assert np.max(np.abs(got_coeffs - coeffs)) <= 1e-6

    def test_deterministic_traces(self):
        def run():
            rng = np.random.default_rng(33)
            model = AveragingRegressor(2, alpha=0.3)
            x0 = rng.normal(size=(12, 2))
            model.init_base(x0, x0 @ [1.0, 2.0] + rng.normal(size=12))
            traces = []
            for _ in range(5):
                xb = rng.normal(size=(10, 2))
                traces.append(model.partial_fit(xb, xb @ [1.0, 2.0] + rng.normal(size=10)))
            return model, traces

        m1, t1 = run()
        m2, t2 = run()
        assert m1.weights()[0] == m2.weights()[0]
        np.testing.assert_array_equal(m1.weights()[1], m2.weights()[1])
        for a, b in zip(t1, t2):
            assert a.outcome == b.outcome
            np.testing.assert_array_equal(a.v_base, b.v_base)
            np.testing.assert_array_equal(a.v_inc, b.v_inc)
            np.testing.assert_array_equal(a.v_avg, b.v_avg)
            np.testing.assert_array_equal(a.p_int, b.p_int)

    def test_unit_norm_trace_vectors(self):
        model = fitted_model()
        trace = model.partial_fit([[0.0], [2.0]], [1.0, 0.0])
        assert abs(np.linalg.norm(trace.v_base) - 1.0) <= 1e-12
        assert abs(np.linalg.norm(trace.v_inc) - 1.0) <= 1e-12


class TestPredictAndState:
    def test_predict_examples(self):
        model = AveragingRegressor(1)
        model.init_base([[0.0], [3.0]], [1.0, 7.0])  # y = 1 + 2x
        np.testing.assert_allclose(model.predict([[0.0]]), [1.0], atol=1e-12)
        np.testing.assert_allclose(model.predict([[3.0]]), [7.0], atol=1e-12)

    def test_predict_derived(self):
        model = AveragingRegressor(1)
        model.init_base([[0.0], [1.0], [2.0]], [1.0, 1.0, 4.0])
        np.testing.assert_allclose(model.predict([[2.0]]), [3.5], atol=1e-12)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            AveragingRegressor(1, alpha=0.0)
        with pytest.raises(ValueError):
            AveragingRegressor(1, alpha=1.2)

    def test_json_round_trip(self):
        model = fitted_model()
        model.partial_fit([[0.0], [1.0]], [0.5, 1.0])
        payload = model.to_json()
        copy = AveragingRegressor.from_json(payload)
        assert copy.to_json() == payload
        assert copy.num_features == model.num_features
        assert copy.weights()[0] == model.weights()[0]

    def test_persistent_scalar_count(self):
        assert AveragingRegressor(5).persistent_scalar_count() == 7


class TestEwmaExpansion:
    def test_telescoping_identity(self):
        # Replaying the blend without renormalization must match the
        # closed-form geometric expansion.
        rng = np.random.default_rng(44)
        for alpha in (0.1, 0.5, 0.9):
            v = normalize(rng.normal(size=4))
            v0 = v.copy()
            increments = [normalize(rng.normal(size=4)) for _ in range(100)]
            for inc in increments:
                v = blend_normals(v, inc, alpha)
            t = len(increments)
            closed = (1 - alpha) ** t * v0
            for k in range(t):
                closed = closed + alpha * (1 - alpha) ** k * increments[t - 1 - k]
            assert np.max(np.abs(v - closed)) <= 1e-9


class TestBaseSizing:
    def test_suggested_base_rows(self):
        from driftreg.averaging import suggested_base_rows

        assert suggested_base_rows(4) == 40  # unbounded stream fallback
        assert suggested_base_rows(4, train_size=800) == 80
        assert suggested_base_rows(4, train_size=800, fraction=0.25) == 200
        assert suggested_base_rows(4, train_size=3) == 1
