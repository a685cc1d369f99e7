"""Acceptance gate: one test per release criterion.

Each test prints a PASS line with the measured values (run with ``-s`` to
see them live). Suites use pinned seeds; every expected value and
tolerance is frozen here.
"""
import json
import time

import numpy as np

from driftreg.adaptive import AdaptiveAveragingRegressor
from driftreg.averaging import AveragingRegressor, blend_normals
from driftreg.baselines import (
    LassoRegressor,
    PaRegressor,
    RidgeRegressor,
    RlsRegressor,
    SgdRegressor,
)
from driftreg.cli import main as cli_main
from driftreg.datagen import (
    abrupt_drift_spec,
    adversarial_spec,
    convergence_spec,
    generate,
    gradual_drift_spec,
    incremental_drift_spec,
    stationary_spec,
)
from driftreg.geometry import (
    Hyperplane,
    IntersectKind,
    augmented_vector,
    coincide,
    from_normal_and_point,
    intersect,
    norm_vector,
    weighted_midpoint,
)
from driftreg.linalg import normalize, solve_least_squares
from driftreg.runner import (
    ExperimentSpec,
    rank_from_summaries,
    run_experiment,
)

def report(number: int, title: str, detail: str) -> None:
    print(f"\nACCEPTANCE {number:02d} PASS  {title}: {detail}")


def experiment(name, dataset, algorithms, protocol):
    return ExperimentSpec.from_dict(
        {
            "schema_version": 1,
            "name": name,
            "dataset": dataset,
            "algorithms": algorithms,
            "protocol": protocol,
        }
    )


def summary_of(spec):
    return run_experiment(spec).summary_doc()["summary"]


class TestCriterion01StationaryParity:
    def test_batch_parity_on_small_and_medium_suites(self):
        started = time.perf_counter()
        suites = {
            "ds1_shape": stationary_spec(
                1000, 3, 10.0, seed=1, feature_range=(-1.5, 1.5)
            ),
            "ds2_shape": stationary_spec(
                10_000, 20, 20.0, seed=1, feature_range=(-1.0, 1.0)
            ),
        }
        details = []
        for name, dataset in suites.items():
            spec = experiment(
                name,
                dataset.to_dict(),
                [{"name": "batch"}, {"name": "wavg", "params": {"alpha": 0.5}}],
                {"folds": 5, "seeds": 5},
            )
            doc = summary_of(spec)
            batch_r2 = doc["batch"]["r2_mean"]
            wavg_r2 = doc["wavg"]["r2_mean"]
            assert doc["batch"]["cells"] == doc["wavg"]["cells"] == 25
            assert 0.95 <= batch_r2 <= 0.99, f"{name}: batch r2 {batch_r2}"
            assert abs(batch_r2 - wavg_r2) <= 0.02, f"{name}: parity gap"
            details.append(f"{name} batch={batch_r2:.4f} wavg={wavg_r2:.4f}")
        elapsed = time.perf_counter() - started
        assert elapsed <= 120.0
        report(1, "stationary parity", "; ".join(details) + f"; {elapsed:.1f}s")


class TestCriterion02AlphaInsensitivity:
    def test_alpha_spread_on_stationary_shapes(self):
        shapes = [
            ("ds1_shape", stationary_spec(1000, 3, 10.0, seed=1,
                                          feature_range=(-1.5, 1.5)), 3, 5),
            ("ds2_shape", stationary_spec(10_000, 20, 20.0, seed=1,
                                          feature_range=(-1.0, 1.0)), 3, 5),
            ("ds3_shape", stationary_spec(10_000, 200, 25.0, seed=1,
                                          feature_range=(-1.0, 1.0)), 1, 5),
            ("ds4_shape", stationary_spec(50_000, 500, 50.0, seed=1,
                                          feature_range=(-1.0, 1.0)), 1, 2),
        ]
        details = []
        for name, dataset, seeds, folds in shapes:
            values = []
            for alpha in (0.005, 0.1, 0.5, 0.9, 0.995):
                spec = experiment(
                    name,
                    dataset.to_dict(),
                    [{"name": "wavg", "params": {"alpha": alpha}}],
                    {"folds": folds, "seeds": seeds},
                )
                values.append(summary_of(spec)["wavg"]["r2_mean"])
            spread = max(values) - min(values)
            assert spread <= 0.03, f"{name}: spread {spread}"
            details.append(f"{name} spread={spread:.4f}")
        report(2, "alpha insensitivity when stationary", "; ".join(details))


class TestCriterion03AdversarialGap:
    def test_confidence_scenario(self):
        dataset = adversarial_spec(
            5000, 20, 20.0, seed=1, flavor="confidence_based",
            feature_range=(-1.0, 1.0),
        ).to_dict()
        scores = {}
        for alpha in (0.005, 0.1):
            spec = experiment(
                "ds7_shape",
                dataset,
                [{"name": "wavg", "params": {"alpha": alpha}}],
                {"folds": 5, "seeds": 5, "eval_segment": "first"},
            )
            scores[alpha] = summary_of(spec)["wavg"]["r2_mean"]
        assert scores[0.005] >= 0.9
        assert scores[0.1] <= 0.5
        report(
            3,
            "adversarial gap (confidence half)",
            f"old-concept r2: alpha=0.005 -> {scores[0.005]:.4f}, "
            f"alpha=0.1 -> {scores[0.1]:.4f}",
        )

    def test_time_scenario(self):
        dataset = adversarial_spec(
            5000, 20, 20.0, seed=1, flavor="time_based", feature_range=(-1.0, 1.0)
        ).to_dict()
        spec = experiment(
            "ds5_shape",
            dataset,
            [{"name": "wavg", "params": {"alpha": 0.95}}],
            {"folds": 5, "seeds": 5, "eval_segment": "last"},
        )
        wavg_r2 = summary_of(spec)["wavg"]["r2_mean"]
        assert wavg_r2 >= 0.9
        stale = {}
        for algo in ("batch", "sgd", "mbgd", "ridge", "lasso"):
            spec = experiment(
                "ds5_shape",
                dataset,
                [{"name": algo}],
                {"folds": 5, "seeds": 5, "eval_segment": "last"},
            )
            stale[algo] = summary_of(spec)[algo]["r2_mean"]
            assert stale[algo] < 0.0, f"{algo} should score negative r2"
        report(
            3,
            "adversarial gap (time half)",
            f"wavg(0.95)={wavg_r2:.4f}; "
            + ", ".join(f"{a}={v:.3f}" for a, v in stale.items()),
        )


class TestCriterion04EarlyConvergence:
    def test_ten_point_checkpoint(self):
        dataset = convergence_spec(
            1000, 20.0, seed=1, feature_range=(-2.0, 2.0),
            coeff_range=(-400.0, 400.0),
        ).to_dict()
        protocol = {
            "folds": 5,
            "seeds": 5,
            "mode": "convergence",
            "checkpoints": list(range(10, 151, 10)),
            "batch_size": 10,
            "base_rows": 10,
        }
        docs = {}
        for algo in ("wavg", "sgd"):
            spec = experiment("ds9_shape", dataset, [{"name": algo}], protocol)
            docs[algo] = summary_of(spec)[algo]
        wavg10 = docs["wavg"]["convergence_r2"]["10"]
        wavg_final = docs["wavg"]["r2_mean"]
        sgd10 = docs["sgd"]["convergence_r2"]["10"]
        assert wavg10 >= 0.8
        assert abs(wavg10 - wavg_final) <= 0.1
        assert sgd10 <= 0.5
        report(
            4,
            "early convergence",
            f"wavg@10={wavg10:.4f} (final {wavg_final:.4f}), sgd@10={sgd10:.4f}",
        )


RANK_SUITE = [
    ("rank_d1", 1000, 3, 10.0, 60),
    ("rank_d2", 4000, 20, 20.0, 100),
    ("rank_d3", 4000, 50, 25.0, 250),
    ("rank_d4", 7000, 100, 50.0, 500),
    ("rank_d5", 1400, 7, 15.0, 60),
    ("rank_d6", 1000, 5, 10.0, 60),
    ("rank_d7", 4000, 21, 30.0, 105),
    ("rank_d8", 3000, 5, 12.0, 60),
]
RANK_ALGOS = ["sgd", "mbgd", "lms", "ridge", "lasso", "rls", "pa2", "wavg"]


class TestCriterion05RankReproduction:
    def test_average_rank_over_eight_datasets(self):
        summaries = []
        for name, n, m, noise, k in RANK_SUITE:
            spec = experiment(
                name,
                stationary_spec(
                    n, m, noise, seed=1, feature_range=(-1.0, 1.0)
                ).to_dict(),
                [{"name": a} for a in RANK_ALGOS],
                {
                    "folds": 2,
                    "seeds": 5,
                    "mode": "early_mse",
                    "batch_size": k,
                    "base_batches": 1,
                    "first_batches": 10,
                },
            )
            summaries.append(run_experiment(spec).summary_doc())
        table = rank_from_summaries(summaries).table
        ranks = table.average_rank
        best = min(ranks, key=ranks.get)
        assert best == "wavg", f"expected wavg best, got ranking {ranks}"
        others = [v for a, v in ranks.items() if a != "wavg"]
        assert ranks["wavg"] < min(others), "wavg must be strictly best"
        assert abs(ranks["wavg"] - 1.25) <= 0.75
        ordered = sorted(ranks.items(), key=lambda kv: kv[1])
        report(
            5,
            "rank reproduction",
            ", ".join(f"{a}={v:.3f}" for a, v in ordered),
        )


class TestCriterion06DriftRecovery:
    KWS = 11  # window capacity for (n=10000, k=50, delta=0.05)

    def _prequential(self, dataset, algo, params=None, seeds=5):
        spec = experiment(
            "drift",
            dataset,
            [{"name": algo, "params": params or {}}],
            {"folds": 1, "seeds": seeds, "mode": "prequential"},
        )
        return run_experiment(spec)

    def test_abrupt_drift_recovery_and_gap(self):
        dataset = abrupt_drift_spec(
            10_000, 10, 20.0, seed=1, switch_at=5000, target_ed=327.23,
            feature_range=(-1.0, 1.0),
        ).to_dict()
        adaptive = self._prequential(dataset, "wavg_adaptive")
        fixed = self._prequential(dataset, "wavg", {"alpha": 0.5})
        recoveries, gaps, abrupt_logged = [], [], []
        for cell_a, cell_f in zip(adaptive.cells, fixed.cells):
            drift_batch = cell_a.drift_batches[0]
            score_a = {e["batch_index"]: e["r2"] for e in cell_a.events
                       if e["type"] == "prequential"}
            score_f = {e["batch_index"]: e["r2"] for e in cell_f.events
                       if e["type"] == "prequential"}
            # Recovery: prequential r2 back at >= 0.9 within KWS batches.
            recovery = next(
                (b - drift_batch for b in range(drift_batch + 1,
                                                drift_batch + 1 + self.KWS)
                 if score_a[b] >= 0.9),
                None,
            )
            assert recovery is not None
            recoveries.append(recovery)
            # Adaptation advantage, averaged over the span the fixed-alpha
            # learner needs to climb back to 0.9 (the cost of not adapting).
            fixed_recovery = next(
                (b for b in range(drift_batch + 1, drift_batch + 200)
                 if score_f[b] >= 0.9),
                drift_batch + self.KWS,
            )
            span = range(drift_batch + 1, max(fixed_recovery + 1, drift_batch + 2))
            gaps.append(
                float(np.mean([score_a[b] for b in span])
                      - np.mean([score_f[b] for b in span]))
            )
            abrupt_logged.append(
                any(
                    e["type"] == "assessment"
                    and e["severity"] == "abrupt"
                    and abs(e["batch_index"] - drift_batch) <= self.KWS
                    for e in cell_a.events
                )
            )
        mean_gap = float(np.mean(gaps))
        assert all(abrupt_logged), "abrupt event must be logged near the drift"
        assert mean_gap >= 0.1
        report(
            6,
            "abrupt drift recovery",
            f"recovery within {max(recoveries)} batch(es), "
            f"adaptation gap {mean_gap:.3f} over the fixed-alpha recovery span",
        )

    def test_incremental_and_gradual_stream_means(self):
        steps = (14.8, 18.5, 23.9, 31.8, 44.6, 66.9, 111.5, 223.1, 669.5)
        ds12 = incremental_drift_spec(
            10_000, 10, 20.0, seed=1, segment_length=1000, ed_steps=steps,
            feature_range=(-1.0, 1.0),
        ).to_dict()
        ds13 = gradual_drift_spec(
            10_000, 10, 20.0, seed=1,
            segments=[(0, 2500), (1, 1000), (0, 1000), (1, 2000), (0, 1000),
                      (1, 2500)],
            target_ed=2049.14,
            feature_range=(-1.0, 1.0),
        ).to_dict()
        details = []
        for label, dataset in (("ds12_shape", ds12), ("ds13_shape", ds13)):
            means = {}
            for algo in ("wavg_adaptive", "lms", "rls", "pa2"):
                res = self._prequential(dataset, algo)
                means[algo] = res.summary_doc()["summary"][algo]["r2_mean"]
            for algo in ("lms", "rls", "pa2"):
                assert means["wavg_adaptive"] >= means[algo], (
                    f"{label}: wavg_adaptive {means['wavg_adaptive']} vs "
                    f"{algo} {means[algo]}"
                )
            details.append(
                label + " " + ", ".join(f"{a}={v:.3f}" for a, v in means.items())
            )
        report(6, "incremental/gradual stream means", "; ".join(details))


class TestCriterion07GeometryOracles:
    def test_thousand_randomized_instances_per_property(self):
        started = time.perf_counter()
        rng = np.random.default_rng(2024)

        for _ in range(1000):  # intersection residual
            m = int(rng.integers(1, 7))
            h1 = Hyperplane(rng.normal() * 10, rng.normal(size=m) * 10)
            h2 = Hyperplane(rng.normal() * 10, rng.normal(size=m) * 10)
            out = intersect(h1, h2)
            if out.kind is not IntersectKind.POINT:
                continue
            p = out.point
            tol = 1e-9 * (1 + max(abs(h1.intercept), abs(h2.intercept)))
            assert abs(h1.intercept + h1.coeffs @ p[:-1] - p[-1]) <= tol
            assert abs(h2.intercept + h2.coeffs @ p[:-1] - p[-1]) <= tol

        for _ in range(1000):  # round trip through normal-and-point
            m = int(rng.integers(1, 7))
            h = Hyperplane(rng.normal() * 10, rng.normal(size=m) * 10)
            point = h.point_on(rng.normal(size=m) * 3)
            rebuilt = from_normal_and_point(normalize(norm_vector(h)), point)
            assert abs(rebuilt.intercept - h.intercept) <= 1e-9 * (
                1 + abs(h.intercept)
            )
            assert np.max(np.abs(rebuilt.coeffs - h.coeffs)) <= 1e-9 * (
                1 + np.max(np.abs(h.coeffs))
            )

        for _ in range(1000):  # midpoint monotone in alpha
            m = int(rng.integers(1, 7))
            coeffs = rng.normal(size=m) * 5
            b1, b2 = np.sort(rng.normal(size=2) * 10)
            h1, h2 = Hyperplane(b1, coeffs), Hyperplane(b2, coeffs.copy())
            alphas = np.sort(rng.uniform(0.01, 1.0, size=4))
            targets = [weighted_midpoint(h1, h2, a)[-1] for a in alphas]
            assert all(t2 >= t1 - 1e-12 for t1, t2 in zip(targets, targets[1:]))

        for _ in range(1000):  # coincidence is scale invariant
            m = int(rng.integers(1, 7))
            h = Hyperplane(rng.normal() * 10, rng.normal(size=m) * 10)
            c = float(rng.uniform(0.05, 20.0)) * float(rng.choice([-1.0, 1.0]))
            scaled = augmented_vector(h) * c
            target_coeff = -scaled[-1]
            rebuilt = Hyperplane(scaled[0] / target_coeff,
                                 scaled[1:-1] / target_coeff)
            assert coincide(h, rebuilt)

        elapsed = time.perf_counter() - started
        assert elapsed <= 10.0
        report(7, "geometry oracle suite", f"4 x 1000 instances in {elapsed:.2f}s")


class TestCriterion08EwmaIdentity:
    def test_telescoping_expansion_over_replayed_traces(self):
        rng = np.random.default_rng(99)
        worst = 0.0
        for alpha in (0.1, 0.5, 0.9):
            start = normalize(rng.normal(size=5))
            increments = [normalize(rng.normal(size=5)) for _ in range(100)]
            value = start.copy()
            for inc in increments:
                value = blend_normals(value, inc, alpha)
            t = len(increments)
            closed = (1 - alpha) ** t * start
            for k in range(t):
                closed = closed + alpha * (1 - alpha) ** k * increments[t - 1 - k]
            worst = max(worst, float(np.max(np.abs(value - closed))))
        assert worst <= 1e-9
        report(8, "ewma telescoping identity", f"max deviation {worst:.2e}")


class TestCriterion09BaselineOracles:
    def test_rls_equals_batch_least_squares(self):
        rng = np.random.default_rng(123)
        worst = 0.0
        for trial in range(10):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(5 * (m + 1), 80))
            x = rng.uniform(-1, 1, size=(n, m))
            y = rng.normal() + x @ rng.normal(size=m)
            model = RlsRegressor(m, lam=1.0, delta=1e-10)
            for i in range(n):
                model.observe(x[i : i + 1], y[i : i + 1])
            xb = np.column_stack([np.ones(n), x])
            reference = solve_least_squares(xb, y).weights
            worst = max(worst, float(np.max(np.abs(model.w - reference))))
        assert worst <= 1e-6

    def test_pa_tube_property(self):
        rng = np.random.default_rng(124)
        for _ in range(200):
            m = int(rng.integers(1, 5))
            model = PaRegressor(m, c=1.0, eps=float(rng.uniform(0, 0.3)),
                                variant="pa")
            model.w[:] = rng.normal(size=m + 1)
            x = rng.normal(size=(1, m))
            y = rng.normal(size=1) * 4
            model.observe(x, y)
            xb = np.concatenate([[1.0], x[0]])
            assert abs(model.w @ xb - y[0]) <= model.eps + 1e-12

    def test_regularized_zero_lambda_reduces_to_sgd(self):
        rng = np.random.default_rng(125)
        x = rng.normal(size=(500, 3))
        y = rng.normal(size=500)
        sgd = SgdRegressor(3, eta=0.01)
        ridge = RidgeRegressor(3, eta=0.01, lam=0.0)
        lasso = LassoRegressor(3, eta=0.01, lam=0.0)
        for model in (sgd, ridge, lasso):
            model.observe(x, y)
        assert np.array_equal(ridge.w, sgd.w)
        assert np.array_equal(lasso.w, sgd.w)
        report(
            9,
            "baseline oracles",
            "rls == batch within 1e-6; pa tube holds; "
            "ridge/lasso lambda=0 bit-identical to sgd",
        )


class TestCriterion10Determinism:
    def test_byte_identical_outputs(self, tmp_path):
        stream_spec = {
            "kind": "abrupt", "n": 400, "m": 3, "noise_std": 5.0, "seed": 11,
            "switch_at": 200, "target_ed": 60.0,
        }
        spec_path = tmp_path / "stream.json"
        spec_path.write_text(json.dumps(stream_spec), encoding="utf-8")
        csv_a, csv_b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(["generate", "--spec", str(spec_path), "--out", str(csv_a)]) == 0
        assert cli_main(["generate", "--spec", str(spec_path), "--out", str(csv_b)]) == 0
        assert csv_a.read_bytes() == csv_b.read_bytes()

        run_spec = {
            "schema_version": 1,
            "name": "determinism",
            "dataset": stationary_spec(600, 3, 4.0, seed=5).to_dict(),
            "algorithms": [{"name": "wavg"}, {"name": "rls"}, {"name": "pa2"}],
            "protocol": {"folds": 3, "seeds": 2},
        }
        run_path = tmp_path / "run.json"
        run_path.write_text(json.dumps(run_spec), encoding="utf-8")
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli_main(["run", "--spec", str(run_path), "--out", str(out1)]) == 0
        assert cli_main(["run", "--spec", str(run_path), "--out", str(out2)]) == 0
        summary_bytes = (out1 / "summary.json").read_bytes()
        assert summary_bytes == (out2 / "summary.json").read_bytes()
        assert (out1 / "cells.csv").read_bytes() == (out2 / "cells.csv").read_bytes()
        report(
            10,
            "determinism",
            f"csv {csv_a.stat().st_size} bytes and summary "
            f"{len(summary_bytes)} bytes identical across runs",
        )


class TestCriterion11MemoryContract:
    def test_persistent_state_after_hundred_thousand_points(self):
        m, k = 5, 25
        capacity = 11
        model = AdaptiveAveragingRegressor(m, capacity=capacity)
        rng = np.random.default_rng(7)
        coeffs = rng.normal(size=m) * 10
        x0 = rng.uniform(-1, 1, size=(50, m))
        model.init_base(x0, x0 @ coeffs + rng.normal(size=50))
        streamed = 50
        while streamed < 100_000:
            x = rng.uniform(-1, 1, size=(k, m))
            y = x @ coeffs + rng.normal(size=k)
            model.partial_fit(x, y)
            streamed += k
        expected = (m + 2) + 2 * capacity
        assert model.persistent_scalar_count() == expected
        assert len(model.window) == capacity
        report(
            11,
            "memory contract",
            f"{streamed} points -> {expected} persistent scalars "
            f"(M+2 weights/alpha + 2 per window entry)",
        )
