"""Acceptance suite: every gate criterion at its stated tolerance.

Each test prints one ``[acceptance] <name>: PASS/FAIL`` line (visible with
``pytest -s`` or on failure).  The rate criteria run the full desk-scale
experiment configurations; on one CPU core the whole module takes on the
order of an hour, dominated by the success-rate study.
"""

import math

import numpy as np
import pytest

from cbopt.approximation import draw_saa_sample, midpoint_nodes, quadrature_objective, saa_objective
from cbopt.dynamics import CboParams, DiffusionKind, UniformBoxInit, consensus_point, em_step
from cbopt.experiments import ExperimentConfig, emit_csv
from cbopt.experiments import test1_meanfield_rate as run_test1_mf
from cbopt.experiments import test1_saa_rate as run_test1_saa
from cbopt.experiments import test2_joint_rate as run_test2
from cbopt.experiments import test3_dimension_sweep as run_test3
from cbopt.experiments import test4_success_rates as run_test4
from cbopt.metrics import wasserstein_1d
from cbopt.objectives import gaussian_piecewise_expectation, get_objective, make_phi
from cbopt.seeds import RunSeed

MASTER = 0

CBO_MAIN = CboParams.from_horizon(10.0, 0.1, lam=1.0, sigma=0.5, alpha=40.0)
CBO_T3 = CboParams.from_horizon(7.0, 1.0, lam=1.0, sigma=0.5, alpha=40.0)
CBO_T4 = CboParams.from_horizon(10.0, 0.1, lam=1.0, sigma=0.5, alpha=40.0,
                                diffusion=DiffusionKind.ANISOTROPIC)


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


class TestCriterion1SaaRate:
    def test_saa_rate_slope(self):
        cfg = ExperimentConfig(
            objective="ackley-like", cbo=CBO_MAIN,
            n_grid=(5000,), approx_grid=(100, 316, 1000, 3162, 10000),
            n_samples_cbo=10, n_samples_y=50, master_seed=MASTER,
        )
        rep = run_test1_saa(cfg)
        slope = rep.fits["rmse"].slope
        _report("1 sampled-pipeline rate", -0.70 <= slope <= -0.30,
                f"slope at t=T is {slope:+.3f}, required in [-0.70, -0.30]")


class TestCriterion2MeanfieldRate:
    def test_meanfield_rate_slopes_and_ordering(self):
        cfg = ExperimentConfig(
            objective="ackley-like", cbo=CBO_MAIN,
            n_grid=(100, 316, 1000, 3162, 10000), approx_grid=(100,),
            n_ref=10_000, n_samples_cbo=10, n_samples_y=50, master_seed=MASTER,
        )
        rep = run_test1_mf(cfg)
        s1, s2 = rep.fits["W1"].slope, rep.fits["W2"].slope
        margin = rep.details["w1_le_w2_min_margin"]
        ok = (-0.70 <= s1 <= -0.30) and (-0.70 <= s2 <= -0.30) and margin >= -1e-12
        _report("2 large-ensemble rate",
                ok, f"W1 slope {s1:+.3f}, W2 slope {s2:+.3f}, min(W2-W1) {margin:.2e}")


class TestCriterion3JointRate:
    def test_joint_limit_slope(self):
        cfg = ExperimentConfig(
            objective="ackley-like", cbo=CBO_MAIN,
            n_grid=(100, 316, 1000, 3162, 10000), approx_grid=(100,),
            n_ref=10_000, n_samples_cbo=10, master_seed=MASTER,
        )
        rep = run_test2(cfg)
        slope = rep.fits["W1"].slope
        _report("3 joint-limit rate", -0.70 <= slope <= -0.30,
                f"slope at t=T is {slope:+.3f}, required in [-0.70, -0.30]")


class TestCriterion4DimensionSweep:
    def test_slopes_and_intercept_ordering(self):
        # the strict intercept ordering needs the replication noise resolved
        # well below the ~0.1 gaps between the per-k constants; 600 algorithm
        # replications keep this under half a minute, far inside the
        # criterion's runtime budget
        cfg = ExperimentConfig(
            objective="lls-k1", cbo=CBO_T3,
            n_grid=(64, 256, 1024), approx_grid=(100,),
            n_ref=1000, n_samples_cbo=600, master_seed=MASTER, snapshot_count=8,
        )
        rep = run_test3(cfg)
        slopes = [rep.fits[f"lls-k{k}"].slope for k in (1, 2, 3)]
        intercepts = [rep.fits[f"lls-k{k}"].intercept for k in (1, 2, 3)]
        slopes_ok = all(-0.75 <= s <= -0.25 for s in slopes)
        order_ok = intercepts[0] < intercepts[1] < intercepts[2]
        _report("4 dimension sweep", slopes_ok and order_ok,
                "slopes " + ", ".join(f"{s:+.3f}" for s in slopes)
                + "; intercepts " + ", ".join(f"{c:+.3f}" for c in intercepts))


class TestCriterion5SuccessRates:
    def test_success_rate_tables(self):
        cfg = ExperimentConfig(
            objective="utility-d1", cbo=CBO_T4,
            n_grid=(100, 1000), approx_grid=(100,),
            n_samples_cbo=100, n_samples_y=100, quick=True,  # quick: 25 outer draws
            master_seed=MASTER,
        )
        rep = run_test4(cfg)
        failures = []
        for (pipe, k, n, thr), rate in sorted(rep.success.items()):
            if pipe == "saa" and rate < 0.90:
                failures.append(f"saa k={k} N={n} thr={thr}: {rate:.2f} < 0.90")
            if pipe == "quadrature" and k == 1 and rate < 0.95:
                failures.append(f"quad k=1 N={n} thr={thr}: {rate:.2f} < 0.95")
            if pipe == "quadrature" and k == 3 and thr in (0.25, 0.10) and rate > 0.10:
                failures.append(f"quad k=3 N={n} thr={thr}: {rate:.2f} > 0.10")
        _report("5 success rates", not failures,
                "; ".join(failures) if failures else
                f"all {len(rep.success)} cells within bounds")


class TestCriterion6OracleEquivalence:
    """Property suite; runs in under a minute."""

    def test_consensus_matches_naive_and_stays_finite(self):
        rng = np.random.default_rng(100)
        worst = 0.0
        for _ in range(200):
            n = rng.integers(2, 50)
            x = rng.normal(scale=rng.uniform(0.1, 5), size=(n, rng.integers(1, 4)))
            v = rng.normal(size=n)
            alpha = rng.uniform(0.1, 30.0 / (v.max() - v.min() + 1e-9))
            naive = (np.exp(-alpha * v) @ x) / np.exp(-alpha * v).sum()
            stable = consensus_point(x, v, alpha)
            worst = max(worst, np.max(np.abs(stable - naive) / (np.abs(naive) + 1e-300)))
        # and where the naive version underflows, the stabilized one is finite
        x = np.array([[1.0], [2.0]])
        v = np.array([50.0, 80.0])
        alpha = 40.0
        naive_w = np.exp(-alpha * v)
        stable = consensus_point(x, v, alpha)
        ok = worst < 1e-10 and naive_w.sum() == 0.0 and np.all(np.isfinite(stable))
        _report("6a consensus stabilization", ok,
                f"max rel gap {worst:.2e}; naive weights underflow to {naive_w.sum()}")

    def test_gaussian_expectation_against_monte_carlo(self):
        phi = make_phi()
        rng = np.random.default_rng(77)
        z = rng.standard_normal(10**7)
        worst = 0.0
        for _ in range(20):
            mu = rng.uniform(-4, 4)
            s = rng.uniform(0.01, 3.0)
            samples = phi(mu + s * z)
            se = samples.std(ddof=1) / math.sqrt(z.size)
            gap = abs(gaussian_piecewise_expectation(mu, s, phi) - samples.mean())
            worst = max(worst, gap / se)
        table = {1: ([0.82058], 1.3927), 2: ([0.35536, 0.71572], 1.3407),
                 3: ([0.20578, 0.40601, 0.61735], 1.2895)}
        table_ok = True
        for d, (x_star, f_star) in table.items():
            obj = get_objective(f"utility-d{d}")
            val = obj.f(np.asarray(x_star)[None, :])[0]
            table_ok &= abs(val - f_star) < 5e-4
        _report("6b exact Gaussian expectation", worst < 4.0 and table_ok,
                f"max |gap|/SE {worst:.2f} over 20 points; tabulated values "
                f"{'reproduced' if table_ok else 'NOT reproduced'} within 5e-4")

    def test_quadrature_error_halving(self):
        obj = get_objective("lls-k1")  # F = (yx)^2, exact mean (4/3) x^2
        x = np.array([[1.0]])
        ratios = []
        for q in (5, 10, 20, 40):
            e_q = abs(quadrature_objective(obj, midpoint_nodes(0, 2, q, 1))(x)[0] - 4 / 3)
            e_2q = abs(quadrature_objective(obj, midpoint_nodes(0, 2, 2 * q, 1))(x)[0] - 4 / 3)
            ratios.append(e_q / e_2q)
        _report("6c midpoint second-order decay", all(r >= 3.5 for r in ratios),
                "halving ratios " + ", ".join(f"{r:.2f}" for r in ratios))

    def test_wasserstein_metric_axioms(self):
        rng = np.random.default_rng(42)
        ok = True
        for _ in range(100):
            n = rng.integers(2, 60)
            a, b, c = rng.normal(size=(3, n)) * rng.uniform(0.5, 4)
            for p in (1, 2):
                ok &= wasserstein_1d(a, a, p) <= 1e-12
                ok &= abs(wasserstein_1d(a, b, p) - wasserstein_1d(b, a, p)) <= 1e-12
                ok &= (wasserstein_1d(a, b, p)
                       <= wasserstein_1d(a, c, p) + wasserstein_1d(c, b, p) + 1e-12)
        _report("6d Wasserstein metric axioms", ok, "100 random triples, tolerance 1e-12")

    def test_contraction_identity(self):
        params = CboParams(lam=1.0, sigma=0.0, alpha=1.0, dt=0.1, n_it=2)
        rng = np.random.default_rng(0)
        x = rng.normal(size=(30, 2))
        c = np.array([0.4, -1.2])
        d0 = np.linalg.norm(x - c, axis=1)
        worst = 0.0
        for h in range(1, 101):
            x = em_step(x, c, params, rng.normal(size=(30, 2))).positions
            gap = np.abs(np.linalg.norm(x - c, axis=1) - 0.9**h * d0) / d0
            worst = max(worst, gap.max())
        _report("6e contraction identity", worst <= 1e-12,
                f"max relative gap over 100 steps {worst:.2e}")


class TestCriterion7Determinism:
    """Byte-identical CSVs when re-running a config with the same seed.

    Exercised on the dimension-sweep and joint-limit acceptance configs
    (the mechanism - pure functions of (config, master seed) with fixed row
    order - is shared by every driver) plus reduced-size runs of the others.
    """

    def test_test3_acceptance_config_byte_identical(self, tmp_path):
        reports = []
        for name in ("a.csv", "b.csv"):
            cfg = ExperimentConfig(
                objective="lls-k1", cbo=CBO_T3,
                n_grid=(64, 256, 1024), approx_grid=(100,),
                n_ref=1000, n_samples_cbo=10, master_seed=MASTER,
                snapshot_count=8, out=str(tmp_path / name),
            )
            run_test3(cfg)
            reports.append((tmp_path / name).read_bytes())
        _report("7 determinism (dimension sweep)", reports[0] == reports[1],
                f"{len(reports[0])} bytes, identical")

    def test_test2_acceptance_config_byte_identical(self, tmp_path):
        blobs = []
        for name in ("a.csv", "b.csv"):
            cfg = ExperimentConfig(
                objective="ackley-like", cbo=CBO_MAIN,
                n_grid=(100, 316, 1000, 3162, 10000), approx_grid=(100,),
                n_ref=10_000, n_samples_cbo=10, master_seed=MASTER,
                out=str(tmp_path / name),
            )
            run_test2(cfg)
            blobs.append((tmp_path / name).read_bytes())
        _report("7 determinism (joint limit)", blobs[0] == blobs[1],
                f"{len(blobs[0])} bytes, identical")

    def test_reduced_runs_byte_identical(self, tmp_path):
        tiny = CboParams.from_horizon(1.0, 0.1, lam=1.0, sigma=0.5, alpha=40.0)
        tiny4 = CboParams.from_horizon(1.0, 0.1, lam=1.0, sigma=0.5, alpha=40.0,
                                       diffusion=DiffusionKind.ANISOTROPIC)
        blobs = {}
        for name in ("a", "b"):
            cfg1 = ExperimentConfig(objective="ackley-like", cbo=tiny, n_grid=(50,),
                                    approx_grid=(8, 32), n_samples_cbo=2, n_samples_y=3,
                                    master_seed=MASTER, out=str(tmp_path / f"saa_{name}.csv"))
            run_test1_saa(cfg1)
            cfg2 = ExperimentConfig(objective="ackley-like", cbo=tiny, n_grid=(20, 50),
                                    approx_grid=(8,), n_ref=80, n_samples_cbo=2,
                                    n_samples_y=3, master_seed=MASTER,
                                    out=str(tmp_path / f"mf_{name}.csv"))
            run_test1_mf(cfg2)
            cfg4 = ExperimentConfig(objective="utility-d1", cbo=tiny4, n_grid=(16,),
                                    approx_grid=(16,), n_samples_cbo=3, n_samples_y=2,
                                    master_seed=MASTER, out=str(tmp_path / f"t4_{name}.csv"))
            run_test4(cfg4, dims=(1, 2))
            for stem in ("saa", "mf", "t4"):
                blobs.setdefault(stem, []).append((tmp_path / f"{stem}_{name}.csv").read_bytes())
        ok = all(pair[0] == pair[1] for pair in blobs.values())
        _report("7 determinism (reduced runs)", ok,
                "sampled-rate, large-ensemble and success-rate drivers")
