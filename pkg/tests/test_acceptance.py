"""Acceptance suite: one test per criterion, each printing a PASS line
with its measured figure when it holds.

Criterion 7's diversity-ceiling clause is asserted exactly as specified
and is expected to fail at this scale: with near-independent bootstrap
members, the finite-trial disparity estimate (a nonnegative plug-in that
only vanishes as trials grow) exceeds the across-trial variance of the
combined prediction once the ensemble outgrows the trial count, which
pushes the estimated diversity above the estimated average variance even
though the population property holds.  See the failure message of
``test_criterion_7_diversity_ceiling``.
"""

import itertools
import math
import os
import time

import numpy as np
import pytest

import ensdecomp as ed
from ensdecomp.bregman import KLMinimal, Squared, divergence_values
from ensdecomp.decomp import arithmetic_ambiguity_core, bvd_terms, squared_bvc
from ensdecomp.estimators import TrialPlan, collect_predictions, sweep_ensemble_size
from ensdecomp.learners import (
    TreeParams,
    adaboost_member_factory,
    bagging_member_factory,
    load_csv,
    make_synthetic,
    random_forest_member_factory,
    take,
)
from ensdecomp.theory import (
    diversity_effect_independent,
    majority_error_independent,
    nonexistence_counterexample,
    simulate_diversity_effect,
)
from ensdecomp.verify import run_identity_suite


def report(line: str) -> None:
    print(line)


# ---------------------------------------------------------------------------
# criterion 1: randomized identity suite


def test_criterion_1_identity_suite():
    start = time.perf_counter()
    results = run_identity_suite(seed=2024, count=1000)
    elapsed = time.perf_counter() - start
    worst = max(results, key=lambda r: r.max_residual / r.tolerance)
    for result in results:
        assert result.passed, result.line()
    assert elapsed < 10.0, f"identity suite took {elapsed:.1f}s"
    report(
        f"PASS criterion 1: {len(results)} identities x 1000 instances in "
        f"{elapsed:.1f}s; worst {worst.identity}/{worst.loss} residual {worst.max_residual:.2e}"
    )


# ---------------------------------------------------------------------------
# criterion 2: point values reported in the source figures


def test_criterion_2_point_values():
    sq = Squared()
    d = ed.divergence(sq, ed.Prediction((1.0,), "real"), ed.Prediction((0.3,), "real"))
    assert d == pytest.approx(0.49, abs=1e-15)

    kl = KLMinimal(2)
    eta1 = ed.grad(kl, ed.Prediction((0.7,), "simplex")).values[0]
    eta2 = ed.grad(kl, ed.Prediction((0.97,), "simplex")).values[0]
    assert eta1 == pytest.approx(0.8473, abs=1e-3)
    assert eta2 == pytest.approx(3.476, abs=1e-3)
    mean = 0.5 * (eta1 + eta2)
    # the reference prints the dual mean to two decimals (2.16); its exact
    # value is 2.1617, so the print precision (half an ULP of the printout)
    # is the tightest honest tolerance for this one figure
    assert mean == pytest.approx(2.16, abs=5e-3)
    assert mean == pytest.approx(0.5 * (math.log(7 / 3) + math.log(97 / 3)), abs=1e-12)
    combined = ed.grad_inverse(kl, (mean,)).values[0]
    assert combined == pytest.approx(0.896, abs=1e-3)
    centroid = ed.left_centroid(
        kl, [ed.Prediction((0.7,), "simplex"), ed.Prediction((0.97,), "simplex")]
    ).values[0]
    assert centroid == pytest.approx(0.896, abs=1e-3)
    report(
        "PASS criterion 2: squared divergence 0.49; dual map "
        f"({eta1:.4f}, {eta2:.4f}) -> mean {mean:.4f} -> combined {combined:.4f}"
    )


# ---------------------------------------------------------------------------
# criterion 3: counterexample table


def test_criterion_3_counterexample_table():
    table = nonexistence_counterexample((0.6, 0.4))
    assert table[0, 0] == 0.4 and table[0, 1] == -0.4
    assert table[1, 0] == -0.6 and table[1, 1] == 0.6

    table4 = nonexistence_counterexample((0.6, 0.4, 0.0, 0.0))
    assert np.array_equal(table4[2], np.array([-0.6, -0.4, 1.0, 0.0]))
    report("PASS criterion 3: counterexample residual table reproduced exactly")


# ---------------------------------------------------------------------------
# criterion 4: independent-voter model


def test_criterion_4_independent_voters():
    for m in range(1, 103, 2):
        assert abs(diversity_effect_independent(0.5, m)) <= 1e-12

    def enumerated_de(eps, m):
        total = 0.0
        for pattern in itertools.product([0, 1], repeat=m):
            errors = sum(pattern)
            if errors > m / 2:
                total += (eps**errors) * ((1 - eps) ** (m - errors))
        return eps - total

    oracle = enumerated_de(0.3, 3)
    assert diversity_effect_independent(0.3, 3) == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(0.084, abs=1e-12)

    grid = np.linspace(0.01, 0.99, 99)
    des = np.array([diversity_effect_independent(float(e), 11) for e in grid])
    signs = np.where(np.abs(des) <= 1e-12, 0.0, np.sign(des))
    assert np.array_equal(signs, np.sign(np.round(0.5 - grid, 12)))
    report("PASS criterion 4: DE(0.5, m)=0 for odd m<=101; DE(0.3,3)=0.084; signs match 0.5-eps")


# ---------------------------------------------------------------------------
# criterion 5: multiclass simulation


def test_criterion_5_simulation():
    start = time.perf_counter()
    result = simulate_diversity_effect(4, 0.6, 21, 10_000, seed=321)
    elapsed = time.perf_counter() - start
    assert result["mean"] >= -3 * result["se"]
    assert result["mean"] > 3 * result["se"], "diversity effect not positive at 3 sigma"
    assert elapsed < 5.0
    report(
        f"PASS criterion 5: simulated DE {result['mean']:.4f} +/- {result['se']:.4f} "
        f"(k=4, p=0.6, M=21) in {elapsed:.2f}s"
    )


# ---------------------------------------------------------------------------
# criteria 6 and 7 share one Bagging tensor


@pytest.fixture(scope="module")
def bagging_tensor():
    train = make_synthetic("friedman_regression", 800, 11)
    test = make_synthetic("friedman_regression", 200, 12)
    plan = TrialPlan(n_trials=10, ensemble_size=30, subsample_fraction=0.9, master_seed=7)
    factory = bagging_member_factory(TreeParams(max_depth=8), "regression")
    start = time.perf_counter()
    tensor = collect_predictions(factory, train, test, plan, "regression")
    entries = sweep_ensemble_size(tensor, Squared(), test.targets, list(range(1, 31)))
    elapsed = time.perf_counter() - start
    return tensor, entries, elapsed


def test_criterion_6_bagging_trend(bagging_tensor):
    tensor, entries, elapsed = bagging_tensor
    bias = np.array([e.report.average_bias for e in entries])
    variance = np.array([e.report.average_variance for e in entries])
    diversity = np.array([e.report.diversity for e in entries])
    expected = np.array([e.report.expected_loss for e in entries])

    bias_spread = (bias.max() - bias.min()) / bias.mean()
    var_spread = (variance.max() - variance.min()) / variance.mean()
    assert bias_spread < 0.10, f"average bias varies by {bias_spread:.1%}"
    assert var_spread < 0.10, f"average variance varies by {var_spread:.1%}"
    assert diversity[29] > diversity[1], "diversity did not grow with ensemble size"
    assert expected[29] < expected[0], "expected loss did not fall from M=1 to M=30"
    assert elapsed < 60.0, f"criterion-6 run took {elapsed:.0f}s"
    report(
        f"PASS criterion 6: bias spread {bias_spread:.1%}, variance spread {var_spread:.1%}, "
        f"diversity {diversity[1]:.2f}->{diversity[29]:.2f}, "
        f"loss {expected[0]:.2f}->{expected[29]:.2f} in {elapsed:.0f}s"
    )


def _disparity(duals: np.ndarray, gen, trial_idx) -> float:
    """Test-side oracle: average divergence of member centroids from their
    pooled centroid, averaged over test points, for a trial subset."""
    member_duals = duals[trial_idx].mean(axis=0)  # (M, N, dim)
    member_centroids = gen.grad_inverse(member_duals)
    pooled = gen.grad_inverse(member_duals.mean(axis=0))
    return float(np.mean(divergence_values(gen, pooled[None], member_centroids)))


def test_criterion_7_disparity_within_noise(bagging_tensor):
    tensor, _, _ = bagging_tensor
    gen = Squared()
    duals = gen.grad(tensor.values[..., None])
    n_trials = tensor.values.shape[0]
    disparity = _disparity(duals, gen, np.arange(n_trials))
    rng = np.random.default_rng(2718)
    boots = [
        _disparity(duals, gen, rng.integers(0, n_trials, n_trials)) for _ in range(200)
    ]
    se = float(np.std(boots, ddof=1))
    assert abs(disparity) < 3 * se, f"disparity {disparity:.3f} vs bootstrap se {se:.3f}"
    report(f"PASS criterion 7a: |disparity| {disparity:.3f} < 3 x bootstrap se {se:.3f}")


def test_criterion_7_diversity_ceiling(bagging_tensor):
    _, entries, _ = bagging_tensor
    margins = {e.m: e.report.average_variance - e.report.diversity for e in entries}
    worst_m = min(margins, key=margins.get)
    assert all(margin >= -1e-9 for margin in margins.values()), (
        f"estimated diversity exceeds estimated average variance from the first M with "
        f"M - 1 > n_trials (worst at M={worst_m}: diversity is "
        f"{-margins[worst_m]:.3f} above variance).  The nonnegative finite-trial "
        "disparity estimate inflates diversity relative to variance once ensembles "
        "outgrow the trial count; the population ceiling needs more trials than the "
        "10 specified here to reappear in the estimates."
    )
    report("PASS criterion 7b: diversity <= average variance at every M")


# ---------------------------------------------------------------------------
# criterion 8: AM-GM ambiguity


def test_criterion_8_amgm_ambiguity():
    rng = np.random.default_rng(99)
    total = 0
    worst = 0.0
    while total < 10_000:
        k = int(rng.integers(2, 6))
        m = int(rng.integers(1, 10))
        batch = min(500, 10_000 - total)
        gen = KLMinimal(k)
        values = gen.sample(rng, batch * m).reshape(batch, m, k - 1)
        ys = rng.integers(0, k, size=batch)
        terms = arithmetic_ambiguity_core(ys, values)
        worst = min(worst, float(np.min(terms["ambiguity_term"])))
        assert np.all(terms["ambiguity_term"] >= -1e-12)
        total += batch
    report(f"PASS criterion 8: 10000 ensembles, min ambiguity {worst:.2e} >= -1e-12")


# ---------------------------------------------------------------------------
# criterion 9: agreement with the covariance form


def test_criterion_9_covariance_cross_check():
    rng = np.random.default_rng(123)
    worst_gap = 0.0
    worst_residual = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        grid = rng.normal(scale=2.0, size=(d, m))
        y = float(rng.normal())
        bvc = squared_bvc(y, grid)
        bvd = bvd_terms(Squared(), y, grid)
        gap = abs(bvc["expected_loss"] - bvd.expected_loss)
        worst_gap = max(worst_gap, gap)
        worst_residual = max(worst_residual, abs(bvc["residual"]))
        assert gap <= 1e-10
        assert abs(bvc["residual"]) <= 1e-10
    report(
        f"PASS criterion 9: 1000 grids, max expected-loss gap {worst_gap:.2e}, "
        f"max covariance-identity residual {worst_residual:.2e}"
    )


# ---------------------------------------------------------------------------
# criterion 10: boosting vs Bagging effect series


def test_criterion_10_boosting_vs_bagging():
    start = time.perf_counter()
    train = make_synthetic("mease_binary", 500, 21, active_features=2)
    test = make_synthetic("mease_binary", 200, 22, active_features=2)
    plan = TrialPlan(n_trials=10, ensemble_size=50, master_seed=77)
    stump = TreeParams(max_depth=1)
    m_values = list(range(1, 51))

    def series(factory):
        tensor = collect_predictions(factory, train, test, plan, "label")
        entries = sweep_ensemble_size(tensor, None, test.targets.astype(int), m_values)
        out = {}
        for term in ("bias_effect", "variance_effect"):
            values = np.array([getattr(e.report, term) for e in entries])
            ses = np.array([e.std_errors[term] for e in entries])
            out[term] = (values.max() - values.min(), 3 * float(np.median(ses)))
        return out

    bagging = series(bagging_member_factory(stump, "label"))
    adaboost = series(adaboost_member_factory(stump))
    elapsed = time.perf_counter() - start

    for term in ("bias_effect", "variance_effect"):
        spread, band = adaboost[term]
        assert spread > band, f"adaboost {term} flat: spread {spread:.4f} <= {band:.4f}"
        spread, band = bagging[term]
        assert spread <= band, f"bagging {term} varies: spread {spread:.4f} > {band:.4f}"
    assert elapsed < 60.0
    report(
        "PASS criterion 10: adaboost bias/variance effects vary "
        f"(spreads {adaboost['bias_effect'][0]:.3f}/{adaboost['variance_effect'][0]:.3f}), "
        f"bagging flat, in {elapsed:.0f}s"
    )


# ---------------------------------------------------------------------------
# criterion 11: optional dataset-gated California Housing ordering


CALIFORNIA = os.environ.get("ENSDECOMP_CALIFORNIA_CSV", "")


@pytest.mark.skipif(not CALIFORNIA, reason="set ENSDECOMP_CALIFORNIA_CSV to a local CSV to run")
def test_criterion_11_california_ordering():
    target = os.environ.get("ENSDECOMP_CALIFORNIA_TARGET", "MedHouseVal")
    data = load_csv(CALIFORNIA, target, "regression")
    rng = np.random.default_rng(4242)
    order = rng.permutation(len(data))
    train = take(data, order[:2000])
    test = take(data, order[2000:3000])
    plan = TrialPlan(n_trials=5, ensemble_size=30, master_seed=17)

    def expected_loss(factory, plan_override=None, m=30):
        tensor = collect_predictions(factory, train, test, plan_override or plan, "regression")
        entries = sweep_ensemble_size(tensor, Squared(), test.targets, [m])
        return entries[0].report.expected_loss

    single_plan = TrialPlan(n_trials=5, ensemble_size=1, bootstrap=False, master_seed=17)
    single = expected_loss(bagging_member_factory(TreeParams(max_depth=8), "regression"),
                           plan_override=single_plan, m=1)
    bag8 = expected_loss(bagging_member_factory(TreeParams(max_depth=8), "regression"))
    bag_full = expected_loss(bagging_member_factory(TreeParams(), "regression"))
    forest = expected_loss(random_forest_member_factory(TreeParams(), "regression"))
    assert single > bag8 > bag_full > forest
    report(
        f"PASS criterion 11: tree {single:.3f} > bagging(8) {bag8:.3f} > "
        f"bagging {bag_full:.3f} > forest {forest:.3f}"
    )
