import itertools
import math

import numpy as np
import pytest

from funcperm import (
    MeasureDraws,
    PermutationDistribution,
    combine_tests,
    combined_p_value,
    critical_value,
    cvm_statistic_multi,
    decide,
    energy_statistic,
    make_plans,
    mean_path_statistic_multi,
    number_of_assignments,
    p_value,
    permutation_distributions,
)
from funcperm.rng import substream


def dist_of(values, level=None) -> PermutationDistribution:
    return PermutationDistribution(np.asarray(values, dtype=float), level)


# ---------------------------------------------------------------------------
# plan generation
# ---------------------------------------------------------------------------

def test_exhaustive_two_one():
    plans = make_plans((2, 1), "exhaustive")
    assert len(plans) == 3  # 3!/(2!1!)
    assert plans[0].assignment.tolist() == [0, 0, 1]
    assert plans[0].index == 0


def test_exhaustive_three_three():
    plans = make_plans((3, 3), "exhaustive")
    assert len(plans) == 20  # C(6, 3)
    seen = {tuple(p.assignment.tolist()) for p in plans}
    assert len(seen) == 20  # all distinct


def test_exhaustive_multinomial_count():
    plans = make_plans((2, 1, 1), "exhaustive")
    assert len(plans) == number_of_assignments((2, 1, 1)) == 12


def test_exhaustive_cap_enforced():
    with pytest.raises(ValueError, match="cap"):
        make_plans((3, 3), "exhaustive", cap=10)


def test_sampled_identity_first():
    plans = make_plans((4, 3, 2), "sampled", count=25, seed=5)
    assert plans[0].assignment.tolist() == [0] * 4 + [1] * 3 + [2] * 2
    for p in plans:
        assert np.bincount(p.assignment, minlength=3).tolist() == [4, 3, 2]


def test_sampled_deterministic_per_index():
    a = make_plans((5, 5), "sampled", count=10, seed=9)
    b = make_plans((5, 5), "sampled", count=10, seed=9)
    for x, y in zip(a, b):
        assert np.array_equal(x.assignment, y.assignment)
    # plan q depends only on (seed, q), not on the count requested
    c = make_plans((5, 5), "sampled", count=4, seed=9)
    for x, y in zip(c, a):
        assert np.array_equal(x.assignment, y.assignment)


def test_make_plans_validation():
    with pytest.raises(ValueError):
        make_plans((5,), "sampled", count=3)
    with pytest.raises(ValueError):
        make_plans((2, 2), "sampled", count=0)
    with pytest.raises(ValueError):
        make_plans((2, 2), "bogus")


# ---------------------------------------------------------------------------
# critical values, p-values, decision rule
# ---------------------------------------------------------------------------

def test_critical_value_definition_cases():
    stats = list(range(1, 21))
    assert critical_value(dist_of(stats), 0.05) == 19.0
    assert critical_value(dist_of(stats), 0.049) == 20.0


def test_critical_value_constant_stats():
    for alpha in (0.01, 0.3, 0.9):
        assert critical_value(dist_of([4.0] * 7), alpha) == 4.0


def test_critical_value_reorder_invariant():
    rng = np.random.default_rng(2)
    stats = rng.exponential(size=50)
    t1 = critical_value(dist_of(stats), 0.1)
    t2 = critical_value(dist_of(stats[rng.permutation(50)]), 0.1)
    assert t1 == t2


def test_critical_value_alpha_domain():
    with pytest.raises(ValueError):
        critical_value(dist_of([1.0]), 0.0)
    with pytest.raises(ValueError):
        critical_value(dist_of([1.0]), 1.0)


def test_decide_strictly_above_threshold():
    # identity holds the unique maximum of the 20 distinct plan statistics
    stats = np.concatenate([[20.0], np.arange(1.0, 20.0)])
    res = decide(20.0, dist_of(stats), 0.05, "randomized", substream(0))
    assert res.critical == 19.0
    assert res.phi == 1.0
    assert res.rejected


def test_decide_tie_with_zero_weight():
    # observed equals the critical value and already exhausts Q*alpha
    res = decide(19.0, dist_of(range(1, 21)), 0.05, "randomized", substream(0))
    assert res.critical == 19.0
    assert res.phi == 0.0  # a = (20*0.05 - 1)/1 = 0
    assert not res.rejected


def test_decide_tie_with_half_weight():
    res = decide(5.0, dist_of([5.0, 5.0, 5.0, 5.0]), 0.5, "randomized", substream(1))
    assert res.critical == 5.0
    assert res.phi == 0.5  # a = (4*0.5 - 0)/4


def test_decide_randomized_tie_frequency():
    dist = dist_of([5.0, 5.0, 5.0, 5.0])
    hits = sum(
        decide(5.0, dist, 0.5, "randomized", substream(3, k)).rejected
        for k in range(4000)
    )
    assert abs(hits / 4000 - 0.5) < 0.03


def test_decide_conservative_never_rejects_tie():
    res = decide(5.0, dist_of([5.0, 5.0, 5.0, 5.0]), 0.5, "conservative")
    assert res.phi == 0.0
    assert not res.rejected
    below = decide(1.0, dist_of([1.0, 2.0, 3.0, 4.0]), 0.5, "conservative")
    assert not below.rejected
    above = decide(4.0, dist_of([4.0, 1.0, 2.0, 3.0]), 0.5, "conservative")
    assert above.rejected  # 4 > t* = 3


def test_decide_randomized_requires_rng_on_tie():
    with pytest.raises(ValueError, match="generator"):
        decide(5.0, dist_of([5.0, 5.0]), 0.5, "randomized")


def test_p_value_cases():
    stats = np.arange(1.0, 501.0)
    assert p_value(500.0, dist_of(stats)) == pytest.approx(1 / 500)
    assert p_value(1.0, dist_of(stats)) == 1.0
    assert p_value(3.0, dist_of([1.0, 2.0, 3.0, 4.0])) == 0.5


def test_p_value_at_least_one_over_q():
    rng = np.random.default_rng(4)
    stats = rng.exponential(size=37)
    assert p_value(float(stats.max()), dist_of(stats)) >= 1 / 37


# ---------------------------------------------------------------------------
# combination
# ---------------------------------------------------------------------------

def _result(rejected: bool, p: float, level: float):
    from funcperm import TestResult

    return TestResult(
        observed=1.0,
        critical=1.0,
        p_value=p,
        phi=1.0 if rejected else 0.0,
        rejected=rejected,
        mode="randomized",
        level=level,
    )


@pytest.mark.parametrize(
    "rej_a,rej_b,expected",
    [(True, False, True), (False, False, False), (False, True, True)],
)
def test_combination_is_either_rejects(rej_a, rej_b, expected):
    combined = combine_tests(_result(rej_a, 0.5, 0.03), _result(rej_b, 0.5, 0.02))
    assert combined.rejected is expected
    assert combined.cvm.p_value == 0.5
    assert combined.mean_path.p_value == 0.5


def test_combined_p_value_examples():
    assert combined_p_value(0.016, 1.0, 0.04, 0.01) == pytest.approx(0.02)
    assert combined_p_value(1.0, 1.0, 0.04, 0.01) == 1.0
    assert combined_p_value(0.02, 1.0, 0.025, 0.025) == pytest.approx(0.04)


def test_combined_p_value_validation():
    with pytest.raises(ValueError):
        combined_p_value(0.5, 0.5, 0.0, 0.05)
    with pytest.raises(ValueError):
        combined_p_value(0.5, 0.5, 0.6, 0.5)


def test_combined_p_value_matches_conservative_rule():
    # conservative either-rejects at the total level iff the combined
    # p-value is at or below that total
    rng = np.random.default_rng(6)
    q = 40
    for _ in range(200):
        stats_a = np.round(rng.exponential(size=q), 3)
        stats_b = np.round(rng.exponential(size=q), 3)
        alpha_a, alpha_b = 0.04, 0.01
        obs_a, obs_b = float(stats_a[0]), float(stats_b[0])
        da, db = dist_of(stats_a), dist_of(stats_b)
        ra = decide(obs_a, da, alpha_a, "conservative")
        rb = decide(obs_b, db, alpha_b, "conservative")
        combined = combined_p_value(ra.p_value, rb.p_value, alpha_a, alpha_b)
        total = alpha_a + alpha_b
        # skip knife-edge float coincidences
        if abs(combined - total) < 1e-9:
            continue
        assert (ra.rejected or rb.rejected) == (combined <= total)


# ---------------------------------------------------------------------------
# engine versus standalone statistics and brute force
# ---------------------------------------------------------------------------

def brute_force_plan_stats(pooled, sizes, draws_values):
    """Independent enumerator: plain Python loops over combinations."""
    n0, n1 = sizes
    n_total = n0 + n1
    rows = [tuple(r) for r in np.asarray(pooled).tolist()]
    zlist = [tuple(z) for z in np.asarray(draws_values).tolist()]
    width = len(rows[0])
    out_cvm, out_mean, out_energy = [], [], []
    for combo in itertools.combinations(range(n_total), n0):
        in_a = set(combo)
        a = [rows[i] for i in range(n_total) if i in in_a]
        b = [rows[i] for i in range(n_total) if i not in in_a]
        acc = 0.0
        for z in zlist:
            fa = sum(1 for r in a if all(r[j] <= z[j] for j in range(width))) / n0
            fb = sum(1 for r in b if all(r[j] <= z[j] for j in range(width))) / n1
            acc += (fa - fb) ** 2
        out_cvm.append(n_total * (acc / len(zlist)))
        acc = 0.0
        for j in range(width):
            ma = sum(r[j] for r in a) / n0
            mb = sum(r[j] for r in b) / n1
            acc += (ma - mb) ** 2
        out_mean.append(n_total * acc / width)

        def distance(u, v):
            return sum((x - y) ** 2 for x, y in zip(u, v)) ** 0.5

        cross = sum(distance(u, v) for u in a for v in b) / (n0 * n1)
        within_a = sum(distance(u, v) for u in a for v in a) / n0**2
        within_b = sum(distance(u, v) for u in b for v in b) / n1**2
        out_energy.append(n0 * n1 / n_total * (2 * cross - within_a - within_b))
    return out_cvm, out_mean, out_energy


def test_engine_matches_brute_force_exactly():
    # dyadic path and draw values at width one keep every intermediate
    # quantity exactly representable, so the two independently coded
    # reductions must agree bit for bit
    rng = np.random.default_rng(11)
    pooled = rng.integers(-8, 9, size=(6, 1)) * 0.25
    zvals = rng.integers(-8, 9, size=(3, 1)) * 0.25
    plans = make_plans((3, 3), "exhaustive")
    dists = permutation_distributions(
        pooled, (3, 3), plans, ("cvm", "mean_path", "energy"), MeasureDraws(values=zvals)
    )
    oc, om, oe = brute_force_plan_stats(pooled, (3, 3), zvals)
    assert dists["cvm"].stats.tolist() == oc
    assert dists["mean_path"].stats.tolist() == om
    assert dists["energy"].stats.tolist() == oe


def test_engine_matches_brute_force_general_data():
    rng = np.random.default_rng(12)
    pooled = rng.normal(size=(7, 3))
    zvals = rng.normal(size=(5, 3))
    plans = make_plans((4, 3), "exhaustive")
    dists = permutation_distributions(
        pooled, (4, 3), plans, ("cvm", "mean_path", "energy"), MeasureDraws(values=zvals)
    )
    oc, om, oe = brute_force_plan_stats(pooled, (4, 3), zvals)
    assert np.allclose(dists["cvm"].stats, oc, rtol=1e-12, atol=1e-14)
    assert np.allclose(dists["mean_path"].stats, om, rtol=1e-12, atol=1e-14)
    assert np.allclose(dists["energy"].stats, oe, rtol=1e-12, atol=1e-14)


def test_engine_identity_plan_matches_standalone():
    rng = np.random.default_rng(13)
    sizes = (4, 3, 5)
    groups = [rng.normal(size=(n, 4)) for n in sizes]
    pooled = np.vstack(groups)
    draws = MeasureDraws(values=rng.normal(size=(17, 4)))
    plans = make_plans(sizes, "sampled", count=6, seed=8)
    dists = permutation_distributions(
        pooled, sizes, plans, ("cvm", "mean_path", "energy"), draws
    )
    assert dists["cvm"].observed == cvm_statistic_multi(groups, draws).value
    assert dists["mean_path"].observed == pytest.approx(
        mean_path_statistic_multi(groups).value, rel=1e-12
    )
    assert dists["energy"].observed == pytest.approx(
        energy_statistic(groups).value, rel=1e-12
    )


def test_engine_rejects_plan_violating_sizes():
    pooled = np.zeros((4, 2))
    bad = np.array([[0, 0, 0, 1]], dtype=np.int8)
    with pytest.raises(ValueError, match="group sizes"):
        permutation_distributions(pooled, (2, 2), bad, ("mean_path",))


def test_conservative_rule_never_exceeds_level_under_null():
    # size check at a scale small enough for the test suite: the
    # conservative rule may under-reject but must not over-reject
    rng_data = substream(44)
    reps = 600
    alpha = 0.10
    hits = 0
    for rep in range(reps):
        pooled = rng_data.normal(size=(12, 3))
        plans = make_plans((6, 6), "sampled", count=99, seed=(44, rep))
        dist = permutation_distributions(pooled, (6, 6), plans, ("mean_path",))["mean_path"]
        hits += decide(dist.observed, dist, alpha, "conservative").rejected
    rate = hits / reps
    assert rate <= alpha + 3 * math.sqrt(alpha * (1 - alpha) / reps)


def test_run_combined_test_end_to_end():
    from funcperm import FunctionalSample, MeasureSpec, TimeGrid, draw_functions, run_combined_test

    rng = np.random.default_rng(4)
    paths = np.vstack([rng.normal(size=(8, 5)), rng.normal(size=(8, 5)) + 6.0])
    sample = FunctionalSample(paths, [0] * 8 + [1] * 8, TimeGrid.regular(5))
    draws = draw_functions(MeasureSpec(n_terms=3, mean_level=3.0, seed=1), sample.grid, 64)
    plans = make_plans(sample.group_sizes, "sampled", count=99, seed=2)
    result = run_combined_test(sample, draws, plans, 0.025, 0.025, seed=3)
    # groups six sigma apart: the mean-path component is certain to reject
    assert result.mean_path.rejected
    assert result.rejected
    assert result.p_value_combined <= 0.05
    assert result.cvm.level == 0.025 and result.mean_path.level == 0.025


def test_hand_evaluation_of_critical_value_and_weight_on_tiny_sample():
    # sizes (3, 3), exhaustive: check t* and the randomized weight against
    # a by-the-definition evaluation on the realized statistics
    rng = np.random.default_rng(14)
    pooled = rng.normal(size=(6, 2))
    plans = make_plans((3, 3), "exhaustive")
    dist = permutation_distributions(pooled, (3, 3), plans, ("mean_path",))["mean_path"]
    alpha = 0.1
    ordered = sorted(dist.stats.tolist())
    k = math.ceil(20 * (1 - alpha))
    t_star = ordered[k - 1]
    assert critical_value(dist, alpha) == t_star
    q_plus = sum(1 for s in dist.stats if s > t_star)
    q_zero = sum(1 for s in dist.stats if s == t_star)
    res = decide(dist.observed, dist, alpha, "conservative")
    if dist.observed == t_star:
        assert res.phi == 0.0
    expected_a = (20 * alpha - q_plus) / q_zero
    res_rand = decide(t_star, dist, alpha, "randomized", substream(1))
    assert res_rand.phi == pytest.approx(expected_a)
