"""Group-relabeling permutations, critical values, and decision rules.

The test recomputes a statistic under relabelings of the pooled sample
that keep the group sizes fixed.  Because the statistic is a deterministic
function of the partition (the same evaluation draws are reused for every
relabeling), the resulting test rejects a true null hypothesis with
probability exactly alpha in finite samples -- for any number of
evaluation draws, any grid, and either exhaustive or sampled plans, as
long as plan 0 is the identity.

Decision rule: with t* the ceil(Q(1-alpha))-th smallest of the Q plan
statistics, reject when the observed value exceeds t*; on a tie with t*,
reject with probability a = (Q alpha - Q+)/Q0 where Q+ and Q0 count plan
statistics above and equal to t*.  The conservative variant replaces a
with zero and can reject with probability below alpha, never above.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measure import MeasureDraws
from .rng import Seed, substream
from .samples import pooled_by_group
from .stats import indicator_matrix, pairwise_distances

PERMUTATION_STATISTICS = ("cvm", "mean_path", "energy")

# Guard against alpha resolutions so fine that float rounding of
# Q*(1-alpha) could move the order-statistic index.
_QUANTILE_EPS = 1e-9


@dataclass(frozen=True)
class PermutationPlan:
    """One assignment of the pooled rows to groups of fixed sizes."""

    assignment: np.ndarray  # (N,) small ints
    index: int  # 0 is the identity assignment

    def __post_init__(self) -> None:
        arr = np.asarray(self.assignment, dtype=np.int8)
        arr.flags.writeable = False
        object.__setattr__(self, "assignment", arr)


@dataclass(frozen=True)
class PermutationDistribution:
    """Plan statistics, identity plan first; optionally tagged with a level."""

    stats: np.ndarray  # (Q,)
    level: float | None = None

    def __post_init__(self) -> None:
        stats = np.asarray(self.stats, dtype=float)
        if stats.ndim != 1 or stats.shape[0] < 1:
            raise ValueError("need at least one plan statistic")
        if not np.all(np.isfinite(stats)) or np.any(stats < 0):
            raise ValueError("plan statistics must be finite and nonnegative")
        stats = np.array(stats)
        stats.flags.writeable = False
        object.__setattr__(self, "stats", stats)

    @property
    def n_plans(self) -> int:
        return self.stats.shape[0]

    @property
    def observed(self) -> float:
        """The identity plan's statistic."""
        return float(self.stats[0])


@dataclass(frozen=True)
class TestResult:
    """Outcome of one permutation test."""

    observed: float
    critical: float
    p_value: float
    phi: float  # rejection probability given the data: 1, a, or 0
    rejected: bool
    mode: str  # "randomized" | "conservative"
    level: float


@dataclass(frozen=True)
class CombinedResult:
    """Either-rejects combination of the CDF-distance and mean-path tests."""

    cvm: TestResult
    mean_path: TestResult
    rejected: bool
    p_value_combined: float


def number_of_assignments(group_sizes: Sequence[int]) -> int:
    """Count of distinct assignments: N! / (n_0! ... n_S!)."""
    total = 1
    remaining = sum(group_sizes)
    for size in group_sizes:
        total *= math.comb(remaining, size)
        remaining -= size
    return total


def _identity_assignment(group_sizes: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(group_sizes), dtype=np.int8), group_sizes)


def _enumerate_assignments(group_sizes: Sequence[int]):
    """All distinct assignments in lexicographic order (identity first)."""
    n_total = sum(group_sizes)
    assignment = np.empty(n_total, dtype=np.int8)

    def recurse(free: tuple[int, ...], group: int):
        if group == len(group_sizes) - 1:
            assignment[list(free)] = group
            yield assignment.copy()
            return
        for combo in itertools.combinations(free, group_sizes[group]):
            assignment[list(combo)] = group
            taken = set(combo)
            yield from recurse(tuple(p for p in free if p not in taken), group + 1)

    yield from recurse(tuple(range(n_total)), 0)


def make_plans(
    group_sizes: Sequence[int],
    mode: str = "sampled",
    count: int | None = None,
    seed: Seed = 0,
    cap: int = 1_000_000,
) -> list[PermutationPlan]:
    """Build the plan list the permutation engine iterates.

    ``exhaustive`` enumerates every distinct assignment exactly once
    (error when the count exceeds ``cap``); ``sampled`` returns the
    identity plus ``count - 1`` independent uniform relabelings, with
    duplicates permitted.  Plan q of a sampled list is drawn from the
    substream keyed (seed, q), so plan generation parallelizes without
    changing results.
    """
    sizes = tuple(int(n) for n in group_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least two groups to permute")
    if any(n < 1 for n in sizes):
        raise ValueError("every group must have at least one member")
    if len(sizes) > 127:
        raise ValueError("more than 127 groups is unsupported")

    if mode == "exhaustive":
        total = number_of_assignments(sizes)
        if total > cap:
            raise ValueError(
                f"exhaustive mode would enumerate {total} assignments, "
                f"above the cap of {cap}; use sampled mode"
            )
        return [
            PermutationPlan(assignment, index)
            for index, assignment in enumerate(_enumerate_assignments(sizes))
        ]
    if mode == "sampled":
        if count is None or count < 1:
            raise ValueError("sampled mode needs a positive plan count")
        base = _identity_assignment(sizes)
        plans = [PermutationPlan(base, 0)]
        for q in range(1, count):
            plans.append(PermutationPlan(substream(seed, q).permutation(base), q))
        return plans
    raise ValueError(f"unknown plan mode {mode!r}")


def _plan_matrix(plans, group_sizes: Sequence[int]) -> np.ndarray:
    if isinstance(plans, np.ndarray):
        matrix = np.asarray(plans, dtype=np.int8)
    else:
        matrix = np.stack([p.assignment for p in plans])
    if matrix.ndim != 2 or matrix.shape[1] != sum(group_sizes):
        raise ValueError("plans do not match the pooled sample length")
    return matrix


def permutation_statistics(
    pooled: np.ndarray,
    group_sizes: Sequence[int],
    plans,
    statistics: Sequence[str],
    draws: MeasureDraws | None = None,
) -> dict[str, np.ndarray]:
    """Evaluate the requested statistics under every plan at once.

    ``pooled`` must hold the rows in group-block order so that the
    identity assignment reproduces the observed grouping.  All plans are
    evaluated against the same ``draws``, which is what makes the sampled
    test exact for any number of draws.

    The heavy lifting is a handful of matrix products: group membership
    masks hold exact 0/1 values, so CDF counts are exact integers and the
    per-plan statistic is a fixed function of the partition.
    """
    unknown = set(statistics) - set(PERMUTATION_STATISTICS)
    if unknown:
        raise ValueError(f"unknown statistics {sorted(unknown)}")
    sizes = tuple(int(n) for n in group_sizes)
    pooled = np.asarray(pooled, dtype=float)
    matrix = _plan_matrix(plans, sizes)
    n_groups = len(sizes)
    masks = [(matrix == s).astype(np.float64) for s in range(n_groups)]
    for s, mask in enumerate(masks):
        if not np.all(mask.sum(axis=1) == sizes[s]):
            raise ValueError("a plan does not respect the group sizes")

    out: dict[str, np.ndarray] = {}
    n0 = sizes[0]
    if "cvm" in statistics:
        if draws is None:
            raise ValueError("the cvm statistic needs measure draws")
        below = indicator_matrix(pooled, draws.values)  # (N, L), exact 0/1
        cdf = [masks[s] @ below / sizes[s] for s in range(n_groups)]
        total = np.zeros(matrix.shape[0])
        for s in range(1, n_groups):
            total += (n0 + sizes[s]) * np.mean((cdf[0] - cdf[s]) ** 2, axis=1)
        out["cvm"] = total
    if "mean_path" in statistics:
        means = [masks[s] @ pooled / sizes[s] for s in range(n_groups)]
        total = np.zeros(matrix.shape[0])
        for s in range(1, n_groups):
            total += (n0 + sizes[s]) * np.mean((means[0] - means[s]) ** 2, axis=1)
        out["mean_path"] = total
    if "energy" in statistics:
        dist = pairwise_distances(pooled)
        rows = [masks[s] @ dist for s in range(n_groups)]
        within = [
            np.einsum("qn,qn->q", rows[s], masks[s]) / sizes[s] ** 2
            for s in range(n_groups)
        ]
        total = np.zeros(matrix.shape[0])
        for s in range(1, n_groups):
            cross = np.einsum("qn,qn->q", rows[0], masks[s]) / (n0 * sizes[s])
            total += n0 * sizes[s] / (n0 + sizes[s]) * (
                2.0 * cross - within[0] - within[s]
            )
        out["energy"] = np.maximum(total, 0.0)
    return out


def permutation_distributions(
    pooled: np.ndarray,
    group_sizes: Sequence[int],
    plans,
    statistics: Sequence[str] = ("cvm", "mean_path"),
    draws: MeasureDraws | None = None,
    level: float | None = None,
) -> dict[str, PermutationDistribution]:
    """Wrap :func:`permutation_statistics` results as distributions."""
    raw = permutation_statistics(pooled, group_sizes, plans, statistics, draws)
    return {name: PermutationDistribution(stats, level) for name, stats in raw.items()}


def critical_value(dist: PermutationDistribution, alpha: float) -> float:
    """Smallest plan statistic whose empirical CDF reaches 1 - alpha.

    Equals the ceil(Q(1-alpha))-th smallest plan statistic.  Invariant
    under reordering of the plan statistics.  Alpha must not be tuned
    finer than about 1e-9/Q (float guard on the index).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    ordered = np.sort(dist.stats)
    rank = math.ceil(dist.n_plans * (1.0 - alpha) - _QUANTILE_EPS)
    return float(ordered[rank - 1])


def p_value(observed: float, dist: PermutationDistribution) -> float:
    """Share of plan statistics at or above the observed value.

    The identity plan is part of the distribution, so the result is always
    at least 1/Q and the test ``p <= alpha`` is exactly valid.
    """
    return float(np.count_nonzero(dist.stats >= observed) / dist.n_plans)


def decide(
    observed: float,
    dist: PermutationDistribution,
    alpha: float,
    mode: str = "randomized",
    rng: np.random.Generator | None = None,
) -> TestResult:
    """Apply the (possibly randomized) decision rule at level ``alpha``.

    ``observed`` must be the identity plan's statistic, i.e.
    ``dist.observed``.  In randomized mode a tie with the critical value
    rejects with probability a (drawn from ``rng``); conservative mode
    never rejects on a tie.
    """
    if mode not in ("randomized", "conservative"):
        raise ValueError(f"unknown decision mode {mode!r}")
    threshold = critical_value(dist, alpha)  # validates alpha
    stats = dist.stats
    if observed > threshold:
        phi = 1.0
        rejected = True
    elif observed == threshold:
        q_above = int(np.count_nonzero(stats > threshold))
        q_equal = int(np.count_nonzero(stats == threshold))
        boundary = (dist.n_plans * alpha - q_above) / q_equal
        boundary = min(max(boundary, 0.0), 1.0)
        if mode == "randomized":
            if rng is None:
                raise ValueError("randomized mode needs a random generator")
            phi = boundary
            rejected = bool(rng.random() < boundary)
        else:
            phi = 0.0
            rejected = False
    else:
        phi = 0.0
        rejected = False
    return TestResult(
        observed=float(observed),
        critical=threshold,
        p_value=p_value(observed, dist),
        phi=phi,
        rejected=rejected,
        mode=mode,
        level=alpha,
    )


def combine_tests(cvm_result: TestResult, mean_result: TestResult) -> CombinedResult:
    """Either-rejects combination of two component results.

    The combination rejects iff either component rejected (after its own
    randomization); its size is bounded between the larger component level
    and the sum of the two levels.  Both component p-values are carried
    along with a weighted-Bonferroni combined p-value.
    """
    return CombinedResult(
        cvm=cvm_result,
        mean_path=mean_result,
        rejected=cvm_result.rejected or mean_result.rejected,
        p_value_combined=combined_p_value(
            cvm_result.p_value,
            mean_result.p_value,
            cvm_result.level,
            mean_result.level,
        ),
    )


def combined_p_value(
    p_cvm: float, p_mean: float, alpha_cvm: float, alpha_mean: float
) -> float:
    """Weighted-Bonferroni combined p-value.

    With weights w_i = alpha_i / (alpha_cvm + alpha_mean), returns
    min(1, p_cvm/w_cvm, p_mean/w_mean).  The conservative either-rejects
    rule at total level alpha_cvm + alpha_mean rejects exactly when this
    value is at or below that total.
    """
    if not (alpha_cvm > 0 and alpha_mean > 0):
        raise ValueError("component levels must be positive")
    total = alpha_cvm + alpha_mean
    if not total < 1:
        raise ValueError("component levels must sum to less than one")
    return min(1.0, p_cvm * total / alpha_cvm, p_mean * total / alpha_mean)


def run_combined_test(
    sample,
    draws: MeasureDraws,
    plans,
    alpha_cvm: float = 0.025,
    alpha_mean: float = 0.025,
    mode: str = "randomized",
    seed: Seed = 0,
) -> CombinedResult:
    """Run the CDF-distance and mean-path tests on shared plans and combine.

    Sharing one plan set between the two component tests halves the cost
    and leaves each component's marginal exactness untouched.
    """
    pooled, sizes = pooled_by_group(sample)
    dists = permutation_distributions(
        pooled, sizes, plans, ("cvm", "mean_path"), draws
    )
    rng = substream(seed, 1)
    cvm_result = decide(dists["cvm"].observed, dists["cvm"], alpha_cvm, mode, rng)
    mean_result = decide(
        dists["mean_path"].observed, dists["mean_path"], alpha_mean, mode, rng
    )
    return combine_tests(cvm_result, mean_result)
