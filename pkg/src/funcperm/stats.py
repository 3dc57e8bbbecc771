"""Distance statistics between groups of observed paths.

Three statistics, all nonnegative and zero when the compared groups are
indistinguishable:

* ``cvm_*``: Cramer-von Mises-type distance between group empirical CDFs
  evaluated at random functions (the rows of a :class:`MeasureDraws`);
* ``mean_path_*``: scaled average squared difference of pointwise group
  mean paths;
* ``energy_statistic``: the multi-sample energy distance built from
  pairwise Euclidean distances between grid-evaluated paths.

The multi-group forms sum control-versus-treatment terms over the
treatment groups; with a single treatment they reduce exactly to the
two-sample forms.

Numerical contract: CDF counts are sums of exact 0/1 values and therefore
exact; the remaining reductions use numpy's pairwise summation, so
recomputing any statistic on the same inputs is bit-identical, and
mathematically equivalent summation orders agree to better than 1e-12
relative error at the sizes this package targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measure import MeasureDraws

# Bound on the element count of the temporary (N, chunk, J) comparison
# block, so the indicator matrix never allocates more than ~64 MB at once.
_CHUNK_ELEMS = 1 << 26


@dataclass(frozen=True)
class StatisticValue:
    """A computed statistic with the context needed to interpret it."""

    kind: str  # "cvm" | "mean_path" | "energy"
    value: float
    group_sizes: tuple[int, ...]
    n_draws: int | None = None

    def __post_init__(self) -> None:
        if not self.value >= 0.0:
            raise ValueError(f"statistic must be nonnegative, got {self.value}")


def _as_matrix(paths) -> np.ndarray:
    out = np.asarray(paths, dtype=float)
    if out.ndim != 2:
        raise ValueError("paths must be a 2-d matrix")
    return out


def _check_groups(groups: Sequence[np.ndarray]) -> list[np.ndarray]:
    mats = [_as_matrix(g) for g in groups]
    if len(mats) < 2:
        raise ValueError("need a control group and at least one treatment group")
    width = mats[0].shape[1]
    if any(m.shape[1] != width for m in mats):
        raise ValueError("all groups must share the same grid width")
    if any(m.shape[0] < 1 for m in mats):
        raise ValueError("every group needs at least one path")
    return mats


def ecdf_indicator(paths, z) -> float:
    """Fraction of paths lying weakly below ``z`` at every grid point.

    The comparison is non-strict in every coordinate, so the value is the
    multivariate empirical CDF of the paths evaluated at z.
    """
    paths = _as_matrix(paths)
    z = np.asarray(z, dtype=float)
    if z.shape != (paths.shape[1],):
        raise ValueError(
            f"evaluation point has {z.shape} values, paths have "
            f"{paths.shape[1]} columns"
        )
    return float(np.all(paths <= z, axis=1).mean())


def indicator_matrix(paths, zvalues) -> np.ndarray:
    """(N, L) 0/1 matrix: entry (i, l) is 1 iff path i <= draw l everywhere.

    Computed in chunks over draws to bound peak memory.  Entries are exact
    integers in float64, so any downstream summation of them is exact.
    """
    paths = _as_matrix(paths)
    zvalues = _as_matrix(zvalues)
    n, width = paths.shape
    if zvalues.shape[1] != width:
        raise ValueError("draws and paths must share the same grid width")
    n_draws = zvalues.shape[0]
    out = np.empty((n, n_draws), dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(1, n * width))
    for start in range(0, n_draws, step):
        block = zvalues[start : start + step]
        out[:, start : start + block.shape[0]] = np.all(
            paths[:, None, :] <= block[None, :, :], axis=2
        )
    return out


def cvm_statistic_multi(groups: Sequence[np.ndarray], draws: MeasureDraws) -> StatisticValue:
    """Summed CDF-distance terms, control (group 0) versus each treatment.

    Each term is (n_0 + n_s) times the average over draws of the squared
    difference of the two empirical CDFs.  Deterministic in (groups,
    draws): recomputation is bit-identical.
    """
    mats = _check_groups(groups)
    if mats[0].shape[1] != draws.values.shape[1]:
        raise ValueError("draws and paths must share the same grid width")
    cdf = [indicator_matrix(m, draws.values).mean(axis=0) for m in mats]
    n0 = mats[0].shape[0]
    total = 0.0
    for s in range(1, len(mats)):
        n_s = mats[s].shape[0]
        total += (n0 + n_s) * float(np.mean((cdf[0] - cdf[s]) ** 2))
    return StatisticValue(
        "cvm",
        total,
        tuple(m.shape[0] for m in mats),
        n_draws=draws.n_draws,
    )


def cvm_statistic(group_a, group_b, draws: MeasureDraws) -> StatisticValue:
    """Two-sample CDF-distance statistic."""
    return cvm_statistic_multi([group_a, group_b], draws)


def mean_path_statistic_multi(groups: Sequence[np.ndarray]) -> StatisticValue:
    """Summed mean-path distance terms, control versus each treatment.

    Each term is (n_0 + n_s) times the average over grid points of the
    squared difference of the group mean paths.
    """
    mats = _check_groups(groups)
    means = [m.mean(axis=0) for m in mats]
    n0 = mats[0].shape[0]
    total = 0.0
    for s in range(1, len(mats)):
        n_s = mats[s].shape[0]
        total += (n0 + n_s) * float(np.mean((means[0] - means[s]) ** 2))
    return StatisticValue("mean_path", total, tuple(m.shape[0] for m in mats))


def mean_path_statistic(group_a, group_b) -> StatisticValue:
    """Two-sample mean-path statistic."""
    return mean_path_statistic_multi([group_a, group_b])


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Dense Euclidean distance matrix between the rows of ``points``.

    Uses the Gram-matrix identity, which runs the O(N^2 J) work through
    BLAS; squared distances are clipped at zero before the square root.
    """
    points = _as_matrix(points)
    sq = np.einsum("ij,ij->i", points, points)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, 0.0)
    return dist


def energy_statistic(groups: Sequence[np.ndarray]) -> StatisticValue:
    """Multi-sample energy distance, control versus each treatment.

    For each treatment s the term is n_0 n_s / (n_0 + n_s) times
    2 E||X_0 - X_s|| - E||X_0 - X_0'|| - E||X_s - X_s'||, with all-pairs
    averages (diagonal included) over the observed paths.
    """
    mats = _check_groups(groups)
    sizes = [m.shape[0] for m in mats]
    pooled = np.vstack(mats)
    dist = pairwise_distances(pooled)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    blocks = [slice(bounds[s], bounds[s + 1]) for s in range(len(mats))]
    n0 = sizes[0]
    within0 = float(dist[blocks[0], blocks[0]].mean())
    total = 0.0
    for s in range(1, len(mats)):
        n_s = sizes[s]
        cross = float(dist[blocks[0], blocks[s]].mean())
        within_s = float(dist[blocks[s], blocks[s]].mean())
        total += n0 * n_s / (n0 + n_s) * (2.0 * cross - within0 - within_s)
    # Clip away negative rounding residue from exactly-zero configurations.
    total = max(total, 0.0)
    return StatisticValue("energy", total, tuple(sizes))
