"""Closed-form local power curves for a two-period benchmark setup.

Benchmark: two groups observed at two time points, the measure putting
all its mass on one evaluation point (x1, x2), the alternative shrinking
toward the null at the root-n rate.  In that regime the scaled
CDF-distance statistic is asymptotically noncentral chi-square with one
degree of freedom, which yields closed-form power curves against mean,
variance, and correlation shifts.  Comparator tests (mean, variance, and
correlation comparisons) have their own noncentral chi-square limits.

These curves serve as an independent oracle for the Monte Carlo engine:
at matching configurations the simulated rejection rate of the
permutation test must agree with the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .special import chisq_quantile, noncentral_chisq_cdf, normal_cdf, normal_pdf

DEFAULT_LEVEL = 0.05


@lru_cache(maxsize=None)
def _critical(level: float, df: int) -> float:
    # Computed, not hard-coded: 3.841459 for df=1 and 5.991465 for df=2
    # at the 0.05 level.
    return chisq_quantile(1.0 - level, df)


def null_variance(x1: float, x2: float) -> float:
    """Asymptotic null variance of the scaled ECDF difference at (x1, x2).

    Equals 2 F (1 - F) with F = Phi(x1) Phi(x2); strictly positive for
    finite evaluation points.
    """
    f = normal_cdf(x1) * normal_cdf(x2)
    return 2.0 * f * (1.0 - f)


def _chisq_power(ncp: float, df: int, level: float) -> float:
    return 1.0 - noncentral_chisq_cdf(_critical(level, df), df, ncp)


def mean_shift_ncp_coefficient(x1: float, x2: float) -> float:
    """Coefficient c in ncp = c * shift^2 for mean shifts of the CDF test.

    c = [Phi(x1) phi(x2)]^2 / null_variance(x1, x2).  Over equal
    evaluation points the coefficient peaks near x1 = x2 = 0.4, where it
    is about 0.119.
    """
    drift = normal_cdf(x1) * normal_pdf(x2)
    return drift**2 / null_variance(x1, x2)


def cvm_power_mean_shift(
    shift: float, x1: float, x2: float, level: float = DEFAULT_LEVEL
) -> float:
    """Local power of the CDF-distance test against a mean shift."""
    ncp = mean_shift_ncp_coefficient(x1, x2) * shift**2
    return _chisq_power(ncp, 1, level)


def mean_comparison_power(shift: float, level: float = DEFAULT_LEVEL) -> float:
    """Local power of the mean-comparison test against a mean shift.

    Noncentral chi-square with two degrees of freedom and noncentrality
    shift^2 / 2.
    """
    return _chisq_power(0.5 * shift**2, 2, level)


def cvm_power_variance_shift(
    shift: float, x1: float, x2: float, level: float = DEFAULT_LEVEL
) -> float:
    """Local power of the CDF-distance test against a variance shift.

    Drift: shift * [x1 phi(x1) Phi(x2) + x2 Phi(x1) phi(x2)]; vanishes at
    the origin, so evaluation points near zero have trivial power.
    """
    drift = shift * (
        x1 * normal_pdf(x1) * normal_cdf(x2) + x2 * normal_cdf(x1) * normal_pdf(x2)
    )
    return _chisq_power(drift**2 / null_variance(x1, x2), 1, level)


def variance_comparison_power(shift: float, level: float = DEFAULT_LEVEL) -> float:
    """Local power of the variance-comparison test.

    Noncentrality shift^2 / (1 + shift^4) with two degrees of freedom;
    note this expression is not monotone beyond shift = 1.
    """
    ncp = shift**2 / (1.0 + shift**4)
    return _chisq_power(ncp, 2, level)


def cvm_power_correlation_shift(
    rho: float, x1: float, x2: float, level: float = DEFAULT_LEVEL
) -> float:
    """Local power of the CDF-distance test against a correlation shift.

    Drift: rho phi(x1) phi(x2); depends on rho only through rho^2.
    """
    drift = rho * normal_pdf(x1) * normal_pdf(x2)
    return _chisq_power(drift**2 / null_variance(x1, x2), 1, level)


def correlation_comparison_power(rho: float, level: float = DEFAULT_LEVEL) -> float:
    """Local power of the correlation-comparison test.

    Noncentrality rho^2 / [1 + (1 - rho^2)^2] with one degree of freedom;
    not monotone beyond rho^2 = sqrt(2).
    """
    ncp = rho**2 / (1.0 + (1.0 - rho**2) ** 2)
    return _chisq_power(ncp, 1, level)


@dataclass(frozen=True)
class PowerCurve:
    """Tabulated power curves over a shift grid at fixed evaluation points."""

    shift_name: str
    abscissa_name: str
    abscissa: tuple[float, ...]
    powers: dict  # column name -> tuple of powers
    eval_points: tuple[float, float]
    level: float

    def to_csv_text(self) -> str:
        names = list(self.powers)
        lines = [
            f"# shift = {self.shift_name}",
            f"# eval_points = ({self.eval_points[0]}, {self.eval_points[1]})",
            f"# level = {self.level}",
            f"# chisq_crit_df1 = {_critical(self.level, 1):.6f} (computed)",
            f"# chisq_crit_df2 = {_critical(self.level, 2):.6f} (computed)",
            ",".join([self.abscissa_name] + names),
        ]
        for i, x in enumerate(self.abscissa):
            row = [f"{x:.10g}"] + [f"{self.powers[n][i]:.10g}" for n in names]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def mean_shift_curve(
    shifts: Sequence[float],
    x1: float = 0.4,
    x2: float = 0.4,
    level: float = DEFAULT_LEVEL,
) -> PowerCurve:
    """Powers against mean shifts, tabulated against the squared shift."""
    return PowerCurve(
        shift_name="mean",
        abscissa_name="shift_squared",
        abscissa=tuple(s**2 for s in shifts),
        powers={
            "cdf_distance": tuple(cvm_power_mean_shift(s, x1, x2, level) for s in shifts),
            "mean_comparison": tuple(mean_comparison_power(s, level) for s in shifts),
        },
        eval_points=(x1, x2),
        level=level,
    )


def variance_shift_curve(
    shifts: Sequence[float],
    x1: float = -0.4,
    x2: float = 0.4,
    level: float = DEFAULT_LEVEL,
) -> PowerCurve:
    """Powers against variance shifts."""
    return PowerCurve(
        shift_name="variance",
        abscissa_name="shift",
        abscissa=tuple(float(s) for s in shifts),
        powers={
            "cdf_distance": tuple(
                cvm_power_variance_shift(s, x1, x2, level) for s in shifts
            ),
            "variance_comparison": tuple(
                variance_comparison_power(s, level) for s in shifts
            ),
        },
        eval_points=(x1, x2),
        level=level,
    )


def correlation_shift_curve(
    rhos: Sequence[float],
    x1: float = -0.2,
    x2: float = 0.2,
    level: float = DEFAULT_LEVEL,
) -> PowerCurve:
    """Powers against correlation shifts."""
    return PowerCurve(
        shift_name="correlation",
        abscissa_name="shift",
        abscissa=tuple(float(r) for r in rhos),
        powers={
            "cdf_distance": tuple(
                cvm_power_correlation_shift(r, x1, x2, level) for r in rhos
            ),
            "correlation_comparison": tuple(
                correlation_comparison_power(r, level) for r in rhos
            ),
        },
        eval_points=(x1, x2),
        level=level,
    )
