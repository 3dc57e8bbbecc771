"""Synthetic data generation and Monte Carlo power studies.

Paths are Gaussian with time-varying mean, scale, and lag-one correlation:
a latent process starts at white noise and evolves as

    W(t) = rho(t) W(t-1) + xi(t) sqrt(1 - rho(t)^2),   xi iid N(0, 1),

which keeps Var W(t) = 1 at every t, and the observed path is
mu(t) + sigma(t) W(t).  The ten standard parameter designs shift the
treatment groups' mean (+0.05), scale (+0.05), or correlation (+0.2)
against a shared control baseline; a scale knob lets desk-sized studies
use proportionally larger shifts.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measure import MeasureSpec, draw_functions, median_peak
from .permutation import decide, make_plans, permutation_distributions
from .rng import Seed, substream
from .samples import TimeGrid

MEAN_SHIFT = 0.05
SD_SHIFT = 0.05
CORR_SHIFT = 0.2

TEST_NAMES = ("cvm", "combined", "energy")

# Per-design (d_mean, d_sd, d_corr) multipliers for the two treatment groups.
_DESIGN_SHIFTS: dict[int, tuple[tuple[int, int, int], tuple[int, int, int]]] = {
    1: ((0, 0, 0), (0, 0, 0)),
    2: ((1, 0, 0), (0, 0, 0)),
    3: ((1, 0, 0), (1, 0, 0)),
    4: ((1, 0, 0), (0, 1, 0)),
    5: ((1, 0, 0), (0, 0, 1)),
    6: ((0, 1, 0), (0, 0, 0)),
    7: ((0, 1, 0), (0, 1, 0)),
    8: ((0, 0, 1), (0, 0, 0)),
    9: ((0, 0, 1), (0, 1, 0)),
    10: ((0, 0, 1), (0, 0, 1)),
}

DESIGN_IDS = tuple(sorted(_DESIGN_SHIFTS))


def _readonly(array) -> np.ndarray:
    out = np.asarray(array, dtype=float).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GroupParams:
    """Per-slot mean, scale, and lag-one correlation of one group's paths."""

    mu: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray

    def __post_init__(self) -> None:
        mu, sigma, rho = (_readonly(v) for v in (self.mu, self.sigma, self.rho))
        if not (mu.shape == sigma.shape == rho.shape) or mu.ndim != 1 or mu.size < 1:
            raise ValueError("mu, sigma, rho must be equal-length vectors")
        if not np.all(np.isfinite(mu)):
            raise ValueError("mu must be finite")
        if not np.all(sigma > 0):
            raise ValueError("sigma must be positive everywhere")
        if not np.all(np.abs(rho) < 1):
            raise ValueError("correlations must lie strictly inside (-1, 1)")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho", rho)

    @property
    def horizon(self) -> int:
        return self.mu.shape[0]

    def shifted(self, d_mu: float = 0.0, d_sigma: float = 0.0, d_rho: float = 0.0) -> "GroupParams":
        """Copy with constants added; re-validated, so a correlation pushed
        to or past +-1 raises instead of being clamped."""
        return GroupParams(self.mu + d_mu, self.sigma + d_sigma, self.rho + d_rho)


@dataclass(frozen=True)
class DesignSpec:
    """A fully resolved experiment: control plus shifted treatment groups."""

    design_id: int
    groups: tuple[GroupParams, ...]
    group_sizes: tuple[int, ...]
    shift_scale: float = 1.0

    def __post_init__(self) -> None:
        if len(self.groups) != len(self.group_sizes):
            raise ValueError("one parameter set per group is required")
        if any(n < 1 for n in self.group_sizes):
            raise ValueError("group sizes must be positive")
        horizon = self.groups[0].horizon
        if any(g.horizon != horizon for g in self.groups):
            raise ValueError("all groups must share the horizon")

    @property
    def horizon(self) -> int:
        return self.groups[0].horizon


def synthetic_baseline(horizon: int, daily_period: int = 48) -> GroupParams:
    """Smooth daily-periodic control parameters.

    Slot profiles (slot = (t - 1) mod daily_period, angle = 2 pi slot / period):

    * mu    = 1.60 + 0.60 sin(angle) + 0.30 sin(2 angle)
    * sigma = 0.50 + 0.12 cos(angle)            (range [0.38, 0.62])
    * rho   = 0.40 + 0.12 sin(angle + 1)        (range [0.28, 0.52])

    The scale is of order one so the default evaluation measure (unit
    pointwise variance) sweeps the region where the paths live, and the
    correlation range keeps rho + 2 * CORR_SHIFT below one, so doubled
    correlation shifts remain admissible.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    slot = np.arange(horizon) % daily_period
    angle = 2.0 * np.pi * slot / daily_period
    mu = 1.60 + 0.60 * np.sin(angle) + 0.30 * np.sin(2.0 * angle)
    sigma = 0.50 + 0.12 * np.cos(angle)
    rho = 0.40 + 0.12 * np.sin(angle + 1.0)
    return GroupParams(mu, sigma, rho)


def apply_design(
    design_id: int,
    baseline: GroupParams,
    group_sizes: Sequence[int] = (50, 50, 50),
    shift_scale: float = 1.0,
) -> DesignSpec:
    """Resolve one of the ten standard designs against a control baseline.

    All designs use two treatment groups.  ``shift_scale`` multiplies the
    standard shift magnitudes (1.0 reproduces them exactly); a correlation
    shift that would reach +-1 raises.
    """
    if design_id not in _DESIGN_SHIFTS:
        raise ValueError(f"unknown design id {design_id}; expected 1..10")
    sizes = tuple(int(n) for n in group_sizes)
    if len(sizes) != 3:
        raise ValueError("designs are defined for a control and two treatments")
    groups = [baseline]
    for mult in _DESIGN_SHIFTS[design_id]:
        groups.append(
            baseline.shifted(
                d_mu=mult[0] * MEAN_SHIFT * shift_scale,
                d_sigma=mult[1] * SD_SHIFT * shift_scale,
                d_rho=mult[2] * CORR_SHIFT * shift_scale,
            )
        )
    return DesignSpec(design_id, tuple(groups), sizes, shift_scale)


def simulate_paths(params: GroupParams, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n_paths`` independent paths of the Gaussian process.

    The latent recursion starts at the first grid slot; rho[t] governs the
    transition into slot t, so rho[0] is unused.  Marginals are
    N(mu(t), sigma(t)^2) with lag-one correlation rho(t) at every t > 1.
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    horizon = params.horizon
    noise = rng.standard_normal((n_paths, horizon))
    latent = np.empty((n_paths, horizon))
    latent[:, 0] = noise[:, 0]
    innovation_scale = np.sqrt(1.0 - params.rho**2)
    for t in range(1, horizon):
        latent[:, t] = params.rho[t] * latent[:, t - 1] + noise[:, t] * innovation_scale[t]
    return params.mu + params.sigma * latent


@dataclass(frozen=True)
class PowerRow:
    """Empirical rejection probability of one test under one design."""

    test: str
    levels: tuple[float, float]  # (cvm level, mean-path level) of the run
    design_id: int
    rate: float
    std_error: float
    reps: int


@dataclass(frozen=True)
class PowerTable:
    """Power-study output: one row per (test, design), plus the config echo."""

    rows: tuple[PowerRow, ...]
    config: dict

    def to_csv_text(self) -> str:
        lines = ["test,alpha_cvm,alpha_mean,design,rate,std_error,reps"]
        for r in self.rows:
            lines.append(
                f"{r.test},{r.levels[0]:.10g},{r.levels[1]:.10g},"
                f"{r.design_id},{r.rate:.10g},{r.std_error:.10g},{r.reps}"
            )
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        header = f"{'test':<10}{'levels':<18}{'design':>7}{'rate':>9}{'se':>9}{'reps':>7}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            levels = f"({r.levels[0]:g}, {r.levels[1]:g})"
            lines.append(
                f"{r.test:<10}{levels:<18}{r.design_id:>7}"
                f"{r.rate:>9.3f}{r.std_error:>9.3f}{r.reps:>7}"
            )
        return "\n".join(lines)


@dataclass(frozen=True)
class StudyConfig:
    """Everything one replication needs; picklable for process pools."""

    design: DesignSpec
    tests: tuple[str, ...]
    n_perms: int
    alpha_cvm: float
    alpha_mean: float
    n_terms: int
    n_draws: int
    coeff_law: str
    mean_level: "float | str"
    mode: str
    seed: Seed

    def __post_init__(self) -> None:
        unknown = set(self.tests) - set(TEST_NAMES)
        if unknown:
            raise ValueError(f"unknown tests {sorted(unknown)}")
        if self.n_perms < 2:
            raise ValueError("need at least two permutation plans")
        if not (self.alpha_cvm > 0 and self.alpha_mean > 0):
            raise ValueError("levels must be positive")
        if not self.alpha_cvm + self.alpha_mean < 1:
            raise ValueError("levels must sum to less than one")


def run_replication(config: StudyConfig, rep: int) -> dict[str, bool]:
    """Simulate one dataset and run every requested test on shared plans.

    All randomness comes from substreams keyed by (seed, design, rep,
    stage), so results are identical no matter how replications are
    scheduled.  The evaluation-draw seed is re-derived per replication and
    the measure's mean level may be estimated from the pooled simulated
    sample; both are label-invariant, so exactness is preserved.
    """
    design = config.design
    sim_rng = substream(config.seed, design.design_id, rep, 0)
    groups = [
        simulate_paths(params, size, sim_rng)
        for params, size in zip(design.groups, design.group_sizes)
    ]
    pooled = np.vstack(groups)
    sizes = design.group_sizes

    wanted = []
    if "cvm" in config.tests or "combined" in config.tests:
        wanted.append("cvm")
    if "combined" in config.tests:
        wanted.append("mean_path")
    if "energy" in config.tests:
        wanted.append("energy")

    draws = None
    if "cvm" in wanted:
        level = (
            median_peak(pooled)
            if config.mean_level == "auto"
            else float(config.mean_level)
        )
        spec = MeasureSpec(
            n_terms=config.n_terms,
            mean_level=level,
            law=config.coeff_law,
            seed=(*_entropy(config.seed), design.design_id, rep, 1),
        )
        draws = draw_functions(spec, TimeGrid.regular(design.horizon), config.n_draws)

    plans = make_plans(
        sizes,
        "sampled",
        config.n_perms,
        seed=(*_entropy(config.seed), design.design_id, rep, 2),
    )
    dists = permutation_distributions(pooled, sizes, plans, wanted, draws)

    decision_rng = substream(config.seed, design.design_id, rep, 3)
    alpha_total = config.alpha_cvm + config.alpha_mean
    out: dict[str, bool] = {}
    if "cvm" in config.tests:
        out["cvm"] = decide(
            dists["cvm"].observed, dists["cvm"], alpha_total, config.mode, decision_rng
        ).rejected
    if "combined" in config.tests:
        first = decide(
            dists["cvm"].observed, dists["cvm"], config.alpha_cvm, config.mode, decision_rng
        )
        second = decide(
            dists["mean_path"].observed,
            dists["mean_path"],
            config.alpha_mean,
            config.mode,
            decision_rng,
        )
        out["combined"] = first.rejected or second.rejected
    if "energy" in config.tests:
        out["energy"] = decide(
            dists["energy"].observed, dists["energy"], alpha_total, config.mode, decision_rng
        ).rejected
    return out


def _entropy(seed: Seed) -> tuple[int, ...]:
    return (seed,) if isinstance(seed, int) else tuple(seed)


def _replication_task(payload: tuple[StudyConfig, int]) -> dict[str, bool]:
    return run_replication(*payload)


def run_power_study(
    designs: Sequence[int],
    tests: Sequence[str] = TEST_NAMES,
    reps: int = 300,
    n_perms: int = 199,
    group_sizes: Sequence[int] = (20, 20, 20),
    horizon: int = 96,
    alpha_split: tuple[float, float] = (0.025, 0.025),
    n_terms: int = 19,
    n_draws: int = 512,
    coeff_law: str = "gaussian",
    mean_level: "float | str" = "auto",
    seed: Seed = 0,
    shift_scale: float = 1.0,
    baseline: GroupParams | None = None,
    mode: str = "randomized",
    threads: int = 1,
) -> PowerTable:
    """Empirical rejection probabilities over designs and tests.

    Each requested test runs at total level ``sum(alpha_split)``; the
    combined test splits that total as given.  ``threads`` > 1 distributes
    replications across processes without changing any output.
    """
    if reps < 1:
        raise ValueError("need at least one replication")
    design_ids = [int(d) for d in designs]
    base = baseline if baseline is not None else synthetic_baseline(horizon)
    configs = {}
    for design_id in design_ids:
        design = apply_design(design_id, base, group_sizes, shift_scale)
        configs[design_id] = StudyConfig(
            design=design,
            tests=tuple(tests),
            n_perms=int(n_perms),
            alpha_cvm=float(alpha_split[0]),
            alpha_mean=float(alpha_split[1]),
            n_terms=int(n_terms),
            n_draws=int(n_draws),
            coeff_law=coeff_law,
            mean_level=mean_level,
            mode=mode,
            seed=seed,
        )

    tasks = [(configs[d], rep) for d in design_ids for rep in range(reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_replication_task, tasks, chunksize=8))
    else:
        results = [_replication_task(t) for t in tasks]

    rows = []
    for i, design_id in enumerate(design_ids):
        chunk = results[i * reps : (i + 1) * reps]
        for test in tests:
            hits = sum(1 for r in chunk if r[test])
            rate = hits / reps
            rows.append(
                PowerRow(
                    test=test,
                    levels=(float(alpha_split[0]), float(alpha_split[1])),
                    design_id=design_id,
                    rate=rate,
                    std_error=float(np.sqrt(rate * (1.0 - rate) / reps)),
                    reps=reps,
                )
            )
    config_echo = {
        "designs": design_ids,
        "tests": list(tests),
        "reps": reps,
        "n_perms": int(n_perms),
        "alpha_split": [float(alpha_split[0]), float(alpha_split[1])],
        "n_terms": int(n_terms),
        "n_draws": int(n_draws),
        "coeff_law": coeff_law,
        "mean_level": mean_level,
        "group_sizes": [int(n) for n in group_sizes],
        "horizon": int(horizon),
        "seed": seed if isinstance(seed, int) else list(seed),
        "shift_scale": float(shift_scale),
        "mode": mode,
    }
    return PowerTable(tuple(rows), config_echo)
