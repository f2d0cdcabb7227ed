"""Evaluation: offline optimum, welfare distributions, CVaR, ratio reports,
hard instances, and executable checks of the mechanism's structural
properties.

The mechanism's only randomness is a single uniform seed, so welfare
distributions are computed exactly on a refinable seed grid (midpoints of
equal cells) instead of by sampling; Monte Carlo is reserved for the
baseline that draws one seed per unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .mechanism import run_fractional, run_seed_grid
from .model import Instance, MarketParams, PricingProfile, WelfareDistribution, validate

__all__ = [
    "offline_opt",
    "welfare_distribution",
    "cvar",
    "cvar_cr",
    "cvar_cr_hard_family",
    "hard_instance",
    "hard_instance_values",
    "monte_carlo_distribution",
    "verify_lemma",
    "RatioReport",
    "RatioRow",
    "LemmaReport",
    "DEFAULT_SEED_CELLS",
]

DEFAULT_SEED_CELLS = 4001
DEFAULT_LEMMA_RESOLUTION = 2001
#: An instance's ratio is flagged when it exceeds the designed alpha by more
#: than this relative tolerance.
RATIO_FLAG_RTOL = 1e-2


def offline_opt(instance: Instance | Sequence[float], k: int) -> float:
    """Clairvoyant benchmark: sum of the k highest valuations."""
    vals = np.asarray(instance.valuations if isinstance(instance, Instance) else instance,
                      dtype=float)
    if vals.size <= k:
        return float(vals.sum())
    return float(np.partition(vals, vals.size - k)[vals.size - k:].sum())


def seed_midpoints(m_seeds: int) -> np.ndarray:
    """Midpoints of m_seeds equal cells of [0, 1]."""
    if m_seeds < 2:
        raise ValueError("need at least 2 seed cells")
    return (np.arange(m_seeds) + 0.5) / m_seeds


def welfare_distribution(profile: PricingProfile, instance: Instance,
                         m_seeds: int = DEFAULT_SEED_CELLS) -> WelfareDistribution:
    """Exact-on-a-grid welfare distribution over the seed.

    Welfare is piecewise constant in the seed with finitely many
    breakpoints, so evaluating the mechanism at the midpoint of each of
    m_seeds equal cells (each carrying measure 1/m_seeds) converges to the
    true distribution as the grid refines.
    """
    welfare, _ = run_seed_grid(profile, instance.as_array(), seed_midpoints(m_seeds))
    return WelfareDistribution.from_samples(welfare)


def cvar(dist: WelfareDistribution, delta_risk: float) -> float:
    """Tail average over the worst delta_risk of the distribution.

    Atoms are consumed in ascending welfare order until mass delta_risk is
    reached, splitting the boundary atom fractionally; the mass-weighted
    mean of that tail is returned. delta_risk = 1 gives the plain mean.
    """
    if not (0 < delta_risk <= 1):
        raise ValueError("delta_risk must lie in (0, 1]")
    msg = dist.violation()
    if msg is not None:
        raise ValueError(f"invalid distribution: {msg}")
    if delta_risk == 1.0:
        return dist.mean()
    cm = np.cumsum(dist.measures)
    idx = int(np.searchsorted(cm, delta_risk, side="left"))
    total = float(dist.measures[:idx] @ dist.welfares[:idx])
    taken = float(cm[idx - 1]) if idx > 0 else 0.0
    if idx < dist.measures.size and delta_risk > taken:
        total += (delta_risk - taken) * float(dist.welfares[idx])
    return total / delta_risk


@dataclass(frozen=True)
class RatioRow:
    instance_id: str
    opt: float
    cvar: float
    ratio: float


@dataclass(frozen=True)
class RatioReport:
    """Per-instance competitive ratios against the CVaR objective.

    ``worst_ratio`` is the maximum row ratio (an empirical worst case over
    the instances supplied, not a certificate over all instances).
    ``flagged`` lists instances whose ratio exceeds the designed alpha by
    more than the flag tolerance.
    """

    rows: tuple[RatioRow, ...]
    worst_ratio: float
    designed_alpha: float | None
    flagged: tuple[str, ...]


def _make_report(rows: list[RatioRow], designed_alpha: float | None,
                 flag_rtol: float) -> RatioReport:
    worst = max((row.ratio for row in rows), default=float("nan"))
    flagged: tuple[str, ...] = ()
    if designed_alpha is not None:
        flagged = tuple(row.instance_id for row in rows
                        if row.ratio > designed_alpha * (1.0 + flag_rtol))
    return RatioReport(rows=tuple(rows), worst_ratio=worst,
                       designed_alpha=designed_alpha, flagged=flagged)


def cvar_cr(profile: PricingProfile, instances: Iterable[tuple[str, Instance]] | Iterable[Instance],
            delta_risk: float, m_seeds: int = DEFAULT_SEED_CELLS,
            designed_alpha: float | None = None,
            flag_rtol: float = RATIO_FLAG_RTOL) -> RatioReport:
    """Ratio OPT / CVaR_delta per instance plus the empirical worst case."""
    rows: list[RatioRow] = []
    for i, item in enumerate(instances):
        if isinstance(item, tuple):
            name, inst = item
        else:
            name, inst = f"instance-{i}", item
        dist = welfare_distribution(profile, inst, m_seeds)
        cv = cvar(dist, delta_risk)
        opt = offline_opt(inst, profile.params.k)
        ratio = opt / cv if cv > 0 else float("inf")
        rows.append(RatioRow(instance_id=name, opt=opt, cvar=cv, ratio=ratio))
    if not rows:
        raise ValueError("no instances supplied")
    alpha = profile.alpha if designed_alpha is None else designed_alpha
    return _make_report(rows, alpha, flag_rtol)


# ---------------------------------------------------------------------------
# Hard staircase instances


def hard_instance_values(params: MarketParams, epsilon: float) -> np.ndarray:
    """The lattice of stage values L, L+eps, ..., L + floor((U-L)/eps)*eps."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n_stages = int(math.floor((params.U - params.L) / epsilon + 1e-9)) + 1
    return params.L + epsilon * np.arange(n_stages)


def hard_instance(params: MarketParams, epsilon: float, stop_value: float) -> Instance:
    """Staircase instance: k buyers at each lattice value from L up to stop_value."""
    values = hard_instance_values(params, epsilon)
    j = (stop_value - params.L) / epsilon
    if abs(j - round(j)) > 1e-6 or not (params.L - 1e-9 <= stop_value <= values[-1] + 1e-9):
        raise ValueError(f"stop_value {stop_value} is not on the epsilon-lattice")
    j = int(round(j))
    return Instance(np.repeat(values[: j + 1], params.k))


def cvar_cr_hard_family(profile: PricingProfile, epsilon: float, delta_risk: float,
                        m_seeds: int = DEFAULT_SEED_CELLS,
                        flag_rtol: float = RATIO_FLAG_RTOL) -> RatioReport:
    """Ratio report over every truncation of the staircase family.

    Exploits two exact structural facts: each truncation is a prefix of the
    full staircase, so one pass over the stages yields every truncation's
    welfare; and within a stage all k buyers are identical, so the whole
    stage resolves to one vectorized step (buyers keep accepting until the
    first level priced above the stage value).
    """
    p = profile.params
    values = hard_instance_values(p, epsilon)
    seeds = seed_midpoints(m_seeds)
    grid = profile.grid()
    nlev = profile.n_levels
    prices = np.empty((nlev, m_seeds))
    for j in range(nlev):
        prices[j] = np.interp(seeds, grid, profile.levels[j])
    if np.any(np.diff(prices, axis=0) < -1e-9 * p.U):
        raise ValueError("stage batching requires level dominance")
    thresholds = profile.level_thresholds()
    k = p.k
    y = np.zeros(m_seeds)
    welfare = np.zeros(m_seeds)
    rows: list[RatioRow] = []
    for v in values:
        reachable = thresholds[np.sum(prices <= v, axis=0)]
        new_y = np.minimum(np.minimum(reachable, y + k), k)
        np.maximum(new_y, y, out=new_y)
        welfare = welfare + v * (new_y - y)
        y = new_y
        dist = WelfareDistribution.from_samples(welfare)
        cv = cvar(dist, delta_risk)
        opt = k * v
        ratio = opt / cv if cv > 0 else float("inf")
        rows.append(RatioRow(instance_id=f"staircase-v={v:.10g}", opt=opt,
                             cvar=cv, ratio=ratio))
    return _make_report(rows, profile.alpha, flag_rtol)


# ---------------------------------------------------------------------------
# Monte Carlo (for baselines whose randomness is not a single seed)


def monte_carlo_distribution(runner: Callable[[Instance, np.random.Generator], float],
                             instance: Instance, n_runs: int,
                             rng_seed: int) -> WelfareDistribution:
    """n_runs independent welfare draws, each an atom of measure 1/n_runs.

    Deterministic given rng_seed; randomness flows through a counter-based
    generator so results are reproducible across platforms.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    rng = np.random.Generator(np.random.Philox(rng_seed))
    welfare = np.array([runner(instance, rng) for _ in range(n_runs)])
    return WelfareDistribution.from_samples(welfare)


# ---------------------------------------------------------------------------
# Structural property checks


@dataclass(frozen=True)
class LemmaReport:
    which: str
    passed: bool
    detail: str = ""


def verify_lemma(profile: PricingProfile, instance: Instance, which: str,
                 resolution: int = DEFAULT_LEMMA_RESOLUTION,
                 tolerance: float | None = None) -> LemmaReport:
    """Exhaustive seed-grid check of one structural property.

    monotonicity -- utilization after any prefix of buyers never increases
        as the seed grows (lower seeds post lower prices).
    floor -- every seed's final utilization covers all reservations strictly
        below the deepest level that any seed fully exhausts.
    rounding -- for per-unit profiles, each buyer receives a unit on a seed
        set of measure at least the buyer's fractional allocation (within
        tolerance, default 2/resolution).
    """
    seeds = seed_midpoints(resolution)
    vals = instance.as_array()
    if which == "monotonicity":
        _, _, alloc = run_seed_grid(profile, vals, seeds, want_alloc=True)
        util = np.cumsum(alloc, axis=0)
        drops = np.diff(util.astype(np.int64), axis=1) > 0
        if drops.any():
            t, i = np.argwhere(drops)[0]
            return LemmaReport(which, False,
                               f"utilization after buyer {t + 1} increases from seed "
                               f"{seeds[i]:.6f} to {seeds[i + 1]:.6f}")
        return LemmaReport(which, True)
    if which == "floor":
        _, y = run_seed_grid(profile, vals, seeds)
        thresholds = profile.level_thresholds()
        y_star = int(y.max())
        i_star = int(np.searchsorted(thresholds[1:], y_star, side="right"))
        required = int(thresholds[i_star - 1]) if i_star >= 1 else 0
        if int(y.min()) < required:
            i = int(np.argmin(y))
            return LemmaReport(which, False,
                               f"seed {seeds[i]:.6f} sells {int(y[i])} < {required} "
                               f"(deepest exhausted level {i_star})")
        return LemmaReport(which, True)
    if which == "rounding":
        trace = run_fractional(profile, instance)
        tol = (2.0 / resolution) if tolerance is None else tolerance
        _, _, alloc = run_seed_grid(profile, vals, seeds, want_alloc=True)
        measure = alloc.mean(axis=1)
        short = np.asarray(trace.fractions) - measure
        bad = short > tol
        if bad.any():
            t = int(np.argmax(short))
            return LemmaReport(which, False,
                               f"buyer {t + 1}: allocation measure {measure[t]:.6f} < "
                               f"fraction {trace.fractions[t]:.6f} - {tol:.2g}")
        return LemmaReport(which, True)
    raise ValueError(f"unknown property: {which!r}")
