"""Mechanism executors: the correlated mechanism, baselines, and the
fractional water-filling allocator.

The correlated mechanism draws one seed r, prices level j at phi_j(r), and
serves each buyer from the deepest level whose reserved units are reachable
at the current utilization. ``run_cppm`` replays it deterministically for a
fixed seed; ``run_seed_grid`` evaluates a whole grid of seeds at once
(vectorized across seeds, one pass over the buyers) and is the workhorse
behind the exact welfare distributions in :mod:`cppm.evaluation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import generalized_inverse
from .model import Instance, MarketParams, PricingProfile, SeedOutcome, validate
from .pricing import DesignRequest, design_risk_neutral

__all__ = [
    "run_cppm",
    "run_seed_grid",
    "run_fractional",
    "run_d_dynamic",
    "run_r_static",
    "run_r_dynamic",
    "run_r_dynamic_grid",
    "FractionalTrace",
    "static_profile",
    "per_unit_profile",
]


def _check_inputs(profile: PricingProfile, instance: Instance) -> None:
    res = validate(profile.params, instance)
    if not res:
        raise ValueError(f"invalid input: {res.message}")


def run_cppm(profile: PricingProfile, instance: Instance, r: float) -> SeedOutcome:
    """Replay the correlated mechanism with the seed fixed to r.

    Buyer t is served from level j_t, the largest j whose lower levels'
    reservations are already exhausted; the posted price is phi_{j_t}(r).
    A buyer accepts iff its valuation is at least the posted price (ties
    accept). Once all k units are sold the top level's price is still
    posted but every buyer is rejected, which keeps the number of price
    changes within the cap.
    """
    if not (0.0 <= r <= 1.0):
        raise ValueError("seed must lie in [0, 1]")
    _check_inputs(profile, instance)
    k = profile.params.k
    thresholds = profile.level_thresholds()
    level_prices = [float(profile.price(j, r)) for j in range(1, profile.n_levels + 1)]

    y = 0
    allocations: list[int] = []
    posted: list[float] = []
    units_by_level = [0] * profile.n_levels
    welfare = 0.0
    revenue = 0.0
    for v in instance.valuations:
        j = int(np.searchsorted(thresholds[1:], y, side="right"))
        j = min(j, profile.n_levels - 1)
        p = level_prices[j]
        posted.append(p)
        if y < k and v >= p:
            allocations.append(1)
            units_by_level[j] += 1
            welfare += v
            revenue += p
            y += 1
        else:
            allocations.append(0)
    return SeedOutcome(
        seed=r,
        allocations=tuple(allocations),
        posted_prices=tuple(posted),
        welfare=welfare,
        revenue=revenue,
        units_by_level=tuple(units_by_level),
    )


def run_seed_grid(profile: PricingProfile, valuations: np.ndarray,
                  seeds: np.ndarray, want_alloc: bool = False):
    """Run the mechanism for every seed at once.

    Returns (welfare, utilization) arrays over seeds, plus the buyer-by-seed
    allocation matrix when ``want_alloc`` is set. Matches run_cppm exactly.
    """
    seeds = np.asarray(seeds)
    n = seeds.size
    nlev = profile.n_levels
    grid = profile.grid()
    prices = np.empty((nlev, n))
    for j in range(nlev):
        prices[j] = np.interp(seeds, grid, profile.levels[j])
    thresholds = profile.level_thresholds()
    k = profile.params.k
    cols = np.arange(n)
    y = np.zeros(n, dtype=np.int64)
    welfare = np.zeros(n)
    alloc = np.zeros((len(valuations), n), dtype=bool) if want_alloc else None
    for t, v in enumerate(valuations):
        j = np.minimum(np.searchsorted(thresholds[1:], y, side="right"), nlev - 1)
        acc = (v >= prices[j, cols]) & (y < k)
        if want_alloc:
            alloc[t] = acc
        y += acc
        welfare += v * acc
    if want_alloc:
        return welfare, y, alloc
    return welfare, y


# ---------------------------------------------------------------------------
# Fractional allocator (per-unit profiles)


@dataclass(frozen=True)
class FractionalTrace:
    """Water-filling allocation along the per-unit marginal price curves.

    fractions[t] is buyer t's fractional allocation, utilization[t] the
    cumulative total after buyer t, active_unit[t] the 1-indexed unit a
    fraction of which would be consumed at buyer t's arrival.
    """

    fractions: tuple[float, ...]
    utilization: tuple[float, ...]
    active_unit: tuple[int, ...]


def run_fractional(profile: PricingProfile, instance: Instance) -> FractionalTrace:
    """Fractional utility-maximizing allocation for a per-unit profile.

    Each buyer takes the largest x in [0, 1] for which the marginal price --
    the active unit's curve, spilling into the next unit's curve past the
    boundary -- stays at or below the valuation, capped by remaining
    inventory. Solved by inverting the monotone level curves rather than
    scanning the objective.
    """
    if any(q != 1 for q in profile.reservation):
        raise ValueError("fractional allocation needs a per-unit profile (one unit per level)")
    _check_inputs(profile, instance)
    k = profile.params.k
    yhat = 0.0
    fracs: list[float] = []
    utils: list[float] = []
    active: list[int] = []
    for v in instance.valuations:
        whole = math.floor(yhat + 1e-12)
        part = yhat - whole
        if part < 1e-12:
            part = 0.0
        kappa = int(whole) + 1
        active.append(min(kappa, k))
        if kappa > k:
            fracs.append(0.0)
            utils.append(yhat)
            continue
        a1 = generalized_inverse(profile.levels[kappa - 1], v)
        x = max(0.0, a1 - part)
        if a1 >= 1.0 and kappa + 1 <= k:
            x += generalized_inverse(profile.levels[kappa], v)
        x = min(x, 1.0, k - yhat)
        fracs.append(x)
        yhat += x
        utils.append(yhat)
    return FractionalTrace(fractions=tuple(fracs), utilization=tuple(utils),
                           active_unit=tuple(active))


# ---------------------------------------------------------------------------
# Baselines


def static_profile(params: MarketParams, grid_size: int) -> PricingProfile:
    """Single randomized static price: the risk-neutral design at cap 0."""
    p = MarketParams(L=params.L, U=params.U, k=params.k, delta_cap=0, delta_risk=1.0)
    return design_risk_neutral(DesignRequest(params=p, grid_size=grid_size))


def per_unit_profile(params: MarketParams, grid_size: int) -> PricingProfile:
    """Per-unit randomized levels: the risk-neutral design with one unit each."""
    p = MarketParams(L=params.L, U=params.U, k=params.k, delta_cap=params.k - 1,
                     delta_risk=1.0)
    return design_risk_neutral(DesignRequest(params=p, reservation_policy=(1,) * p.k,
                                             grid_size=grid_size))


def _neutral_curve(L: float, U: float, z: float) -> float:
    alpha = 1.0 + math.log(U / L)
    return L if z < 1.0 / alpha else L * math.exp(alpha * z - 1.0)


def run_d_dynamic(params: MarketParams, instance: Instance) -> SeedOutcome:
    """Deterministic dynamic baseline: unit i is priced at the utilization
    curve evaluated at (i-1)/k; no randomness, the seed field is 0."""
    res = validate(params, instance)
    if not res:
        raise ValueError(f"invalid input: {res.message}")
    L, U, k = params.L, params.U, params.k
    unit_prices = [_neutral_curve(L, U, (i - 1) / k) for i in range(1, k + 1)]
    return _sequential_sale(instance, unit_prices, seed=0.0, k=k)


def run_r_static(params: MarketParams, instance: Instance, r: float,
                 grid_size: int = 2000) -> SeedOutcome:
    """Randomized static baseline: one seed, one price for the whole horizon."""
    return run_cppm(static_profile(params, grid_size), instance, r)


def run_r_dynamic(params: MarketParams, instance: Instance,
                  seeds: Sequence[float]) -> SeedOutcome:
    """Randomized dynamic baseline: unit i is priced with its own seed.

    Prices are used in unit order; with all seeds equal this coincides with
    the correlated mechanism on the per-unit profile.
    """
    res = validate(params, instance)
    if not res:
        raise ValueError(f"invalid input: {res.message}")
    k = params.k
    if len(seeds) != k:
        raise ValueError(f"need exactly k = {k} seeds, got {len(seeds)}")
    if any(not (0.0 <= s <= 1.0) for s in seeds):
        raise ValueError("seeds must lie in [0, 1]")
    L, U = params.L, params.U
    # per-unit level i spans z in [(i-1)/k, i/k]
    unit_prices = [_neutral_curve(L, U, (i - 1 + s) / k) for i, s in enumerate(seeds, start=1)]
    return _sequential_sale(instance, unit_prices, seed=float(seeds[0]), k=k)


def run_r_dynamic_grid(params: MarketParams, valuations: np.ndarray,
                       seed_matrix: np.ndarray) -> np.ndarray:
    """Welfare of the independent-seeds baseline for many runs at once.

    seed_matrix has shape (n_runs, k): row i holds run i's per-unit seeds.
    Matches run_r_dynamic run by run.
    """
    k = params.k
    if seed_matrix.ndim != 2 or seed_matrix.shape[1] != k:
        raise ValueError("seed matrix must have shape (n_runs, k)")
    zs = (np.arange(k)[None, :] + seed_matrix) / k
    alpha = 1.0 + math.log(params.U / params.L)
    prices = np.where(zs < 1.0 / alpha, params.L, params.L * np.exp(alpha * zs - 1.0)).T
    n = seed_matrix.shape[0]
    cols = np.arange(n)
    y = np.zeros(n, dtype=np.int64)
    welfare = np.zeros(n)
    for v in valuations:
        p = prices[np.minimum(y, k - 1), cols]
        acc = (v >= p) & (y < k)
        y += acc
        welfare += v * acc
    return welfare


def _sequential_sale(instance: Instance, unit_prices: list[float], seed: float,
                     k: int) -> SeedOutcome:
    """Sell units in order at fixed per-unit prices (threshold acceptance)."""
    y = 0
    allocations: list[int] = []
    posted: list[float] = []
    units_by_level = [0] * k
    welfare = 0.0
    revenue = 0.0
    for v in instance.valuations:
        p = unit_prices[min(y, k - 1)]
        posted.append(p)
        if y < k and v >= p:
            allocations.append(1)
            units_by_level[y] += 1
            welfare += v
            revenue += p
            y += 1
        else:
            allocations.append(0)
    return SeedOutcome(seed=seed, allocations=tuple(allocations),
                       posted_prices=tuple(posted), welfare=welfare,
                       revenue=revenue, units_by_level=tuple(units_by_level))
