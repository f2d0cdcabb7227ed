"""Construction and calibration of the level pricing functions.

Four designs are provided:

* ``design_risk_neutral``   -- closed form for the expectation objective
  (any price-change cap), with the optimal ratio 1 + ln(U/L).
* ``design_static_risk``    -- single static price under a CVaR_delta
  objective; closed form through the delay exponential.
* ``design_fully_dynamic``  -- one price level per unit; levels solve a
  chain of delay integral equations, calibrated so the top level ends at U.
* ``design_delta_dynamic``  -- capped number of price changes with reserved
  quantities per level; same delay-integral machinery with a halved growth
  factor and a ceil(k/alpha) base reservation.

All risk-sensitive designs share ``solve_forward_delay_integral``: a forward
march across the seed grid that resolves each level's (possibly
self-referential) integral equation with trapezoid quadrature. Calibration
of the ratio ``alpha`` is a bisection on the boundary value phi_top(1) = U,
which the growth recursions make a monotone function of alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import (
    cumulative_trapezoid,
    generalized_inverse,
    generalized_inverse_many,
    integral_to,
    window_integral,
)
from .model import Instance, MarketParams, PricingProfile, validate

__all__ = [
    "DesignRequest",
    "LevelRecursion",
    "design_risk_neutral",
    "design_static_risk",
    "design_fully_dynamic",
    "design_delta_dynamic",
    "solve_static_alpha",
    "delay_exponential",
    "solve_forward_delay_integral",
    "check_static_lb_constraints",
    "StaticConstraintReport",
    "reservation_vector",
    "DEFAULT_GRID_SIZE",
]

DEFAULT_GRID_SIZE = 10_000
#: Bisection bracket for alpha is [1, this factor * (1 + ln(U/L))].
ALPHA_BRACKET_FACTOR = 64.0
_MAX_BISECT_ITERS = 200


@dataclass(frozen=True)
class DesignRequest:
    """Inputs to a pricing design.

    reservation_policy is "even-split" (k split into nondecreasing near-equal
    parts), "ceil-first" (first level gets ceil(k/alpha), remainder split
    near-evenly), or an explicit vector. alpha_tolerance is relative: the
    calibration stops once |phi_top(1) - U| <= U * alpha_tolerance.
    """

    params: MarketParams
    reservation_policy: str | tuple[int, ...] = "even-split"
    grid_size: int = DEFAULT_GRID_SIZE
    alpha_tolerance: float = 1e-8

    def __post_init__(self):
        if self.alpha_tolerance <= 0:
            raise ValueError("alpha_tolerance must be positive")
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")


def _require_valid(params: MarketParams) -> None:
    res = validate(params)
    if not res:
        raise ValueError(f"invalid market parameters: {res.message}")


def reservation_vector(policy: str | Sequence[int], k: int, n_levels: int,
                       alpha: float | None = None) -> tuple[int, ...]:
    """Materialize a reservation vector for k units over n_levels levels."""
    if not isinstance(policy, str):
        q = tuple(int(v) for v in policy)
        if len(q) != n_levels:
            raise ValueError("explicit reservation has wrong length")
        if any(v < 0 for v in q) or sum(q) != k:
            raise ValueError("explicit reservation must be nonnegative and sum to k")
        return q
    if policy == "even-split":
        return _near_even(k, n_levels)
    if policy == "ceil-first":
        if alpha is None:
            raise ValueError("ceil-first reservation needs alpha")
        q1 = math.ceil(k / alpha - 1e-12)
        if q1 > k:
            raise ValueError("infeasible reservation: ceil(k/alpha) exceeds k")
        if n_levels == 1:
            if q1 < k:
                raise ValueError("single-level ceil-first cannot place remaining units")
            return (k,)
        return (q1,) + _near_even(k - q1, n_levels - 1)
    raise ValueError(f"unknown reservation policy: {policy!r}")


def _near_even(total: int, parts: int) -> tuple[int, ...]:
    base, rem = divmod(total, parts)
    return (base,) * (parts - rem) + (base + 1,) * rem


# ---------------------------------------------------------------------------
# Risk-neutral design (closed form)


def design_risk_neutral(req: DesignRequest) -> PricingProfile:
    """Optimal design for the expectation objective (delta_risk = 1).

    With z the fraction of inventory already committed plus the current
    level's share scaled by the seed, each level posts L while z < 1/alpha
    and L * exp(alpha * z - 1) afterwards, alpha = 1 + ln(U/L). The top
    level ends exactly at U.
    """
    p = req.params
    _require_valid(p)
    if p.delta_risk != 1.0:
        raise ValueError("risk-neutral design requires delta_risk = 1")
    n_levels = p.delta_cap + 1
    alpha = 1.0 + math.log(p.U / p.L)
    policy = req.reservation_policy
    q = reservation_vector(policy, p.k, n_levels, alpha=alpha)
    if any(a > b for a, b in zip(q, q[1:])):
        raise ValueError("risk-neutral design requires a nondecreasing reservation vector")
    M = req.grid_size
    x = np.arange(M + 1) / M
    levels = []
    committed = 0
    for qi in q:
        z = (committed + qi * x) / p.k
        # min caps float overshoot of exp at z = 1, keeping phi <= U exact
        levels.append(np.minimum(
            np.where(z < 1.0 / alpha, p.L, p.L * np.exp(alpha * z - 1.0)), p.U))
        committed += qi
    return PricingProfile(params=p, levels=tuple(levels), reservation=q,
                          alpha=alpha, grid_size=M)


# ---------------------------------------------------------------------------
# Delay exponential (closed-form solution of phi' = c * phi(x - tau) with
# constant history 1)


def delay_exponential(c: float, tau: float, t: float) -> float:
    """E_c(t) = 1 + sum_{j>=1} (c^j / j!) * max(t - (j-1)*tau, 0)^j.

    Finite sum: terms vanish once (j-1)*tau >= t. Computed in log space so
    large c or many terms cannot overflow.
    """
    if tau <= 0:
        raise ValueError("tau must be positive (tau = 0 is the plain exponential)")
    if c < 0 or t < 0:
        raise ValueError("c and t must be nonnegative")
    if t == 0 or c == 0:
        return 1.0
    total = 1.0
    j = 1
    while (j - 1) * tau < t:
        u = t - (j - 1) * tau
        log_term = j * math.log(c * u) - math.lgamma(j + 1)
        total += math.exp(log_term)
        # all later terms are bounded by (c*t)^j / j!, which is eventually
        # decreasing; stop once that bound cannot move the sum
        if j > c * t and j * math.log(c * t) - math.lgamma(j + 1) < math.log(1e-22):
            break
        j += 1
    return total


def _delay_exponential_grid(c: float, tau: float, t: np.ndarray) -> np.ndarray:
    """Vectorized delay exponential over nonnegative query times t."""
    out = np.ones_like(t)
    if c == 0:
        return out
    t_max = float(t.max(initial=0.0))
    j = 1
    log_c = math.log(c)
    while (j - 1) * tau < t_max:
        u = t - (j - 1) * tau
        mask = u > 0
        if mask.any():
            with np.errstate(divide="ignore"):
                log_term = j * (log_c + np.log(u[mask])) - math.lgamma(j + 1)
            out[mask] += np.exp(log_term)
        if j > c * t_max and j * math.log(c * t_max) - math.lgamma(j + 1) < math.log(1e-22):
            break
        j += 1
    return out


# ---------------------------------------------------------------------------
# Static (single-price) risk-sensitive design


def solve_static_alpha(params: MarketParams, tolerance: float = 1e-12) -> float:
    """Ratio of the optimal single-price design for tail level delta.

    The price curve is L up to b = 1 - delta + delta/alpha and then grows as
    L * E_{alpha/delta}(x - b) with delay tau = 1 - delta; alpha is the value
    at which the curve ends exactly at U. The boundary value is strictly
    increasing in alpha, so bisection on [1, U/L] finds the unique root.
    """
    _require_valid(params)
    L, U, delta = params.L, params.U, params.delta_risk
    if delta == 1.0:
        return 1.0 + math.log(U / L)
    if not (0 < delta < 1):
        raise ValueError("delta_risk must lie in (0, 1]")
    if L == U:
        return 1.0
    tau = 1.0 - delta

    def boundary(alpha: float) -> float:
        return L * delay_exponential(alpha / delta, tau, delta * (1.0 - 1.0 / alpha)) - U

    lo, hi = 1.0, U / L  # boundary(U/L) >= 0 since E >= 1 + c*t = alpha
    for _ in range(_MAX_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if boundary(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tolerance * mid:
            break
    return 0.5 * (lo + hi)


def design_static_risk(req: DesignRequest) -> PricingProfile:
    """Single-price design saturating the tail-average guarantee.

    The curve is constant L on [0, b], b = 1 - delta + delta/alpha, then
    follows the delay exponential with rate alpha/delta and delay 1 - delta.
    Sampled from the closed form, so phi(1) = U up to the alpha solve.
    """
    p = req.params
    _require_valid(p)
    if p.delta_cap != 0:
        raise ValueError("static design requires delta_cap = 0")
    if p.delta_risk == 1.0:
        return design_risk_neutral(req)
    alpha = solve_static_alpha(p)
    M = req.grid_size
    x = np.arange(M + 1) / M
    if p.L == p.U:
        level = np.full(M + 1, float(p.L))
    else:
        b = 1.0 - p.delta_risk + p.delta_risk / alpha
        t = np.maximum(x - b, 0.0)
        level = np.minimum(
            p.L * _delay_exponential_grid(alpha / p.delta_risk, 1.0 - p.delta_risk, t), p.U)
    return PricingProfile(params=p, levels=(level,), reservation=(p.k,),
                          alpha=alpha, grid_size=M)


# ---------------------------------------------------------------------------
# Shared forward solver for the delay-integral recursions


@dataclass(frozen=True)
class LevelRecursion:
    """One level's integral equation, ready for the forward march.

    phi(x) = prefactor * (base + known[x] + self_weight * I(x)),
    I(x) = integral of phi from 0 to max(0, delta_risk - 1 + x),

    optionally overridden by a constant prefix phi(x) = const_value on
    [0, const_until]. ``known`` collects every already-materialized lower
    level's contribution at each grid node.
    """

    prefactor: float
    base: float
    known: np.ndarray | None
    self_weight: float
    delta_risk: float
    const_value: float | None = None
    const_until: float | None = None


def solve_forward_delay_integral(rec: LevelRecursion, grid_size: int) -> np.ndarray:
    """March the level across the grid, resolving the self-integral.

    The self-integral's upper limit delta - 1 + x trails x by 1 - delta, so
    marching left to right only ever reads already-computed values. Nodes
    are processed in blocks of width 1 - delta (vectorized); when the grid is
    coarser than the lag (1 - delta < h), the last sliver of the integral
    touches the node being computed and the march solves the resulting
    scalar linear equation instead.
    """
    M = grid_size
    h = 1.0 / M
    delta = rec.delta_risk
    phi = np.empty(M + 1)
    known = rec.known

    def forcing(sl: slice) -> np.ndarray | float:
        return rec.base if known is None else rec.base + known[sl]

    if rec.const_until is not None:
        n0 = min(int(math.floor(rec.const_until * M + 1e-9)) + 1, M + 1)
        phi[:n0] = rec.const_value
    else:
        # empty self-integral while delta - 1 + x <= 0
        n0 = min(int(math.floor((1.0 - delta) * M + 1e-9)) + 1, M + 1)
        phi[:n0] = rec.prefactor * (forcing(slice(0, n0)))
    if n0 > M:
        return phi

    C = np.empty(M + 1)  # cumulative integral of phi over the computed prefix
    C[0] = 0.0
    if n0 > 1:
        np.cumsum((phi[1:n0] + phi[:n0 - 1]) * (0.5 * h), out=C[1:n0])

    s = (delta - 1.0) * M
    d = int(math.floor(s + 1e-9))
    f = s - d
    if f < 1e-9:
        f = 0.0
    elif f > 1 - 1e-9:
        d += 1
        f = 0.0

    n = n0
    n_done = n0 - 1
    w_coef = 0.5 * f * f * h
    while n <= M:
        n_hi = min(M, n_done - d - (1 if f > 0.0 else 0))
        if n_hi >= n:
            m0, m1 = n + d, n_hi + d
            if f == 0.0:
                Cw = C[m0:m1 + 1]
            else:
                ym = phi[m0:m1 + 1]
                Cw = C[m0:m1 + 1] + (f * h) * ym + w_coef * (phi[m0 + 1:m1 + 2] - ym)
            phi[n:n_hi + 1] = rec.prefactor * (forcing(slice(n, n_hi + 1)) + rec.self_weight * Cw)
            np.cumsum((phi[n:n_hi + 1] + phi[n - 1:n_hi]) * (0.5 * h), out=C[n:n_hi + 1])
            C[n:n_hi + 1] += C[n - 1]
            n_done = n_hi
            n = n_hi + 1
        else:
            # 1 - delta < h: the integral's tip lies inside the segment
            # ending at the unknown node; solve the linear equation for it
            w = delta - 1.0 + n * h
            a = max(w - (n - 1) * h, 0.0)
            coef = rec.prefactor * rec.self_weight * a * a / (2.0 * h)
            assert coef < 1.0, "grid too coarse for the implicit sliver solve"
            c_known = C[n - 1] + (a - a * a / (2.0 * h)) * phi[n - 1]
            fk = rec.base if known is None else rec.base + known[n]
            phi[n] = rec.prefactor * (fk + rec.self_weight * c_known) / (1.0 - coef)
            C[n] = C[n - 1] + 0.5 * h * (phi[n - 1] + phi[n])
            n_done = n
            n += 1
    return phi


# ---------------------------------------------------------------------------
# Fully-dynamic design (one level per unit)


def _fully_dynamic_levels(L: float, k: int, delta: float, alpha: float, M: int) -> list[np.ndarray]:
    """Materialize all k levels of the fully-dynamic recursion at a given alpha."""
    h = 1.0 / M
    m = int(math.floor(k / alpha + 1e-12))
    levels = [np.full(M + 1, float(L)) for _ in range(min(m, k))]
    if m >= k:
        return levels
    pref = alpha / (k * delta)
    base = m * L * delta  # constant lower levels contribute exactly L*delta each
    A = k / alpha - m
    rec = LevelRecursion(prefactor=pref, base=base, known=None, self_weight=1.0,
                         delta_risk=delta, const_value=float(L),
                         const_until=1.0 - delta + A * delta)
    phi = solve_forward_delay_integral(rec, M)
    levels.append(phi)
    run_sum = phi.copy()
    F = np.empty(M + 1)
    for _ in range(m + 2, k + 1):
        cumulative_trapezoid(run_sum, h, out=F)
        known = window_integral(F, run_sum, delta, h)
        rec = LevelRecursion(prefactor=pref, base=base, known=known,
                             self_weight=1.0, delta_risk=delta)
        phi = solve_forward_delay_integral(rec, M)
        levels.append(phi)
        run_sum += phi
    return levels


def _bisect_boundary(boundary: Callable[[float], float], lo: float, hi: float,
                     U: float, tol_rel: float) -> tuple[float, float]:
    """Bisect alpha until |phi_top(1) - U| <= U * tol_rel; returns (alpha, residual)."""
    f_lo, f_hi = boundary(lo), boundary(hi)
    if abs(f_lo) <= U * tol_rel:
        return lo, f_lo
    if f_lo > 0 or f_hi < 0:
        raise RuntimeError(
            f"alpha calibration not bracketed on [{lo}, {hi}]: "
            f"boundary residuals ({f_lo:.6g}, {f_hi:.6g})")
    mid, f_mid = 0.5 * (lo + hi), None
    for _ in range(_MAX_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        f_mid = boundary(mid)
        if abs(f_mid) <= U * tol_rel:
            return mid, f_mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    return mid, f_mid


def design_fully_dynamic(req: DesignRequest) -> PricingProfile:
    """Per-unit pricing under a CVaR_delta objective.

    Levels up to floor(k/alpha) stay at L; the next level grows by feeding
    on its own trailing integral; every later level feeds on a sliding
    window over all lower levels plus a wrap-around prefix of itself.
    Bisection on alpha pins the top level's endpoint to U.
    """
    p = req.params
    _require_valid(p)
    if p.delta_cap != p.k - 1:
        raise ValueError("fully-dynamic design requires delta_cap = k - 1")
    if not isinstance(req.reservation_policy, str):
        if tuple(req.reservation_policy) != (1,) * p.k:
            raise ValueError("fully-dynamic design reserves exactly one unit per level")
    if p.delta_risk == 1.0:
        return design_risk_neutral(DesignRequest(
            params=p, reservation_policy=(1,) * p.k,
            grid_size=req.grid_size, alpha_tolerance=req.alpha_tolerance))
    M = req.grid_size
    q = (1,) * p.k
    if p.L == p.U:
        levels = tuple(np.full(M + 1, float(p.L)) for _ in range(p.k))
        return PricingProfile(params=p, levels=levels, reservation=q, alpha=1.0, grid_size=M)

    def boundary(alpha: float) -> float:
        return _fully_dynamic_levels(p.L, p.k, p.delta_risk, alpha, M)[-1][-1] - p.U

    hi = ALPHA_BRACKET_FACTOR * (1.0 + math.log(p.U / p.L))
    alpha, _ = _bisect_boundary(boundary, 1.0, hi, p.U, req.alpha_tolerance)
    levels = tuple(np.minimum(lv, p.U)
                   for lv in _fully_dynamic_levels(p.L, p.k, p.delta_risk, alpha, M))
    return PricingProfile(params=p, levels=levels, reservation=q, alpha=alpha, grid_size=M)


# ---------------------------------------------------------------------------
# Capped-price-change design with reserved quantities


def _delta_dynamic_levels(p: MarketParams, policy: str | Sequence[int], alpha: float,
                          M: int) -> tuple[list[np.ndarray], tuple[int, ...]]:
    """Materialize the capped design's levels at a candidate alpha (unclamped)."""
    h = 1.0 / M
    L, k, delta = p.L, p.k, p.delta_risk
    n_levels = p.delta_cap + 1
    if isinstance(policy, str) and policy == "even-split":
        policy = "ceil-first"  # the first level's size is fixed by the design
    q = reservation_vector(policy, k, n_levels, alpha=alpha)
    q1 = q[0]
    if q1 != math.ceil(k / alpha - 1e-12):
        raise ValueError("capped design requires q_1 = ceil(k/alpha)")
    if any(a > b for a, b in zip(q[1:], q[2:])):
        raise ValueError("capped design requires nondecreasing reservation beyond level 1")
    pref = alpha / (2.0 * k * delta)
    base = q1 * L * delta
    levels = [np.full(M + 1, float(L))]
    run_sum = np.zeros(M + 1)  # sum of q_j * phi_j over materialized levels j >= 2
    F = np.empty(M + 1)
    for i in range(2, n_levels + 1):
        if i == 2:
            known = None
        else:
            cumulative_trapezoid(run_sum, h, out=F)
            known = window_integral(F, run_sum, delta, h)
        rec = LevelRecursion(prefactor=pref, base=base, known=known,
                             self_weight=float(q[i - 1]), delta_risk=delta)
        phi = solve_forward_delay_integral(rec, M)
        levels.append(phi)
        if i < n_levels:
            run_sum += q[i - 1] * phi
    return levels, q


def design_delta_dynamic(req: DesignRequest) -> PricingProfile:
    """Design with 1 <= delta_cap <= k-1 price changes.

    The first level holds ceil(k/alpha) units at price L; the remaining
    units are split near-evenly (nondecreasing) over the other levels, whose
    curves grow through reservation-weighted window integrals at half the
    fully-dynamic rate. Because ceil(k/alpha) re-evaluates at every probe,
    the boundary map is monotone within runs of constant ceil(k/alpha) but
    can jump where it changes; calibration bisects first and falls back to a
    scan over those continuity pieces if the bisection lands on a jump.

    The materialized level curves are floored at L: the recursion can dip
    below L near the second level's start, and posting max(L, phi) is
    observationally identical (every valuation is at least L) while keeping
    level dominance intact.
    """
    p = req.params
    _require_valid(p)
    if not (1 <= p.delta_cap <= p.k - 1):
        raise ValueError("capped design requires 1 <= delta_cap <= k - 1")
    if not (0 < p.delta_risk <= 1):
        raise ValueError("delta_risk must lie in (0, 1]")
    if not isinstance(req.reservation_policy, str):
        raise ValueError("capped design derives the first level's reservation from "
                         "alpha; use the ceil-first policy")
    M = req.grid_size
    n_levels = p.delta_cap + 1
    if p.L == p.U:
        q = reservation_vector("ceil-first", p.k, n_levels, alpha=1.0)
        levels = tuple(np.full(M + 1, float(p.L)) for _ in range(n_levels))
        return PricingProfile(params=p, levels=levels, reservation=q, alpha=1.0, grid_size=M)

    def boundary(alpha: float) -> float:
        levels, _ = _delta_dynamic_levels(p, req.reservation_policy, alpha, M)
        return levels[-1][-1] - p.U

    hi = ALPHA_BRACKET_FACTOR * (1.0 + math.log(p.U / p.L))
    tol = req.alpha_tolerance
    try:
        alpha, resid = _bisect_boundary(boundary, 1.0 + 1e-12, hi, p.U, tol)
    except RuntimeError:
        alpha, resid = math.nan, math.inf
    if not abs(resid) <= p.U * tol:
        alpha, resid = _piecewise_root(boundary, p.k, hi, p.U, tol)
    if not abs(resid) <= p.U * max(tol, 10.0 / M):
        raise RuntimeError(
            f"alpha calibration failed: residual {resid:.6g} at alpha={alpha:.12g}")
    levels, q = _delta_dynamic_levels(p, req.reservation_policy, alpha, M)
    levels = tuple(np.clip(lv, p.L, p.U) for lv in levels)
    return PricingProfile(params=p, levels=levels, reservation=q, alpha=alpha, grid_size=M)


def _piecewise_root(boundary: Callable[[float], float], k: int, hi: float,
                    U: float, tol_rel: float) -> tuple[float, float]:
    """Scan the continuity pieces of the boundary map (between consecutive
    values of ceil(k/alpha)) for the smallest root."""
    cuts = sorted({1.0} | {k / m for m in range(1, k + 1) if 1.0 < k / m < hi} | {hi})
    eps = 1e-10
    prev_end: tuple[float, float] | None = None
    for a, b in zip(cuts[:-1], cuts[1:]):
        a_in, b_in = a * (1 + eps) + eps, b * (1 - eps)
        f_a = boundary(a_in)
        if f_a >= 0:
            # the map jumped past zero at the seam; pick the nearer side
            if prev_end is not None and abs(prev_end[1]) < abs(f_a):
                return prev_end
            return a_in, f_a
        f_b = boundary(b_in)
        if f_b < 0:
            prev_end = (b_in, f_b)
            continue
        lo_, hi_ = a_in, b_in
        f_mid = f_b
        for _ in range(_MAX_BISECT_ITERS):
            mid = 0.5 * (lo_ + hi_)
            f_mid = boundary(mid)
            if abs(f_mid) <= U * tol_rel:
                return mid, f_mid
            if f_mid < 0:
                lo_ = mid
            else:
                hi_ = mid
        return 0.5 * (lo_ + hi_), f_mid
    raise RuntimeError("alpha calibration: no root on the bracket")


# ---------------------------------------------------------------------------
# Static lower-bound constraint check


@dataclass(frozen=True)
class StaticConstraintReport:
    """Saturation report for the static design's defining constraints.

    The optimal static design satisfies, with equality, (i) a floor on the
    seed measure posting exactly L and (ii) a tail-average inequality at
    every valuation. ``max_violation`` is the largest absolute deviation
    from equality over all probes (the design conditions demand equality, so
    slack in either direction means the profile is not the alpha-design);
    ``max_shortfall`` isolates true infeasibility (constraint below its
    required level).
    """

    alpha: float
    max_violation: float
    max_shortfall: float
    floor_gap: float
    worst_value: float


def check_static_lb_constraints(profile: PricingProfile, alpha: float,
                                n_probe: int = 201) -> StaticConstraintReport:
    """Probe the static-pricing guarantee constraints at n_probe valuations.

    With psi the seed measure at which the curve first exceeds a price (the
    generalized inverse of phi), the constraints are

        psi(L) >= 1 - delta + delta/alpha
        (1/delta) * [ L * min(delta - 1 + psi(v), psi(L))
                      + int_{psi(L)}^{max(psi(L), delta-1+psi(v))} phi ] >= v / alpha

    for every v in [L, U]. Both are saturated by the matching design.
    """
    if profile.params.delta_cap != 0:
        raise ValueError("the static constraint check needs a single-level profile")
    p = profile.params
    delta = p.delta_risk
    phi = profile.levels[0]
    M = profile.grid_size
    h = 1.0 / M
    F = cumulative_trapezoid(phi, h)
    psi_L = generalized_inverse(phi, p.L)

    floor_req = 1.0 - delta + delta / alpha
    floor_gap = psi_L - floor_req  # >= 0 required; == 0 when saturated

    v = np.linspace(p.L, p.U, n_probe)
    psi_v = generalized_inverse_many(phi, v)
    cut = delta - 1.0 + psi_v
    first = p.L * np.minimum(cut, psi_L)
    upper = np.maximum(psi_L, cut)
    second = integral_to(F, phi, upper, h) - integral_to(F, phi, np.full_like(upper, psi_L), h)
    lhs = (first + second) / delta
    rhs = v / alpha
    gaps = lhs - rhs  # >= 0 required; == 0 when saturated

    worst = int(np.argmax(np.abs(gaps)))
    max_violation = max(float(np.max(np.abs(gaps))), abs(floor_gap))
    max_shortfall = max(float(np.max(-gaps, initial=0.0)), max(-floor_gap, 0.0), 0.0)
    return StaticConstraintReport(
        alpha=alpha,
        max_violation=max_violation,
        max_shortfall=max_shortfall,
        floor_gap=float(floor_gap),
        worst_value=float(v[worst]),
    )
