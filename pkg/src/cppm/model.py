"""Core domain types: market constants, instances, pricing profiles, outcomes.

Everything here is immutable after construction and safe to share across
workers. Validation is report-style (no exceptions) so that invalid inputs
can be described back to the caller; algorithm entry points raise on the
same conditions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "MarketParams",
    "Instance",
    "PricingProfile",
    "SeedOutcome",
    "WelfareDistribution",
    "ValidationResult",
    "validate",
    "validate_profile",
    "save_profile",
    "load_profile",
    "load_instance",
]

#: Relative tolerance used when checking monotonicity/dominance of grid
#: functions. Grid sampling puts adjacent levels equal at their seam, so the
#: slack only needs to absorb float round-off.
GRID_RTOL = 1e-9


@dataclass(frozen=True)
class MarketParams:
    """Problem constants for one market setting.

    L, U      -- price bounds, 0 < L <= U
    k         -- inventory (positive integer)
    delta_cap -- allowed number of price changes, integer in [0, k-1]
    delta_risk-- tail probability of the CVaR objective, in (0, 1]
    """

    L: float
    U: float
    k: int
    delta_cap: int
    delta_risk: float = 1.0

    def violation(self) -> str | None:
        if not (self.L > 0):
            return "L must be positive"
        if self.L > self.U:
            return "L > U"
        if self.k < 1:
            return "k must be a positive integer"
        if not (0 <= self.delta_cap <= self.k - 1):
            return "delta_cap outside [0, k-1]"
        if not (0 < self.delta_risk <= 1):
            return "delta_risk outside (0, 1]"
        return None


@dataclass(frozen=True)
class Instance:
    """An ordered sequence of buyer valuations."""

    valuations: tuple[float, ...]

    def __init__(self, valuations: Iterable[float]):
        object.__setattr__(self, "valuations", tuple(float(v) for v in valuations))

    def __len__(self) -> int:
        return len(self.valuations)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.valuations)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PricingProfile:
    """delta_cap + 1 nondecreasing price curves sampled on a uniform grid.

    Level i is stored as grid_size + 1 samples of phi_i on {0, 1/M, ..., 1}
    and is evaluated by linear interpolation. Levels dominate each other end
    to end: phi_i(1) <= phi_{i+1}(0). ``reservation`` assigns each level its
    share of the k units; ``alpha`` is the competitive ratio the design
    targets.
    """

    params: MarketParams
    levels: tuple[np.ndarray, ...]
    reservation: tuple[int, ...]
    alpha: float
    grid_size: int

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(_freeze(lv) for lv in self.levels))
        object.__setattr__(self, "reservation", tuple(int(q) for q in self.reservation))

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def grid(self) -> np.ndarray:
        return np.arange(self.grid_size + 1) / self.grid_size

    def price(self, level: int, r: float | np.ndarray) -> float | np.ndarray:
        """phi_level evaluated at seed r (levels are 1-indexed)."""
        return np.interp(r, self.grid(), self.levels[level - 1])

    def level_thresholds(self) -> np.ndarray:
        """Cumulative reservation: level j serves units y in [thr[j-1], thr[j])."""
        return np.concatenate([[0], np.cumsum(self.reservation)])


@dataclass(frozen=True)
class SeedOutcome:
    """Deterministic result of one mechanism run at a realized seed."""

    seed: float
    allocations: tuple[int, ...]
    posted_prices: tuple[float, ...]
    welfare: float
    revenue: float
    units_by_level: tuple[int, ...]

    @property
    def units_sold(self) -> int:
        return int(sum(self.allocations))


@dataclass(frozen=True)
class WelfareDistribution:
    """Discrete welfare distribution as measure-weighted atoms.

    ``measures`` and ``welfares`` are parallel arrays sorted by welfare
    ascending; measures sum to 1.
    """

    measures: np.ndarray
    welfares: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "measures", _freeze(self.measures))
        object.__setattr__(self, "welfares", _freeze(self.welfares))

    @classmethod
    def from_samples(cls, welfare: np.ndarray, measure: np.ndarray | None = None) -> "WelfareDistribution":
        """Build from equally- or explicitly-weighted samples, merging ties."""
        welfare = np.asarray(welfare, dtype=float)
        uniq, inverse = np.unique(welfare, return_inverse=True)
        if measure is None:  # equal weights merge to exact counts/n
            merged = np.bincount(inverse, minlength=uniq.size) / welfare.size
        else:
            merged = np.zeros(uniq.size)
            np.add.at(merged, inverse, np.asarray(measure, dtype=float))
        return cls(measures=merged, welfares=uniq)

    @property
    def atoms(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.measures.tolist(), self.welfares.tolist()))

    def mean(self) -> float:
        return float(self.measures @ self.welfares)

    def violation(self) -> str | None:
        if abs(self.measures.sum() - 1.0) > 1e-12:
            return "measures do not sum to 1"
        if np.any(self.measures <= 0):
            return "nonpositive atom measure"
        if np.any(np.diff(self.welfares) < 0):
            return "welfare atoms not sorted ascending"
        return None


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    message: str | None = None

    def __bool__(self) -> bool:
        return self.ok


_OK = ValidationResult(True)


def validate(params: MarketParams, instance: Instance | None = None) -> ValidationResult:
    """Check market constants and, optionally, an instance against them.

    Returns the first violated invariant as a report; never raises.
    """
    msg = params.violation()
    if msg is not None:
        return ValidationResult(False, msg)
    if instance is not None:
        for t, v in enumerate(instance.valuations):
            if not math.isfinite(v):
                return ValidationResult(False, f"valuation at position {t} is not finite")
            if v < params.L:
                return ValidationResult(False, f"valuation below L at position {t}")
            if v > params.U:
                return ValidationResult(False, f"valuation above U at position {t}")
    return _OK


def validate_profile(profile: PricingProfile) -> ValidationResult:
    """Check profile-level invariants: grid shape, monotone levels, level
    dominance, price bounds and reservation consistency."""
    p = profile.params
    base = validate(p)
    if not base:
        return base
    if profile.n_levels != p.delta_cap + 1:
        return ValidationResult(False, "number of levels != delta_cap + 1")
    if len(profile.reservation) != profile.n_levels:
        return ValidationResult(False, "reservation length != number of levels")
    if any(q < 0 for q in profile.reservation):
        return ValidationResult(False, "negative reservation entry")
    if sum(profile.reservation) != p.k:
        return ValidationResult(False, "reservation does not sum to k")
    tol = GRID_RTOL * max(abs(p.U), 1.0)
    for i, lv in enumerate(profile.levels):
        if lv.shape != (profile.grid_size + 1,):
            return ValidationResult(False, f"level {i + 1} has wrong sample count")
        if np.any(np.diff(lv) < -tol):
            return ValidationResult(False, f"level {i + 1} is not nondecreasing")
    if profile.levels[0][0] < p.L - tol:
        return ValidationResult(False, "lowest price below L")
    if profile.levels[-1][-1] > p.U + max(tol, 10.0 * p.U / profile.grid_size):
        return ValidationResult(False, "highest price above U")
    for i in range(profile.n_levels - 1):
        if profile.levels[i][-1] > profile.levels[i + 1][0] + tol:
            return ValidationResult(False, f"level dominance violated between levels {i + 1} and {i + 2}")
    return _OK


# ---------------------------------------------------------------------------
# File formats


def _f17(x: float) -> str:
    """17-significant-digit decimal form; round-trips any float exactly."""
    return format(float(x), ".17g")


def save_profile(profile: PricingProfile, path: str) -> None:
    """Write the profile as a single self-describing JSON object.

    Numbers are serialized with 17 significant digits so every grid sample
    round-trips bit-exactly. The document is written by hand because the
    stdlib encoder cannot be told how to format floats.
    """
    p = profile.params
    parts = [
        f'"L": {_f17(p.L)}',
        f'"U": {_f17(p.U)}',
        f'"k": {p.k}',
        f'"delta_cap": {p.delta_cap}',
        f'"delta_risk": {_f17(p.delta_risk)}',
        f'"alpha": {_f17(profile.alpha)}',
        f'"grid_size": {profile.grid_size}',
        '"reservation": [' + ", ".join(str(q) for q in profile.reservation) + "]",
        '"levels": ['
        + ", ".join("[" + ", ".join(_f17(v) for v in lv) + "]" for lv in profile.levels)
        + "]",
    ]
    with open(path, "w") as fh:
        fh.write("{" + ", ".join(parts) + "}\n")


def load_profile(path: str) -> PricingProfile:
    with open(path) as fh:
        doc = json.load(fh)
    params = MarketParams(
        L=doc["L"], U=doc["U"], k=int(doc["k"]),
        delta_cap=int(doc["delta_cap"]), delta_risk=doc["delta_risk"],
    )
    levels = tuple(np.asarray(lv, dtype=float) for lv in doc["levels"])
    return PricingProfile(
        params=params,
        levels=levels,
        reservation=tuple(int(q) for q in doc["reservation"]),
        alpha=float(doc["alpha"]),
        grid_size=int(doc["grid_size"]),
    )


def load_instance(path: str) -> Instance:
    """Read an instance file: one decimal valuation per line, '#' comments."""
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            try:
                vals.append(float(body))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {body!r}") from None
    return Instance(vals)
