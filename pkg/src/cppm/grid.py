"""Uniform-grid helpers for piecewise-linear functions on [0, 1].

A function is represented by its M+1 samples on {0, 1/M, ..., 1} and
evaluated by linear interpolation. Composite trapezoid quadrature is exact
for this representation; integral limits that fall between nodes are handled
by interpolating the integrand at the cut point.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "cumulative_trapezoid",
    "integral_to",
    "shifted_cumulative",
    "window_integral",
    "generalized_inverse",
    "generalized_inverse_many",
]


def cumulative_trapezoid(y: np.ndarray, h: float, out: np.ndarray | None = None) -> np.ndarray:
    """F[n] = integral of the sampled function from 0 to n*h."""
    if out is None:
        out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum((y[1:] + y[:-1]) * (0.5 * h), out=out[1:])
    return out


def integral_to(F: np.ndarray, y: np.ndarray, w: np.ndarray | float, h: float) -> np.ndarray | float:
    """Integral from 0 to w (clipped to [0, 1]) for arbitrary query points w."""
    M = len(y) - 1
    w = np.clip(w, 0.0, 1.0)
    j = np.clip((w / h).astype(int) if isinstance(w, np.ndarray) else int(w / h), 0, M - 1)
    a = w - j * h
    yw = y[j] + (a / h) * (y[j + 1] - y[j])
    return F[j] + 0.5 * a * (y[j] + yw)


def shifted_cumulative(F: np.ndarray, y: np.ndarray, shift: float, h: float,
                       upto: int | None = None) -> np.ndarray:
    """G[n] = integral from 0 to clip(n*h + shift, 0, 1), for every node n.

    The shift is constant, so every query lands at the same fractional offset
    within a grid cell; the evaluation reduces to slicing plus one scalar
    blend, with no per-node index arithmetic. With ``upto`` given, only
    G[0..upto] is returned (and only y[0..upto+?]... strictly nodes below the
    shifted positions are touched, so a partially filled y is safe as long as
    n + shift stays within the filled prefix).
    """
    M = len(y) - 1
    N = M if upto is None else upto
    s = shift * M
    d = int(np.floor(s + 1e-9))
    f = s - d
    if f < 1e-9:  # lands exactly on nodes
        f = 0.0
    elif f > 1 - 1e-9:
        d += 1
        f = 0.0
    G = np.empty(N + 1)
    lo = max(0, -d)            # first n with n + d >= 0
    hi = min(N, M - d if f == 0.0 else M - 1 - d)  # last n evaluated by the blend
    G[:lo] = 0.0
    if hi >= lo:
        m0, m1 = lo + d, hi + d
        if f == 0.0:
            G[lo:hi + 1] = F[m0:m1 + 1]
        else:
            ym = y[m0:m1 + 1]
            yn = y[m0 + 1:m1 + 2]
            G[lo:hi + 1] = F[m0:m1 + 1] + h * (f * ym + 0.5 * f * f * (yn - ym))
    if hi < N:
        G[max(hi + 1, lo):] = F[M]
    return G


def window_integral(F: np.ndarray, y: np.ndarray, delta: float, h: float) -> np.ndarray:
    """Per node x: int_x^{min(1, x+delta)} y + int_0^{max(0, delta-1+x)} y.

    The two pieces together always cover measure delta of the circle obtained
    by wrapping [0, 1]; this is the window pattern shared by the recursive
    pricing designs.
    """
    up = shifted_cumulative(F, y, delta, h)
    lo = shifted_cumulative(F, y, delta - 1.0, h)
    return up - F + lo


def generalized_inverse(samples: np.ndarray, v: float) -> float:
    """sup{x in [0,1] : f(x) <= v} for nondecreasing grid samples.

    Returns 0.0 when even f(0) > v. Flat stretches at exactly v resolve to
    the right end of the stretch (sup semantics).
    """
    M = len(samples) - 1
    if v < samples[0]:
        return 0.0
    if v >= samples[-1]:
        return 1.0
    i = int(np.searchsorted(samples, v, side="right")) - 1
    y0, y1 = samples[i], samples[i + 1]
    if y1 <= y0:  # flat segment at v (searchsorted already skipped it)
        return (i + 1) / M
    return (i + (v - y0) / (y1 - y0)) / M


def generalized_inverse_many(samples: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized generalized_inverse over query values v."""
    M = len(samples) - 1
    i = np.clip(np.searchsorted(samples, v, side="right") - 1, 0, M - 1)
    y0, y1 = samples[i], samples[i + 1]
    slope = y1 - y0
    frac = np.where(slope > 0, (v - y0) / np.where(slope > 0, slope, 1.0), 1.0)
    out = (i + np.clip(frac, 0.0, 1.0)) / M
    out = np.where(v < samples[0], 0.0, out)
    out = np.where(v >= samples[-1], 1.0, out)
    return out
