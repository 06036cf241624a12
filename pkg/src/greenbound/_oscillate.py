"""Oscillation-resolving Green quadrature for sin(π/y^α)-type sources.

Integrands of the form w(y) = (envelope) · sin(π / y^α) oscillate infinitely
often as y -> 0+, with sign changes exactly at y_k = k^{-1/α}.  Uniform-grid
trapezoids alias these, so the Green-potential pieces

    A(x) = ∫_a^x (y-a) w(y) dy,      B(x) = ∫_x^b (b-y) w(y) dy,
    (G w)(x) = [(b-x) A(x) + (x-a) B(x)] / (b-a)

are assembled from Gauss panels between consecutive sign changes,
accumulated once over the whole interval and read off at all evaluation
points.  Below the deepest resolved zero the remaining head of A is an
alternating series whose period magnitudes are verified to decrease with
depth, so |head| is certified by the deepest resolved period integral; the
certificate is reported with the values.  Partial sums at sign changes
bracket the improper integral, so resolved sum + certificate realizes the
improper (exhaustion-limit) value when the integral converges only
conditionally.  The certificate is meaningless for non-alternating
integrands (e.g. |w|); callers forcing a cutoff with ``y_floor`` get plain
truncated values (lower bounds for nonnegative w) and ``alternating_ok``
is reported for transparency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResolutionInsufficientError

__all__ = ["OscillatoryResult", "green_apply_oscillatory"]

_GX, _GW = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class OscillatoryResult:
    values: np.ndarray          # G w at the requested points
    head_bound: float           # certified |unresolved head of A|
    eps: np.ndarray             # per-point bound propagated from the head
    y_bottom: float             # deepest resolved breakpoint
    periods: int                # number of resolved sign intervals
    alternating_ok: bool        # trailing period magnitudes decrease with depth
    a_cum: np.ndarray           # A at the requested points (resolved part)
    b_cum: np.ndarray           # B at the requested points


def _zero_range(alpha: float, lo: float, hi: float, k_cap: int):
    """Indices (k_min, k_max) of sign changes k^{-1/alpha} in [lo, hi]."""
    k_min = max(1, int(np.ceil(hi ** (-alpha) - 1e-12)))
    if lo > 0.0:
        k_max = int(np.floor(lo ** (-alpha) + 1e-12))
    else:
        k_max = k_min + k_cap
    capped = k_max - k_min > k_cap
    k_max = min(k_max, k_min + k_cap)
    return k_min, k_max, capped


def _period_probe(w_fn, alpha: float, a: float, k: int) -> float:
    """|∫ (y-a) w| over the sign interval [ (k+1)^{-1/α}, k^{-1/α} ]."""
    y_hi = k ** (-1.0 / alpha)
    y_lo = (k + 1) ** (-1.0 / alpha)
    mid = 0.5 * (y_lo + y_hi)
    half = 0.5 * (y_hi - y_lo)
    yq = mid + half * _GX
    return abs(float(np.sum((yq - a) * np.asarray(w_fn(yq), dtype=float)
                            * half * _GW)))


def green_apply_oscillatory(w_fn, alpha: float, xs, a: float = 0.0,
                            b: float = 1.0, *, head_budget: float = 1e-11,
                            max_periods: int = 1_500_000,
                            fill_width: float = 0.01,
                            subpanels_per_period: int = 2,
                            y_floor: float = 0.0) -> OscillatoryResult:
    """Evaluate (G w)(x) on (a,b) for all x in xs.

    ``w_fn`` must accept numpy arrays and be finite on (a,b).  For a = 0 the
    resolution deepens until the probed period integral of y·w drops under
    ``head_budget`` (or ``max_periods`` is hit); for a > 0 the integral is
    resolved all the way down to a when affordable, otherwise the unresolved
    window above a is certified like a head.  ``y_floor`` forces a cutoff.
    """
    xs = np.sort(np.asarray(xs, dtype=float))
    if xs.size and (xs[0] <= a or xs[-1] >= b):
        raise ResolutionInsufficientError("evaluation points must be interior")

    floor = max(a, y_floor)
    if a == 0.0 and y_floor == 0.0:
        # adaptive depth: geometric deepening until the probe meets budget
        k_min, k_max, _ = _zero_range(alpha, 0.0, b, 4096)
        while True:
            probe = _period_probe(w_fn, alpha, a, k_max)
            if probe <= head_budget or k_max - k_min >= max_periods:
                break
            k_max = min(k_min + max_periods, k_max * 2)
        resolved_to_edge = False
    else:
        k_min, k_max, capped = _zero_range(alpha, floor, b, max_periods)
        resolved_to_edge = (not capped) and y_floor <= a
    ks = np.arange(k_min, k_max + 1, dtype=float)
    zeros = (ks ** (-1.0 / alpha))[::-1] if ks.size else np.empty(0)

    y_bottom = float(zeros[0]) if zeros.size else floor
    if resolved_to_edge and floor > 0.0:
        y_bottom = floor
    if xs.size and xs[0] <= y_bottom:
        raise ResolutionInsufficientError(
            f"evaluation point {xs[0]:.3g} below resolved depth "
            f"{y_bottom:.3g}; raise max_periods or loosen head_budget")

    pieces = [zeros, xs, np.array([y_bottom, b])]
    breaks = np.unique(np.concatenate(pieces))
    breaks = breaks[(breaks >= y_bottom) & (breaks <= b)]
    widths = np.diff(breaks)
    extra = []
    wide = np.flatnonzero(widths > fill_width)
    for i in wide:
        m = int(np.ceil(widths[i] / fill_width))
        extra.append(breaks[i] + widths[i] * np.arange(1, m) / m)
    if subpanels_per_period > 1:
        small = np.flatnonzero(widths <= fill_width)
        for j in range(1, subpanels_per_period):
            extra.append(breaks[small] + widths[small] * j / subpanels_per_period)
    if extra:
        breaks = np.unique(np.concatenate([breaks] + extra))

    lo, hi = breaks[:-1], breaks[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    yq = mid[:, None] + half[:, None] * _GX[None, :]
    wq = half[:, None] * _GW[None, :]
    fv = np.asarray(w_fn(yq.ravel()), dtype=float).reshape(yq.shape)
    if not np.all(np.isfinite(fv)):
        raise ResolutionInsufficientError("w evaluated non-finite inside (a,b)")
    p_cum = np.concatenate([[0.0], np.cumsum(np.sum((yq - a) * fv * wq, axis=1))])
    r_cum = np.concatenate([[0.0], np.cumsum(np.sum((b - yq) * fv * wq, axis=1))])
    idx = np.searchsorted(breaks, xs)
    A = p_cum[idx]
    B = r_cum[-1] - r_cum[idx]

    head_bound = 0.0
    alternating_ok = True
    if not resolved_to_edge and zeros.size >= 7:
        zi = np.searchsorted(breaks, zeros[:7])
        pp = np.abs(np.diff(p_cum[zi]))       # deepest six period magnitudes
        alternating_ok = bool(np.all(pp[:-1] <= pp[1:] * 1.25 + 1e-300))
        head_bound = 1.5 * float(pp[0])
    elif not resolved_to_edge and zeros.size:
        head_bound = 1.5 * _period_probe(w_fn, alpha, a,
                                         int(round(zeros[0] ** (-alpha))))

    vals = ((b - xs) * A + (xs - a) * B) / (b - a)
    eps = head_bound * (b - xs) / (b - a)
    return OscillatoryResult(vals, head_bound, eps, float(y_bottom),
                             max(0, zeros.size - 1), alternating_ok, A, B)
