"""Frequency-integrated rate regions built from per-detuning convex regions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rates import pure_loss_capacity
from .region import ConvexRegion, RateRegion, convex_hull, thermal_region
from .transducer import effective_channel, signal_blocks_two_mode


@dataclass(frozen=True)
class FrequencyGrid:
    """Evenly spaced detunings (in units of the internal loss rate)."""

    delta_values: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delta_values, dtype=float).ravel()
        if d.size == 0:
            raise ValueError("frequency grid is empty")
        if d.size > 1:
            steps = np.diff(d)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-12 * max(1.0, float(np.max(np.abs(d)))):
                raise ValueError("frequency grid must be increasing and evenly spaced")
        d.setflags(write=False)
        object.__setattr__(self, "delta_values", d)

    @classmethod
    def uniform(cls, lo: float = -10.0, hi: float = 10.0, n: int = 41) -> "FrequencyGrid":
        return cls(np.linspace(lo, hi, n))

    @property
    def spacing(self) -> float:
        d = self.delta_values
        return float(d[1] - d[0]) if d.size > 1 else 1.0

    def __len__(self):
        return self.delta_values.size

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        d = self.delta_values
        return bool(np.all(np.abs(d + d[::-1]) <= tol * max(1.0, float(np.max(np.abs(d))))))

    def refined(self) -> "FrequencyGrid":
        """Grid with every cell halved."""
        d = self.delta_values
        return FrequencyGrid(np.linspace(d[0], d[-1], 2 * d.size - 1))


def _edges(V: np.ndarray) -> np.ndarray:
    return np.roll(V, -1, axis=0) - V


def _half_plane(e) -> int:
    # edges ordered by polar angle in [0, 2pi) starting at the positive x axis
    return 0 if (e[1] > 0 or (e[1] == 0 and e[0] > 0)) else 1


def minkowski_sum(A: ConvexRegion, B: ConvexRegion) -> ConvexRegion:
    """Minkowski sum of two convex polygons by merging their edge sequences.

    Both operands start at their lowest-then-leftmost vertex, so their edge
    sequences are already sorted by polar angle. Runs in O(|A| + |B|).
    """
    VA, VB = A.vertices, B.vertices
    if len(VA) == 0 or len(VB) == 0:
        raise ValueError("Minkowski sum of an empty region")
    if len(VA) == 1:
        return ConvexRegion(VB + VA[0])
    if len(VB) == 1:
        return ConvexRegion(VA + VB[0])
    EA, EB = _edges(VA), _edges(VB)
    i = j = 0
    pts = [VA[0] + VB[0]]
    while i < len(EA) or j < len(EB):
        if j == len(EB):
            step = EA[i]
            i += 1
        elif i == len(EA):
            step = EB[j]
            j += 1
        else:
            a, b = EA[i], EB[j]
            ha, hb = _half_plane(a), _half_plane(b)
            cr = a[0] * b[1] - a[1] * b[0]
            if ha < hb or (ha == hb and cr > 0):
                step = a
                i += 1
            elif hb < ha or (ha == hb and cr < 0):
                step = b
                j += 1
            else:  # parallel edges merge into one
                step = a + b
                i += 1
                j += 1
        pts.append(pts[-1] + step)
    V = np.array(pts[:-1])
    return ConvexRegion(_drop_collinear(V))


def _drop_collinear(V: np.ndarray) -> np.ndarray:
    keep = []
    n = len(V)
    for k in range(n):
        a, b, c = V[k - 1], V[k], V[(k + 1) % n]
        cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cr != 0 or n <= 2:
            keep.append(b)
    return np.array(keep) if keep else V[:1]


def frequency_integrated_region(regions: Sequence[ConvexRegion], spacing: float) -> ConvexRegion:
    """``spacing`` times the Minkowski sum of the per-frequency regions."""
    if len(regions) == 0:
        raise ValueError("no per-frequency regions to integrate")
    if spacing <= 0:
        raise ValueError("frequency spacing must be positive")
    total = regions[0]
    for R in regions[1:]:
        total = minkowski_sum(total, R)
    return total.scaled(spacing)


def time_shared_unidirectional(imax: Sequence[float], spacing: float) -> ConvexRegion:
    """Band region when every frequency time-shares the two directions."""
    s = float(np.sum(imax)) * spacing
    return convex_hull([[s, 0.0], [0.0, s]])


@dataclass
class BandSummary:
    """Per-detuning duplex comparison over a frequency grid."""

    delta: np.ndarray
    max_sum: np.ndarray
    imax: np.ndarray
    advantage: np.ndarray
    support_points: np.ndarray  # slope -1 supporting point of each region
    regions: list = field(default_factory=list, repr=False)

    @property
    def intervals(self) -> list:
        """Maximal runs of grid points with a duplex advantage, as (lo, hi)."""
        out = []
        adv = self.advantage
        k = 0
        while k < len(adv):
            if adv[k]:
                m = k
                while m + 1 < len(adv) and adv[m + 1]:
                    m += 1
                out.append((float(self.delta[k]), float(self.delta[m])))
                k = m + 1
            else:
                k += 1
        return out

    def to_json(self) -> dict:
        return {
            "delta": self.delta.tolist(),
            "advantage": [bool(a) for a in self.advantage],
            "max_sum": self.max_sum.tolist(),
            "Imax": self.imax.tolist(),
        }


def detuned_channel(g, kappa_e, kappa_i, delta, n_th=0.0):
    """Effective channel of a symmetric device with both modes detuned by ``delta``."""
    S = signal_blocks_two_mode(g, kappa_e, kappa_i, delta, delta)
    return effective_channel(S, n_th)


def _region_at(args):
    g, kappa_e, kappa_i, delta, n_th, n = args
    ch = detuned_channel(g, kappa_e, kappa_i, delta, n_th)
    return thermal_region(ch, n=n), ch.T21


def advantage_window(g, kappa_e, kappa_i, grid: FrequencyGrid | None = None, n_th: float = 0.0,
                     n: int = 61, map_fn=map) -> BandSummary:
    """Where simultaneous duplex beats the best unidirectional capacity.

    At each detuning both modes share it (delta1 = delta2); encodings are
    optimized over thermal inputs. ``map_fn`` may be a parallel map; results
    are consumed in grid order.
    """
    grid = grid or FrequencyGrid.uniform()
    jobs = [(g, kappa_e, kappa_i, float(d), n_th, n) for d in grid.delta_values]
    regions, ms, im, sup = [], [], [], []
    for region, T in map_fn(_region_at, jobs):
        regions.append(region)
        imax = float(pure_loss_capacity(T)) if n_th == 0 else _axis_max(region)
        V = region.hull.vertices
        k = int(np.argmax(V.sum(axis=1))) if len(V) else 0
        sup.append(V[k] if len(V) else np.zeros(2))
        ms.append(region.max_sum)
        im.append(imax)
    ms, im = np.array(ms), np.array(im)
    adv = ms > im + 1e-9
    return BandSummary(np.array(grid.delta_values), ms, im, adv, np.array(sup), regions)


def _axis_max(region: RateRegion) -> float:
    V = region.hull.vertices
    return float(max(V[:, 0].max(), V[:, 1].max())) if len(V) else 0.0


def band_region(summary: BandSummary, spacing: float) -> ConvexRegion:
    """Frequency-integrated time-sharing region from a computed summary."""
    return frequency_integrated_region([r.hull for r in summary.regions], spacing)
