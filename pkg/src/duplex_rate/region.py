"""Rate regions: sampling, boundary tracing, convex hulls and labels.

A region is built from candidate points ``(I1, I2)`` that each carry a
protocol label and the parameters that achieve them. The time-sharing
region is their convex hull. Hull edges that are not covered by achievable
points are time-sharing segments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .rates import pure_loss_capacity

AXIS = "axis-capacity"
JACOBIAN = "low-rank-jacobian"
REFLECTIONLESS = "reflectionless"
TIME_SHARING = "time-sharing"
LABELS = (AXIS, JACOBIAN, REFLECTIONLESS, TIME_SHARING)
# analytic branches win over traced ones at coincident points
_PRIORITY = {AXIS: 0, REFLECTIONLESS: 1, JACOBIAN: 2}

RANK_TOL = 1e-6


# --- convex polygons --------------------------------------------------------

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_indices(P: np.ndarray, eps: float = 0.0) -> list[int]:
    """Andrew's monotone chain; returns indices of a ccw strictly convex hull."""
    order = sorted(range(len(P)), key=lambda i: (P[i, 0], P[i, 1]))
    if len(order) <= 2:
        return order

    def chain(idx):
        out: list[int] = []
        for i in idx:
            while len(out) >= 2 and _cross(P[out[-2]], P[out[-1]], P[i]) <= eps:
                out.pop()
            out.append(i)
        return out

    lower = chain(order)
    upper = chain(order[::-1])
    return lower[:-1] + upper[:-1]


def _dedup(P: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    if len(P) == 0:
        return P
    key = np.round(P / tol) if tol > 0 else P
    _, idx = np.unique(key, axis=0, return_index=True)
    return P[np.sort(idx)]


def _start_lowest_leftmost(V: np.ndarray) -> np.ndarray:
    if len(V) == 0:
        return V
    k = min(range(len(V)), key=lambda i: (V[i, 1], V[i, 0]))
    return np.roll(V, -k, axis=0)


@dataclass(frozen=True)
class ConvexRegion:
    """Convex polygon, counterclockwise, starting at its lowest-leftmost vertex."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    def __len__(self):
        return len(self.vertices)

    @property
    def area(self) -> float:
        V = self.vertices
        if len(V) < 3:
            return 0.0
        x, y = V[:, 0], V[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def support(self, u) -> float:
        return float(np.max(self.vertices @ np.asarray(u, float)))

    def contains(self, pts, slack: float = 1e-9) -> np.ndarray:
        """Whether each point lies inside or within ``slack`` of the polygon."""
        pts = np.atleast_2d(np.asarray(pts, float))
        V = self.vertices
        if len(V) == 1:
            return np.linalg.norm(pts - V[0], axis=1) <= slack
        if len(V) == 2:
            return _segment_distance(pts, V[0], V[1]) <= slack
        inside = np.ones(len(pts), dtype=bool)
        for a, b in zip(V, np.roll(V, -1, axis=0)):
            e = b - a
            n = np.array([e[1], -e[0]]) / np.hypot(*e)
            inside &= (pts - a) @ n <= slack
        return inside

    def distance_outside(self, pts) -> np.ndarray:
        """Euclidean distance to the polygon; 0 for points inside."""
        pts = np.atleast_2d(np.asarray(pts, float))
        V = self.vertices
        inside = self.contains(pts, slack=0.0) if len(V) >= 3 else np.zeros(len(pts), bool)
        if len(V) == 1:
            d = np.linalg.norm(pts - V[0], axis=1)
        else:
            d = np.min([_segment_distance(pts, a, b)
                        for a, b in zip(V, np.roll(V, -1, axis=0))], axis=0)
        return np.where(inside, 0.0, d)

    def scaled(self, c: float) -> "ConvexRegion":
        return ConvexRegion(self.vertices * c)

    def to_json(self) -> list:
        return self.vertices.tolist()


def _segment_distance(pts, a, b):
    e = b - a
    L2 = float(e @ e)
    if L2 == 0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ e / L2, 0, 1)
    return np.linalg.norm(pts - (a + t[:, None] * e), axis=1)


def _simplify(V: np.ndarray, tol: float) -> np.ndarray:
    """Drop hull vertices lying within ``tol`` of the chord of their neighbours."""
    V = list(map(tuple, V))
    while len(V) > 3:
        P = np.array(V)
        a, b = np.roll(P, 1, axis=0), np.roll(P, -1, axis=0)
        e = b - a
        L = np.hypot(e[:, 0], e[:, 1])
        cross = np.abs(e[:, 0] * (P[:, 1] - a[:, 1]) - e[:, 1] * (P[:, 0] - a[:, 0]))
        dev = np.where(L > 0, cross / np.where(L > 0, L, 1), 0.0)
        k = int(np.argmin(dev))
        if dev[k] > tol:
            break
        V.pop(k)
    return np.array(V)


def convex_hull(points, include_origin: bool = True, simplify_tol: float = 0.0) -> ConvexRegion:
    """Time-sharing hull of ``points``; the origin is always achievable.

    With ``simplify_tol`` > 0, vertices closer than that to the chord of
    their neighbours are dropped; 0 gives the exact hull.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    P = P[np.all(np.isfinite(P), axis=1)]
    if include_origin:
        P = np.vstack([P, [0.0, 0.0]])
    P = _dedup(P)
    if len(P) == 0:
        return ConvexRegion(np.zeros((0, 2)))
    V = P[_hull_indices(P)]
    if simplify_tol > 0:
        V = _simplify(V, simplify_tol)
    return ConvexRegion(_start_lowest_leftmost(V))


# --- regions ----------------------------------------------------------------

@dataclass
class BoundaryVertex:
    I1: float
    I2: float
    label: str
    params: dict = field(default_factory=dict)
    segment: str | None = None  # label of the edge to the next vertex

    def to_json(self) -> dict:
        out = {"I1": self.I1, "I2": self.I2, "label": self.label, "params": self.params}
        if self.segment is not None:
            out["segment"] = self.segment
        return out


@dataclass
class CandidateSet:
    """Achievable points with labels and per-point parameters."""

    I: np.ndarray
    labels: np.ndarray
    params: dict

    @classmethod
    def empty(cls) -> "CandidateSet":
        return cls(np.zeros((0, 2)), np.zeros(0, dtype=object), {})

    @classmethod
    def build(cls, I1, I2, label, **params) -> "CandidateSet":
        I1 = np.atleast_1d(np.asarray(I1, float)).ravel()
        I2 = np.atleast_1d(np.asarray(I2, float)).ravel()
        n = len(I1)
        labels = np.asarray(label, dtype=object)
        labels = np.full(n, label, dtype=object) if labels.ndim == 0 else labels.ravel()
        p = {k: np.broadcast_to(np.asarray(v, float), (n,)).copy() if np.ndim(v) == 0
             else np.asarray(v, float).ravel() for k, v in params.items()}
        return cls(np.column_stack([I1, I2]), labels, p)

    def __len__(self):
        return len(self.I)

    def concat(self, other: "CandidateSet") -> "CandidateSet":
        keys = sorted(set(self.params) | set(other.params))
        p = {k: np.concatenate([self.params.get(k, np.full(len(self), np.nan)),
                                other.params.get(k, np.full(len(other), np.nan))]) for k in keys}
        return CandidateSet(np.vstack([self.I, other.I]),
                            np.concatenate([self.labels, other.labels]), p)

    def params_at(self, i: int) -> dict:
        return {k: float(v[i]) for k, v in self.params.items() if not np.isnan(v[i])}


@dataclass
class RateRegion:
    """Sampled rate region with a labeled outer boundary and its hull."""

    points: np.ndarray
    boundary: list
    hull: ConvexRegion
    params: dict = field(default_factory=dict)
    labels: np.ndarray | None = None

    @property
    def max_sum(self) -> float:
        if len(self.hull) == 0:
            return 0.0
        return float(np.max(self.hull.vertices.sum(axis=1)))

    def boundary_labels(self) -> set:
        out = set()
        for v in self.boundary:
            out.add(v.label)
            if v.segment is not None:
                out.add(v.segment)
        return out

    def to_json(self) -> dict:
        return {
            "boundary": [v.to_json() for v in self.boundary],
            "hull": self.hull.to_json(),
        }


def _pareto_chain(V: np.ndarray) -> list[int]:
    """Hull vertex indices from the I1-axis end ccw round to the I2-axis end."""
    n = len(V)
    if n == 0:
        return []
    i0 = max(range(n), key=lambda i: (V[i, 0], -V[i, 1]))
    i1 = max(range(n), key=lambda i: (V[i, 1], -V[i, 0]))
    out = [i0]
    i = i0
    while i != i1:
        i = (i + 1) % n
        out.append(i)
    return out


def _edge_coverage(a, b, pts, perp_tol):
    """Largest gap (fraction of edge length) left by points lying on edge ab."""
    e = b - a
    L = float(np.hypot(*e))
    if L == 0:
        return 0.0, np.zeros(0, dtype=int)
    u = e / L
    rel = pts - a
    t = rel @ u / L
    perp = np.abs(rel @ np.array([-u[1], u[0]]))
    on = np.nonzero((perp <= perp_tol) & (t > 0) & (t < 1))[0]
    ts = np.sort(np.concatenate([[0.0, 1.0], t[on]]))
    return float(np.max(np.diff(ts))), on


def _scale(I: np.ndarray) -> float:
    fin = I[np.all(np.isfinite(I), axis=1)]
    return float(max(np.max(fin, initial=0.0), 1e-12))


def assemble_region(cands: CandidateSet, gap_tol: float | None = None,
                    certified: set | None = None) -> RateRegion:
    """Hull the candidates and label the outer boundary.

    An edge counts as achieved (not time-sharing) if it is shorter than
    ``gap_tol`` or achievable points cover it without gaps larger than that.
    """
    I = cands.I
    ok = np.all(np.isfinite(I), axis=1)
    scale = _scale(I)
    gap_tol = 0.01 * scale if gap_tol is None else gap_tol
    hull = convex_hull(I[ok], simplify_tol=1e-9 * scale)
    V = hull.vertices
    if len(V) <= 1 or scale <= 1e-12:
        return RateRegion(I, [], hull, cands.params, cands.labels)

    idx_ok = np.nonzero(ok)[0]
    P = I[idx_ok]
    perp_tol = 1e-6 * scale
    boundary = []
    chain = _pareto_chain(V)
    for pos, vi in enumerate(chain):
        v = V[vi]
        d = np.linalg.norm(P - v, axis=1)
        near = idx_ok[d <= 1e-12 * scale + 1e-15]
        if len(near):
            best = min(near, key=lambda k: (_PRIORITY.get(cands.labels[k], 9), k))
            label, params = cands.labels[best], cands.params_at(best)
        else:
            label, params = JACOBIAN, {}
        if v[0] <= 1e-12 * scale or v[1] <= 1e-12 * scale:
            label = AXIS
        boundary.append(BoundaryVertex(float(v[0]), float(v[1]), str(label), params))

    for pos in range(len(chain) - 1):
        a, b = V[chain[pos]], V[chain[pos + 1]]
        L = float(np.hypot(*(b - a)))
        gap, on = _edge_coverage(a, b, P, perp_tol)
        if gap * L <= gap_tol:
            labs = [cands.labels[idx_ok[k]] for k in on]
            labs = [x for x in labs if x != AXIS]
            if labs:
                seg = max(set(labs), key=lambda x: (labs.count(x), -_PRIORITY.get(x, 9)))
            else:
                ends = [boundary[pos].label, boundary[pos + 1].label]
                ends = [x for x in ends if x != AXIS] or ends
                seg = min(ends, key=lambda x: _PRIORITY.get(x, 9))
        else:
            seg = TIME_SHARING
        boundary[pos].segment = seg
    return RateRegion(I, boundary, hull, cands.params, cands.labels)


def long_uncovered_edges(region: RateRegion, gap_tol: float):
    """Boundary edges (as endpoint pairs) that are not yet resolved."""
    out = []
    b = region.boundary
    for k in range(len(b) - 1):
        if b[k].segment == TIME_SHARING:
            out.append((np.array([b[k].I1, b[k].I2]), np.array([b[k + 1].I1, b[k + 1].I2]),
                        b[k].params, b[k + 1].params))
    return out


# --- sampling and tracing ---------------------------------------------------

def encoding_grid(n: int = 121, lo: float = -3.0, hi: float = 3.0, sentinels: bool = True):
    """Photon-number axis: log-spaced on [10^lo, 10^hi] plus 0 and inf."""
    g = np.logspace(lo, hi, n)
    if sentinels:
        g = np.concatenate([[0.0], g, [np.inf]])
    return g


def default_label(params: dict, I1, I2):
    I1, I2 = np.asarray(I1), np.asarray(I2)
    lab = np.full(I1.shape, JACOBIAN, dtype=object)
    lab[(I1 <= 0) | (I2 <= 0)] = AXIS
    return lab


def sample_region(rate_fn: Callable, param_grid: dict, label_fn: Callable = default_label,
                  gap_tol: float | None = None) -> RateRegion:
    """Evaluate ``rate_fn`` on the product of the 1-D axes in ``param_grid``.

    ``rate_fn`` takes the parameter arrays as keyword arguments and returns
    ``(I1, I2)`` arrays; sentinel values such as ``inf`` are passed through.
    """
    names = list(param_grid)
    mesh = np.meshgrid(*[np.asarray(param_grid[k], float) for k in names], indexing="ij")
    params = {k: m.ravel() for k, m in zip(names, mesh)}
    I1, I2 = rate_fn(**params)
    I1 = np.broadcast_to(np.asarray(I1, float).ravel(), (mesh[0].size,))
    I2 = np.broadcast_to(np.asarray(I2, float).ravel(), (mesh[0].size,))
    labels = label_fn(params, I1, I2)
    return assemble_region(CandidateSet.build(I1, I2, labels, **params), gap_tol)


def jacobian_fd(fn: Callable, X: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``fn: (..., d) -> (I1, I2)``; shape (..., 2, d)."""
    X = np.asarray(X, float)
    d = X.shape[-1]
    J = np.empty(X.shape[:-1] + (2, d))
    for k in range(d):
        h = rel_step * np.maximum(1.0, np.abs(X[..., k]))
        Xp, Xm = X.copy(), X.copy()
        Xp[..., k] += h
        Xm[..., k] -= h
        fp, fm = np.stack(fn(Xp), -1), np.stack(fn(Xm), -1)
        J[..., :, k] = (fp - fm) / (2 * h)[..., None]
    return J


def singular_ratio(J: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(J, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(s[..., 0] > 0, s[..., -1] / s[..., 0], 0.0)


@dataclass
class TracedBoundary:
    X: np.ndarray
    I: np.ndarray
    sigma_ratio: np.ndarray

    def __len__(self):
        return len(self.X)


def _det(J):
    return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]


def trace_boundary_jacobian(rate_fn: Callable, param_dim: int, seeds, tol: float = RANK_TOL,
                            rel_step: float = 1e-6, directions: int = 16,
                            bounds=None) -> TracedBoundary:
    """Points where the rate map's Jacobian loses rank.

    For two parameters ``seeds`` is a pair of grid axes: sign changes of
    det(J) along every grid line are bisected. For more parameters
    ``seeds`` are starting points for weighted-sum maximizations over a fan
    of directions; optima are rank deficient by construction. Only points
    with smallest/largest singular value <= ``tol`` are returned.
    """
    if param_dim == 2:
        X, I = _trace_det_2d(rate_fn, seeds, rel_step)
    else:
        X, I = _trace_support_nd(rate_fn, np.atleast_2d(seeds), directions, bounds)
    if len(X) == 0:
        return TracedBoundary(np.zeros((0, param_dim)), np.zeros((0, 2)), np.zeros(0))
    ratio = singular_ratio(jacobian_fd(rate_fn, X, rel_step))
    keep = ratio <= tol
    return TracedBoundary(X[keep], I[keep], ratio[keep])


def _trace_det_2d(rate_fn, axes, rel_step):
    a0, a1 = (np.asarray(a, float) for a in axes)
    G0, G1 = np.meshgrid(a0, a1, indexing="ij")
    X = np.stack([G0, G1], -1)
    I1, I2 = rate_fn(X)
    det = _det(jacobian_fd(rate_fn, X, rel_step))
    live = (I1 > 0) & (I2 > 0) & np.isfinite(det)
    lo_list, hi_list = [], []
    for axis in (0, 1):
        s = [slice(None)] * 2
        s_next = [slice(None)] * 2
        s[axis] = slice(0, -1)
        s_next[axis] = slice(1, None)
        s, s_next = tuple(s), tuple(s_next)
        flip = (np.sign(det[s]) * np.sign(det[s_next]) < 0) & live[s] & live[s_next]
        lo_list.append(X[s][flip])
        hi_list.append(X[s_next][flip])
    lo = np.concatenate(lo_list)
    hi = np.concatenate(hi_list)
    if len(lo) == 0:
        return np.zeros((0, 2)), np.zeros((0, 2))

    def det_at(P):
        return _det(jacobian_fd(rate_fn, P, rel_step))

    dlo = det_at(lo)
    for _ in range(60):
        mid = (lo + hi) / 2
        dm = det_at(mid)
        same = np.sign(dm) == np.sign(dlo)
        lo = np.where(same[:, None], mid, lo)
        dlo = np.where(same, dm, dlo)
        hi = np.where(same[:, None], hi, mid)
    mid = (lo + hi) / 2
    I = np.stack(rate_fn(mid), -1)
    return mid, I


def maximize_weighted(rate_fn: Callable, n, starts, bounds=None, xatol: float = 1e-9):
    """Maximize n . (I1, I2) over the box from several starting points.

    ``rate_fn`` maps one parameter vector to a pair of floats.
    """
    n = np.asarray(n, float)
    lo = hi = None
    if bounds is not None:
        b = np.asarray(bounds, float)
        lo, hi = b[:, 0], b[:, 1]

    def f(x):
        if lo is not None:
            x = np.clip(x, lo, hi)
        I1, I2 = rate_fn(x)
        return -(n[0] * I1 + n[1] * I2)

    best_x, best_v = None, -np.inf
    for x0 in np.atleast_2d(starts):
        opts = {"xatol": xatol, "fatol": 1e-13, "maxfev": 4000 * len(x0)}
        res = minimize(f, x0, method="Nelder-Mead", options=opts)
        # a restart from the converged point shakes off a collapsed simplex
        res = minimize(f, res.x, method="Nelder-Mead", options=opts)
        if -res.fun > best_v:
            best_v, best_x = -res.fun, res.x
    if lo is not None:
        best_x = np.clip(best_x, lo, hi)
    return best_x, best_v


def _trace_support_nd(rate_fn, seeds, directions, bounds):
    out_x = []
    for phi in np.linspace(0, np.pi / 2, directions + 2)[1:-1]:
        n = np.array([np.cos(phi), np.sin(phi)])
        x, _ = maximize_weighted(rate_fn, n, seeds, bounds)
        out_x.append(x)
    X = np.array(out_x)
    return X, np.stack(rate_fn(X), -1)


def maximize_branch(branch_fn: Callable, n, s_grid):
    """Maximize n . I along a 1-D analytic branch sampled on ``s_grid``."""
    I1, I2 = branch_fn(s_grid)
    v = n[0] * I1 + n[1] * I2
    k = int(np.argmax(v))
    lo = s_grid[max(k - 1, 0)]
    hi = s_grid[min(k + 1, len(s_grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda s: -float(np.dot(n, branch_fn(np.array([s]))).squeeze()),
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if -res.fun > v[k]:
            return float(res.x), float(-res.fun)
    return float(s_grid[k]), float(v[k])


def duplex_advantage(region: RateRegion, T_best: float) -> dict:
    """Compare the largest I1 + I2 on the hull with the pure-loss capacity."""
    imax = float(pure_loss_capacity(T_best))
    ms = region.max_sum
    return {"max_sum": ms, "Imax": imax, "advantage": bool(ms > imax + 1e-9)}


def refine_region(cands: CandidateSet, support: Callable, gap_tol: float | None = None,
                  max_solves: int = 400, bridge: Callable | None = None) -> RateRegion:
    """Split unresolved hull edges by maximizing along their outward normals.

    ``support(n, params_a, params_b)`` returns a ``CandidateSet`` holding the
    best point it can find for direction ``n``. Edges whose normal search
    finds nothing beyond them are straight. ``bridge(params_a, params_b)``
    then samples a parameter path between the endpoints; a straight edge it
    covers is achievable, otherwise it is a time-sharing segment.
    """
    scale = _scale(cands.I)
    gap_tol = 0.01 * scale if gap_tol is None else gap_tol
    done: set = set()
    solves = 0
    region = assemble_region(cands, gap_tol)
    while solves < max_solves:
        todo = []
        for a, b, pa, pb in long_uncovered_edges(region, gap_tol):
            key = (tuple(np.round(a, 12)), tuple(np.round(b, 12)))
            if key not in done:
                todo.append((key, a, b, pa, pb))
        if not todo:
            break
        added = False
        for key, a, b, pa, pb in todo:
            e = b - a
            n = np.array([-e[1], e[0]]) / np.hypot(*e)
            if n[0] < 0 or n[1] < 0:
                n = -n
            new = support(n, pa, pb)
            solves += 1
            done.add(key)
            if len(new) and np.max(new.I @ n) > float(a @ n) + 1e-10 * scale:
                cands = cands.concat(new)
                added = True
            if solves >= max_solves:
                break
        if added:
            region = assemble_region(cands, gap_tol)
    if bridge is not None:
        region = assemble_region(cands, gap_tol)
        seen: set = set()
        for _ in range(6):
            edges = [(a, b, pa, pb) for a, b, pa, pb in long_uncovered_edges(region, gap_tol)
                     if (tuple(a), tuple(b)) not in seen]
            if not edges:
                break
            for a, b, pa, pb in edges:
                seen.add((tuple(a), tuple(b)))
                cands = cands.concat(bridge(pa, pb))
            region = assemble_region(cands, gap_tol)
        return region
    return assemble_region(cands, gap_tol)


def interpolate_params(pa: dict, pb: dict, keys, to_coord, n: int = 257):
    """Straight path between two parameter records in optimizer coordinates."""
    if not all(k in pa and k in pb for k in keys):
        return None
    a = np.array([to_coord(k, pa[k]) for k in keys])
    b = np.array([to_coord(k, pb[k]) for k in keys])
    t = np.linspace(0, 1, n)[1:-1, None]
    return a + t * (b - a)


def _coord(k, v):
    return float(_u_of_n(v)) if k in ("N1", "N2") else float(v)


# --- thermal-channel regions ------------------------------------------------

U_BOUNDS = (-4.0, 8.0)  # log10 N range open to refinement
_LINE = np.linspace(-4.0, 8.0, 2401)


def _n_of_u(u):
    return np.power(10.0, u)


def _u_of_n(N):
    N = np.asarray(N, float)
    with np.errstate(divide="ignore"):
        return np.clip(np.log10(np.where(np.isfinite(N), N, 10 ** U_BOUNDS[1])), *U_BOUNDS)


def _thermal_labels(params, I1, I2):
    lab = default_label(params, I1, I2)
    inf = ~np.isfinite(params["N1"]) | ~np.isfinite(params["N2"])
    lab[inf & (I1 > 0) & (I2 > 0)] = REFLECTIONLESS
    return lab


def thermal_region(ch, n: int = 121, reverse: bool = False, refine: bool = True,
                   trace: bool = True, gap_tol: float | None = None) -> RateRegion:
    """Rate region of a channel under thermal (or reverse-coherent) encodings.

    Samples the log grid with 0/inf sentinels, dense lines along the
    sentinels, the det(J) = 0 curve, and support points that close any
    remaining gaps on the outer boundary.
    """
    from .rates import thermal_rate_arrays, thermal_rates_scalar

    def rates(N1, N2):
        return thermal_rate_arrays(ch.T21, ch.T12, ch.R1, ch.R2, N1, N2, ch.n_th, reverse)

    def rates_u(X):
        X = np.asarray(X, float)
        return rates(_n_of_u(X[..., 0]), _n_of_u(X[..., 1]))

    def rates_scalar(x):
        return thermal_rates_scalar(ch.T21, ch.T12, ch.R1, ch.R2, 10.0 ** x[0], 10.0 ** x[1],
                                    ch.n_th, reverse)

    g = encoding_grid(n)
    N1, N2 = (m.ravel() for m in np.meshgrid(g, g, indexing="ij"))
    I1, I2 = rates(N1, N2)
    cands = CandidateSet.build(I1, I2, _thermal_labels({"N1": N1, "N2": N2}, I1, I2), N1=N1, N2=N2)

    line = np.concatenate([[0.0], _n_of_u(_LINE)])
    for fixed in (0.0, np.inf):
        for swap in (False, True):
            a, b = (np.full_like(line, fixed), line) if not swap else (line, np.full_like(line, fixed))
            J1, J2 = rates(a, b)
            cands = cands.concat(CandidateSet.build(
                J1, J2, _thermal_labels({"N1": a, "N2": b}, J1, J2), N1=a, N2=b))

    if trace:
        axis = np.linspace(-3, 3, n)
        tb = trace_boundary_jacobian(rates_u, 2, (axis, axis))
        if len(tb):
            cands = cands.concat(CandidateSet.build(
                tb.I[:, 0], tb.I[:, 1], JACOBIAN, N1=_n_of_u(tb.X[:, 0]), N2=_n_of_u(tb.X[:, 1])))

    if not refine:
        return assemble_region(cands, gap_tol)

    bounds = np.array([U_BOUNDS, U_BOUNDS])
    grid_u = np.column_stack([_u_of_n(cands.params["N1"]), _u_of_n(cands.params["N2"])])

    def support(nvec, pa, pb):
        v = cands.I @ nvec
        v = np.where(np.isfinite(v), v, -np.inf)
        starts = [grid_u[int(np.argmax(v))]]
        for p in (pa, pb):
            if "N1" in p and "N2" in p:
                starts.append(np.array([_u_of_n(p["N1"]), _u_of_n(p["N2"])]))
        x, val = maximize_weighted(rates_scalar, nvec, np.unique(np.array(starts), axis=0), bounds)
        best = CandidateSet.build(*rates_u(x), JACOBIAN, N1=_n_of_u(x[0]), N2=_n_of_u(x[1]))
        # the N = inf sentinel lines are analytic branches of their own
        for k in (0, 1):
            def branch(u, k=k):
                N = _n_of_u(u)
                return rates(np.inf, N) if k == 0 else rates(N, np.inf)
            s, bval = maximize_branch(branch, nvec, _LINE)
            if bval > val:
                val = bval
                N = _n_of_u(s)
                a, b = (np.inf, N) if k == 0 else (N, np.inf)
                J1, J2 = rates(a, b)
                best = CandidateSet.build(J1, J2, _thermal_labels(
                    {"N1": np.array([a]), "N2": np.array([b])}, np.atleast_1d(J1), np.atleast_1d(J2)),
                    N1=a, N2=b)
        return best

    def bridge(pa, pb):
        P = interpolate_params(pa, pb, ("N1", "N2"), _coord)
        if P is None:
            return CandidateSet.empty()
        J1, J2 = rates_u(P)
        N1, N2 = _n_of_u(P[:, 0]), _n_of_u(P[:, 1])
        return CandidateSet.build(J1, J2, _thermal_labels({"N1": N1, "N2": N2}, J1, J2), N1=N1, N2=N2)

    return refine_region(cands, support, gap_tol, bridge=bridge)


# --- device regions ---------------------------------------------------------

@dataclass(frozen=True)
class DeviceFamily:
    """Two-mode device with fixed (g, kappa_e, kappa_i) and free detunings."""

    g: float
    kappa_e: float
    kappa_i: float
    n_th: float = 0.0
    exact_limit: bool = False  # reflectionless branch form, see reflectionless_rate_arrays

    @property
    def box(self) -> float:
        return 3.0 * max(self.g, self.kappa_e)

    def coefficients(self, d1, d2):
        """Arrays (T21, T12, R1, R2) at detunings ``d1``, ``d2``."""
        from .transducer import signal_blocks_two_mode

        P = np.abs(signal_blocks_two_mode(self.g, self.kappa_e, self.kappa_i, d1, d2)) ** 2
        return P[..., 1, 0], P[..., 0, 1], P[..., 0, 0], P[..., 1, 1]

    def rates(self, N1, N2, d1, d2):
        from .rates import thermal_rate_arrays

        T21, T12, R1, R2 = self.coefficients(d1, d2)
        return thermal_rate_arrays(T21, T12, R1, R2, N1, N2, self.n_th)

    def rates_x(self, X):
        """Rates at packed coordinates (log10 N1, log10 N2, delta1, delta2)."""
        X = np.asarray(X, float)
        return self.rates(_n_of_u(X[..., 0]), _n_of_u(X[..., 1]), X[..., 2], X[..., 3])

    def rates_scalar(self, x):
        from .rates import thermal_rates_scalar
        from .transducer import two_mode_coefficients

        k, q = self.kappa_e, self.kappa_i
        T21, T12, R1, R2 = two_mode_coefficients(self.g, k, k, q, q, x[2], x[3])
        return thermal_rates_scalar(T21, T12, R1, R2, 10.0 ** x[0], 10.0 ** x[1], self.n_th)

    def bounds(self) -> np.ndarray:
        return np.array([U_BOUNDS, U_BOUNDS, (-self.box, self.box), (-self.box, self.box)])


def reflectionless_branch(fam: DeviceFamily, port: int = 0, line=None):
    """Analytic N -> inf branch with port ``port`` (0 or 1) reflectionless.

    Returns a ``CandidateSet`` over the other sender's photon number, or an
    empty set when the reflectionless detunings do not exist.
    """
    from .rates import reflectionless_rate_arrays
    from .transducer import reflectionless_detunings

    det = reflectionless_detunings(fam.g, fam.kappa_e, fam.kappa_i)
    if det is None:
        return CandidateSet.empty()
    d1, d2 = det if port == 0 else det[::-1]
    T21, T12, R1, R2 = (float(v) for v in fam.coefficients(d1, d2))
    N = np.concatenate([[0.0], _n_of_u(_LINE if line is None else line), [np.inf]])
    if port == 0:
        I1, I2 = reflectionless_rate_arrays(T21, R2, N, fam.n_th, fam.exact_limit)
        return CandidateSet.build(I1, I2, _branch_labels(I1, I2), N1=np.inf, N2=N,
                                  delta1=d1, delta2=d2, port=1)
    I2, I1 = reflectionless_rate_arrays(T12, R1, N, fam.n_th, fam.exact_limit)
    return CandidateSet.build(I1, I2, _branch_labels(I1, I2), N1=N, N2=np.inf,
                              delta1=d1, delta2=d2, port=2)


def _branch_labels(I1, I2):
    lab = np.full(np.shape(I1), REFLECTIONLESS, dtype=object)
    lab[(np.asarray(I1) <= 0) | (np.asarray(I2) <= 0)] = AXIS
    return lab


def _branch_support(fam: DeviceFamily, port: int, nvec):
    """Best point of a reflectionless branch along ``nvec`` (or None)."""
    from .rates import reflectionless_rate_arrays
    from .transducer import reflectionless_detunings

    det = reflectionless_detunings(fam.g, fam.kappa_e, fam.kappa_i)
    if det is None:
        return None
    d1, d2 = det if port == 0 else det[::-1]
    T21, T12, R1, R2 = (float(v) for v in fam.coefficients(d1, d2))
    T, R = (T21, R2) if port == 0 else (T12, R1)

    def branch(u):
        a, b = reflectionless_rate_arrays(T, R, _n_of_u(u), fam.n_th, fam.exact_limit)
        return (a, b) if port == 0 else (b, a)

    s, val = maximize_branch(branch, nvec, _LINE)
    N = _n_of_u(s)
    a, b = branch(np.array([s]))
    # the branch closes at the analytic corner N = inf
    ai, bi = reflectionless_rate_arrays(T, R, np.array([np.inf]), fam.n_th, fam.exact_limit)
    ai, bi = (ai, bi) if port == 0 else (bi, ai)
    if nvec[0] * ai[0] + nvec[1] * bi[0] > val:
        val, N, a, b = float(nvec[0] * ai[0] + nvec[1] * bi[0]), np.inf, ai, bi
    N1, N2 = (np.inf, N) if port == 0 else (N, np.inf)
    return val, CandidateSet.build(a, b, _branch_labels(a, b), N1=N1, N2=N2,
                                   delta1=d1, delta2=d2, port=port + 1)


def axis_points(fam: DeviceFamily) -> CandidateSet:
    """Unidirectional capacities at the transmission-maximizing detunings."""
    from .transducer import max_transmission_detunings

    (d1, d2), _ = max_transmission_detunings(fam.g, fam.kappa_e, fam.kappa_i)
    N1 = np.array([np.inf, 0.0])
    N2 = np.array([0.0, np.inf])
    I1, I2 = fam.rates(N1, N2, d1, d2)
    return CandidateSet.build(I1, I2, AXIS, N1=N1, N2=N2, delta1=d1, delta2=d2)


def coarse_device_grid(fam: DeviceFamily, n_delta: int = 41, n_u: int = 29):
    """Rates on a coarse 4-D grid; used to seed local searches."""
    dl = np.linspace(-fam.box, fam.box, n_delta)
    us = np.linspace(-3.0, 4.0, n_u)
    U1, U2, D1, D2 = np.meshgrid(us, us, dl, dl, indexing="ij")
    X = np.stack([U1, U2, D1, D2], -1).reshape(-1, 4)
    I = np.stack(fam.rates_x(X), -1)
    return X, I


def _seed_starts(X, I, nvec, k=3):
    """Best grid points along ``nvec``, overall and among clearly two-way points."""
    v = I @ nvec
    top = list(np.argsort(-v, kind="stable")[:k])
    both = np.minimum(I[:, 0], I[:, 1]) > 0.1 * max(float(I.max()), 1e-12)
    if np.any(both):
        idx = np.nonzero(both)[0]
        top += [i for i in idx[np.argsort(-v[idx], kind="stable")[:k]] if i not in top]
    return X[top]


def device_support(fam: DeviceFamily, nvec, X, I, extra=()) -> tuple:
    """Best achievable point along ``nvec``: interior optimum or analytic branch."""
    starts = list(_seed_starts(X, I, nvec))
    for p in extra:
        if all(k in p for k in ("N1", "N2", "delta1", "delta2")) and np.isfinite([p["N1"], p["N2"]]).all() \
                and p["N1"] > 0 and p["N2"] > 0:
            starts.append(np.array([_u_of_n(p["N1"]), _u_of_n(p["N2"]), p["delta1"], p["delta2"]]))
    x, val = maximize_weighted(fam.rates_scalar, nvec, np.array(starts), fam.bounds())
    I1, I2 = fam.rates_scalar(x)
    ratio = float(singular_ratio(jacobian_fd(fam.rates_x, x[None, :]))[0])
    best = CandidateSet.build(I1, I2, JACOBIAN, N1=_n_of_u(x[0]), N2=_n_of_u(x[1]),
                              delta1=x[2], delta2=x[3], sigma_ratio=ratio)
    for port in (0, 1):
        got = _branch_support(fam, port, nvec)
        if got is not None and got[0] > val:
            val, best = got
    return val, best


def device_region(g: float, kappa_e: float, kappa_i: float, n_th: float = 0.0,
                  directions: int = 9, refine: bool = True, gap_tol: float | None = None,
                  grid=None, exact_limit: bool = False) -> RateRegion:
    """Rate region of a symmetric two-mode device over encodings and detunings.

    Candidates are the axis capacities at maximal transmission, both
    reflectionless branches, and weighted-sum optima over
    (N1, N2, delta1, delta2), which are rank-deficient Jacobian points.
    """
    fam = DeviceFamily(g, kappa_e, kappa_i, n_th, exact_limit)
    X, I = coarse_device_grid(fam) if grid is None else grid
    cands = axis_points(fam)
    for port in (0, 1):
        cands = cands.concat(reflectionless_branch(fam, port))
    for phi in np.linspace(0, np.pi / 2, directions + 2)[1:-1]:
        _, best = device_support(fam, np.array([np.cos(phi), np.sin(phi)]), X, I)
        cands = cands.concat(best)
    if not refine:
        return assemble_region(cands, gap_tol)

    def support(nvec, pa, pb):
        return device_support(fam, nvec, X, I, (pa, pb))[1]

    keys = ("N1", "N2", "delta1", "delta2")

    def bridge(pa, pb):
        P = interpolate_params(pa, pb, keys, _coord)
        if P is None:
            return CandidateSet.empty()
        J1, J2 = fam.rates_x(P)
        return CandidateSet.build(J1, J2, default_label({}, J1, J2), N1=_n_of_u(P[:, 0]),
                                  N2=_n_of_u(P[:, 1]), delta1=P[:, 2], delta2=P[:, 3])

    return refine_region(cands, support, gap_tol, bridge=bridge)


def device_max_sum(g: float, kappa_e: float, kappa_i: float, n_th: float = 0.0, grid=None,
                   exact_limit: bool = False):
    """Largest I1 + I2 over encodings and detunings, with the point achieving it."""
    fam = DeviceFamily(g, kappa_e, kappa_i, n_th, exact_limit)
    X, I = coarse_device_grid(fam) if grid is None else grid
    n = np.array([1.0, 1.0]) / np.sqrt(2)
    _, best = device_support(fam, n, X, I)
    ax = axis_points(fam)
    k = int(np.argmax(ax.I.sum(axis=1)))
    if ax.I[k].sum() >= best.I[0].sum():
        best = CandidateSet(ax.I[k:k + 1], ax.labels[k:k + 1], {kk: v[k:k + 1] for kk, v in ax.params.items()})
    return float(best.I[0].sum()), best


# --- general Gaussian encodings ---------------------------------------------

def gaussian_region(ch, n_N: int = 9, n_r: int = 5, n_theta: int = 9, N_range=(-3.0, 3.0),
                    r_max: float = 2.0, gap_tol: float | None = None) -> RateRegion:
    """Sampled region of squeezed thermal inputs on a channel's signal block.

    Grid: log-spaced N1, N2 over ``10**N_range``, r1, r2 in [0, r_max] and
    the relative phase delta_theta = theta1 - theta2 over [-pi, pi].
    """
    from .rates import gaussian_rate_arrays

    Ns = np.logspace(*N_range, n_N)
    rs = np.linspace(0.0, r_max, n_r)
    ths = np.linspace(-np.pi, np.pi, n_theta)
    N1, N2, r1, r2, dth = (m.ravel() for m in np.meshgrid(Ns, Ns, rs, rs, ths, indexing="ij"))
    I1, I2 = gaussian_rate_arrays(ch.signal_block(), N1, N2, r1, r2, dth, 0.0, ch.n_th)
    cands = CandidateSet.build(I1, I2, default_label({}, I1, I2), N1=N1, N2=N2, r1=r1, r2=r2,
                               delta_theta=dth)
    return assemble_region(cands, gap_tol)
