import math

import numpy as np
import pytest

from duplex_rate.rates import pure_loss_capacity, thermal_rate_arrays
from duplex_rate.region import (
    AXIS,
    JACOBIAN,
    REFLECTIONLESS,
    TIME_SHARING,
    CandidateSet,
    ConvexRegion,
    assemble_region,
    convex_hull,
    device_max_sum,
    duplex_advantage,
    encoding_grid,
    jacobian_fd,
    sample_region,
    singular_ratio,
    trace_boundary_jacobian,
)
from duplex_rate.transducer import signal_blocks_two_mode

from helpers import brute_hull, device_region_cached, same_vertex_set, thermal_region_cached

IMAX = math.log2(9)


def test_hull_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(40):
        P = rng.uniform(0, 1, (int(rng.integers(3, 30)), 2))
        ours = convex_hull(P).vertices
        ref = brute_hull(np.vstack([P, [[0, 0]]]))
        assert same_vertex_set(ours, ref, 1e-12)


def test_hull_examples():
    sq = [[0, 0], [1, 0], [1, 1], [0, 1]]
    assert same_vertex_set(convex_hull(sq).vertices, sq)
    tri = convex_hull([[IMAX, 0], [0, IMAX]])
    assert len(tri) == 3 and tri.area == pytest.approx(IMAX ** 2 / 2)
    # duplicates within 1e-12 and collinear points collapse
    pts = [[1, 0], [1 + 1e-13, 0], [0.5, 0.5], [0, 1]]
    assert len(convex_hull(pts)) == 3


def test_hull_starts_lowest_leftmost_ccw():
    H = convex_hull([[2, 1], [1, 2], [0.5, 0.1]])
    V = H.vertices
    assert tuple(V[0]) == (0.0, 0.0)
    assert H.area > 0


def test_contains_and_support():
    sq = convex_hull([[1, 0], [1, 1], [0, 1]])
    assert sq.contains([[0.5, 0.5], [1.0, 1.0]]).all()
    assert not sq.contains([[1.1, 0.5]]).any()
    assert sq.support([1, 1]) == pytest.approx(2.0)
    assert sq.distance_outside([[2.0, 1.0]])[0] == pytest.approx(1.0)


def test_region_of_useless_channel_is_origin():
    g = encoding_grid(21)

    def rates(N1, N2):
        return thermal_rate_arrays(0.45, 0.45, 0.1, 0.1, N1, N2)

    reg = sample_region(rates, {"N1": g, "N2": g})
    assert np.all(reg.points == 0)
    assert len(reg.hull) == 1 and reg.boundary == []


def test_square_region():
    reg = thermal_region_cached(0.9, 0.0, 0.0)
    V = reg.hull.vertices
    assert same_vertex_set(V, [[0, 0], [IMAX, 0], [IMAX, IMAX], [0, IMAX]], 1e-3)
    assert duplex_advantage(reg, 0.9) == {"max_sum": pytest.approx(2 * IMAX), "Imax": pytest.approx(IMAX),
                                          "advantage": True}


def test_triangle_has_no_advantage():
    cands = CandidateSet.build([IMAX, 0.0], [0.0, IMAX], AXIS)
    reg = assemble_region(cands)
    assert reg.max_sum == pytest.approx(IMAX)
    assert not duplex_advantage(reg, 0.9)["advantage"]
    assert reg.boundary[0].segment == TIME_SHARING


def test_interference_threshold_in_region():
    reg = thermal_region_cached(0.9, 0.03, 0.03)
    N1 = reg.params["N1"]
    live = reg.points[:, 1] > 1e-3
    assert np.all(N1[live] < (2 * 0.9 - 1) / (2 * 0.03))


def test_hull_contains_all_points():
    for key in [(0.9, 0.03, 0.03), (0.9, 0.003, 0.003)]:
        reg = thermal_region_cached(*key)
        ok = np.all(np.isfinite(reg.points), axis=1)
        assert reg.hull.contains(reg.points[ok], slack=1e-9).all()


def test_boundary_points_are_sampled():
    for key in [(0.9, 0.03, 0.03), (0.9, 0.003, 0.003)]:
        reg = thermal_region_cached(*key)
        for v in reg.boundary:
            d = np.min(np.linalg.norm(reg.points - [v.I1, v.I2], axis=1))
            assert d <= 1e-6


def test_boundary_is_simple_chain():
    reg = thermal_region_cached(0.9, 0.003, 0.003)
    B = np.array([[v.I1, v.I2] for v in reg.boundary])
    assert np.all(np.diff(B[:, 0]) <= 1e-12) and np.all(np.diff(B[:, 1]) >= -1e-12)


def test_discontinuity_gap_grows_with_reflection():
    gaps = []
    for R in (0.003, 0.03):
        reg = thermal_region_cached(0.9, R, R)
        P = reg.points
        sup = P[P[:, 1] > 1e-3, 0].max()
        gaps.append(IMAX - sup)
    assert 0 < gaps[0] < gaps[1]


def test_weak_reflection_arc_matches_dense_hull():
    reg = thermal_region_cached(0.9, 0.003, 0.003)
    # dense oracle: 601 x 601 log grid plus the exact N = inf lines
    g = np.concatenate([[0.0], np.logspace(-4, 8, 601), [np.inf]])
    N1, N2 = np.meshgrid(g, g, indexing="ij")
    I1, I2 = thermal_rate_arrays(0.9, 0.9, 0.003, 0.003, N1.ravel(), N2.ravel())
    dense = convex_hull(np.column_stack([I1, I2]))
    # the grid is an inner approximation: optimized points may reach past it
    for u in np.column_stack([np.cos(np.linspace(0, np.pi / 2, 33)), np.sin(np.linspace(0, np.pi / 2, 33))]):
        assert reg.hull.support(u) >= dense.support(u) - 1e-9
        assert abs(reg.hull.support(u) - dense.support(u)) <= 1e-3
    labels = reg.boundary_labels()
    assert JACOBIAN in labels and TIME_SHARING in labels


def test_decoupled_channel_has_no_det_zero_curve():
    def rates_u(X):
        X = np.asarray(X)
        return thermal_rate_arrays(0.9, 0.9, 0.0, 0.0, 10 ** X[..., 0], 10 ** X[..., 1])

    axis = np.linspace(-3, 3, 41)
    assert len(trace_boundary_jacobian(rates_u, 2, (axis, axis))) == 0


def test_traced_points_are_rank_deficient():
    def rates_u(X):
        X = np.asarray(X)
        return thermal_rate_arrays(0.9, 0.9, 0.003, 0.003, 10 ** X[..., 0], 10 ** X[..., 1])

    axis = np.linspace(-3, 3, 61)
    tb = trace_boundary_jacobian(rates_u, 2, (axis, axis))
    assert len(tb) > 0
    ratio = singular_ratio(jacobian_fd(rates_u, tb.X))
    assert np.all(ratio <= 1e-6)


def test_device_region_three_protocols():
    reg = device_region_cached(9.66)
    labels = reg.boundary_labels()
    assert {REFLECTIONLESS, JACOBIAN, TIME_SHARING} <= labels


def test_reflectionless_labels_are_sound():
    for ke in (9.66, math.sqrt(101)):
        reg = device_region_cached(ke)
        for v in reg.boundary:
            if v.label != REFLECTIONLESS:
                continue
            S = signal_blocks_two_mode(5.0, ke, 1.0, v.params["delta1"], v.params["delta2"])
            port = int(v.params["port"]) - 1
            assert abs(S[port, port]) <= 1e-8


def test_device_jacobian_vertices_rank_deficient():
    reg = device_region_cached(9.66)
    ratios = [v.params["sigma_ratio"] for v in reg.boundary
              if v.label == JACOBIAN and "sigma_ratio" in v.params]
    assert ratios and max(ratios) <= 1e-6


def test_optimal_coupling_gives_square():
    reg = device_region_cached(math.sqrt(101))
    imax = reg.boundary[0].I1
    assert reg.max_sum == pytest.approx(2 * imax, abs=1e-9)
    assert {v.segment for v in reg.boundary[:-1]} == {REFLECTIONLESS}


def test_strong_coupling_is_time_shared():
    reg = device_region_cached(12.0)
    assert [v.segment for v in reg.boundary[:-1]] == [TIME_SHARING]
    assert all(v.label == AXIS for v in reg.boundary)


def test_advantage_at_kappa_nine():
    from duplex_rate.transducer import max_transmission_detunings

    best, _ = device_max_sum(5.0, 9.0, 1.0)
    _, T = max_transmission_detunings(5.0, 9.0, 1.0)
    assert best > pure_loss_capacity(T) + 1e-9


def test_convex_region_is_immutable():
    H = ConvexRegion(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        H.vertices[0, 0] = 3.0
