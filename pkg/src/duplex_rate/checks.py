"""Fast invariant suite run by ``duplex-rate check``."""

from __future__ import annotations

import json
import math
from typing import Callable

import numpy as np

from .bandwidth import minkowski_sum
from .fock import beam_splitter_unitary, fock_coherent_rates
from .gaussian import bosonic_entropy_h, decompose_one_mode, reconstruct_one_mode, OneModeDecomposition
from .io import dumps, region_from_json, region_to_json, regions_equal
from .rates import (
    ThermalEncoding,
    gaussian_rates,
    GaussianEncoding,
    locc_rates,
    pure_loss_capacity,
    thermal_rates,
)
from .region import convex_hull, thermal_region
from .transducer import (
    DeviceParams,
    EffectiveChannel,
    build_scattering,
    optimal_couplings,
    reflectionless_detunings,
    rescale_device,
    signal_blocks_two_mode,
)


def _random_device(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return DeviceParams((A + A.conj().T) * 2, rng.uniform(0.5, 10, n), rng.uniform(0.1, 3, n))


def check_capacities() -> float:
    return max(abs(pure_loss_capacity(0.9) - math.log2(9)),
               abs(locc_rates(EffectiveChannel.symmetric(0.9), ThermalEncoding(math.inf, 0)).I1
                   + math.log2(0.1)))


def check_entropy() -> float:
    x = np.array([1e-3, 0.5, 1.0, 7.0, 1e3])
    ref = np.array([(v + 1) * math.log2(v + 1) - v * math.log2(v) for v in x])
    return float(np.max(np.abs(bosonic_entropy_h(x) - ref)))


def check_unitarity() -> float:
    rng = np.random.default_rng(1)
    err = 0.0
    for _ in range(200):
        S = build_scattering(_random_device(rng, int(rng.integers(2, 4))))
        err = max(err, float(np.max(np.abs(S @ S.conj().T - np.eye(len(S))))))
    return err


def check_scale_invariance() -> float:
    rng = np.random.default_rng(2)
    err = 0.0
    for _ in range(50):
        d = _random_device(rng, 2)
        err = max(err, float(np.max(np.abs(build_scattering(d) - build_scattering(rescale_device(d))))))
    return err


def check_reflectionless() -> float:
    rng = np.random.default_rng(3)
    err = 0.0
    for _ in range(50):
        g, ki = rng.uniform(0.5, 5), rng.uniform(0.2, 2)
        ke = rng.uniform(ki * 1.01, math.sqrt(4 * g * g + ki * ki))
        d1, d2 = reflectionless_detunings(g, ke, ki)
        err = max(err, abs(signal_blocks_two_mode(g, ke, ki, d1, d2)[0, 0]))
        k1, k2 = optimal_couplings(g, ki, 2 * ki)
        S = build_scattering(DeviceParams(np.array([[0, g], [g, 0]]), [k1, k2], [ki, 2 * ki]))
        err = max(err, abs(S[0, 0]), abs(S[1, 1]))
    return float(err)


def check_thermal_rates() -> float:
    rng = np.random.default_rng(4)
    err = 0.0
    for _ in range(100):
        T = rng.uniform(0.5, 1)
        R1, R2 = rng.uniform(0, 1 - T, 2)
        N1, N2 = 10 ** rng.uniform(-3, 3, 2)
        a = thermal_rates(EffectiveChannel.symmetric(T, R1, R2, 0.0), ThermalEncoding(N1, N2))
        b = thermal_rates(EffectiveChannel.symmetric(T, R1, R2, 2.0), ThermalEncoding(N1, N2))
        if min(a.I1, a.I2) < 0:
            return math.inf
        err = max(err, abs(a.I1 - b.I1), abs(a.I2 - b.I2))
    return err


def check_gaussian_reduction() -> float:
    ch = EffectiveChannel.symmetric(0.9, 0.03, 0.03, 1.0)
    err = 0.0
    for N1, N2 in [(0.1, 2.0), (5.0, 0.3), (30.0, 30.0)]:
        a = thermal_rates(ch, ThermalEncoding(N1, N2))
        b = gaussian_rates(ch.signal_block(), GaussianEncoding.from_params(N1, N2))
        err = max(err, abs(a.I1 - b.I1), abs(a.I2 - b.I2))
    d = OneModeDecomposition(0.7, 0.4, 0.3)
    e = decompose_one_mode(reconstruct_one_mode(d))
    return max(err, abs(e.N - d.N), abs(e.r - d.r))


def check_fock() -> float:
    U = beam_splitter_unitary(0.5)
    psi = np.zeros(9)
    psi[4] = 1.0  # |1, 1>
    hom = abs((U @ psi)[4])
    r = fock_coherent_rates(1.0, np.eye(2) / 2, np.eye(2) / 2)
    return max(hom, abs(r.I1 - 1), abs(r.I2 - 1))


def check_minkowski() -> float:
    rng = np.random.default_rng(5)
    err = 0.0
    for _ in range(50):
        A = convex_hull(rng.uniform(0, 1, (8, 2)))
        B = convex_hull(rng.uniform(0, 1, (8, 2)))
        C = minkowski_sum(A, B)
        for u in rng.normal(size=(16, 2)):
            err = max(err, abs(C.support(u) - A.support(u) - B.support(u)))
    return err


def check_square_region() -> float:
    reg = thermal_region(EffectiveChannel.symmetric(0.9), n=31)
    imax = math.log2(9)
    V = reg.hull.vertices
    corners = np.array([[0, 0], [imax, 0], [imax, imax], [0, imax]])
    if len(V) != 4:
        return math.inf
    back = region_from_json(json.loads(dumps(region_to_json(reg))))
    again = region_from_json(json.loads(dumps(region_to_json(back))))
    if not regions_equal(back, again, 0.0):
        return math.inf
    return float(np.max(np.abs(np.sort(V, axis=0) - np.sort(corners, axis=0))))


CHECKS: list[tuple[str, Callable[[], float], float]] = [
    ("capacity endpoints", check_capacities, 1e-9),
    ("entropy function", check_entropy, 1e-9),
    ("scattering unitarity", check_unitarity, 1e-10),
    ("scale invariance", check_scale_invariance, 1e-12),
    ("reflectionless conditions", check_reflectionless, 1e-10),
    ("thermal rates clamped and phase free", check_thermal_rates, 1e-12),
    ("gaussian reduces to thermal", check_gaussian_reduction, 1e-9),
    ("fock swap and bunching", check_fock, 1e-12),
    ("minkowski support additivity", check_minkowski, 1e-9),
    ("square region and json round trip", check_square_region, 1e-9),
]


def run_checks(echo: Callable[[str], None] = print) -> bool:
    ok = True
    for name, fn, tol in CHECKS:
        err = fn()
        passed = err <= tol
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}: error {err:.3g} (tol {tol:g})")
    return ok
