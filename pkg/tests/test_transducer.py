import math

import numpy as np
import pytest

from duplex_rate.transducer import (
    DeviceParams,
    EffectiveChannel,
    build_scattering,
    effective_channel,
    max_transmission_detunings,
    optimal_couplings,
    reflectionless_detunings,
    rescale_device,
    signal_blocks_two_mode,
    transmission_gradients,
    two_mode_coefficients,
)


def random_device(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return DeviceParams(2 * (A + A.conj().T), rng.uniform(0.5, 10, n), rng.uniform(0.1, 3, n))


def test_scattering_unitary():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3, 4):
        for _ in range(25):
            S = build_scattering(random_device(rng, n))
            assert np.max(np.abs(S @ S.conj().T - np.eye(2 * n))) <= 1e-10


def test_two_mode_closed_form():
    # |S21|^2 = k1e k2e g^2 / |(gamma1 + i d1)(gamma2 + i d2) + g^2|^2
    rng = np.random.default_rng(1)
    for _ in range(50):
        g, ke, ki = rng.uniform(0.1, 8), rng.uniform(0.1, 12), rng.uniform(0.1, 3)
        d1, d2 = rng.uniform(-10, 10, 2)
        gam = (ke + ki) / 2
        ref = ke * ke * g * g / abs((gam + 1j * d1) * (gam + 1j * d2) + g * g) ** 2
        S = build_scattering(DeviceParams.two_mode(g, ke, ki, (d1, d2)))
        assert abs(S[1, 0]) ** 2 == pytest.approx(ref, rel=1e-12)
        B = signal_blocks_two_mode(g, ke, ki, d1, d2)
        assert np.allclose(B, S[:2, :2], atol=1e-13)
        T21, T12, R1, R2 = two_mode_coefficients(g, ke, ke, ki, ki, d1, d2)
        assert (T21, R1, R2) == pytest.approx((ref, abs(S[0, 0]) ** 2, abs(S[1, 1]) ** 2), abs=1e-13)


def test_zero_coupling_is_identity_block():
    S = build_scattering(DeviceParams.two_mode(0.0, 2.0, 1.0))
    assert abs(S[0, 1]) == 0.0
    assert abs(S[0, 0]) ** 2 + abs(S[0, 2]) ** 2 == pytest.approx(1.0)


def test_invalid_devices_rejected():
    with pytest.raises(ValueError):
        DeviceParams(np.array([[0, 1], [2, 0]]), [1, 1], [1, 1])
    with pytest.raises(ValueError):
        DeviceParams(np.zeros((2, 2)), [1, -1], [1, 1])
    with pytest.raises(ValueError):
        DeviceParams(np.zeros((2, 2)), [1, 1, 1], [1, 1])
    with pytest.raises(ValueError):
        DeviceParams.from_json({"g": 1, "kappa_e": 1, "kappa_i": 1, "colour": 3})


def test_device_json_round_trip():
    d = DeviceParams.two_mode(5, 9, 1, (0.3, -0.2))
    e = DeviceParams.from_json(d.to_json())
    assert np.allclose(build_scattering(d), build_scattering(e))
    rng = np.random.default_rng(2)
    d = random_device(rng, 3)
    assert np.allclose(build_scattering(d), build_scattering(DeviceParams.from_json(d.to_json())))


def test_effective_channel_bounds():
    with pytest.raises(ValueError):
        EffectiveChannel.symmetric(0.9, 0.2)
    with pytest.raises(ValueError):
        EffectiveChannel.symmetric(1.2)
    ch = effective_channel(build_scattering(DeviceParams.two_mode(5, 9, 1)))
    assert ch.T21 == pytest.approx(ch.T12)
    assert ch.T21 + ch.R1 <= 1 + 1e-12


def test_reflectionless_detunings_null_reflection():
    rng = np.random.default_rng(3)
    for _ in range(50):
        g, ki = rng.uniform(0.5, 6), rng.uniform(0.2, 2)
        ke = rng.uniform(1.001 * ki, math.sqrt(4 * g * g + ki * ki))
        d1, d2 = reflectionless_detunings(g, ke, ki)
        assert abs(signal_blocks_two_mode(g, ke, ki, d1, d2)[0, 0]) <= 1e-10
        assert abs(signal_blocks_two_mode(g, ke, ki, d2, d1)[1, 1]) <= 1e-10


def test_reflectionless_infeasible():
    assert reflectionless_detunings(5, 12, 1) is None
    assert reflectionless_detunings(5, 0.5, 1) is None
    assert reflectionless_detunings(5, 1, 1) is None


def test_optimal_couplings_symmetric_value():
    k1, k2 = optimal_couplings(5, 1, 1)
    assert k1 == pytest.approx(math.sqrt(101)) and k2 == pytest.approx(math.sqrt(101))


def test_optimal_couplings_asymmetric():
    rng = np.random.default_rng(4)
    for _ in range(50):
        g, k1i, k2i = rng.uniform(0.2, 6), rng.uniform(0.1, 3), rng.uniform(0.1, 3)
        k1, k2 = optimal_couplings(g, k1i, k2i)
        S = build_scattering(DeviceParams(np.array([[0, g], [g, 0]]), [k1, k2], [k1i, k2i]))
        assert abs(S[0, 0]) <= 1e-10 and abs(S[1, 1]) <= 1e-10


def _fd_gradient(d, m, n, step=1e-6):
    def T_of(delta=None, kappa=None):
        G = d.G.copy()
        ke = d.kappa_e.copy()
        if delta is not None:
            G[delta[0], delta[0]] += delta[1]
        if kappa is not None:
            ke[kappa[0]] += kappa[1]
        return abs(build_scattering(DeviceParams(G, ke, d.kappa_i))[m, n]) ** 2

    out = []
    for k in (m, n):
        h = step * max(1.0, abs(d.G[k, k].real))
        out.append((T_of(delta=(k, h)) - T_of(delta=(k, -h))) / (2 * h))
    for k in (m, n):
        h = step * d.kappa_e[k]
        out.append((T_of(kappa=(k, h)) - T_of(kappa=(k, -h))) / (2 * h))
    return np.array(out)


@pytest.mark.parametrize("n_modes", [2, 3])
def test_gradients_match_finite_differences(n_modes):
    rng = np.random.default_rng(10 + n_modes)
    for _ in range(100):
        d = random_device(rng, n_modes)
        m, n = rng.choice(n_modes, 2, replace=False)
        a = transmission_gradients(d, int(m), int(n)).as_array()
        fd = _fd_gradient(d, int(m), int(n))
        # error relative to the gradient's own size (components can vanish)
        assert np.max(np.abs(a - fd)) <= 1e-6 * np.max(np.abs(a))


def test_gradients_reject_reflection():
    with pytest.raises(ValueError):
        transmission_gradients(DeviceParams.two_mode(1, 1, 1), 0, 0)


def test_rescale_preserves_scattering():
    rng = np.random.default_rng(5)
    for _ in range(50):
        d = random_device(rng, 3)
        e = rescale_device(d)
        assert np.allclose(e.kappa_i, 1.0)
        assert np.max(np.abs(build_scattering(d) - build_scattering(e))) <= 1e-12


def test_max_transmission_symmetric_device():
    (d1, d2), T = max_transmission_detunings(5, math.sqrt(101), 1)
    # impedance matched: T = k_e^2 g^2 / (gamma^2 + g^2)^2
    gam = (math.sqrt(101) + 1) / 2
    assert T == pytest.approx(101 * 25 / (gam * gam + 25) ** 2, rel=1e-9)
    assert abs(d1) < 1e-5 and abs(d2) < 1e-5
