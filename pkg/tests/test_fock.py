import math

import numpy as np
import pytest

from duplex_rate.fock import (
    CutoffError,
    _direction_rate,
    beam_splitter_unitary,
    fock_coherent_rates,
    qubit_density,
    validate_qubit_density,
)
from duplex_rate.gaussian import InvalidStateError

from helpers import fock_oracle, fock_region_cached


def idx(n1, n2, d=3):
    return n1 * d + n2


def random_density(rng):
    p = rng.uniform()
    c = rng.uniform() * math.sqrt(p * (1 - p)) * np.exp(2j * math.pi * rng.uniform())
    return qubit_density(p, c)


def test_cutoff_and_range():
    with pytest.raises(CutoffError):
        beam_splitter_unitary(0.5, 1)
    with pytest.raises(ValueError):
        beam_splitter_unitary(0.0)


@pytest.mark.parametrize("T", [0.1, 0.5, 0.9, 1.0])
def test_unitary_on_number_conserving_blocks(T):
    U = beam_splitter_unitary(T, 4)
    d = 5
    n_tot = np.add.outer(np.arange(d), np.arange(d)).ravel()
    low = n_tot <= 4
    B = U[np.ix_(low, low)]
    assert np.max(np.abs(B.conj().T @ B - np.eye(low.sum()))) <= 1e-12
    # commutes with the total photon number
    Ntot = np.diag(n_tot.astype(float))
    assert np.max(np.abs((U @ Ntot - Ntot @ U)[np.ix_(low, low)])) <= 1e-12


def test_swap_at_unit_transmission():
    U = beam_splitter_unitary(1.0)
    for n1 in range(3):
        for n2 in range(3):
            psi = np.zeros(9)
            psi[idx(n1, n2)] = 1
            out = U @ psi
            assert abs(abs(out[idx(n2, n1)]) - 1) <= 1e-12


def test_single_photon_splitting():
    U = beam_splitter_unitary(0.9)
    psi = np.zeros(9)
    psi[idx(1, 0)] = 1
    out = U @ psi
    assert abs(out[idx(1, 0)]) ** 2 == pytest.approx(0.1, abs=1e-12)
    assert abs(out[idx(0, 1)]) ** 2 == pytest.approx(0.9, abs=1e-12)
    assert out[idx(1, 0)] == pytest.approx(-math.sqrt(0.1))


def test_hong_ou_mandel():
    U = beam_splitter_unitary(0.5)
    psi = np.zeros(9)
    psi[idx(1, 1)] = 1
    out = U @ psi
    assert abs(out[idx(1, 1)]) <= 1e-12
    assert abs(out[idx(2, 0)]) ** 2 == pytest.approx(0.5) and abs(out[idx(0, 2)]) ** 2 == pytest.approx(0.5)


def test_density_validation():
    with pytest.raises(InvalidStateError):
        validate_qubit_density(np.eye(3) / 3)
    with pytest.raises(InvalidStateError):
        validate_qubit_density(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(InvalidStateError):
        validate_qubit_density(np.diag([0.6, 0.6]))
    with pytest.raises(InvalidStateError):
        validate_qubit_density(np.array([[0.5, 0.9], [0.9, 0.5]]))


def test_rate_examples():
    r = fock_coherent_rates(1.0, np.eye(2) / 2, np.eye(2) / 2)
    assert r.I1 == pytest.approx(1.0, abs=1e-12) and r.I2 == pytest.approx(1.0, abs=1e-12)
    r = fock_coherent_rates(0.9, qubit_density(0.0), np.eye(2) / 2)
    assert r.I1 == 0.0


def test_rates_match_independent_pipeline():
    rng = np.random.default_rng(0)
    for T in [0.9] + list(rng.uniform(0.05, 1, 40)):
        a, b = random_density(rng), random_density(rng)
        if T == 0.9:
            a = b = np.eye(2) / 2
        got = fock_coherent_rates(T, a, b)
        ref = fock_oracle(T, a, b)
        assert got.I1 == pytest.approx(ref[0], abs=1e-10) and got.I2 == pytest.approx(ref[1], abs=1e-10)


def test_output_trace_preserved():
    rng = np.random.default_rng(1)
    for _ in range(100):
        T = rng.uniform(0.05, 1)
        U = beam_splitter_unitary(T)
        a, b = random_density(rng), random_density(rng)
        rho = np.zeros((9, 9), dtype=complex)
        rho[np.ix_([0, 1, 3, 4], [0, 1, 3, 4])] = np.kron(a, b)
        out = U @ rho @ U.conj().T
        assert abs(np.trace(out) - 1) <= 1e-12


def test_data_processing_bound():
    rng = np.random.default_rng(2)
    for _ in range(100):
        T = rng.uniform(0.05, 1)
        a, b = random_density(rng), random_density(rng)
        r = fock_coherent_rates(T, a, b)
        w = np.clip(np.linalg.eigvalsh(a), 1e-300, 1)
        S1 = float(-np.sum(w * np.log2(w)))
        assert r.I1 <= S1 + 1e-12 <= 1 + 1e-12


def test_diagonal_optimum_coherence_check():
    # small coherences around the best diagonal pair do not raise I1 + I2 (reported property)
    T = 0.9
    U = beam_splitter_unitary(T)
    ps = np.linspace(0, 1, 101)
    best, arg = -1.0, None
    for p1 in ps[::5]:
        for p2 in ps[::5]:
            a, b = qubit_density(p1), qubit_density(p2)
            s = _direction_rate(U, 3, a, b, 0) + _direction_rate(U, 3, b, a, 1)
            if s > best:
                best, arg = s, (p1, p2)
    p1, p2 = arg
    for c in (1e-3, 1e-2):
        for phase in (1, 1j, -1):
            a = qubit_density(p1, c * phase * math.sqrt(p1 * (1 - p1)))
            b = qubit_density(p2, c * math.sqrt(p2 * (1 - p2)))
            s = _direction_rate(U, 3, a, b, 0) + _direction_rate(U, 3, b, a, 1)
            assert s <= best + 1e-9


def test_region_unit_square_at_unit_transmission():
    region, summary = fock_region_cached(1.0)
    V = np.sort(region.hull.vertices, axis=0)
    assert np.allclose(V, np.sort(np.array([[0, 0], [1, 0], [1, 1], [0, 1]]), axis=0), atol=1e-9)
    assert summary["advantage"]


def test_region_advantage_at_high_transmission():
    _, summary = fock_region_cached(0.9)
    assert summary["max_sum"] > summary["max_axis"] + 1e-9


def test_region_gaps_at_both_axes():
    region, summary = fock_region_cached(0.7)
    I = region.points
    ax1, ax2 = I[:, 0].max(), I[:, 1].max()
    assert I[I[:, 1] > 1e-3, 0].max() < ax1 - 1e-2
    assert I[I[:, 0] > 1e-3, 1].max() < ax2 - 1e-2
    assert not summary["advantage"]
