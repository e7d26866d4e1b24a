"""Single-photon {|0>, |1>} encodings on a lossless beam splitter.

Two-mode states live in a truncated Fock space with basis |n1, n2>
ordered lexicographically (index n1 * (n_max + 1) + n2).
"""

from __future__ import annotations

from math import comb, factorial, sqrt

import numpy as np

from .gaussian import InvalidStateError
from .rates import RatePair


class CutoffError(ValueError):
    pass


def validate_qubit_density(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidStateError(f"qubit density must be 2x2, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise InvalidStateError("density matrix is not hermitian")
    if abs(np.trace(rho) - 1) > 1e-12:
        raise InvalidStateError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -1e-12:
        raise InvalidStateError("density matrix is not positive semidefinite")
    return rho


def beam_splitter_unitary(T: float, n_max: int = 2) -> np.ndarray:
    """Fock-space operator of the beam splitter with transmissivity ``T``.

    Output modes follow a2_out = sqrt(T) a1 + sqrt(1-T) a2 and
    a1_out = sqrt(T) a2 - sqrt(1-T) a1. Blocks with total photon number
    <= n_max are exactly unitary; higher blocks are truncated.
    """
    if n_max < 2:
        raise CutoffError("two single photons can bunch; n_max must be >= 2")
    if not 0 < T <= 1:
        raise ValueError("T must lie in (0, 1]")
    t, r = sqrt(T), sqrt(1 - T)
    # a_j^dag -> sum_k L[k, j] b_k^dag with b = L a
    L = np.array([[-r, t], [t, r]])
    d = n_max + 1
    U = np.zeros((d * d, d * d))
    for n1 in range(d):
        for n2 in range(d):
            norm = 1 / sqrt(factorial(n1) * factorial(n2))
            # (L11 b1 + L21 b2)^n1 (L12 b1 + L22 b2)^n2 expanded in b1^m1 b2^m2
            for i in range(n1 + 1):
                ci = comb(n1, i) * L[0, 0] ** i * L[1, 0] ** (n1 - i)
                for j in range(n2 + 1):
                    cj = comb(n2, j) * L[0, 1] ** j * L[1, 1] ** (n2 - j)
                    m1, m2 = i + j, n1 + n2 - i - j
                    if m1 < d and m2 < d:
                        amp = ci * cj * norm * sqrt(factorial(m1) * factorial(m2))
                        U[m1 * d + m2, n1 * d + n2] += amp
    return U


def _entropy(rho) -> float:
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def _purify(rho):
    """Vector on (system 2) x (reference 2) purifying ``rho``."""
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0, None)
    psi = np.zeros((2, 2), dtype=complex)
    for k in range(2):
        psi += np.sqrt(w[k]) * np.outer(v[:, k], np.eye(2)[k])
    return psi


def _embed(rho, d):
    out = np.zeros((d, d), dtype=complex)
    out[:2, :2] = rho
    return out


def _direction_rate(U, d, rho_send, rho_other, sender: int) -> float:
    """Coherent information from input mode ``sender`` to the opposite output."""
    psi = np.zeros((d, 2), dtype=complex)
    psi[:2] = _purify(rho_send)
    pure = np.einsum("ia,jb->aibj", psi, psi.conj())  # (ref, mode; ref', mode')
    other = _embed(rho_other, d)
    if sender == 0:
        full = np.einsum("aibj,kl->aikbjl", pure, other)
    else:
        full = np.einsum("akbl,ij->aikbjl", pure, other)
    n = 2 * d * d
    big = np.kron(np.eye(2), U)
    out = (big @ full.reshape(n, n) @ big.conj().T).reshape(2, d, d, 2, d, d)
    if sender == 0:
        rho_rd = np.einsum("aikbil->akbl", out)
    else:
        rho_rd = np.einsum("aikbjk->aibj", out)
    rho_d = np.einsum("aiaj->ij", rho_rd)
    return _entropy(rho_d) - _entropy(rho_rd.reshape(2 * d, 2 * d))


def fock_coherent_rates(T: float, rho1, rho2, n_max: int = 2) -> RatePair:
    """Coherent-information rates of {|0>,|1>} inputs on the beam splitter."""
    rho1 = validate_qubit_density(rho1)
    rho2 = validate_qubit_density(rho2)
    U = beam_splitter_unitary(T, n_max)
    d = n_max + 1
    I1 = _direction_rate(U, d, rho1, rho2, 0)
    I2 = _direction_rate(U, d, rho2, rho1, 1)
    return RatePair(max(I1, 0.0), max(I2, 0.0))


def qubit_density(p: float, c: complex = 0.0) -> np.ndarray:
    """Density p|1><1| + (1-p)|0><0| with coherence ``c`` on |0><1|."""
    return np.array([[1 - p, c], [np.conj(c), p]], dtype=complex)


def fock_rate_region(T: float, n_p: int = 101, coherence_p: int = 11,
                     coherence_fractions=(0.5, 1.0)):
    """Rate region of {|0>, |1>} encodings on the beam splitter.

    Sweeps diagonal mixtures on an ``n_p`` x ``n_p`` grid of populations and
    a coarse set of real coherences (fractions of the largest allowed one).
    Returns the region and a summary comparing max(I1 + I2) with the best
    single-direction rate.
    """
    from .region import AXIS, JACOBIAN, CandidateSet, assemble_region

    U = beam_splitter_unitary(T, 2)
    states = []
    for p in np.linspace(0, 1, n_p):
        states.append((p, 0.0))
    for p in np.linspace(0, 1, coherence_p)[1:-1]:
        for f in coherence_fractions:
            states.append((p, f * np.sqrt(p * (1 - p))))
    rhos = [qubit_density(p, c) for p, c in states]
    n = len(rhos)
    I = np.zeros((n, n, 2))
    for i in range(n):
        for j in range(n):
            I[i, j, 0] = max(_direction_rate(U, 3, rhos[i], rhos[j], 0), 0.0)
            I[i, j, 1] = max(_direction_rate(U, 3, rhos[j], rhos[i], 1), 0.0)
    P = np.array(states)
    p1 = np.repeat(P[:, 0], n)
    c1 = np.repeat(P[:, 1], n)
    p2 = np.tile(P[:, 0], n)
    c2 = np.tile(P[:, 1], n)
    I1, I2 = I[..., 0].ravel(), I[..., 1].ravel()
    labels = np.where((I1 <= 0) | (I2 <= 0), AXIS, JACOBIAN).astype(object)
    cands = CandidateSet.build(I1, I2, labels, p1=p1, p2=p2, c1=c1, c2=c2)
    # a sampled grid resolves the boundary only to its own spacing
    region = assemble_region(cands, gap_tol=0.05 * max(I1.max(), I2.max(), 1e-12))
    axis = float(max(I1.max(), I2.max()))
    total = float((I1 + I2).max())
    diag = (c1 == 0) & (c2 == 0)
    summary = {
        "max_sum": total,
        "max_axis": axis,
        "advantage": total > axis + 1e-9,
        "max_sum_diagonal": float((I1 + I2)[diag].max()),
    }
    return region, summary
