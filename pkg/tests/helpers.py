"""Independent oracles and cached expensive regions shared by the tests."""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.linalg import expm

from duplex_rate.gaussian import gaussian_entropy


# --- covariance oracle ------------------------------------------------------

def _real_rep(U):
    """Real symplectic-orthogonal matrix of a passive mode unitary (x, p interleaved)."""
    n = len(U)
    M = np.zeros((2 * n, 2 * n))
    for j in range(n):
        for k in range(n):
            z = U[j, k]
            M[2 * j:2 * j + 2, 2 * k:2 * k + 2] = [[z.real, -z.imag], [z.imag, z.real]]
    return M


def _complete_row(row):
    """Unitary whose first row is ``row`` (unit norm), by Gram-Schmidt."""
    n = len(row)
    rows = [np.asarray(row, dtype=complex)]
    for e in np.eye(n, dtype=complex):
        v = e - sum(np.vdot(u, e) * u for u in rows)
        if np.linalg.norm(v) > 1e-8:
            rows.append(v / np.linalg.norm(v))
        if len(rows) == n:
            break
    return np.array(rows)


def coherent_info_oracle(s_sig, s_oth, N, N_oth, r=0.0, th=0.0, r_oth=0.0, th_oth=0.0, n_th=0.0,
                         reverse=False):
    """Coherent information to one output port from an 8x8 covariance pipeline.

    Modes: reference, sender, other sender, environment. The sender is
    purified by a two-mode squeezed vacuum and then locally squeezed.
    ``reverse`` gives S(reference) - S(reference, output) instead.
    """
    env = math.sqrt(max(1 - abs(s_sig) ** 2 - abs(s_oth) ** 2, 0.0))
    U = _complete_row(np.array([s_sig, s_oth, env], dtype=complex))
    c = math.sqrt(N * (N + 1))
    V = np.zeros((8, 8))
    V[0:2, 0:2] = (N + 0.5) * np.eye(2)
    V[2:4, 2:4] = (N + 0.5) * np.eye(2)
    V[0:2, 2:4] = V[2:4, 0:2] = c * np.diag([1.0, -1.0])

    def local(rr, tt):
        R = np.array([[math.cos(tt), -math.sin(tt)], [math.sin(tt), math.cos(tt)]])
        return R @ np.diag([math.exp(-rr), math.exp(rr)]) @ R.T

    L = np.eye(8)
    L[2:4, 2:4] = local(r, th)
    V = L @ V @ L.T
    V[4:6, 4:6] = (N_oth + 0.5) * local(2 * r_oth, th_oth)
    V[6:8, 6:8] = (n_th + 0.5) * np.eye(2)
    S = np.eye(8)
    S[2:8, 2:8] = _real_rep(U)
    W = S @ V @ S.T
    out = W[2:4, 2:4]
    joint = W[np.ix_([0, 1, 2, 3], [0, 1, 2, 3])]
    lead = W[0:2, 0:2] if reverse else out
    return max(float(gaussian_entropy(lead) - gaussian_entropy(joint)), 0.0)


# --- Fock oracle ------------------------------------------------------------

def fock_oracle(T, rho1, rho2):
    """Rates from an expm-built beam splitter in mode-2-major ordering."""
    d = 3
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    I = np.eye(d)
    # index n2 * d + n1: mode 2 is the slow index
    a1, a2 = np.kron(I, a), np.kron(a, I)
    phi = math.acos(math.sqrt(1 - T))
    # expm gives a1^dag -> sqrt(1-T) a1^dag - sqrt(T) a2^dag; the parity of
    # mode 1 flips it to the convention a1_out = sqrt(T) a2 - sqrt(1-T) a1
    parity1 = np.kron(I, np.diag([1.0, -1.0, 1.0]))
    U = expm(phi * (a1.conj().T @ a2 - a2.conj().T @ a1)) @ parity1

    def ent(rho):
        w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
        w = w[w > 1e-14]
        return float(-np.sum(w * np.log2(w)))

    def purify(rho):
        w, v = np.linalg.eigh(rho)
        # |psi> = sum_k sqrt(w_k) |v_k>_sys |k>_ref, stored as (ref, sys)
        return np.array([np.sqrt(max(w[k], 0)) * v[:, k] for k in range(2)])

    def rate(sender):
        rho_s, rho_o = (rho1, rho2) if sender == 1 else (rho2, rho1)
        psi = purify(rho_s)
        # mixture over the other input's eigenbasis keeps everything pure-state
        w, v = np.linalg.eigh(rho_o)
        rho_RD = np.zeros((2 * d, 2 * d), dtype=complex)
        for k in range(2):
            if w[k] <= 1e-15:
                continue
            state = np.zeros((2, d, d), dtype=complex)  # (ref, n2, n1)
            for ref in range(2):
                for i in range(2):
                    for j in range(2):
                        amp = psi[ref, i] * v[j, k]
                        if sender == 1:
                            state[ref, j, i] += amp
                        else:
                            state[ref, i, j] += amp
            state = np.einsum("xy,ry->rx", U, state.reshape(2, d * d)).reshape(2, d, d)
            # sender 1 is received at output mode 2 and vice versa
            M = state.reshape(2, d, d) if sender == 1 else np.swapaxes(state, 1, 2)
            # M[ref, n_dest, n_other]; trace out n_other
            rho_RD += w[k] * np.einsum("rai,sbi->rasb", M, M.conj()).reshape(2 * d, 2 * d)
        rho_D = np.einsum("rarb->ab", rho_RD.reshape(2, d, 2, d))
        out = ent(rho_D) - ent(rho_RD)
        return max(out, 0.0)

    return rate(1), rate(2)


# --- geometry oracles -------------------------------------------------------

def brute_hull(points):
    """Convex hull vertices by testing every ordered pair as a supporting edge.

    Edge i -> j is a hull edge when no point lies strictly to its right and
    collinear points stay inside the segment. O(n^3), vectorized.
    """
    P = np.unique(np.round(np.asarray(points, float), 14), axis=0)
    if len(P) <= 2:
        return P
    eps = 1e-12 * max(1.0, float(np.abs(P).max()))
    D = P[None, :, :] - P[:, None, :]  # D[i, j] = P[j] - P[i]
    Q = P[None, :, :] - P[:, None, :]  # Q[i, k] = P[k] - P[i]
    cross = D[:, :, None, 0] * Q[:, None, :, 1] - D[:, :, None, 1] * Q[:, None, :, 0]
    dot = np.einsum("ijd,ikd->ijk", D, Q)
    L2 = np.einsum("ijd,ijd->ij", D, D)[:, :, None]
    on_line = np.abs(cross) <= eps
    ok = (cross >= -eps) & (~on_line | ((dot >= -eps) & (dot <= L2 + eps)))
    edge = ok.all(axis=2) & (L2[:, :, 0] > 0)
    keep = np.nonzero(edge.any(axis=1))[0]
    K = P[keep]
    c = K.mean(axis=0)
    K = K[np.argsort(np.arctan2(K[:, 1] - c[1], K[:, 0] - c[0]))]
    s = min(range(len(K)), key=lambda i: (K[i, 1], K[i, 0]))
    return np.roll(K, -s, axis=0)


def same_vertex_set(A, B, tol=1e-9):
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape:
        return False
    return all(np.min(np.linalg.norm(B - a, axis=1)) <= tol for a in A)


# --- cached regions ---------------------------------------------------------

@functools.lru_cache(maxsize=None)
def device_region_cached(kappa_e, g=5.0, kappa_i=1.0):
    from duplex_rate.region import device_region

    return device_region(g, kappa_e, kappa_i)


@functools.lru_cache(maxsize=None)
def thermal_region_cached(T, R1, R2, theta=0.0, n_th=0.0, n=121):
    from duplex_rate.region import thermal_region
    from duplex_rate.transducer import EffectiveChannel

    return thermal_region(EffectiveChannel.symmetric(T, R1, R2, theta, n_th), n=n)


@functools.lru_cache(maxsize=None)
def fock_region_cached(T):
    from duplex_rate.fock import fock_rate_region

    return fock_rate_region(T)


@functools.lru_cache(maxsize=None)
def band_cached(kappa_e=9.0):
    from duplex_rate.bandwidth import advantage_window

    return advantage_window(5.0, kappa_e, 1.0)
