"""Covariance-matrix tools for Gaussian states.

Conventions: quadratures ordered (x1, p1, x2, p2, ...), vacuum covariance
is I/2, symplectic form is a direct sum of [[0, 1], [-1, 0]], entropies in
bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN2 = np.log(2.0)
PURE_CLAMP = 1e-9


class InvalidStateError(ValueError):
    """Covariance matrix or density operator is not a physical state."""


@dataclass(frozen=True)
class OneModeDecomposition:
    """One-mode Gaussian state as (N + 1/2) R(theta) S(2r) R(theta)^T."""

    N: float
    r: float = 0.0
    theta: float = 0.0


def bosonic_entropy_h(x):
    """Entropy in bits of a thermal state with mean photon number ``x``.

    Works on scalars and arrays. ``h(inf)`` is ``inf``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12):
        raise ValueError(f"bosonic entropy undefined for x = {x.min()!r} < 0")
    x = np.maximum(x, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log1p(1/x) keeps precision for large x; 1/x overflows for subnormal x
        big = x * np.log1p(1.0 / np.where(x >= 1, x, 1.0))
        small = x * (np.log1p(x) - np.log(np.where(x > 0, x, 1.0)))
        tail = np.where(x >= 1, big, small)
    out = (np.log1p(x) + tail) / LN2
    out = np.where(np.isinf(x), np.inf, out)
    return out[()] if out.ndim == 0 else out


def rotation_block(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeeze_block(r: float) -> np.ndarray:
    return np.diag([np.exp(-r), np.exp(r)])


Z_BLOCK = np.diag([1.0, -1.0])


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _check_covariance(V: np.ndarray) -> None:
    if V.ndim < 2 or V.shape[-1] != V.shape[-2] or V.shape[-1] % 2:
        raise InvalidStateError(f"covariance matrix must be 2n x 2n, got {V.shape}")
    if np.max(np.abs(V - np.swapaxes(V, -1, -2))) > 1e-12 * max(1.0, np.max(np.abs(V))):
        raise InvalidStateError("covariance matrix is not symmetric")


def symplectic_eigenvalues(V) -> np.ndarray:
    """Symplectic spectrum of ``V`` in descending order.

    Accepts a stack of matrices with shape (..., 2n, 2n) and returns
    (..., n). Raises :class:`InvalidStateError` when any eigenvalue falls
    below 1/2 by more than 1e-9.
    """
    V = np.asarray(V, dtype=float)
    _check_covariance(V)
    n = V.shape[-1] // 2
    ev = np.abs(np.linalg.eigvals(1j * (symplectic_form(n) @ V)))
    ev = -np.sort(-ev, axis=-1)[..., ::2]
    if np.any(ev < 0.5 - PURE_CLAMP):
        raise InvalidStateError(f"unphysical covariance: symplectic eigenvalue {ev.min():.3e} < 1/2")
    return ev


def gaussian_entropy(V):
    """Von Neumann entropy (bits) of the Gaussian state with covariance ``V``."""
    nu = np.maximum(symplectic_eigenvalues(V), 0.5)
    return np.sum(bosonic_entropy_h(nu - 0.5), axis=-1)


def reconstruct_one_mode(d: OneModeDecomposition) -> np.ndarray:
    R = rotation_block(d.theta)
    return (d.N + 0.5) * R @ squeeze_block(2 * d.r) @ R.T


def decompose_one_mode(V) -> OneModeDecomposition:
    """Invert :func:`reconstruct_one_mode` on the branch r >= 0, 0 <= theta < pi."""
    V = np.asarray(V, dtype=float)
    if V.shape != (2, 2):
        raise InvalidStateError(f"expected a 2x2 covariance matrix, got {V.shape}")
    nu = symplectic_eigenvalues(V)[0]
    # V/nu has eigenvalues e^{-2r} <= e^{2r}; the small one sits along R(theta) e_x
    w, U = np.linalg.eigh(V / nu)
    r = 0.25 * np.log(w[1] / w[0]) if w[0] > 0 else np.inf
    if r < 1e-12:
        return OneModeDecomposition(N=max(nu - 0.5, 0.0), r=0.0, theta=0.0)
    ex = U[:, 0]
    theta = float(np.mod(np.arctan2(ex[1], ex[0]), np.pi))
    if theta >= np.pi - 1e-15:
        theta = 0.0
    return OneModeDecomposition(N=max(nu - 0.5, 0.0), r=float(r), theta=theta)


def purification_blocks(d: OneModeDecomposition) -> tuple[np.ndarray, np.ndarray]:
    """Reference covariance and cross block that purify the state ``d``.

    The joint matrix [[V_ref, C^T], [C, V]] is pure, with V given by
    :func:`reconstruct_one_mode`.
    """
    v_ref = (d.N + 0.5) * np.eye(2)
    C = np.sqrt(d.N * (d.N + 1)) * rotation_block(d.theta) @ squeeze_block(d.r) @ Z_BLOCK
    return v_ref, C
