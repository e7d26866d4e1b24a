"""Achievable rate pairs for Gaussian encodings of two-port channels.

Rates are coherent informations in qubits per channel use, clamped at 0.
Infinite photon numbers are accepted and mapped to their analytic limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import (
    LN2,
    InvalidStateError,
    OneModeDecomposition,
    bosonic_entropy_h as h,
)
from .transducer import EffectiveChannel, NumericalError

INF = float("inf")
# reflections below this (amplitude 1e-12) are rounding noise of a zero
R_ZERO = 1e-24


@dataclass(frozen=True)
class RatePair:
    I1: float
    I2: float

    def __iter__(self):
        yield self.I1
        yield self.I2

    @property
    def total(self) -> float:
        return self.I1 + self.I2


@dataclass(frozen=True)
class ThermalEncoding:
    N1: float
    N2: float

    def __post_init__(self):
        if not (self.N1 >= 0 and self.N2 >= 0):
            raise ValueError("photon numbers must be non-negative")


@dataclass(frozen=True)
class GaussianEncoding:
    port1: OneModeDecomposition
    port2: OneModeDecomposition

    @property
    def delta_theta(self) -> float:
        return self.port1.theta - self.port2.theta

    @classmethod
    def from_params(cls, N1, N2, r1=0.0, r2=0.0, theta1=0.0, theta2=0.0) -> "GaussianEncoding":
        return cls(OneModeDecomposition(N1, r1, theta1), OneModeDecomposition(N2, r2, theta2))


def _log2_ratio(T):
    with np.errstate(divide="ignore"):
        return np.log2(T) - np.log2(1 - T)


def pure_loss_capacity(T):
    """Quantum capacity of the pure-loss channel with transmissivity ``T``."""
    T = np.asarray(T, dtype=float)
    if np.any((T < 0) | (T > 1)):
        raise ValueError("transmissivity must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        out = np.where(T >= 1, INF, np.maximum(_log2_ratio(np.minimum(T, 1 - 1e-300)), 0.0))
    out = np.where(T <= 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def thermal_loss_upper_bound(T, n_bar):
    """Upper bound on the thermal-loss capacity with noise ``n_bar``."""
    if not 0 < T < 1:
        raise ValueError("T must lie strictly between 0 and 1")
    num = T - (1 - T) * n_bar
    if num <= 0:
        return 0.0
    return max(float(np.log2(num / ((1 - T) * (n_bar + 1)))), 0.0)


def _finite_branch(T, N, noise, reverse):
    """Entropy-difference formula for finite N with injected noise ``noise``.

    The discriminant (N + N' + 1)^2 - 4TN(N+1) is expanded into a sum of
    non-negative terms so that large N and T near 1 lose no precision.
    """
    c = 1 - T
    cN = c * N
    rest = 2 * N * (c + (1 + T) * noise) + (noise + 1) ** 2
    if np.any(rest < 0):
        raise NumericalError("negative discriminant in thermal rate", {"N": float(np.min(N))})
    D = np.sqrt(cN * cN + rest)
    q = rest / (D + cN)  # D - (1-T)N
    a = np.maximum((q + noise - 1) / 2, 0.0)
    b = np.maximum((q + 2 * cN - noise - 1) / 2, 0.0)
    lead = h(N) if reverse else h(T * N + noise)
    return lead - h(a) - h(b)


def _one_direction(T, R_other, N, N_other, n_th, reverse):
    """Rate of one transduction direction, elementwise over arrays.

    ``T`` is the transmission of the direction, ``R_other`` the reflection
    at the receiving port (weight of the other sender's signal).
    """
    T, R_other, N, N_other = np.broadcast_arrays(
        np.asarray(T, float), np.asarray(R_other, float), np.asarray(N, float), np.asarray(N_other, float)
    )
    env = np.maximum(1 - T - R_other, 0.0)
    with np.errstate(invalid="ignore"):
        # R * inf must read as 0 when R == 0
        noise_in = np.where(R_other > R_ZERO, R_other * N_other, 0.0) + env * n_th
    out = np.zeros(T.shape)

    fin = np.isfinite(N) & np.isfinite(noise_in)
    if np.any(fin):
        out[fin] = _finite_branch(T[fin], N[fin], noise_in[fin], reverse)

    inf_n = ~np.isfinite(N)
    if np.any(inf_n):
        Ti = T[inf_n]
        with np.errstate(divide="ignore", invalid="ignore"):
            n_eff = noise_in[inf_n] / (1 - Ti)
            n_eff = np.where(noise_in[inf_n] == 0, 0.0, n_eff)
            base = -np.log2(1 - Ti) if reverse else _log2_ratio(Ti)
            lim = base - h(n_eff)
        out[inf_n] = np.where(np.isnan(lim), 0.0, lim)
    # finite N with infinite injected noise leaves the rate at 0
    out = np.maximum(out, 0.0)
    if not reverse:
        # T <= 1/2 is anti-degradable: exactly 0, not rounding noise
        out = np.where(T <= 0.5, 0.0, out)
    return out


def thermal_rate_arrays(T21, T12, R1, R2, N1, N2, n_th=0.0, reverse=False):
    """Vectorized thermal-encoding rates ``(I1, I2)`` as arrays."""
    I1 = _one_direction(T21, R2, N1, N2, n_th, reverse)
    I2 = _one_direction(T12, R1, N2, N1, n_th, reverse)
    return I1, I2


def _h_scalar(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x == INF:
        return INF
    tail = x * math.log1p(1.0 / x) if x >= 1 else x * (math.log1p(x) - math.log(x))
    return (math.log1p(x) + tail) / LN2


def _direction_scalar(T, R_other, N, N_other, n_th, reverse):
    if T <= 0.5 and not reverse:
        return 0.0
    noise = (R_other * N_other if R_other > R_ZERO else 0.0) + max(1 - T - R_other, 0.0) * n_th
    if N == INF:
        if noise == INF or T >= 1:
            return INF if T >= 1 and noise == 0 else 0.0
        base = -math.log2(1 - T) if reverse else math.log2(T / (1 - T)) if T > 0 else -INF
        return max(base - _h_scalar(noise / (1 - T)), 0.0)
    if noise == INF:
        return 0.0
    c = 1 - T
    cN = c * N
    rest = 2 * N * (c + (1 + T) * noise) + (noise + 1) ** 2
    D = math.sqrt(cN * cN + rest)
    q = rest / (D + cN)
    lead = _h_scalar(N) if reverse else _h_scalar(T * N + noise)
    val = lead - _h_scalar((q + noise - 1) / 2) - _h_scalar((q + 2 * cN - noise - 1) / 2)
    return max(val, 0.0)


def thermal_rates_scalar(T21, T12, R1, R2, N1, N2, n_th=0.0, reverse=False):
    """Plain-float twin of :func:`thermal_rate_arrays` for inner loops."""
    return (_direction_scalar(T21, R2, N1, N2, n_th, reverse),
            _direction_scalar(T12, R1, N2, N1, n_th, reverse))


def _scalar_pair(I1, I2) -> RatePair:
    return RatePair(float(I1), float(I2))


def thermal_rates(ch: EffectiveChannel, enc: ThermalEncoding) -> RatePair:
    """Rates with thermal inputs of mean photon numbers ``(N1, N2)``."""
    return _scalar_pair(*thermal_rate_arrays(ch.T21, ch.T12, ch.R1, ch.R2, enc.N1, enc.N2, ch.n_th))


def locc_rates(ch: EffectiveChannel, enc: ThermalEncoding) -> RatePair:
    """Reverse-coherent-information rates (LOCC-assisted lower bound)."""
    return _scalar_pair(
        *thermal_rate_arrays(ch.T21, ch.T12, ch.R1, ch.R2, enc.N1, enc.N2, ch.n_th, reverse=True)
    )


def reflectionless_rate_arrays(T, R_other, N_other, n_th=0.0, exact_limit=False):
    """Vectorized reflectionless branch: sender at N -> inf, other sender at ``N_other``.

    By default the other sender's reflected noise R N / (1 - T) carries the
    weight (1 + T) / 2 of the published closed form. ``exact_limit=True``
    drops it, which reproduces the N -> inf limit of :func:`thermal_rates`.
    """
    N_other = np.asarray(N_other, float)
    w = 1.0 if exact_limit else (1 + T) / 2
    env = max(1 - T - R_other, 0.0) * n_th
    with np.errstate(invalid="ignore"):
        noise = w * np.where(R_other > R_ZERO, R_other * N_other, 0.0) + env
    if T >= 1:
        I1 = np.where(noise > 0, 0.0, INF)
    else:
        n_eff = noise / (1 - T)
        fin = np.isfinite(n_eff)
        I1 = np.where(fin, _log2_ratio(T) - h(np.where(fin, n_eff, 0.0)), 0.0)
    I2 = _one_direction(T, 0.0, N_other, INF, n_th, False)
    return np.maximum(I1, 0.0), I2


def reflectionless_asymptotic_rates(T, R2, N2, exact_limit=False) -> RatePair:
    """Rates at ``N1 -> inf`` when port 1 is reflectionless (R1 = 0)."""
    I1, I2 = reflectionless_rate_arrays(T, R2, N2, 0.0, exact_limit)
    return _scalar_pair(I1, I2)


def thermal_capacity_axis(T, R_other, n_th):
    """Best single-direction thermal rate with the other sender silent."""
    if T >= 1:
        return INF
    n_bar = (1 - T - R_other) * n_th / (1 - T)
    return max(float(_log2_ratio(T) - h(n_bar)), 0.0)


# --- general Gaussian encodings ---------------------------------------------

def _block(s):
    """2x2 real block of a complex amplitude (…, ) -> (…, 2, 2)."""
    s = np.asarray(s, dtype=complex)
    out = np.empty(s.shape + (2, 2))
    out[..., 0, 0] = s.real
    out[..., 0, 1] = -s.imag
    out[..., 1, 0] = s.imag
    out[..., 1, 1] = s.real
    return out


def _one_mode_cov(N, r, th):
    c, s = np.cos(th), np.sin(th)
    R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    Sq = np.zeros(np.shape(r) + (2, 2))
    Sq[..., 0, 0] = np.exp(-2 * np.asarray(r))
    Sq[..., 1, 1] = np.exp(2 * np.asarray(r))
    return (np.asarray(N) + 0.5)[..., None, None] * (R @ Sq @ np.swapaxes(R, -1, -2)), R


def _entropy_1mode(V):
    nu = np.sqrt(np.maximum(np.linalg.det(V), 0.25))
    return h(nu - 0.5)


def _entropy_2mode(V):
    # symplectic spectrum of a 4x4 stack through the eigenvalues of i*Omega*V
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    ev = np.sort(np.abs(np.linalg.eigvals(1j * (omega @ V))), axis=-1)
    nu = ev[..., ::2]
    if np.any(nu < 0.5 - 1e-7):
        raise InvalidStateError("assembled joint covariance is not physical")
    return np.sum(h(np.maximum(nu, 0.5) - 0.5), axis=-1)


def _gaussian_direction(s_sig, s_other, N, r, th, N_o, r_o, th_o, n_th):
    """Coherent information for the sender with params (N, r, th)."""
    V_sig, R = _one_mode_cov(N, r, th)
    V_oth, _ = _one_mode_cov(N_o, r_o, th_o)
    B_sig, B_oth = _block(s_sig), _block(s_other)
    env = np.maximum(1 - np.abs(s_sig) ** 2 - np.abs(s_other) ** 2, 0.0)
    Vout = (B_sig @ V_sig @ np.swapaxes(B_sig, -1, -2)
            + B_oth @ V_oth @ np.swapaxes(B_oth, -1, -2)
            + ((n_th + 0.5) * env)[..., None, None] * np.eye(2))
    Sq = np.zeros(np.shape(r) + (2, 2))
    Sq[..., 0, 0] = np.exp(-np.asarray(r))
    Sq[..., 1, 1] = -np.exp(np.asarray(r))  # S(r) @ Z
    C = np.sqrt(np.asarray(N) * (np.asarray(N) + 1))[..., None, None] * (R @ Sq)
    X = B_sig @ C
    Vref = (np.asarray(N) + 0.5)[..., None, None] * np.eye(2)
    Vref, X, Vout = np.broadcast_arrays(Vref, X, Vout)
    joint = np.concatenate(
        [np.concatenate([Vref, np.swapaxes(X, -1, -2)], -1), np.concatenate([X, Vout], -1)], -2
    )
    return _entropy_1mode(Vout) - _entropy_2mode(joint)


def gaussian_rate_arrays(S2, N1, N2, r1, r2, th1, th2, n_th=0.0):
    """Vectorized general-Gaussian rates for a 2x2 signal block ``S2``."""
    S2 = np.asarray(S2, dtype=complex)
    args = np.broadcast_arrays(*(np.asarray(a, float) for a in (N1, N2, r1, r2, th1, th2)))
    N1, N2, r1, r2, th1, th2 = args
    I1 = _gaussian_direction(S2[..., 1, 0], S2[..., 1, 1], N1, r1, th1, N2, r2, th2, n_th)
    I2 = _gaussian_direction(S2[..., 0, 1], S2[..., 0, 0], N2, r2, th2, N1, r1, th1, n_th)
    return np.maximum(I1, 0.0), np.maximum(I2, 0.0)


def gaussian_rates(S, enc: GaussianEncoding, n_th: float = 0.0) -> RatePair:
    """Rates for general one-mode Gaussian inputs on ports 1 and 2.

    Only the signal-port block of ``S`` matters; the remaining ports are
    environment modes at occupation ``n_th``.
    """
    S = np.asarray(S, dtype=complex)
    if S.shape[0] > 2:
        rows = np.sum(np.abs(S[:2]) ** 2, axis=1)
        if np.any(np.abs(rows - 1) > 1e-9):
            raise InvalidStateError("scattering matrix rows are not normalized")
    p1, p2 = enc.port1, enc.port2
    for p in (p1, p2):
        if p.N < 0 or not np.isfinite(p.N):
            raise ValueError("Gaussian encodings need finite N >= 0")
    I1, I2 = gaussian_rate_arrays(S[:2, :2], p1.N, p2.N, p1.r, p2.r, p1.theta, p2.theta, n_th)
    return _scalar_pair(I1, I2)

