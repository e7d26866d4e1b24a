"""Input-output scattering model of linear multimode transducers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericalError(RuntimeError):
    """A computation failed at a specific parameter point."""

    def __init__(self, message: str, point: dict | None = None):
        super().__init__(message)
        self.point = point or {}


@dataclass(frozen=True)
class DeviceParams:
    """Hamiltonian matrix and loss rates of an n-mode linear device.

    ``G`` is hermitian with the detunings on its diagonal. All rates share
    one unit (usually the internal loss of mode 1).
    """

    G: np.ndarray
    kappa_e: np.ndarray
    kappa_i: np.ndarray

    def __post_init__(self):
        G = np.array(self.G, dtype=complex)
        ke = np.array(self.kappa_e, dtype=float).reshape(-1)
        ki = np.array(self.kappa_i, dtype=float).reshape(-1)
        n = ke.size
        if G.shape != (n, n) or ki.size != n:
            raise ValueError(f"shape mismatch: G {G.shape}, kappa_e {ke.size}, kappa_i {ki.size}")
        if np.max(np.abs(G - G.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(G))):
            raise ValueError("G must be hermitian")
        if np.any(ke <= 0):
            raise ValueError("external loss rates must be positive")
        if np.any(ki < 0):
            raise ValueError("internal loss rates must be non-negative")
        G.setflags(write=False)
        ke.setflags(write=False)
        ki.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "kappa_e", ke)
        object.__setattr__(self, "kappa_i", ki)

    @property
    def n_modes(self) -> int:
        return self.kappa_e.size

    @property
    def delta(self) -> np.ndarray:
        return self.G.diagonal().real.copy()

    @classmethod
    def two_mode(cls, g, kappa_e, kappa_i, delta=(0.0, 0.0)) -> "DeviceParams":
        """Beam-splitter coupled pair of modes with coupling ``g``.

        Scalars for ``kappa_e``/``kappa_i`` are shared by both modes.
        """
        ke = np.broadcast_to(np.asarray(kappa_e, dtype=float), (2,))
        ki = np.broadcast_to(np.asarray(kappa_i, dtype=float), (2,))
        d1, d2 = delta
        return cls(np.array([[d1, g], [g, d2]], dtype=complex), ke, ki)

    def with_delta(self, delta) -> "DeviceParams":
        G = self.G.copy()
        np.fill_diagonal(G, np.asarray(delta, dtype=float))
        return DeviceParams(G, self.kappa_e, self.kappa_i)

    def to_json(self) -> dict:
        G = self.G
        if self.n_modes == 2 and not np.any(G.imag) and G[0, 1] == G[1, 0]:
            return {
                "g": float(G[0, 1].real),
                "kappa_e": self.kappa_e.tolist(),
                "kappa_i": self.kappa_i.tolist(),
                "delta": self.delta.tolist(),
            }
        return {
            "G_re": G.real.tolist(),
            "G_im": G.imag.tolist(),
            "kappa_e": self.kappa_e.tolist(),
            "kappa_i": self.kappa_i.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DeviceParams":
        obj = dict(obj)
        if "g" in obj:
            allowed = {"g", "kappa_e", "kappa_i", "delta"}
            unknown = set(obj) - allowed
            if unknown:
                raise ValueError(f"unknown device keys: {sorted(unknown)}")
            return cls.two_mode(
                obj["g"], obj["kappa_e"], obj["kappa_i"], tuple(obj.get("delta", (0.0, 0.0)))
            )
        allowed = {"G_re", "G_im", "kappa_e", "kappa_i"}
        unknown = set(obj) - allowed
        if unknown:
            raise ValueError(f"unknown device keys: {sorted(unknown)}")
        G = np.asarray(obj["G_re"], dtype=float) + 1j * np.asarray(
            obj.get("G_im", np.zeros_like(obj["G_re"])), dtype=float
        )
        return cls(G, obj["kappa_e"], obj["kappa_i"])


@dataclass(frozen=True)
class EffectiveChannel:
    """Power coefficients and phase of the signal-port block of ``S``.

    ``T21`` carries port 1 into port 2 (channel 1), ``T12`` the reverse.
    """

    T12: float
    T21: float
    R1: float
    R2: float
    theta: float = 0.0
    n_th: float = 0.0

    def __post_init__(self):
        for name in ("T12", "T21", "R1", "R2"):
            v = getattr(self, name)
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.T21 + self.R1 > 1 + 1e-12 or self.T12 + self.R2 > 1 + 1e-12:
            raise ValueError("power coefficients violate unitarity")
        if self.n_th < 0:
            raise ValueError("n_th must be non-negative")

    @classmethod
    def symmetric(cls, T, R1=0.0, R2=0.0, theta=0.0, n_th=0.0) -> "EffectiveChannel":
        return cls(T12=T, T21=T, R1=R1, R2=R2, theta=theta, n_th=n_th)

    def signal_block(self) -> np.ndarray:
        """Canonical 2x2 signal block with the same rate region as the device."""
        return np.array(
            [
                [np.sqrt(self.R1), np.sqrt(self.T12)],
                [np.sqrt(self.T21), np.sqrt(self.R2) * np.exp(1j * self.theta)],
            ]
        )


def _scattering_from_arrays(G, ke, ki):
    n = ke.shape[-1]
    A = 1j * G + np.einsum("...k,kl->...kl", (ke + ki) / 2, np.eye(n))
    try:
        M = -np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular mode matrix in scattering solve") from exc
    se, si = np.sqrt(ke), np.sqrt(ki)
    top = np.concatenate([np.eye(n) + se[..., :, None] * M * se[..., None, :],
                          se[..., :, None] * M * si[..., None, :]], axis=-1)
    bot = np.concatenate([si[..., :, None] * M * se[..., None, :],
                          np.eye(n) + si[..., :, None] * M * si[..., None, :]], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def build_scattering(d: DeviceParams) -> np.ndarray:
    """Full 2n x 2n scattering matrix, external ports first, then internal."""
    return _scattering_from_arrays(d.G, d.kappa_e, d.kappa_i)


def two_mode_coefficients(g, k1e, k2e, k1i, k2i, d1, d2):
    """Scalar (T21, T12, R1, R2) of a two-mode device, pure Python."""
    a = complex((k1e + k1i) / 2, d1)
    b = complex((k2e + k2i) / 2, d2)
    det = a * b + g * g
    s11 = 1 - k1e * b / det
    s22 = 1 - k2e * a / det
    t = k1e * k2e * g * g / abs(det) ** 2
    return t, t, abs(s11) ** 2, abs(s22) ** 2


def signal_blocks_two_mode(g, kappa_e, kappa_i, delta1, delta2) -> np.ndarray:
    """Batched 2x2 external-port blocks for two-mode devices.

    ``delta1``/``delta2`` broadcast against each other; ``kappa_*`` may be
    scalars or length-2 sequences. Returns shape (..., 2, 2).
    """
    d1, d2 = np.broadcast_arrays(np.asarray(delta1, float), np.asarray(delta2, float))
    ke = np.broadcast_to(np.asarray(kappa_e, float), (2,))
    ki = np.broadcast_to(np.asarray(kappa_i, float), (2,))
    gam = (ke + ki) / 2
    a = gam[0] + 1j * d1
    b = gam[1] + 1j * d2
    det = a * b + g * g
    # M = -(iG + Gamma)^{-1} for G = [[d1, g], [g, d2]]
    m11 = -b / det
    m22 = -a / det
    m12 = 1j * g / det
    out = np.empty(d1.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 1 + ke[0] * m11
    out[..., 1, 1] = 1 + ke[1] * m22
    out[..., 0, 1] = np.sqrt(ke[0] * ke[1]) * m12
    out[..., 1, 0] = out[..., 0, 1]
    return out


def effective_channel(S, n_th: float = 0.0) -> EffectiveChannel:
    """Reduce ``S`` to the power coefficients and phase of ports 1 and 2."""
    S = np.asarray(S)
    P = np.abs(S[:2, :2]) ** 2
    ang = np.angle(S[:2, :2])
    theta = ang[0, 0] + ang[1, 1] - ang[0, 1] - ang[1, 0]
    theta = float(np.angle(np.exp(1j * theta)))
    return EffectiveChannel(
        T12=float(min(P[0, 1], 1.0)),
        T21=float(min(P[1, 0], 1.0)),
        R1=float(min(P[0, 0], 1.0)),
        R2=float(min(P[1, 1], 1.0)),
        theta=theta,
        n_th=float(n_th),
    )


def reflectionless_detunings(g, kappa_e, kappa_i):
    """Detunings that null the reflection of port 1 in a symmetric device.

    Returns ``None`` when no real solution exists. Swapping the pair gives
    the port-2 reflectionless point.
    """
    if kappa_e == kappa_i:
        return None
    rad = (kappa_e + kappa_i) * (4 * g * g - kappa_e**2 + kappa_i**2) / (4 * (kappa_e - kappa_i))
    if rad < -1e-12 * max(g * g, kappa_e**2, 1.0):
        return None
    d2 = np.sqrt(max(rad, 0.0))
    d1 = (kappa_e - kappa_i) / (kappa_e + kappa_i) * d2
    return float(d1), float(d2)


def optimal_couplings(g, kappa_1i, kappa_2i):
    """External couplings that make both ports reflectionless at zero detuning."""
    base = 4 * g * g + kappa_1i * kappa_2i
    return float(np.sqrt(kappa_1i / kappa_2i * base)), float(np.sqrt(kappa_2i / kappa_1i * base))


@dataclass(frozen=True)
class TransmissionGradients:
    T: float
    dT_ddelta_m: float
    dT_ddelta_n: float
    dT_dkappa_me: float
    dT_dkappa_ne: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dT_ddelta_m, self.dT_ddelta_n, self.dT_dkappa_me, self.dT_dkappa_ne])


def transmission_gradients(d: DeviceParams, m: int, n: int) -> TransmissionGradients:
    """Analytic derivatives of ``T_mn = |S_mn|^2`` (0-based ports)."""
    if m == n:
        raise ValueError("transmission needs distinct ports")
    S = build_scattering(d)
    T = abs(S[m, n]) ** 2
    ke = d.kappa_e
    return TransmissionGradients(
        T=float(T),
        dT_ddelta_m=float(-2 * T / ke[m] * S[m, m].imag),
        dT_ddelta_n=float(-2 * T / ke[n] * S[n, n].imag),
        dT_dkappa_me=float(T / ke[m] * S[m, m].real),
        dT_dkappa_ne=float(T / ke[n] * S[n, n].real),
    )


def rescale_device(d: DeviceParams) -> DeviceParams:
    """Map to unit internal losses; the scattering matrix is unchanged."""
    if np.any(d.kappa_i <= 0):
        raise ValueError("cannot normalize a device with a lossless mode")
    s = 1 / np.sqrt(d.kappa_i)
    G = s[:, None] * d.G * s[None, :]
    return DeviceParams(G, d.kappa_e / d.kappa_i, np.ones_like(d.kappa_i))


def max_transmission_detunings(g, kappa_e, kappa_i, box=None):
    """Detunings maximizing T21 of a two-mode device, and that maximum."""
    from scipy.optimize import minimize

    ke = np.broadcast_to(np.asarray(kappa_e, float), (2,))
    if box is None:
        box = 3 * max(g, ke.max())
    grid = np.linspace(-box, box, 61)
    D1, D2 = np.meshgrid(grid, grid, indexing="ij")
    T = np.abs(signal_blocks_two_mode(g, kappa_e, kappa_i, D1, D2)[..., 1, 0]) ** 2
    i, j = np.unravel_index(np.argmax(T), T.shape)

    def neg_t(x):
        return -abs(signal_blocks_two_mode(g, kappa_e, kappa_i, x[0], x[1])[1, 0]) ** 2

    best = minimize(neg_t, [grid[i], grid[j]], method="Nelder-Mead",
                    options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    x = best.x
    return (float(x[0]), float(x[1])), float(-best.fun)
