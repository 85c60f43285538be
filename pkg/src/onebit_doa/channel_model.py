"""Uplink scenario generation: ULA steering, DFT-domain channel, ZC pilots,
AWGN and the complex one-bit quantizer."""

from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .errors import ConfigurationError, DomainError
from .operators import PilotDftOperator


@dataclass(frozen=True)
class SystemConfig:
    """Physical scenario.

    ``L`` holds the path count of every user, ``noise_var`` is the variance of
    each complex noise sample and ``N`` the number of columns of the redundant
    DFT-domain matrix the estimator recovers.
    """

    M: int
    N_t: int
    L: tuple
    N_p: int
    noise_var: float
    seed: int = 0
    N: int = 8

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(int(v) for v in np.atleast_1d(self.L)))
        if self.M < 2:
            raise ConfigurationError(f"M must be >= 2, got {self.M}")
        if self.N_t < 1 or len(self.L) != self.N_t:
            raise ConfigurationError(f"L must list one path count per user (N_t={self.N_t}), got {self.L}")
        if any(v < 1 for v in self.L):
            raise ConfigurationError(f"path counts must be positive, got {self.L}")
        if self.N_p < self.n_paths:
            raise ConfigurationError(f"N_p={self.N_p} is smaller than the total path count {self.n_paths}")
        if self.N <= self.n_paths:
            raise ConfigurationError(f"N={self.N} must exceed the total path count {self.n_paths}")
        if self.N > self.N_p:
            raise ConfigurationError(f"N={self.N} exceeds N_p={self.N_p}; not enough orthogonal pilot shifts")
        if not self.noise_var >= 0:
            raise ConfigurationError(f"noise_var must be nonnegative, got {self.noise_var}")
        if self.seed < 0:
            raise ConfigurationError("seed must be unsigned")

    @property
    def n_paths(self):
        return int(sum(self.L))


@dataclass(frozen=True)
class ChannelParams:
    """Ground-truth DoAs (degrees) and complex path gains."""

    thetas: np.ndarray
    alphas: np.ndarray

    def __post_init__(self):
        thetas = np.atleast_1d(np.asarray(self.thetas, dtype=float))
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=complex))
        if thetas.shape != alphas.shape or thetas.ndim != 1:
            raise ConfigurationError("thetas and alphas must be 1-D with equal length")
        if np.any(np.abs(thetas) >= 90):
            raise DomainError("every DoA must lie strictly inside (-90, 90) degrees")
        if np.unique(thetas).size != thetas.size:
            raise ConfigurationError("duplicate DoAs are not distinguishable")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "alphas", alphas)

    @property
    def D(self):
        return np.diag(self.alphas)


@dataclass
class Measurement:
    """Quantized observation together with the estimator's sensing operator."""

    y: np.ndarray
    op: PilotDftOperator
    S: np.ndarray
    M: int
    N: int
    N_p: int
    quantized: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def M_y(self):
        return self.M * self.N_p

    @property
    def N_x(self):
        return self.M * self.N


def _check_theta(theta_deg):
    theta_deg = np.asarray(theta_deg, dtype=float)
    if np.any(~np.isfinite(theta_deg)) or np.any(np.abs(theta_deg) >= 90):
        raise DomainError(f"DoA must lie strictly inside (-90, 90) degrees, got {theta_deg}")
    return theta_deg


def steering_vector(theta, M):
    """ULA response with half-wavelength spacing, ``exp(-j pi m sin(theta))``."""
    theta = _check_theta(theta)
    if M < 1:
        raise DomainError("M must be positive")
    m = np.arange(M)
    return np.exp(-1j * np.pi * m * np.sin(np.deg2rad(theta)))


def steering_matrix(thetas, M):
    thetas = _check_theta(np.atleast_1d(thetas))
    m = np.arange(M)[:, None]
    return np.exp(-1j * np.pi * m * np.sin(np.deg2rad(thetas))[None, :])


def zc_base_sequence(N_p, u=1):
    if gcd(u, N_p) != 1:
        raise ConfigurationError(f"ZC root {u} is not coprime with length {N_p}")
    n = np.arange(N_p)
    if N_p % 2 == 0:
        return np.exp(-1j * np.pi * u * n * n / N_p)
    return np.exp(-1j * np.pi * u * n * (n + 1) / N_p)


def zc_pilot_matrix(N_p, K, u=1):
    """K x N_p pilot matrix whose row k is the root ZC sequence shifted by k.

    Distinct cyclic shifts of a ZC sequence are orthogonal, so
    ``S @ S.conj().T == N_p * I_K``.
    """
    if N_p < 1:
        raise ConfigurationError("pilot length must be positive")
    if K > N_p:
        raise ConfigurationError(f"{K} orthogonal pilots need N_p >= {K}, got {N_p}")
    base = zc_base_sequence(N_p, u)
    idx = (np.arange(N_p)[None, :] + np.arange(K)[:, None]) % N_p
    return base[idx]


def effective_channel(params, M):
    """``H = V(theta) D``: column k is ``alpha_k * a_r(theta_k)``."""
    return steering_matrix(params.thetas, M) * params.alphas[None, :]


def dft_matrix(M):
    m = np.arange(M)
    return np.exp(-2j * np.pi * np.outer(m, m) / M) / np.sqrt(M)


def dft_transform(H):
    """``F @ H`` with the unitary DFT along the antenna axis."""
    H = np.asarray(H)
    return np.fft.fft(H, axis=0) / np.sqrt(H.shape[0])


def idft_transform(X):
    """``F^H @ X``."""
    X = np.asarray(X)
    return np.fft.ifft(X, axis=0) * np.sqrt(X.shape[0])


def quantize_one_bit(r):
    """Complex one-bit quantizer; ties at exactly zero map to +1."""
    r = np.asarray(r)
    re = np.where(r.real >= 0, 1.0, -1.0)
    im = np.where(r.imag >= 0, 1.0, -1.0)
    return re + 1j * im


def simulate_measurement(cfg, params, rng, quantize=True):
    """Draw one pilot block and quantize it.

    Returns
    -------
    meas : Measurement
        ``y = Q(A x + n)`` with the estimator's N-row operator.
    X_theta : ndarray, shape (M, sum L)
        Ground-truth DFT-domain channel.
    power : float
        Pre-quantization power ``||A x + n||^2``.
    """
    if params.thetas.size != cfg.n_paths:
        raise ConfigurationError(
            f"scenario lists {params.thetas.size} paths but L sums to {cfg.n_paths}"
        )
    S = zc_pilot_matrix(cfg.N_p, cfg.N)
    op = PilotDftOperator(S, cfg.M)
    X_theta = dft_transform(effective_channel(params, cfg.M))
    X = np.zeros((cfg.M, cfg.N), dtype=complex)
    X[:, : cfg.n_paths] = X_theta
    z = op.matvec(X.ravel(order="F"))
    shape = z.shape
    noise = np.sqrt(cfg.noise_var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    r = z + noise
    power = float(np.vdot(r, r).real)
    y = quantize_one_bit(r) if quantize else r
    meas = Measurement(y=y, op=op, S=S, M=cfg.M, N=cfg.N, N_p=cfg.N_p, quantized=quantize)
    return meas, X_theta, power
