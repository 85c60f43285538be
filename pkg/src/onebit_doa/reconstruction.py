"""Scale recovery from the pre-quantization power and LS channel reconstruction."""

from dataclasses import dataclass

import numpy as np

from .channel_model import idft_transform, steering_matrix
from .errors import DegenerateGeometryError, DomainError

PINV_RCOND = 1e-10


@dataclass(frozen=True)
class ScaleInfo:
    measured_power: float
    sigma_x2: float
    target_norm: float


def infer_sigma_x2(measured_power, frob_norm_A_sq, N_p, M, noise_var, N):
    """Per-coefficient signal variance from the total received power.

    ``E||A x + n||^2 = ||A||_F^2 sigma_x^2 + N_p M sigma^2``; a single power
    reading stands in for the expectation and negative results clamp to zero.
    The norm target is ``sigma_x * sqrt(M N)``.
    """
    vals = dict(measured_power=measured_power, frob_norm_A_sq=frob_norm_A_sq,
                N_p=N_p, M=M, noise_var=noise_var, N=N)
    for k, v in vals.items():
        if v < 0:
            raise DomainError(f"{k} must be nonnegative, got {v}")
    if not frob_norm_A_sq > 0:
        raise DomainError("||A||_F^2 must be positive")
    sigma_x2 = max(0.0, (measured_power - N_p * M * noise_var) / frob_norm_A_sq)
    return ScaleInfo(measured_power=float(measured_power), sigma_x2=sigma_x2,
                     target_norm=float(np.sqrt(sigma_x2 * M * N)))


def rescale_estimate(x_hat, target_norm):
    x_hat = np.asarray(x_hat)
    nrm = np.linalg.norm(x_hat)
    if not nrm > 0:
        raise DomainError("cannot rescale an all-zero estimate")
    return x_hat * (target_norm / nrm)


def estimate_H(X_theta_hat):
    """Effective channel ``F^H X(theta)``."""
    return idft_transform(np.atleast_2d(np.asarray(X_theta_hat)))


def estimate_D(theta_hat, X_theta_hat, return_offdiag=False):
    """LS gains ``diag(V(theta)^+ F^H X(theta))``.

    Raises :class:`DegenerateGeometryError` when ``V(theta)`` loses rank at the
    relative singular-value cutoff ``PINV_RCOND``.  With ``return_offdiag`` the
    Frobenius norm of the discarded off-diagonal part is also returned.
    """
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    X = np.atleast_2d(np.asarray(X_theta_hat))
    M = X.shape[0]
    if X.shape[1] != theta_hat.size:
        raise DomainError("need one column per estimated DoA")
    if theta_hat.size > M:
        raise DegenerateGeometryError("more DoAs than antennas")
    u = np.sort(np.sin(np.deg2rad(theta_hat)))
    if np.any(np.diff(u) <= 1e-10):
        raise DegenerateGeometryError("estimated DoAs coincide within 1e-10 in sin(theta)")
    V = steering_matrix(theta_hat, M)
    U, s, Vh = np.linalg.svd(V, full_matrices=False)
    if s[-1] <= PINV_RCOND * s[0]:
        raise DegenerateGeometryError(
            f"steering matrix is rank deficient (condition {s[0] / max(s[-1], 1e-300):.3e})"
        )
    G = (Vh.conj().T / s) @ (U.conj().T @ estimate_H(X))
    gains = np.diag(G).copy()
    if return_offdiag:
        off = G - np.diag(gains)
        return gains, float(np.linalg.norm(off))
    return gains
