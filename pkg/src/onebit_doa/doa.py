"""Column pruning and per-column single-source ML DoA estimation."""

import csv
from dataclasses import dataclass

import numpy as np

from .channel_model import idft_transform
from .errors import DomainError, EmptySelectionError

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ColumnSelection:
    indices: np.ndarray
    energies: np.ndarray
    threshold_used: float


@dataclass(frozen=True)
class DoaEstimate:
    theta_deg: float
    alpha: complex
    column_index: int = -1
    energy: float = float("nan")
    # variance of the additive model around alpha * a(theta); cancels from the
    # argmax and is never estimated
    noise_var: float = float("nan")


def select_columns(X_hat, rel_threshold=0.05):
    """Keep columns whose energy reaches ``rel_threshold`` times the largest one."""
    X_hat = np.atleast_2d(np.asarray(X_hat))
    energies = np.sum(np.abs(X_hat) ** 2, axis=0)
    top = energies.max() if energies.size else 0.0
    if not top > 0:
        raise EmptySelectionError("estimate has no energy in any column")
    thr = rel_threshold * top
    idx = np.flatnonzero(energies >= thr)
    return ColumnSelection(indices=idx, energies=energies, threshold_used=float(thr))


class _Periodogram:
    """``P(u) = |sum_m v_m exp(j pi m u)|^2`` with first and second derivatives in ``u = sin(theta)``."""

    def __init__(self, v):
        self.v = v
        self.m = np.arange(v.size)

    def __call__(self, u):
        return float(np.abs(self.g(u)) ** 2)

    def g(self, u):
        return np.sum(self.v * np.exp(1j * np.pi * self.m * u))

    def derivs(self, u):
        e = self.v * np.exp(1j * np.pi * self.m * u)
        k = 1j * np.pi * self.m
        g0 = e.sum()
        g1 = np.sum(k * e)
        g2 = np.sum(k * k * e)
        p1 = 2.0 * np.real(np.conj(g0) * g1)
        p2 = 2.0 * (abs(g1) ** 2 + np.real(np.conj(g0) * g2))
        return p1, p2


def _golden_max(f, lo, hi, tol):
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _refine(per, u0, half_width, tol, max_newton=50):
    """Newton on the periodogram inside ``[u0 - half_width, u0 + half_width]``.

    Falls back to golden section when the curvature is not negative or a step
    would leave the cell.
    """
    lo, hi = u0 - half_width, u0 + half_width
    u = u0
    for _ in range(max_newton):
        p1, p2 = per.derivs(u)
        if not p2 < 0:
            break
        step = -p1 / p2
        u_new = u + step
        if not lo <= u_new <= hi:
            break
        u = u_new
        if abs(step) <= tol:
            return u
    return _golden_max(per, lo, hi, tol)


def single_source_ml(v_hat, grid_oversample=16, refine_tol=1e-8):
    """ML direction of one steering vector observed in white noise.

    The ML criterion ``min_theta ||a a^+ v - v||^2`` equals maximizing the
    periodogram ``|a(theta)^H v|^2 / M``.  A zero-padded FFT over
    ``grid_oversample * M`` points in ``sin(theta)`` locates the peak, then
    Newton iterations refine it to ``refine_tol`` in ``sin(theta)``.
    The gain estimate is ``a(theta)^H v / M``.
    """
    v = np.asarray(v_hat, dtype=complex).ravel()
    M = v.size
    if M < 2:
        raise DomainError("need at least two antennas")
    if not np.any(v != 0):
        raise DomainError("cannot estimate a direction from an all-zero vector")
    K = int(grid_oversample) * M
    # sum_m v_m exp(j pi m u_k) on u_k = -1 + 2k/K
    sign = np.where(np.arange(M) % 2 == 0, 1.0, -1.0)
    spec = np.abs(np.fft.ifft(v * sign, K) * K) ** 2
    k0 = int(np.argmax(spec))
    u0 = -1.0 + 2.0 * k0 / K
    per = _Periodogram(v)
    u = _refine(per, u0, 2.0 / K, refine_tol)
    # keep strictly inside the visible region
    u = float(np.clip(u, -1.0 + 1e-15, 1.0 - 1e-15))
    theta = float(np.rad2deg(np.arcsin(u)))
    a = np.exp(-1j * np.pi * np.arange(M) * u)
    alpha = complex(np.vdot(a, v) / M)
    return DoaEstimate(theta_deg=theta, alpha=alpha)


def estimate_all_doas(X_theta_hat, column_indices=None, energies=None,
                      grid_oversample=16, refine_tol=1e-8):
    """One DoA per column of the pruned DFT-domain estimate, sorted by angle."""
    X = np.atleast_2d(np.asarray(X_theta_hat))
    if X.shape[1] == 0:
        raise EmptySelectionError("no columns to estimate from")
    cols = np.arange(X.shape[1]) if column_indices is None else np.asarray(column_indices)
    V = idft_transform(X)
    out = []
    for j in range(X.shape[1]):
        try:
            est = single_source_ml(V[:, j], grid_oversample, refine_tol)
        except DomainError as exc:
            raise DomainError(f"column {int(cols[j])}: {exc}") from exc
        energy = float(np.sum(np.abs(X[:, j]) ** 2)) if energies is None else float(energies[j])
        out.append(DoaEstimate(theta_deg=est.theta_deg, alpha=est.alpha,
                               column_index=int(cols[j]), energy=energy))
    out.sort(key=lambda e: (e.theta_deg, e.column_index))
    return out


def estimates_to_csv(estimates, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["column_index", "theta_deg", "alpha_re", "alpha_im", "energy"])
        for e in estimates:
            w.writerow([e.column_index, repr(e.theta_deg), repr(e.alpha.real), repr(e.alpha.imag), repr(e.energy)])
