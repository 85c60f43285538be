"""Scalar channels for GAMP.

Output side: the one-bit probit likelihood ``Phi(sign(y) z / (sigma/sqrt 2))``
applied separately to real and imaginary parts, and a plain Gaussian channel
used when the quantizer is bypassed.

Input side: the Bernoulli Gaussian-mixture prior
``(1 - lam) delta(x) + lam * sum_l w_l CN(x; mu_l, psi_l)`` with EM learning of
its hyperparameters.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, logsumexp, ndtr

from .errors import DomainError

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
# below this the direct phi/Phi loses digits in Phi; erfcx form is used instead
MILLS_CROSSOVER = -1.0
MASS_GUARD = 1e-12


def mills_ratio_stable(eta):
    """``phi(eta) / Phi(eta)`` without underflow for large negative ``eta``.

    Uses ``sqrt(2/pi) / erfcx(-eta/sqrt(2))`` for ``eta < -1`` and the direct
    quotient otherwise.
    """
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    lo = eta < MILLS_CROSSOVER
    out[lo] = _SQRT_2_OVER_PI / erfcx(-eta[lo] / np.sqrt(2.0))
    hi = ~lo
    e = eta[hi]
    out[hi] = _INV_SQRT_2PI * np.exp(-0.5 * e * e) / ndtr(e)
    return out if out.ndim else out[()]


def probit_moments_real(y_sign, p_hat, nu_p_half, sigma):
    """Posterior mean and variance of one real part under the probit likelihood.

    Parameters
    ----------
    y_sign : array_like of +-1
    p_hat : array_like
        Pseudo-prior mean of the real part.
    nu_p_half : array_like
        Pseudo-prior variance of the real part (half the complex variance).
    sigma : float
        Standard deviation of the complex noise; each real part has variance
        ``sigma**2 / 2``.
    """
    nu = np.asarray(nu_p_half, dtype=float)
    if np.any(~(nu > 0)):
        raise DomainError("pseudo-prior variance must be positive")
    ys = np.asarray(y_sign, dtype=float)
    p = np.asarray(p_hat, dtype=float)
    c = np.sqrt(0.5 * sigma**2 + nu)
    eta = ys * p / c
    ratio = mills_ratio_stable(eta)
    z_hat = p + ys * (nu / c) * ratio
    nu_z = nu - (nu * nu / (c * c)) * ratio * (eta + ratio)
    nu_z = np.clip(nu_z, 0.0, nu)
    return z_hat, nu_z


def _check_alphabet(y):
    y = np.asarray(y, dtype=complex)
    if not (np.all(np.abs(y.real) == 1) and np.all(np.abs(y.imag) == 1)):
        raise DomainError("one-bit observations must lie in {+-1 +- j}")
    return y


def probit_moments_complex(y, p_hat, nu_p, sigma):
    """Complex posterior moments: real and imaginary parts handled separately."""
    y = _check_alphabet(y)
    p_hat = np.asarray(p_hat, dtype=complex)
    half = 0.5 * np.asarray(nu_p, dtype=float)
    zr, vr = probit_moments_real(y.real, p_hat.real, half, sigma)
    zi, vi = probit_moments_real(y.imag, p_hat.imag, half, sigma)
    return zr + 1j * zi, vr + vi


class ProbitChannel:
    """One-bit output channel for GAMP."""

    def __init__(self, y, noise_var):
        self.y = _check_alphabet(y)
        if noise_var < 0:
            raise DomainError("noise variance must be nonnegative")
        self.sigma = float(np.sqrt(noise_var))

    def estimate(self, p_hat, nu_p):
        half = 0.5 * np.asarray(nu_p, dtype=float)
        zr, vr = probit_moments_real(self.y.real, p_hat.real, half, self.sigma)
        zi, vi = probit_moments_real(self.y.imag, p_hat.imag, half, self.sigma)
        return zr + 1j * zi, vr + vi


class GaussianOutputChannel:
    """Unquantized AWGN output channel ``y = z + n``, ``n ~ CN(0, noise_var)``."""

    def __init__(self, y, noise_var):
        self.y = np.asarray(y, dtype=complex)
        self.noise_var = float(noise_var)

    def estimate(self, p_hat, nu_p):
        s2 = self.noise_var
        denom = nu_p + s2
        z_hat = (p_hat * s2 + self.y * nu_p) / denom
        nu_z = nu_p * s2 / denom
        return z_hat, nu_z


@dataclass(frozen=True, eq=False)
class GmPrior:
    """Bernoulli Gaussian-mixture hyperparameters."""

    lam: float
    weights: np.ndarray
    means: np.ndarray
    vars: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.atleast_1d(np.asarray(self.means, dtype=complex))
        psi = np.atleast_1d(np.asarray(self.vars, dtype=float))
        if not (w.shape == mu.shape == psi.shape) or w.ndim != 1:
            raise DomainError("weights, means and vars must have equal length")
        if np.any(psi <= 0):
            raise DomainError("mixture variances must be positive")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("mixture weights must be a probability vector")
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError("sparsity rate must lie in [0, 1]")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "vars", psi)

    @property
    def L(self):
        return self.weights.size

    def mean(self):
        return self.lam * np.sum(self.weights * self.means)

    def variance(self):
        second = self.lam * np.sum(self.weights * (self.vars + np.abs(self.means) ** 2))
        return float(second - abs(self.mean()) ** 2)

    def slab_second_moment(self):
        return float(np.sum(self.weights * (self.vars + np.abs(self.means) ** 2)))

    def to_row(self):
        row = {"lambda": self.lam}
        for i in range(self.L):
            row[f"omega_{i + 1}"] = self.weights[i]
            row[f"mu_{i + 1}_re"] = self.means[i].real
            row[f"mu_{i + 1}_im"] = self.means[i].imag
            row[f"psi_{i + 1}"] = self.vars[i]
        return row

    @classmethod
    def from_row(cls, row):
        L = sum(1 for k in row if k.startswith("omega_"))
        f = lambda k: float(row[k])
        w = np.array([f(f"omega_{i}") for i in range(1, L + 1)])
        w = w / w.sum()
        return cls(
            lam=f("lambda"),
            weights=w,
            means=np.array([f(f"mu_{i}_re") + 1j * f(f"mu_{i}_im") for i in range(1, L + 1)]),
            vars=np.array([f(f"psi_{i}") for i in range(1, L + 1)]),
        )


def _log_cn(r, mu, v):
    return -np.log(np.pi * v) - np.abs(r - mu) ** 2 / v


@dataclass
class BgmStats:
    """Per-coefficient posterior quantities needed by the EM step."""

    resp: np.ndarray  # (n, L) posterior probability of each slab component
    gamma: np.ndarray  # (n, L) component posterior means
    nu: np.ndarray  # (n, L) component posterior variances

    @property
    def support(self):
        return self.resp.sum(axis=1)


def bgm_posterior_moments(r_hat, nu_r, q, return_stats=False):
    """Posterior mean/variance of ``x`` given ``r_hat = x + CN(0, nu_r)``.

    Returns ``(x_hat, nu_x, support_posterior)`` and, when ``return_stats`` is
    set, the per-component :class:`BgmStats` as a fourth element.
    """
    r = np.atleast_1d(np.asarray(r_hat, dtype=complex))
    nu_r = np.broadcast_to(np.asarray(nu_r, dtype=float), r.shape)
    if np.any(~(nu_r > 0)):
        raise DomainError("pseudo-measurement variance must be positive")
    if np.any(q.vars <= 0):
        raise DomainError("mixture variances must be positive")

    rc = r[:, None]
    vr = nu_r[:, None]
    psi = q.vars[None, :]
    mu = q.means[None, :]
    nu = 1.0 / (1.0 / vr + 1.0 / psi)
    gamma = nu * (rc / vr + mu / psi)

    with np.errstate(divide="ignore"):
        log_spike = np.log1p(-q.lam) + _log_cn(r, 0.0, nu_r)
        log_slab = np.log(q.lam) + np.log(q.weights)[None, :] + _log_cn(rc, mu, psi + vr)
    logs = np.concatenate([log_spike[:, None], log_slab], axis=1)
    norm = logsumexp(logs, axis=1, keepdims=True)
    resp = np.exp(log_slab - norm)

    x_hat = np.sum(resp * gamma, axis=1)
    second = np.sum(resp * (nu + np.abs(gamma) ** 2), axis=1)
    nu_x = np.maximum(second - np.abs(x_hat) ** 2, 0.0)
    support = resp.sum(axis=1)
    if return_stats:
        return x_hat, nu_x, support, BgmStats(resp=resp, gamma=gamma, nu=nu)
    return x_hat, nu_x, support


def em_update(q, stats):
    """One EM M-step for the Bernoulli-GM hyperparameters.

    Components whose total responsibility falls below ``MASS_GUARD`` keep
    their previous mean and variance.
    """
    resp = stats.resp
    support = resp.sum(axis=1)
    lam = float(np.clip(np.mean(support), 0.0, 1.0))
    mass = resp.sum(axis=0)
    total = mass.sum()
    if total < MASS_GUARD:
        return GmPrior(lam=lam, weights=q.weights, means=q.means, vars=q.vars)

    weights = mass / total
    weights = weights / weights.sum()
    means = q.means.copy()
    psis = q.vars.copy()
    live = mass >= MASS_GUARD
    for l in np.flatnonzero(live):
        w = resp[:, l]
        mu = np.sum(w * stats.gamma[:, l]) / mass[l]
        dev = np.abs(stats.gamma[:, l] - mu) ** 2 + stats.nu[:, l]
        psi = np.sum(w * dev) / mass[l]
        means[l] = mu
        psis[l] = max(psi, 1e-10 * q.vars[l])
    return GmPrior(lam=lam, weights=weights, means=means, vars=psis)


def init_prior(y, op, noise_var, measured_power=None, L=3, lam0=0.1):
    """Deterministic starting hyperparameters.

    The slab is scaled by the per-coefficient signal variance inferred from the
    pre-quantization power (``sigma_x^2``); without a power reading the scale
    defaults to one.  Means sit on a symmetric real grid of half-width
    ``0.5 * sigma_x``; the common variance makes the slab second moment
    exactly ``sigma_x^2``.
    """
    M_y, _ = op.shape
    if len(y) != M_y:
        raise DomainError(f"observation length {len(y)} does not match operator rows {M_y}")
    sigma_x2 = 1.0
    if measured_power is not None:
        est = (measured_power - M_y * noise_var) / op.frobenius_sq()
        if est > 0:
            sigma_x2 = est
    sx = np.sqrt(sigma_x2)
    means = 0.5 * sx * np.linspace(-1.0, 1.0, L) if L > 1 else np.zeros(1)
    w = np.full(L, 1.0 / L)
    psi = sigma_x2 - np.sum(w * means**2)
    return GmPrior(lam=lam0, weights=w, means=means.astype(complex), vars=np.full(L, psi))


class BernoulliGMChannel:
    """GAMP input channel with a learned Bernoulli-GM prior.

    ``estimate`` caches the component statistics so that ``update`` can run
    the EM step on exactly the quantities of the current iteration.
    """

    def __init__(self, prior, learn=True):
        self.prior = prior
        self.learn = learn
        self._stats = None

    def initial_moments(self, n):
        return np.full(n, self.prior.mean(), dtype=complex), np.full(n, self.prior.variance())

    def estimate(self, r_hat, nu_r):
        x_hat, nu_x, _, stats = bgm_posterior_moments(r_hat, nu_r, self.prior, return_stats=True)
        self._stats = stats
        return x_hat, nu_x

    def update(self):
        if self.learn and self._stats is not None:
            self.prior = em_update(self.prior, self._stats)
        return self.prior

    def snapshot(self):
        return self.prior.to_row()
