"""Independent reference computations used to check the closed forms.

Nothing here reuses the estimator code paths: posterior moments come from
adaptive quadrature of the unnormalized densities, operators from explicit
Kronecker products, and assignments from permutation enumeration.
"""

import itertools

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr, roots_legendre

_SQ2 = np.sqrt(2.0)


def _log_probit_lik(ys, z, sigma):
    if sigma == 0:
        return 0.0 if ys * z > 0 else -np.inf
    return float(log_ndtr(ys * z / (sigma / _SQ2)))


def probit_quadrature_real(y_sign, p_hat, nu_p_half, sigma):
    """Mean and variance of ``z`` with density proportional to
    ``Phi(sign(y) z / (sigma/sqrt 2)) * N(z; p_hat, nu_p_half)``."""
    v = float(nu_p_half)
    s = np.sqrt(v)
    lo, hi = p_hat - 40 * s, p_hat + 40 * s

    def logf(z):
        return _log_probit_lik(y_sign, z, sigma) - (z - p_hat) ** 2 / (2 * v)

    grid = np.linspace(lo, hi, 4001)
    lg = np.array([logf(z) for z in grid])
    mode = grid[int(np.argmax(lg))]
    off = lg.max()
    pts = sorted({float(mode), 0.0} & {x for x in (float(mode), 0.0) if lo < x < hi})

    def f(z):
        return np.exp(logf(z) - off)

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=500, points=pts or None)
    Z = integrate.quad(f, lo, hi, **opts)[0]
    m1 = integrate.quad(lambda z: z * f(z), lo, hi, **opts)[0] / Z
    var = integrate.quad(lambda z: (z - m1) ** 2 * f(z), lo, hi, **opts)[0] / Z
    return m1, var


def probit_quadrature_complex(y, p_hat, nu_p, sigma):
    """Product-form complex posterior: the likelihood and the circular prior
    both factor over real and imaginary parts."""
    mr, vr = probit_quadrature_real(np.sign(y.real), p_hat.real, nu_p / 2, sigma)
    mi, vi = probit_quadrature_real(np.sign(y.imag), p_hat.imag, nu_p / 2, sigma)
    return mr + 1j * mi, vr + vi


def _log_cn(a, b, mu, v):
    return -np.log(np.pi * v) - ((a - mu.real) ** 2 + (b - mu.imag) ** 2) / v


def _gauss_legendre_2d(logf, box, ref, order):
    x, w = roots_legendre(order)
    a0, a1, b0, b1 = box
    ha, hb = 0.5 * (a1 - a0), 0.5 * (b1 - b0)
    a = 0.5 * (a0 + a1) + ha * x
    b = 0.5 * (b0 + b1) + hb * x
    A, B = np.meshgrid(a, b, indexing="ij")
    W = np.outer(w, w) * ha * hb
    return A, B, W * np.exp(logf(A, B) - ref)


def bgm_quadrature(r_hat, nu_r, lam, weights, means, vars_, order=200):
    """Posterior mean and variance of ``x`` under the Bernoulli-GM prior and
    a ``CN(x; r_hat, nu_r)`` pseudo-likelihood, by 2-D numerical integration.

    The point mass at zero contributes the likelihood value at the origin.
    Each slab term is a single smooth bump; it is located on a coarse grid
    and integrated with a tensor Gauss-Legendre rule over a box of twelve
    standard deviations of its narrower factor.
    """
    r = complex(r_hat)
    log_spike = np.log1p(-lam) + _log_cn(0.0, 0.0, r, nu_r) if lam < 1 else -np.inf
    terms = []
    for wgt, mu, psi in zip(weights, means, vars_):
        mu = complex(mu)
        if lam * wgt == 0:
            continue
        lw = np.log(lam * wgt)

        def logf(a, b, mu=mu, psi=psi, lw=lw):
            return lw + _log_cn(a, b, mu, psi) + _log_cn(a, b, r, nu_r)

        half = abs(r - mu) + 15 * np.sqrt(min(nu_r, psi))
        ga = np.linspace(r.real - half, r.real + half, 401)
        gb = np.linspace(r.imag - half, r.imag + half, 401)
        A, B = np.meshgrid(ga, gb, indexing="ij")
        lg = logf(A, B)
        k = np.unravel_index(np.argmax(lg), lg.shape)
        w = 12 * np.sqrt(min(nu_r, psi)) + (ga[1] - ga[0])
        box = (A[k] - w, A[k] + w, B[k] - w, B[k] + w)
        terms.append((float(lg[k]), box, logf))

    offs = [t[0] for t in terms] + ([log_spike] if np.isfinite(log_spike) else [])
    ref = max(offs)
    spike = np.exp(log_spike - ref) if np.isfinite(log_spike) else 0.0
    pieces = [_gauss_legendre_2d(logf, box, ref, order) for _, box, logf in terms]
    mass = spike + sum(W.sum() for _, _, W in pieces)
    ma = sum((A * W).sum() for A, _, W in pieces) / mass
    mb = sum((B * W).sum() for _, B, W in pieces) / mass
    mean = complex(ma, mb)
    second = spike * abs(mean) ** 2
    second += sum((((A - ma) ** 2 + (B - mb) ** 2) * W).sum() for A, B, W in pieces)
    return mean, second / mass


def dense_kron_operator(S, M):
    m = np.arange(M)
    F = np.exp(-2j * np.pi * np.outer(m, m) / M) / np.sqrt(M)
    return np.kron(np.asarray(S).T, F.conj().T)


def brute_force_matching(theta_hat, theta_true, miss_penalty_deg=5.0):
    """Exhaustive search over injective assignments; returns the RMSE."""
    th = list(theta_hat)
    tt = list(theta_true)
    K = len(tt)
    best = np.inf
    n = min(len(th), K)
    for est_idx in itertools.permutations(range(len(th)), n):
        for true_idx in itertools.combinations(range(K), n):
            sq = sum((th[i] - tt[j]) ** 2 for i, j in zip(est_idx, true_idx))
            sq += (K - n) * miss_penalty_deg**2
            best = min(best, sq)
    return float(np.sqrt(best / K))
