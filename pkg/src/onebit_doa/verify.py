"""User-facing oracle checks: closed forms against quadrature, the matrix-free
operator against its dense Kronecker form, pilots, and matching."""

import itertools
import time

import numpy as np

from . import channels
from .channel_model import zc_pilot_matrix
from .channels import GmPrior, bgm_posterior_moments, probit_moments_real
from .operators import PilotDftOperator
from .oracles import bgm_quadrature, brute_force_matching, dense_kron_operator, probit_quadrature_real
from .simulator import match_estimates

PROBIT_GRID = list(itertools.product(range(-3, 4), (0.1, 1.0, 10.0), (0.5, 1.0), (1, -1)))
BGM_PRIOR = GmPrior(0.3, [0.2, 0.5, 0.3], [-1.0, 0.5j, 1 + 1j], [0.5, 1.0, 2.0])
BGM_GRID = list(itertools.product((-2, -0.5 + 0.5j, 0, 1 + 1j, 2 - 1j, 3 + 3j), (0.05, 0.5, 2.0)))


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_probit(tol=1e-8):
    worst = 0.0
    for p, nu, s, y in PROBIT_GRID:
        m, v = probit_quadrature_real(y, p, nu / 2, s)
        z, vz = probit_moments_real(y, p, nu / 2, s)
        worst = max(worst, _rel(float(z), m), _rel(float(vz), v))
    return worst <= tol, f"max rel err {worst:.2e} over {len(PROBIT_GRID)} points"


def check_bgm(tol=1e-8):
    q = BGM_PRIOR
    worst = 0.0
    for r, nr in BGM_GRID:
        m, v = bgm_quadrature(r, nr, q.lam, q.weights, q.means, q.vars)
        x, vx, _ = bgm_posterior_moments(r, nr, q)
        worst = max(worst, _rel(x[0], m), _rel(vx[0], v))
    return worst <= tol, f"max rel err {worst:.2e} over {len(BGM_GRID)} points"


def check_operator(tol=1e-10, trials=100, seed=0):
    rng = np.random.default_rng(seed)
    M, N_p, N = 6, 5, 3
    op = PilotDftOperator(zc_pilot_matrix(N_p, N), M)
    A = dense_kron_operator(op.S, M)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
        v = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
        worst = max(worst, np.linalg.norm(op.matvec(x) - A @ x) / np.linalg.norm(A @ x))
        lhs = np.vdot(v, op.matvec(x))
        rhs = np.vdot(op.rmatvec(v), x)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return worst <= tol, f"max rel deviation {worst:.2e}"


def check_pilots(tol=1e-10):
    worst = 0.0
    for N_p, K in ((16, 3), (16, 8), (64, 16), (15, 7)):
        S = zc_pilot_matrix(N_p, K)
        worst = max(worst, np.linalg.norm(S @ S.conj().T - N_p * np.eye(K)))
    return worst <= tol, f"max Frobenius deviation {worst:.2e}"


def check_matching(trials=200, seed=1):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        th = rng.uniform(-60, 60, rng.integers(0, 5))
        tt = rng.uniform(-60, 60, 3)
        _, rmse = match_estimates(th, tt)
        worst = max(worst, abs(rmse - brute_force_matching(th, tt)))
    return worst <= 1e-12, f"max deviation from enumeration {worst:.2e}"


CHECKS = [
    ("probit moments vs quadrature", check_probit),
    ("BGM moments vs 2-D quadrature", check_bgm),
    ("operator vs dense Kronecker / adjoint", check_operator),
    ("ZC pilot orthogonality", check_pilots),
    ("matching vs enumeration", check_matching),
]


def run_checks(corrupt_mills=False, out=print):
    """Run every check, print a table and return True iff all pass.

    ``corrupt_mills`` swaps in a wrong Mills ratio to prove the probit check
    can fail.
    """
    saved = channels.mills_ratio_stable
    if corrupt_mills:
        channels.mills_ratio_stable = lambda eta: 1.01 * saved(eta)
    ok_all = True
    try:
        out(f"{'check':42s} {'result':6s} {'time':>7s}  detail")
        for name, fn in CHECKS:
            t0 = time.perf_counter()
            ok, detail = fn()
            ok_all &= ok
            out(f"{name:42s} {'PASS' if ok else 'FAIL':6s} {time.perf_counter() - t0:6.2f}s  {detail}")
    finally:
        channels.mills_ratio_stable = saved
    return ok_all
