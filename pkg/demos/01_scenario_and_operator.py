"""
================================================================================
01. The uplink scenario and the matrix-free sensing operator
================================================================================

A 90-antenna ULA receives three paths, two of them only 0.005 degrees apart.
The pilots are Zadoff-Chu cyclic shifts and the base station observes one-bit
samples of ``F^H X S`` plus noise.
"""
###############################################################################
# Scenario
# --------
import numpy as np

from onebit_doa import (
    ChannelParams,
    PilotDftOperator,
    SystemConfig,
    dft_transform,
    effective_channel,
    simulate_measurement,
    zc_pilot_matrix,
)

cfg = SystemConfig(M=90, N_t=1, L=(3,), N_p=16, noise_var=3 / 10**1.5, N=8, seed=2024)
params = ChannelParams([-40.0, 20.0, 20.005], [0.8084 + 0.5887j, 0.6884 + 0.7254j, 0.7344 - 0.6787j])
print("paths:", params.thetas, "gains:", np.round(params.alphas, 4))

###############################################################################
# Pilots are mutually orthogonal
# ------------------------------
S = zc_pilot_matrix(cfg.N_p, cfg.N)
print("||S S^H - N_p I|| =", np.linalg.norm(S @ S.conj().T - cfg.N_p * np.eye(cfg.N)))

###############################################################################
# Angular-domain sparsity
# -----------------------
# Each path occupies one column of X = F H; off-grid angles leak into a few
# neighboring bins.
X = dft_transform(effective_channel(params, cfg.M))
for j in range(3):
    e = np.sort(np.abs(X[:, j]) ** 2)[::-1]
    print(f"path {j}: top-8 bins carry {e[:8].sum() / e.sum():.1%} of the energy")

###############################################################################
# The operator never forms the Kronecker product
# ----------------------------------------------
op = PilotDftOperator(S, cfg.M)
rng = np.random.default_rng(0)
x = rng.standard_normal(op.shape[1]) + 1j * rng.standard_normal(op.shape[1])
v = rng.standard_normal(op.shape[0]) + 1j * rng.standard_normal(op.shape[0])
print("A shape:", op.shape, " |A_mn|^2 =", op.abs2_scalar, " ||A||_F^2 =", op.frobenius_sq())
print("adjoint identity error:", abs(np.vdot(v, op.matvec(x)) - np.vdot(op.rmatvec(v), x)))

###############################################################################
# One pilot block of one-bit observations
# ---------------------------------------
meas, X_theta, power = simulate_measurement(cfg, params, np.random.default_rng(1))
print("observations:", meas.y[:4], "...  pre-quantization power:", round(power, 2))
