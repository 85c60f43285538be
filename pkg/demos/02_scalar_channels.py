"""
================================================================================
02. The scalar channels: probit output and Bernoulli-GM input
================================================================================

GAMP reduces the vector problem to scalar estimation problems.  Here we look
at the two scalar posteriors on their own and check them against numerical
integration.
"""
###############################################################################
# Probit posterior of one real part
# ---------------------------------
# Observing only the sign pulls the posterior mean toward the observed
# half-line and always shrinks the variance.
import numpy as np

from onebit_doa import GmPrior, bgm_posterior_moments, mills_ratio_stable, probit_moments_real
from onebit_doa.oracles import bgm_quadrature, probit_quadrature_real

for p in (-2.0, 0.0, 2.0):
    z, v = probit_moments_real(1, p, 0.5, 1.0)
    zq, vq = probit_quadrature_real(1, p, 0.5, 1.0)
    print(f"p={p:+.1f}: z_hat={z:.6f} (quad {zq:.6f})  nu_z={v:.6f} (quad {vq:.6f})")

###############################################################################
# The inverse Mills ratio stays finite deep in the tail
# -----------------------------------------------------
for eta in (-40.0, -10.0, 0.0, 5.0):
    print(f"phi/Phi({eta:+.0f}) = {mills_ratio_stable(eta):.10g}")

###############################################################################
# Bernoulli Gaussian-mixture posterior
# ------------------------------------
q = GmPrior(0.3, [0.2, 0.5, 0.3], [-1.0, 0.5j, 1 + 1j], [0.5, 1.0, 2.0])
for r in (0.0, 1 + 1j, 3 + 3j):
    x, v, s = bgm_posterior_moments(np.array([r]), 0.5, q)
    xq, vq = bgm_quadrature(r, 0.5, q.lam, q.weights, q.means, q.vars)
    print(f"r={r}: x_hat={x[0]:.6f} (quad {xq:.6f}) nu_x={v[0]:.6f} P(x!=0)={s[0]:.3f}")
