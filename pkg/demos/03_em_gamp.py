"""
================================================================================
03. EM-GAMP on one-bit pilots
================================================================================

Run the message-passing engine on a single pilot block and watch the
learned prior settle.
"""
import numpy as np

from onebit_doa import (
    BernoulliGMChannel,
    ChannelParams,
    GampConfig,
    ProbitChannel,
    SystemConfig,
    init_prior,
    run_gamp,
    simulate_measurement,
)

cfg = SystemConfig(M=90, N_t=1, L=(3,), N_p=16, noise_var=3 / 10**1.5, N=8)
params = ChannelParams([-40.0, 20.0, 20.005], [0.8084 + 0.5887j, 0.6884 + 0.7254j, 0.7344 - 0.6787j])
meas, X_theta, power = simulate_measurement(cfg, params, np.random.default_rng(3))

###############################################################################
# Initial prior from the measured power
# -------------------------------------
q0 = init_prior(meas.y, meas.op, cfg.noise_var, measured_power=power)
print("initial lambda:", q0.lam, " slab second moment:", round(q0.slab_second_moment(), 4))

###############################################################################
# Iterate
# -------
in_ch = BernoulliGMChannel(q0)
res = run_gamp(meas.op, meas.y, ProbitChannel(meas.y, cfg.noise_var), in_ch, GampConfig(t_max=100))
for row in res.trace[::20] + [res.trace[-1]]:
    print(f"iter {row['iter']:3d}  residual {row['residual']:.2e}  lambda {row['lambda']:.4f}")

###############################################################################
# Where did the energy go?
# ------------------------
# One-bit data fix x only up to a positive scale, so compare normalized
# column energies.
X = res.x_hat.reshape((cfg.M, cfg.N), order="F")
col = np.sum(np.abs(X) ** 2, axis=0)
print("normalized column energies:", np.round(col / col.max(), 4))
