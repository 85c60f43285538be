"""
================================================================================
05. RMSE versus SNR: the one-bit error floor
================================================================================

A short Monte Carlo sweep through the full pipeline.  The RMSE stops
improving at high SNR because the signs carry no more information.
"""
import numpy as np

from onebit_doa import ChannelParams, ExperimentSpec, SystemConfig, run_experiment

cfg = SystemConfig(M=90, N_t=1, L=(3,), N_p=16, noise_var=1.0, N=8, seed=2024)
params = ChannelParams([-40.0, 20.0, 20.005], [0.8084 + 0.5887j, 0.6884 + 0.7254j, 0.7344 - 0.6787j])
spec = ExperimentSpec(cfg=cfg, params=params, sweep_axis="snr_db", sweep_values=(0, 10, 20, 40), trials=10)

rows = run_experiment(spec)
print(f"{'SNR':>5} {'RMSE deg':>10} {'NMSE_H dB':>10} {'order ok':>9}")
for r in rows:
    print(f"{r['sweep_value']:5.0f} {r['rmse_theta_deg']:10.4g} {r['nmse_H_db']:10.2f} {r['detect_rate']:9.0%}")

###############################################################################
# Same sweep without the quantizer
# --------------------------------
spec_lin = ExperimentSpec(cfg=cfg, params=params, sweep_axis="snr_db", sweep_values=(20, 40),
                          trials=10, quantize=False)
for r in run_experiment(spec_lin):
    print(f"unquantized {r['sweep_value']:.0f} dB: RMSE {r['rmse_theta_deg']:.4g} deg")
