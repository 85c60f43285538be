"""Gridless DoA and channel estimation for one-bit quantized massive MIMO uplinks.

The estimator recovers the DFT-domain channel with EM-GAMP under a probit
likelihood, prunes redundant columns by energy, and extracts one DoA per
surviving column with a periodogram search plus Newton refinement.
"""

from .channel_model import (
    ChannelParams,
    Measurement,
    SystemConfig,
    dft_matrix,
    dft_transform,
    effective_channel,
    idft_transform,
    quantize_one_bit,
    simulate_measurement,
    steering_matrix,
    steering_vector,
    zc_pilot_matrix,
)
from .operators import DenseOperator, PilotDftOperator
from .channels import (
    BernoulliGMChannel,
    GaussianOutputChannel,
    GmPrior,
    ProbitChannel,
    bgm_posterior_moments,
    em_update,
    init_prior,
    mills_ratio_stable,
    probit_moments_complex,
    probit_moments_real,
)
from .gamp import GampConfig, GampDiverged, GampResult, damped_update, run_gamp
from .doa import (
    ColumnSelection,
    DoaEstimate,
    estimate_all_doas,
    select_columns,
    single_source_ml,
)
from .reconstruction import (
    ScaleInfo,
    estimate_D,
    estimate_H,
    infer_sigma_x2,
    rescale_estimate,
)
from .simulator import (
    DoaSettings,
    ExperimentSpec,
    TrialResult,
    aggregate,
    match_estimates,
    noise_var_from_snr,
    run_experiment,
    run_trial,
)

__version__ = "0.1.0"
