"""Zero-forcing and matched-filter precoding from LS/LMMSE downlink channel
estimates in massive MISO FDD systems."""

from .channel_model import (
    ChannelCovariance,
    CovarianceFactor,
    SteeringParams,
    UmiModelParams,
    build_scaled_identity,
    build_umi_covariance,
    factorize,
    sample_channel,
    steering_vector,
)
from .estimation import (
    ChannelEstimate,
    Estimator,
    asymptotic_lmmse,
    asymptotic_ls,
    estimate_lmmse,
    estimate_ls,
    genie,
    mse_closed_form_lmmse,
    mse_closed_form_ls,
)
from .metrics import RateBreakdown, mse_sample, rates, sinr_per_user
from .precoding import EstimatedChannelMatrix, PrecodingMatrix, effective_channel, mf_precoder, zf_precoder
from .training import PilotMatrix, TrainingObservation, effective_noise_variance, make_pilot_matrix, observe

__version__ = "0.1.0"
