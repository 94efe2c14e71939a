"""derdcodec: energy-aware intra-frame codec and evaluation harness."""

from .codec import decode_file, decode_stream, encode_stream, encode_to_file
from .energy_model import (
    FeatureCounts, SpecificEnergyProfile, accumulate, block_energy,
    default_profile, estimate_decoding_energy,
)
from .frames import Frame, load_input, read_yuv, write_yuv
from .metrics import (
    BDCurve, RateQualityEnergyPoint, TransmissionModel, bd_delta, bd_energy,
    bd_rate, per_bit_transmission_energy, psnr_yuv, streaming_energy,
)
from .optimizer import (
    CandidateCoding, CostBreakdown, Objective, choose_candidate,
    default_lambda_e_grid, evaluate_candidate, lambda_e_from_qp,
    lambda_r_from_qp, qp_search_experiment,
)
from .profile_fit import EnergyProfileFit, fit_profile

__version__ = "0.1.0"

__all__ = [
    "BDCurve", "CandidateCoding", "CostBreakdown", "EnergyProfileFit",
    "FeatureCounts", "Frame", "Objective", "RateQualityEnergyPoint",
    "SpecificEnergyProfile", "TransmissionModel", "accumulate", "bd_delta",
    "bd_energy", "bd_rate", "block_energy", "choose_candidate",
    "decode_file", "decode_stream", "default_lambda_e_grid", "default_profile",
    "encode_stream", "encode_to_file", "estimate_decoding_energy",
    "evaluate_candidate", "fit_profile", "lambda_e_from_qp", "lambda_r_from_qp",
    "load_input", "per_bit_transmission_energy", "psnr_yuv",
    "qp_search_experiment", "read_yuv", "streaming_energy", "write_yuv",
]
