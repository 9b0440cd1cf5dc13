"""Robust compressed push-pull for decentralized optimisation over directed graphs."""

from ._backend import BACKEND
from .compressors import (
    CompressorSpec, NoiseStream, ScalingSchedule, bit_cost, certify_compressor, dynamic_scale,
    make_compressor, quantize_inf_norm, quantize_topk, top_k, uniform_quantizer,
)
from .core import AlgoState, RunConfig, advisory_rate, init_state, make_schedule, pushpull_step, rcpp_step, run
from .digraph import Digraph, MixingPair, build_mixing, is_strongly_connected, make_ring, root_set
from .errors import AssumptionViolation, ConfigError, DivergenceError, FitUnavailable
from .harness import IterationRecord, fit_rate, read_csv, record, write_csv
from .objectives import RidgeProblem, make_ridge, ridge_gradient, ridge_solve, smoothness_constants

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AlgoState", "AssumptionViolation", "CompressorSpec", "ConfigError", "Digraph",
    "DivergenceError", "FitUnavailable", "IterationRecord", "MixingPair", "NoiseStream", "RidgeProblem",
    "RunConfig", "ScalingSchedule", "advisory_rate", "bit_cost", "build_mixing", "certify_compressor",
    "dynamic_scale", "fit_rate", "init_state", "is_strongly_connected", "make_compressor", "make_ridge",
    "make_ring", "make_schedule", "pushpull_step", "quantize_inf_norm", "quantize_topk", "rcpp_step",
    "read_csv", "record", "ridge_gradient", "ridge_solve", "root_set", "run", "smoothness_constants",
    "top_k", "uniform_quantizer", "write_csv",
]
