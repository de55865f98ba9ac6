"""Entropy-density benchmarking of noisy layered circuits."""

from .sim import DensityMatrix, Gate, NoiseModel, new_zero_state, purity, renyi2_density
from .ansatz import Circuit, build_circuit, evolve_noisy
from .heuristic import FitResult, ModelParams, PurityCurve, fit, model_purity
from .advantage import ThresholdReport, depth_threshold, frontier_curve

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "DensityMatrix",
    "FitResult",
    "Gate",
    "ModelParams",
    "NoiseModel",
    "PurityCurve",
    "ThresholdReport",
    "build_circuit",
    "depth_threshold",
    "evolve_noisy",
    "fit",
    "frontier_curve",
    "model_purity",
    "new_zero_state",
    "purity",
    "renyi2_density",
]
