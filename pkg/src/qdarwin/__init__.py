"""Desk-scale numerics for generic quantum Darwinism.

Submodules: ``linalg`` (Hermitian kernels), ``states`` (states, POVMs,
ensembles, seeded randomness), ``channels`` (CPTP maps and the model
library), ``sdp`` and ``diamond`` (diamond-norm certificates),
``infotheory`` (entropies, discrimination, accessible information) and
``darwinism`` (pointer extraction and theorem certification).
"""
from .channels import MeasurePrepareChannel, QuantumChannel, measure_and_prepare
from .diamond import DiamondResult, diamond_distance
from .errors import ExtractionError, SdpConvergenceError, ValidationError
from .states import DensityMatrix, LabeledEnsemble, Povm, SeededRng

__version__ = "0.1.0"

__all__ = [
    "MeasurePrepareChannel", "QuantumChannel", "measure_and_prepare",
    "DiamondResult", "diamond_distance",
    "ExtractionError", "SdpConvergenceError", "ValidationError",
    "DensityMatrix", "LabeledEnsemble", "Povm", "SeededRng",
]
