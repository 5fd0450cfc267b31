"""Clifford cross-entropy benchmarking: stabilizer simulation of noisy random
Clifford circuits, the linear XEB estimator, decay fitting and small-system
oracles."""

from .analysis import (DecayFit, MixRate, clifford_beta_stats, compare_to_digital_model,
                       fit_exponential, haar_moments, mixing_rate)
from .engine import ExperimentConfig, ExponentHistogram, XebPoint, run_circuit, run_experiment, run_point
from .ensembles import (Cycle, EnsembleKind, EnsembleSpec, grid_matching, random_xor_general,
                        sample_cycle, sample_cycle_approx_twirl, sample_cycle_chain1d,
                        sample_cycle_grid2d, sample_random_xor_star, spanning_tree)
from .noise import NoiseModel, apply_noisy_gate, cycle_fidelity_prediction
from .stabilizer import GateOp, PauliString, Tableau, amplitude_exponent, apply_gate, measure_z, new_zero_state

__all__ = [
    "Cycle", "DecayFit", "EnsembleKind", "EnsembleSpec", "ExperimentConfig", "ExponentHistogram",
    "GateOp", "MixRate", "NoiseModel", "PauliString", "Tableau", "XebPoint", "amplitude_exponent",
    "apply_gate", "apply_noisy_gate", "clifford_beta_stats", "compare_to_digital_model",
    "cycle_fidelity_prediction", "fit_exponential", "grid_matching", "haar_moments", "measure_z",
    "mixing_rate", "new_zero_state", "random_xor_general", "run_circuit", "run_experiment",
    "run_point", "sample_cycle", "sample_cycle_approx_twirl", "sample_cycle_chain1d",
    "sample_cycle_grid2d", "sample_random_xor_star", "spanning_tree",
]
