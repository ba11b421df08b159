"""Windfarm layout optimization as a QUBO, solved with qubit-efficient variational encodings."""

from .classical import brute_force, check_validity, simulated_annealing
from .farm import FarmProblem, GridSpec, Layout, TurbineSpec, WindArrangement, WindRegime, layout_power
from .presets import load_preset
from .qubo import QuboMatrix, IsingModel, assemble_qubo, evaluate_ising, evaluate_qubo, to_ising

__version__ = "0.1.0"

__all__ = [
    "FarmProblem",
    "GridSpec",
    "IsingModel",
    "Layout",
    "QuboMatrix",
    "TurbineSpec",
    "WindArrangement",
    "WindRegime",
    "assemble_qubo",
    "brute_force",
    "check_validity",
    "evaluate_ising",
    "evaluate_qubo",
    "layout_power",
    "load_preset",
    "simulated_annealing",
    "to_ising",
    "__version__",
]
