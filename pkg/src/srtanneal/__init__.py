"""Quantum annealing simulator for spin-reversal-transform studies.

The package simulates transverse-field annealing of Ising problems with
optional XX/YY driver couplings, quantifies how spin-reversal transforms
change the minimum spectral gap and the ground-state success probability,
and provides the transform-selection protocol that minimizes the average
transformed ZZ coupling, together with a batch experiment harness.
"""

from .model import (
    AnnealSchedule,
    DriverSpec,
    ProblemInstance,
    QubitGraph,
    SpinConfig,
    SpinReversalTransform,
    apply_srt,
    average_coupling,
    chimera_graph,
    untransform_solution,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule",
    "DriverSpec",
    "ProblemInstance",
    "QubitGraph",
    "SpinConfig",
    "SpinReversalTransform",
    "apply_srt",
    "average_coupling",
    "chimera_graph",
    "untransform_solution",
    "__version__",
]
