"""Metric privacy on finite bimetric spaces: scales, packings, mechanisms and audits."""

from mplab.errors import CapExceeded, DomainError, MplabError, StructuralError
from mplab.kernels import BACKEND
from mplab.mechanisms import (Mechanism, accuracy_mc, audit_privacy, build_constant, build_exponential,
                              build_nearest_rounding, build_ultrametric_relaxed, exact_accuracy,
                              output_distribution, sample)
from mplab.metric import FiniteBimetricSpace, ball, diameter, distance_spectrum, validate
from mplab.packing import greedy_maximal_separated, packing_number, verify_packing_facts
from mplab.scales import (diametric_scale, doubling_scale, entropic_scale, outer_scale, scale_report,
                          verify_scale_relations)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CapExceeded", "DomainError", "FiniteBimetricSpace", "Mechanism", "MplabError",
    "StructuralError", "accuracy_mc", "audit_privacy", "ball", "build_constant", "build_exponential",
    "build_nearest_rounding", "build_ultrametric_relaxed", "diameter", "diametric_scale",
    "distance_spectrum", "doubling_scale", "entropic_scale", "exact_accuracy", "greedy_maximal_separated",
    "outer_scale", "output_distribution", "packing_number", "sample", "scale_report", "validate",
    "verify_packing_facts", "verify_scale_relations",
]
