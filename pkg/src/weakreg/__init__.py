"""Weak and strong regularity: cut-norm decompositions, certified regularity
partitions, and concentration of homogeneous polynomials."""

from .errors import ConvergenceError, DimensionError, PreconditionError, SizeError
from .greedy import DecompositionCertificate, greedy_decompose, verify_certificate
from .kernel import (Kernel, PermGroup, Rectangle, cut_norm_exact, cut_norm_heuristic, d_R, delta_R,
                     eval_strong_regularity, holder_chain_check, inner_product, phi_grid,
                     scalar_power_inequality_check)
from .partitions import (Partition, StepProjection, balanced_refine, meet, product_round_refine, project)
from .poly import (HomogeneousPoly, PowerTerm, best_rank1, bombieri_inner, coeff_norm, concentrate_pipeline,
                   concentration, greedy_power_decompose, power_form, rotate)
from .regularity import (Graph, RegularityCertificate, density, interpret_certificate, interval_irregularity_exact,
                         interval_regularity_partition, irregularity_exact, irregularity_heuristic,
                         szemeredi_partition)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DecompositionCertificate",
    "DimensionError",
    "Graph",
    "HomogeneousPoly",
    "Kernel",
    "Partition",
    "PermGroup",
    "PowerTerm",
    "PreconditionError",
    "Rectangle",
    "RegularityCertificate",
    "SizeError",
    "StepProjection",
    "balanced_refine",
    "best_rank1",
    "bombieri_inner",
    "coeff_norm",
    "concentrate_pipeline",
    "concentration",
    "cut_norm_exact",
    "cut_norm_heuristic",
    "d_R",
    "delta_R",
    "density",
    "eval_strong_regularity",
    "greedy_decompose",
    "greedy_power_decompose",
    "holder_chain_check",
    "inner_product",
    "interpret_certificate",
    "interval_irregularity_exact",
    "interval_regularity_partition",
    "irregularity_exact",
    "irregularity_heuristic",
    "meet",
    "phi_grid",
    "power_form",
    "product_round_refine",
    "project",
    "rotate",
    "scalar_power_inequality_check",
    "szemeredi_partition",
    "verify_certificate",
]
