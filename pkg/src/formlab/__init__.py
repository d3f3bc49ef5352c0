"""Discrete exterior calculus probes of essential self-adjointness.

Schrödinger operators ``H = Delta + V`` on differential forms are assembled
on simplicial meshes; a generalized-distance criterion built from a lower
envelope of ``V`` is evaluated and cross-checked against Weyl's limit-point
test and boundary-condition sweeps.
"""

from .criterion import (CriterionReport, Verdict, divergence_verdict, evaluate_criterion,
                        generalized_distance, nested_truncation_profile, truncate_P,
                        verify_P_bound)
from .forms import (Cochain, FormCalculus, HodgeStar, codifferential, de_rham,
                    exterior_derivative, hodge_star, inner_product, wedge)
from .mesh import (DistanceField, SimplicialMesh, build_disk_mesh, build_flat_torus,
                   build_interval_mesh, distance_from_base)
from .potential import (Envelope, PotentialField, assemble_H, extract_envelope,
                        lipschitz_constant, radial_envelope, radial_potential)
from .spectral import (TruncatedOperator, bc_sensitivity_sweep, energy_estimate_check,
                       lemma1_diagnostic, low_eigenvalues, symmetry_defect, truncated_operator)
from .weyl import WeylVerdict, weyl_classify_1d

__version__ = "0.1.0"

__all__ = [
    "Cochain", "CriterionReport", "DistanceField", "Envelope", "FormCalculus", "HodgeStar",
    "PotentialField", "SimplicialMesh", "TruncatedOperator", "Verdict", "WeylVerdict",
    "assemble_H", "bc_sensitivity_sweep", "build_disk_mesh", "build_flat_torus",
    "build_interval_mesh", "codifferential", "de_rham", "distance_from_base",
    "divergence_verdict", "energy_estimate_check", "evaluate_criterion",
    "exterior_derivative", "extract_envelope", "generalized_distance", "hodge_star",
    "inner_product", "lemma1_diagnostic", "lipschitz_constant", "low_eigenvalues",
    "nested_truncation_profile", "radial_envelope", "radial_potential", "symmetry_defect",
    "truncate_P", "truncated_operator", "verify_P_bound", "wedge", "weyl_classify_1d",
]
