"""Fixed points of multivalued mappings through averaged (enriched) iterations.

Submodules: :mod:`~mvfix.geometry` (point sets and set distances),
:mod:`~mvfix.mappings` (mappings, grids, fixed-set enumeration),
:mod:`~mvfix.transform` (averaged operators), :mod:`~mvfix.solver`
(iteration engines), :mod:`~mvfix.certifier` (class constants) and
:mod:`~mvfix.datadep` (perturbation bounds).
"""

from .certifier import CertifyConfig, MappingClassReport, certify, estimate_class_constant, estimate_enriched
from .datadep import DataDependenceReport, gamma_bound, verify_data_dependence
from .geometry import FiniteSet, delta_distance, hausdorff, point_set_distance
from .mappings import AffineMap, Domain, MultiMap, builtin, fixed_point_set, load_mapping, residual
from .solver import IterationConfig, IterationTrace, endpoint_iterate, krasnoselskii_iterate, solve_gornicki
from .transform import averaged, enriched_shift, lambda_from_enrichment

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "CertifyConfig",
    "DataDependenceReport",
    "Domain",
    "FiniteSet",
    "IterationConfig",
    "IterationTrace",
    "MappingClassReport",
    "MultiMap",
    "averaged",
    "builtin",
    "certify",
    "delta_distance",
    "endpoint_iterate",
    "enriched_shift",
    "estimate_class_constant",
    "estimate_enriched",
    "fixed_point_set",
    "gamma_bound",
    "hausdorff",
    "krasnoselskii_iterate",
    "lambda_from_enrichment",
    "load_mapping",
    "point_set_distance",
    "residual",
    "solve_gornicki",
    "verify_data_dependence",
]
