"""Polarity, hyperpolarity and variational-completeness checks for isometric actions."""

from .liealg import (CheckResult, LieAlgebra, Subspace, bracket, build_classical,
                     centralizer_in, direct_sum, is_abelian_subspace,
                     is_lie_triple_system, killing_form)
from .linalg import IndeterminateVerdict
from .polarity import (OrthogonalRep, PolarityVerdict, cohomogeneity,
                       find_regular_point, is_hyperpolar_homogeneous,
                       is_polar_homogeneous, is_polar_rep, orbifold_point_test,
                       slice_rep)
from .symspace import (BrokenGeodesicSampler, ModelManifold, SymmetricPair,
                       cartan_decompose, cartan_hermann_probe,
                       curvature_operator, involution_from_matrix_map,
                       maximal_abelian, sectional_curvature)
from .weyl import (QuotientOptimizerConfig, ReductionSampler, ReflectionGroup,
                   RestrictedRootSystem, SectionSampler, quotient_distance,
                   reduction_isometry_check, restricted_roots,
                   section_orbit_check, weyl_group_closure)
from .transversal import (OrbitGeodesic, TransversalSystem, a_tensor,
                          conjugate_scan, discala_olmos_probe, focal_points,
                          jacobi_integrate, killing_restrictions,
                          n_jacobi_space, oneill_check, rescale_probe,
                          shape_operator, symplectic_form,
                          transversal_integrate, transversal_system,
                          variational_completeness_probe, vertical_bundle)
from .catalog import CatalogEntry, catalog_entry, catalog_list

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
