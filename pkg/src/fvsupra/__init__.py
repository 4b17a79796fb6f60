"""Finite-volume schemes on periodic unstructured meshes with
supra-convergence diagnostics."""

from .fields import MeshField
from .layouts import ControlVolumeLayout, cell_layout, median_dual_layout
from .mesh import (PeriodicMesh, build_1d_pattern, build_ti_triangular,
                   load_mesh, perturb_nodes, replicate_scale, save_mesh)
from .operators import OperatorPair
from .polynomials import MultiPolynomial, monomial_basis
from .projection import Projection, project
from .schemes import (SCHEME_NAMES, assemble_basic_fv, assemble_bbr3,
                      assemble_by_name, assemble_edge_based, assemble_fc,
                      assemble_fc_1d_modified, assemble_poly_recon,
                      upwind_face_flux)
from .systems import (HyperbolicSystem, flux_jacobian_decomposition,
                      linearized_euler, transport)
from .analysis import (analyze_pair, compute_CA, exactness_order,
                       image_membership, kernel_check, scheme_constants,
                       stability_estimate, truncation_error, zero_mean_check)
from .timeloop import (CaseSpec, appendix_a_fully_discrete, convergence_study,
                       integrate, run_case)

__version__ = "0.1.0"
