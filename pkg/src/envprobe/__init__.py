"""Reconstruct a qubit-environment Hamiltonian from the qubit's short-time dynamics.

The qubit is prepared along each Pauli axis with the N-level environment
fully mixed; time derivatives of the nine Bloch functions at t = 0 are
polynomials in the Hamiltonian parameters, which :mod:`envprobe.reconstruction`
inverts order by order.
"""

from .derivatives import (DerivativeStack, estimate_derivatives, stencil_weights,
                          symmetry_defect, symmetry_project)
from .dynamics import (PREPARATIONS, Preparation, Trajectory, bloch_point, evolve_joint,
                       partial_trace_env, propagators, simulate_trajectory)
from .errors import (AlreadyProjectedError, DimensionMismatchError, EnvProbeError,
                     InsufficientSamplesError, InvalidDimensionError,
                     NonPhysicalDerivativesError, NonUniformGridError, NotHermitianError,
                     NotOrthogonalError, SymmetryError)
from .model import (HamiltonianParams, apply_gauge, assemble_hamiltonian, gamma_gram,
                    load_params, worked_example_params, save_params)
from .reconstruction import (FitResult, PipelineResult, ReconstructionReport,
                             canonicalize_gamma, extract_alpha, extract_beta,
                             extract_gamma_gram, fit_parameters, reconstruct,
                             reconstruct_trajectory, required_order)
from .sun_algebra import (PAULI, StructureConstants, SuNBasis, build_generators,
                          closure_residual, su_algebra)

__version__ = "0.1.0"
