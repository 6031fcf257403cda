"""Numerical laboratory for loop-parameterized Lagrangian tori in C^{k+1}.

Builds the tori swept by fiber-level tori over a loop in the base plane of
the product fibration, verifies the defining structure (commuting moments,
fiber preservation, Lagrangian tangent spaces), and runs the explicit
displacement construction producing machine-checkable certificates.
"""

from .analysis import (EquivalenceVerdict, Verdict, VerificationReport,
                       decide_equivalence, lagrangian_defect, verify_structure)
from .displacement import (AvoidingRay, CutProfile, DisplacementReport,
                           base_hamiltonian, displace, find_avoiding_ray,
                           lift_hamiltonian, profile_for_loop)
from .fibration import (FiberCoordinates, LevelValues, PseudotoricStructure,
                        fiber_torus_point, horizontal_lift,
                        proportionality_factor, psi_eval, psi_jacobian,
                        solve_fiber_radii, vertical_basis)
from .loops import (CircleLoop, FourierLoop, Loop, LoopType, SectorSpec,
                    classify_type, enclosed_area, loop_from_json, power_image,
                    sector_loop, winding_number)
from .symplectic import (ConvergenceError, FlowParams, FlowResult, PhasePoint,
                         ScalarField, TangentVector, flow_integrate,
                         hamiltonian_field, omega_eval, poisson_bracket)
from .torus import TorusSample, TorusSpec, build_torus, tangent_frame, twist_torus

__version__ = "0.1.0"
