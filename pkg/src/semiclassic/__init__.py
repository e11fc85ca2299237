"""Semiclassical (WKB) propagators from classical boundary-value problems.

The propagator is built from the classical action and the J block of the
fundamental matrix of the variational equation (Gelfand-Yaglom), with a
closed-form quadrature route for 1-DOF natural Hamiltonians and exact
quadratic kernels as oracles.
"""

from .classical_path import (BvpProblem, ClassicalTrajectory, ShootingConfig, ShootingInfo,
                             compute_action, integrate_ivp, lagrangian_quadrature,
                             solve_bvp_shooting)
from .closed_form import (GaugeReduction, PicardVessiotReport, closed_form_phi,
                          gauge_matrix_P, gauge_reduction, general_solution,
                          harmonic_quadrature_closed_form, inverse_momentum_quadrature,
                          particular_solution, picard_vessiot_report, quadrature_J,
                          reduced_matrix, solution_matrix)
from .errors import (BoundaryLeak, ConfigError, FocalPoint, FocalPointInInterior,
                     GridTooCoarse, HypothesisViolation, NoConvergence, NotOneDof,
                     NumericalError, SemiclassicError, SingularShootingJacobian,
                     StepSizeUnderflow, TurningPoint, TurningPointInInterval)
from .gelfand_yaglom import (FocalScanReport, VanVleckMatrix, action_gradient_fd, det_J,
                             focal_scan, van_vleck_fd, van_vleck_from_J)
from .hamiltonian import (Drive, HamiltonianSpec, PhaseState, Potential, eval_hamiltonian,
                          eval_hessian, eval_lagrangian, eval_vector_field)
from .propagator import (PropagatorResult, SemiclassicalKernel, WavepacketGrid,
                         coherent_state_evolved, exact_kernel_forced, exact_kernel_free,
                         exact_kernel_ho, free_gaussian_evolved, gaussian_wavepacket, k_wkb,
                         propagate_wavepacket, split_operator_evolve)
from .variational import (FundamentalMatrix, block_J, flow_jacobian_fd,
                          integrate_variational, symplectic_form)

__version__ = "0.1.0"
