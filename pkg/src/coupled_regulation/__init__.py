"""Coupled leader-following regulation of linear multi-agent systems."""
from .coupling import (CouplingMatrix, CouplingNetwork, Diagonalization, KZDecomposition,
                       build_coupling, compute_kz, diagonalizability_check, diagonalize,
                       is_laplacian, stability_margins)
from .errors import (CoupledRegulationError, DegeneracyError, DivergenceError, NumericalError,
                     PlacementError, PreconditionError, SynthesisError, ValidationError)
from .network import ObserverGraph, gamma, leader_reachable, observer_rhs
from .sim import (Metrics, Scenario, TrajectoryRecord, block_spectrum, closed_loop_matrix,
                  crossing_time, decoupled_compare, metrics, simulate)
from .synthesis import (FeedbackGain, GainSpec, Plant, RiccatiSolution, assign_gain,
                        check_positive_real, det_certificate, place_reduced, positive_real_gain,
                        predict_spectrum, solve_care, verify_convergence)

__version__ = "0.1.0"
