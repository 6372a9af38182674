"""Carleman-lifted learning control.

Lifts polynomial input-affine plants onto monomial bases, learns quadratic
value certificates from trajectory data by on- or off-policy iteration, and
synthesizes dense, structured (communication-masked), and sparse feedback
gains on the lifted state.
"""

from .carleman_lift import (CarlemanModel, MonomialBasis, QuadBasis,
                            beta_matrix, build_input_blocks,
                            build_transition_blocks, closed_loop_matrix,
                            count_monomials, eval_input_matrix, lift_batch,
                            lift_consistency_check, lift_state, monomial_basis,
                            selected_basis, unvectorize_quadratic,
                            vectorize_quadratic)
from .errors import (CarlearnError, ConfigError, DivergedError,
                     IllConditionedError, InfeasibleError,
                     InvalidArgumentError, NotConvergedError,
                     SparseInfeasibleError, StructuredInfeasibleError)
from .noise import NoiseConfig, NoiseSignal
from .plant_sim import (CostWeights, PolynomialPlant, Trajectory, TugboatPlant,
                        build_model, concat_trajectories, cost_functional,
                        drift, formation_errors, hjb_oscillator_control,
                        integrate, oscillator_plant, oscillator_weights,
                        tugboat_basis, tugboat_cost, tugboat_plant,
                        tugboat_q1, tugboat_weights)
from .policy_iteration import (FeedbackGain, FrozenBatch, LearningConfig,
                               LearningLog, PolicyCertificate, collect_batch,
                               eval_trunc_term, extract_gain, initial_gain,
                               noise_correction_onpolicy, offpolicy_correction,
                               run_off_policy, run_on_policy, solve_p)
from .serialize import (basis_from_json, basis_to_json, certificate_to_json,
                        gain_from_json, gain_to_json, log_to_json,
                        matrix_from_json, matrix_to_json, read_json,
                        table_from_csv, table_to_csv, trajectory_from_csv,
                        trajectory_to_csv, write_json)
from .sparse_synthesis import (AdmmConfig, SparseLog, admm_step,
                               augmented_lagrangian, bandwidth_metric,
                               run_sparse, soft_threshold)
from .structured_synthesis import (StructureMask, mask_complement, pi_from_p,
                                   structured_model_based,
                                   structured_model_free)

__version__ = "0.1.0"
