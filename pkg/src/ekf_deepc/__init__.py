"""Data-enabled predictive control with Hankel averaging and an implicit-model EKF."""
from .deepc import (DeePCConfig, ParametricQp, PredictionMap, StepResult, assemble_parametric_qp,
                    deepc_step_ekf, deepc_step_standard, prediction_map)
from .ekf import EkfNoise, EkfState, ImplicitDynamics, ekf_init, ekf_predict, ekf_update, kalman_gain
from .hankel import (BlockHankel, DataBlocks, average_data_blocks, build_block_hankel, excitation_order,
                     is_persistently_exciting, numerical_rank, split_past_future)
from .harness import (VARIANTS, ExperimentConfig, ExperimentResult, MpcOracle, Reference, closed_loop_cost,
                      monte_carlo, mpc_oracle, prepare_data, run_closed_loop, sweep_lambda, sweep_parameter)
from .lti_sim import (DimensionError, LtiModel, NoiseSpec, Trajectory, benchmark_model, collect_dataset,
                      generate_pe_input, simulate, step)
from .qp import (ActiveSetSolver, AffineLaw, InfeasibleError, NotConvexError, QpError, QpProblem, QpSolution,
                 affine_law, check_kkt, solve)

__version__ = "0.1.0"
