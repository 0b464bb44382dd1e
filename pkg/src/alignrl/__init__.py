"""Desk-scale DQN laboratory with target-alignment scoring and oversampling."""

from .alignment import (
    DEFAULT_EPSILON,
    AlignmentScore,
    ErrorPair,
    Scenario,
    alignment_score,
    alignment_values,
    base_alignment,
    residual_online_error,
    select_top_k,
    top_k_indices,
)
from .agents import (
    AgentConfig,
    AgentState,
    EpsilonSchedule,
    StepReport,
    TargetUpdateConfig,
    act,
    epsilon_at,
    hard_update,
    init_agent,
    soft_update,
    targets_ddqn,
    targets_dqn,
    td_error_pair,
    train_step,
)
from .config import ConfigError, RunConfig, load_run_config, parse_run_config, save_run_config
from .envs import (
    Catch,
    Chain5,
    EnvSpec,
    GridWorld5,
    TabularMDP,
    UnsupportedEnvError,
    bellman_backup,
    make_env,
    tabular_mdp,
    value_iteration,
)
from .nn import (
    NetworkParams,
    OptimizerConfig,
    OptimizerState,
    apply_update,
    backward_mse,
    forward,
    gradient_check,
    he_uniform_init,
    init_optimizer,
)
from .replay import ReplayBuffer, Transition
from .runner import compare_runs, run_training
from .theorysim import (
    UpdateModelParams,
    approximation_bound_check,
    joint_distribution,
    monte_carlo_model,
    p_aligned,
    p_productive_given_aligned,
    run_grid,
    scoring_function_f,
)

__version__ = "0.1.0"
