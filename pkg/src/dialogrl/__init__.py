"""Learning slot-filling dialogue policies from exploratory logs with a tabular MDP."""

from .corpus import Corpus, CorpusError, Step, TrajectoryRecord
from .domain import (
    INITIAL_STATE,
    MEASURES,
    TASKS,
    Action,
    AsrResult,
    DialogueState,
    OperationsVector,
    RewardBundle,
    advance,
    allowed_actions,
    estimate_state,
    evaluate_rewards,
    load_choice_table,
    reachability,
)
from .harness import (
    ChatSession,
    PipelineConfig,
    baseline_policies,
    collect,
    estimate,
    goodness_check,
    learn_policy,
    mc_evaluate,
    run_pipeline,
)
from .mdp import (
    TERMINAL,
    CyclicModelError,
    EmpiricalMDP,
    Policy,
    estimate_mdp,
    greedy_policy,
    policy_value,
    value_iterate,
)
from .stats import linear_fit, pearson, t_test
from .usersim import SimulatorConfig, load_config, zero_noise_config

__version__ = "0.1.0"
