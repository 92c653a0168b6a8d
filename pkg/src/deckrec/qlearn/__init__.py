from deckrec.qlearn.agent import (
    EpsilonSchedule, SolveLog, TrainConfig, TrainLog, action_features, featurize,
    load_checkpoint, q_values, save_checkpoint, select_action, solve, state_features,
    td_error, td_errors, train,
)
from deckrec.qlearn.mlp import (
    MlpParams, apply_update, init_mlp, q_forward, q_forward_batch, q_gradient, weighted_gradient,
)
from deckrec.qlearn.replay import PrioritizedReplay, SumTree
from deckrec.qlearn.tabular import tabular_q_update

__all__ = [
    "EpsilonSchedule",
    "SolveLog",
    "TrainConfig",
    "TrainLog",
    "action_features",
    "featurize",
    "load_checkpoint",
    "q_values",
    "save_checkpoint",
    "select_action",
    "solve",
    "state_features",
    "td_error",
    "td_errors",
    "train",
    "MlpParams",
    "apply_update",
    "init_mlp",
    "q_forward",
    "q_forward_batch",
    "q_gradient",
    "weighted_gradient",
    "PrioritizedReplay",
    "SumTree",
    "tabular_q_update",
]
