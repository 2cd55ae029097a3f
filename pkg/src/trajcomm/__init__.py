"""Communicating messages through MDP trajectories.

A sender plans with a max-entropy policy, then couples its running posterior
over the message with the planned action distribution at every decision point
using greedy minimum entropy coupling. The receiver replays the construction
from the observed trajectory and decodes the maximum a posteriori message.
"""

from .baseline import (
    EvalStats,
    MessageConditionalQ,
    evaluate_rl_pr,
    rollout_rl_pr,
    train_rl_pr,
)
from .coding import (
    DecisionRule,
    EpisodeRecord,
    exact_coded_value,
    make_decision_rule,
    map_estimate,
    posterior_update,
    receiver_decode,
    run_roundtrip,
    sender_episode,
)
from .dist import (
    CouplingEntropies,
    Dist,
    SparseCoupling,
    conditional_rows,
    coupling_entropies,
    entropy,
    entropy_nats,
)
from .envs import (
    CodeGridSpec,
    CodingMdpSpec,
    build_channel_chain,
    build_codegrid,
    build_coding_mdp,
    build_toy_mcg,
    chain_mcg,
)
from .maxent import (
    QTable,
    TrainConfig,
    exact_policy_objective,
    exact_soft_vi,
    expected_cumulative_entropy_bits,
    soft_value,
    softmax_policy,
    train_soft_q,
)
from .mcg import (
    Belief,
    McgSpec,
    MessageSpace,
    exact_mcg_value,
    hamming_distance,
    mcg_payoff,
    sample_message,
)
from .mdp import (
    MdpSpec,
    ObservedTrajectory,
    Step,
    Trajectory,
    apply_actuator_noise,
    enumerate_trajectories,
    exact_policy_return,
    rollout,
    step,
    trajectory_return,
)
from .mec import exact_mec_oracle, greedy_mec
from .sweep import MetricsRow, SweepConfig, build_env, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
