"""Maximum-entropy policies for tabular MDPs.

The entropy-regularized objective E[sum_t R + alpha * H(A_t | S_t)] is
maximized, for a tabular MDP, by a softmax-of-Q policy with log-sum-exp state
values. ``exact_soft_vi`` computes that optimum by backward induction;
``train_soft_q`` learns it from sampled episodes. Entropy inside the backups
uses natural log to match exp/softmax; reporting functions convert to bits.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .dist import Dist, entropy, entropy_nats, sample_index
from .mdp import MdpSpec, enumerate_trajectories, step, trajectory_return

MAX_EXACT_ENTRIES = 10**6


@dataclasses.dataclass(frozen=True, eq=False)
class QTable:
    """State-action values together with the temperature they were built for."""

    values: np.ndarray
    alpha: float

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("Q table must be 2-D (states x actions)")
        if not np.all(np.isfinite(values)):
            raise ValueError("Q values must be finite")
        if not self.alpha > 0.0:
            raise ValueError("temperature must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    episodes: int
    learning_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episode count must be at least 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning rate must lie in (0, 1]")


def _softmax(row: np.ndarray, alpha: float) -> np.ndarray:
    x = row / alpha
    e = np.exp(x - x.max())
    return e / e.sum()


def softmax_policy(q: QTable, s: int) -> Dist:
    """Boltzmann policy pi(a|s) proportional to exp(Q(s,a)/alpha)."""
    return Dist(_softmax(q.values[s], q.alpha))


def soft_value(q: QTable, s: int) -> float:
    """Entropy-regularized state value alpha * log sum_a exp(Q(s,a)/alpha)."""
    x = q.values[s] / q.alpha
    m = float(x.max())
    return q.alpha * (m + math.log(float(np.exp(x - m).sum())))


def policy_matrix(q: QTable) -> np.ndarray:
    """All softmax rows at once; terminal-state rows are still well-defined."""
    x = q.values / q.alpha
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def exact_soft_vi(mdp: MdpSpec, alpha: float) -> QTable:
    """Exact finite-horizon soft value iteration.

    Runs backward sweeps Q(s,a) = R(s,a) + E[V(s')] with V the log-sum-exp
    soft value (zero at terminals). Because every trajectory ends within the
    horizon bound, ``horizon_bound`` sweeps from V = 0 reach the fixed point
    exactly, and the induced softmax policy maximizes the entropy-regularized
    objective.
    """
    if mdp.n_states * mdp.n_actions > MAX_EXACT_ENTRIES:
        raise ValueError("MDP too large for exact soft value iteration")
    if alpha <= 0.0:
        raise ValueError("temperature must be positive")
    values = np.zeros((mdp.n_states, mdp.n_actions))
    v = np.zeros(mdp.n_states)
    nonterminal = [s for s in range(mdp.n_states) if not mdp.is_terminal(s)]
    for _ in range(mdp.horizon_bound):
        for s in nonterminal:
            for a in range(mdp.n_actions):
                ev = 0.0
                for nxt, prob in mdp.transitions[s][a]:
                    ev += prob * v[nxt]
                values[s, a] = mdp.rewards[s, a] + ev
        for s in nonterminal:
            x = values[s] / alpha
            m = x.max()
            v[s] = alpha * (m + math.log(float(np.exp(x - m).sum())))
    return QTable(values=values, alpha=alpha)


def train_soft_q(
    mdp: MdpSpec,
    alpha: float,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
) -> QTable:
    """Tabular soft Q-learning with Boltzmann exploration.

    Behavior is the softmax policy of the current table; targets bootstrap
    through the soft value of the next state (zero at terminals). Constant
    learning rate, undiscounted episodes.
    """
    if alpha <= 0.0:
        raise ValueError("temperature must be positive")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    q = np.zeros((mdp.n_states, mdp.n_actions))
    lr = cfg.learning_rate
    for _ in range(cfg.episodes):
        s = mdp.initial_state
        while not mdp.is_terminal(s):
            probs = _softmax(q[s], alpha)
            a = sample_index(probs, rng)
            nxt, reward = step(mdp, s, a, rng)
            if mdp.is_terminal(nxt):
                target = reward
            else:
                x = q[nxt] / alpha
                m = x.max()
                target = reward + alpha * (m + math.log(float(np.exp(x - m).sum())))
            q[s, a] += lr * (target - q[s, a])
            s = nxt
    return QTable(values=q, alpha=alpha)


def exact_policy_objective(
    mdp: MdpSpec, policy: Callable[[int], Dist], alpha: float
) -> float:
    """Exact value of E[sum_t R + alpha * H_nats(pi(S_t))] by enumeration."""
    total = 0.0
    for z, prob in enumerate_trajectories(mdp, policy):
        bonus = sum(entropy_nats(policy(s.state)) for s in z.steps)
        total += prob * (trajectory_return(z) + alpha * bonus)
    return total


def expected_cumulative_entropy_bits(mdp: MdpSpec, policy: Callable[[int], Dist]) -> float:
    """Expected sum over visited states of the policy's action entropy, in bits."""
    total = 0.0
    for z, prob in enumerate_trajectories(mdp, policy):
        total += prob * sum(entropy(policy(s.state)) for s in z.steps)
    return total
