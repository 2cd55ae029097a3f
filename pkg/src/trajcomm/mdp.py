"""Tabular episodic MDPs: specs, rollouts, and exhaustive trajectory enumeration."""

from __future__ import annotations

import dataclasses
from typing import Callable, NamedTuple

import numpy as np

from .dist import SUM_ATOL, Dist, sample_index

ENUMERATION_LIMIT = 10**6


class Step(NamedTuple):
    state: int
    intended_action: int
    executed_action: int
    reward: float


@dataclasses.dataclass(frozen=True, eq=False)
class Trajectory:
    """A terminal history: per-step records plus the state the episode ended in.

    Intended actions are diagnostics only; anything acting as an observer of
    the episode must go through ``receiver_view``, which strips them.
    """

    steps: tuple[Step, ...]
    final_state: int

    def receiver_view(self) -> "ObservedTrajectory":
        return ObservedTrajectory(
            steps=tuple((s.state, s.executed_action) for s in self.steps),
            final_state=self.final_state,
        )


@dataclasses.dataclass(frozen=True, eq=False)
class ObservedTrajectory:
    """What an outside observer sees: states and executed actions only."""

    steps: tuple[tuple[int, int], ...]
    final_state: int


@dataclasses.dataclass(frozen=True, eq=False)
class MdpSpec:
    """A finite episodic MDP.

    ``transitions[s][a]`` is a tuple of ``(next_state, probability)`` pairs;
    rows for terminal states may be empty. Episodes are undiscounted and must
    terminate within ``horizon_bound`` steps, which builders guarantee by
    encoding time into the state where needed.
    """

    n_states: int
    n_actions: int
    transitions: tuple
    rewards: np.ndarray
    initial_state: int
    terminal_states: frozenset
    horizon_bound: int

    def __post_init__(self):
        rewards = np.array(self.rewards, dtype=np.float64)
        if rewards.shape != (self.n_states, self.n_actions):
            raise ValueError("reward table shape must be (n_states, n_actions)")
        rewards.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "terminal_states", frozenset(self.terminal_states))
        if not (0 <= self.initial_state < self.n_states):
            raise ValueError("initial state out of range")
        if self.horizon_bound < 1:
            raise ValueError("horizon bound must be positive")
        if len(self.transitions) != self.n_states:
            raise ValueError("transition table must have one row per state")
        for s, per_state in enumerate(self.transitions):
            if s in self.terminal_states:
                continue
            if len(per_state) != self.n_actions:
                raise ValueError(f"state {s} must define every action")
            for a, branches in enumerate(per_state):
                total = 0.0
                for nxt, prob in branches:
                    if not (0 <= nxt < self.n_states):
                        raise ValueError(f"transition target {nxt} out of range")
                    if prob < 0.0:
                        raise ValueError("transition probabilities must be non-negative")
                    total += prob
                if abs(total - 1.0) > SUM_ATOL:
                    raise ValueError(f"transition row ({s}, {a}) sums to {total!r}")

    def is_terminal(self, s: int) -> bool:
        return s in self.terminal_states


def step(mdp: MdpSpec, s: int, a: int, rng: np.random.Generator) -> tuple[int, float]:
    """Sample one environment transition; the reward is R(s, a)."""
    if mdp.is_terminal(s):
        raise ValueError(f"cannot step from terminal state {s}")
    if not (0 <= a < mdp.n_actions):
        raise ValueError(f"action {a} out of range")
    branches = mdp.transitions[s][a]
    if len(branches) == 1:
        nxt = branches[0][0]
    else:
        probs = np.array([p for _, p in branches])
        nxt = branches[sample_index(probs, rng)][0]
    return nxt, float(mdp.rewards[s, a])


def apply_actuator_noise(a: int, noise_p: float, n_actions: int, rng: np.random.Generator) -> int:
    """With probability ``noise_p``, replace the action by a uniform draw.

    The uniform draw ranges over all actions and may coincide with ``a``.
    """
    if not 0.0 <= noise_p <= 1.0:
        raise ValueError("noise probability must lie in [0, 1]")
    if noise_p > 0.0 and rng.random() < noise_p:
        return int(rng.integers(n_actions))
    return a


def trajectory_return(z: Trajectory) -> float:
    """Undiscounted sum of step rewards."""
    return float(sum(s.reward for s in z.steps))


def rollout(
    mdp: MdpSpec,
    policy: Callable[[int], Dist],
    rng: np.random.Generator,
    noise_p: float = 0.0,
) -> Trajectory:
    """Play one episode following ``policy``, with optional actuator noise."""
    s = mdp.initial_state
    steps = []
    while not mdp.is_terminal(s):
        if len(steps) > mdp.horizon_bound:
            raise RuntimeError("episode exceeded the declared horizon bound")
        intended = sample_index(policy(s).probs, rng)
        executed = apply_actuator_noise(intended, noise_p, mdp.n_actions, rng)
        nxt, reward = step(mdp, s, executed, rng)
        steps.append(Step(s, intended, executed, reward))
        s = nxt
    return Trajectory(steps=tuple(steps), final_state=s)


def enumerate_trajectories(
    mdp: MdpSpec, policy: Callable[[int], Dist]
) -> list[tuple[Trajectory, float]]:
    """Every positive-probability trajectory of a (noiseless) policy.

    Probabilities multiply policy and transition branches and sum to 1 within
    tolerance. Raises if more than ``ENUMERATION_LIMIT`` trajectories would be
    produced.
    """
    out: list[tuple[Trajectory, float]] = []
    prefix: list[Step] = []

    def walk(s: int, prob: float):
        if mdp.is_terminal(s):
            if len(out) >= ENUMERATION_LIMIT:
                raise ValueError("trajectory enumeration exceeded its size guard")
            out.append((Trajectory(steps=tuple(prefix), final_state=s), prob))
            return
        action_probs = policy(s).probs
        for a in range(mdp.n_actions):
            pa = float(action_probs[a])
            if pa == 0.0:
                continue
            reward = float(mdp.rewards[s, a])
            for nxt, pt in mdp.transitions[s][a]:
                if pt == 0.0:
                    continue
                prefix.append(Step(s, a, a, reward))
                walk(nxt, prob * pa * pt)
                prefix.pop()

    walk(mdp.initial_state, 1.0)
    return out


def exact_policy_return(mdp: MdpSpec, policy: Callable[[int], Dist]) -> float:
    """Exact expected return of a stationary policy, by enumeration."""
    return sum(prob * trajectory_return(z) for z, prob in enumerate_trajectories(mdp, policy))
