"""Markov coding games: message spaces, beliefs, payoffs, and exact evaluators.

A Markov coding game wraps an MDP with a message space, a prior over
messages, a priority weight on decode correctness, and an actuator-noise
level. The sender must communicate a sampled message through the trajectory
it produces; the receiver decodes from the observed trajectory.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from typing import Callable

import numpy as np

from .dist import Dist, entropy, sample_index
from .mdp import MdpSpec, ObservedTrajectory, Trajectory, enumerate_trajectories, trajectory_return


@dataclasses.dataclass(frozen=True)
class MessageSpace:
    """Either a flat set of messages or a product of small blocks.

    Explicit spaces use integer messages in ``range(cardinality)``. Factored
    spaces use tuples with one index per block; their cardinality is the
    product of the block sizes.
    """

    block_sizes: tuple[int, ...]
    factored: bool

    def __post_init__(self):
        if not self.block_sizes or any(b < 1 for b in self.block_sizes):
            raise ValueError("block sizes must be positive")
        if not self.factored and len(self.block_sizes) != 1:
            raise ValueError("an explicit space has a single block")
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))

    @classmethod
    def explicit(cls, cardinality: int) -> "MessageSpace":
        return cls((cardinality,), factored=False)

    @classmethod
    def product(cls, block_sizes) -> "MessageSpace":
        return cls(tuple(block_sizes), factored=True)

    @property
    def cardinality(self) -> int:
        return int(np.prod([b for b in self.block_sizes], dtype=object))

    def contains(self, m) -> bool:
        if self.factored:
            return (
                isinstance(m, tuple)
                and len(m) == len(self.block_sizes)
                and all(0 <= v < b for v, b in zip(m, self.block_sizes))
            )
        return isinstance(m, (int, np.integer)) and 0 <= m < self.block_sizes[0]

    def messages(self):
        """Iterate the whole space (guarded; intended for small spaces only)."""
        if self.cardinality > 10**6:
            raise ValueError("message space too large to enumerate")
        if self.factored:
            return itertools.product(*(range(b) for b in self.block_sizes))
        return range(self.block_sizes[0])


@dataclasses.dataclass(frozen=True, eq=False)
class Belief:
    """A posterior over messages: one Dist, or one Dist per factored block."""

    blocks: tuple[Dist, ...]
    factored: bool

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("belief needs at least one block")
        if not self.factored and len(self.blocks) != 1:
            raise ValueError("an explicit belief has a single block")
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @classmethod
    def explicit(cls, d: Dist) -> "Belief":
        return cls((d,), factored=False)

    @classmethod
    def uniform(cls, space: MessageSpace) -> "Belief":
        return cls(tuple(Dist.uniform(b) for b in space.block_sizes), factored=space.factored)

    def entropy_bits(self) -> float:
        return float(sum(entropy(b) for b in self.blocks))

    def matches(self, space: MessageSpace) -> bool:
        return (
            self.factored == space.factored
            and len(self.blocks) == len(space.block_sizes)
            and all(len(d) == b for d, b in zip(self.blocks, space.block_sizes))
        )


@dataclasses.dataclass(frozen=True, eq=False)
class McgSpec:
    """An MDP plus message space, prior, message priority, and actuator noise."""

    mdp: MdpSpec
    message_space: MessageSpace
    prior: Belief
    priority: float
    noise_p: float = 0.0

    def __post_init__(self):
        if self.priority < 0.0:
            raise ValueError("message priority must be non-negative")
        if not 0.0 <= self.noise_p <= 0.5:
            raise ValueError("actuator noise must lie in [0, 0.5]")
        if not self.prior.matches(self.message_space):
            raise ValueError("prior shape does not match the message space")


def sample_message(mcg: McgSpec, rng: np.random.Generator):
    """Draw a message from the prior."""
    draws = [sample_index(d.probs, rng) for d in mcg.prior.blocks]
    if mcg.message_space.factored:
        return tuple(draws)
    return draws[0]


def message_prior_prob(mcg: McgSpec, m) -> float:
    if mcg.message_space.factored:
        return float(np.prod([d[v] for d, v in zip(mcg.prior.blocks, m)]))
    return mcg.prior.blocks[0][m]


def mcg_payoff(z: Trajectory, m, m_hat, priority: float) -> float:
    """Trajectory return plus the priority-weighted decode indicator."""
    return trajectory_return(z) + (priority if m == m_hat else 0.0)


def hamming_distance(m: tuple, m_hat: tuple) -> int:
    """Number of differing blocks between two factored messages."""
    if not isinstance(m, tuple) or not isinstance(m_hat, tuple) or len(m) != len(m_hat):
        raise ValueError("messages must be factored tuples of equal shape")
    return int(sum(1 for a, b in zip(m, m_hat) if a != b))


def exact_mcg_value(
    mcg: McgSpec,
    sender_policy: Callable[[int, object], Dist],
    receiver_guess: Callable[[ObservedTrajectory], Dist],
) -> float:
    """Exact expected payoff of a (sender, receiver) pair, noiseless.

    ``sender_policy(s, m)`` gives the sender's action distribution;
    ``receiver_guess(view)`` gives a distribution over guessed messages,
    indexed in message-enumeration order. Enumeration is over every message
    and every positive-probability trajectory, so this is only for small
    games.
    """
    messages = list(mcg.message_space.messages())
    total = 0.0
    for mi, m in enumerate(messages):
        pm = message_prior_prob(mcg, m)
        if pm == 0.0:
            continue
        for z, pz in enumerate_trajectories(mcg.mdp, lambda s, _m=m: sender_policy(s, _m)):
            guess = receiver_guess(z.receiver_view())
            total += pm * pz * (trajectory_return(z) + mcg.priority * guess[mi])
    return total
