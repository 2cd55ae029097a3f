"""The coupling-coded sender and receiver.

At every decision point the sender couples its current belief over the
message (or, for factored spaces, the block with the largest entropy) with
the planned max-entropy action distribution, using a greedy minimum entropy
coupling. Sampling the intended action from the message's conditional row
leaves the action marginal untouched, so the MDP return is preserved in
expectation over messages, while the coupling greedily maximizes the mutual
information between message and action. The receiver replays the identical
construction from the observed trajectory and reads off the maximum a
posteriori message.

Both agents update beliefs with the executed action. Under actuator noise
the sender cannot transmit its intention, so mirroring the executed action is
the only choice that keeps the two belief traces synchronized.
"""

from __future__ import annotations

import dataclasses
import logging

import numpy as np

from .dist import Dist, SUM_ATOL, conditional_rows, entropy, sample_index
from .mcg import Belief, McgSpec, message_prior_prob
from .mdp import ObservedTrajectory, Step, Trajectory, apply_actuator_noise, step
from .maxent import QTable, softmax_policy
from .mec import greedy_mec

logger = logging.getLogger(__name__)

# Explicit beliefs beyond this size must use a factored space instead; each
# coupling call is O(N log N) in the belief support.
MAX_EXPLICIT_MESSAGES = 4096

# Belief mass below this after an update means the observed action was
# impossible under the replayed rule; the belief resets to uniform.
WIPEOUT_EPS = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class DecisionRule:
    """Message-conditional action distributions sharing a fixed marginal."""

    per_message: tuple[Dist, ...]
    marginal: Dist


@dataclasses.dataclass(eq=False)
class EpisodeRecord:
    """Diagnostics for one sender episode and (optionally) its decoding."""

    trajectory: Trajectory
    sender_belief_trace: tuple[Belief, ...]
    decoded: object = None
    receiver_belief_trace: tuple[Belief, ...] | None = None


def make_decision_rule(b: Dist, action_dist: Dist) -> DecisionRule:
    """Couple a belief block with an action distribution and split it by message.

    The rows are the conditionals of a greedy minimum entropy coupling, so
    their belief-weighted mixture reproduces ``action_dist`` exactly and the
    one-step mutual information between message and action is greedily
    maximized.
    """
    coupling = greedy_mec(b, action_dist)
    rows = conditional_rows(coupling, fallback=action_dist)
    return DecisionRule(per_message=rows, marginal=action_dist)


def check_mixture(rule: DecisionRule, b: Dist) -> None:
    """Assert the action-marginal identity at a decision point.

    The belief-weighted mixture of the per-message rows must equal the
    planned action distribution to within 1e-9 per action. A violation means
    sender and receiver would drift apart, so it raises immediately.
    """
    rows = np.stack([d.probs for d in rule.per_message])
    mix = b.probs @ rows
    err = float(np.max(np.abs(mix - rule.marginal.probs)))
    if err > SUM_ATOL:
        raise RuntimeError(f"decision-rule mixture drifted from the policy by {err!r}")


def posterior_update(b: Dist, rule: DecisionRule, executed: int) -> Dist:
    """Bayes update of a belief block from one executed action.

    If the observed action carries zero likelihood under every live message
    (possible only under noise or a corrupted trajectory), the belief resets
    to uniform and the desync is logged rather than silently propagated.
    """
    likelihood = np.array([row[executed] for row in rule.per_message])
    weights = b.probs * likelihood
    total = float(weights.sum())
    if total < WIPEOUT_EPS:
        logger.warning(
            "belief mass wiped out by action %d; resetting block to uniform", executed
        )
        return Dist.uniform(len(b))
    return Dist(weights / total)


def _active_block(belief: Belief) -> int:
    """Index of the block to couple next: largest entropy, ties to the lowest.

    Entropies are compared exactly; sender and receiver run this on
    bit-identical beliefs, so the selection can never diverge.
    """
    if not belief.factored:
        return 0
    best, best_h = 0, -1.0
    for j, block in enumerate(belief.blocks):
        h = entropy(block)
        if h > best_h:
            best, best_h = j, h
    return best


def _plan(belief: Belief, action_dist: Dist) -> tuple[int, DecisionRule]:
    block = _active_block(belief)
    if len(belief.blocks[block]) > MAX_EXPLICIT_MESSAGES:
        raise ValueError(
            f"belief support {len(belief.blocks[block])} exceeds the per-coupling cap "
            f"{MAX_EXPLICIT_MESSAGES}; use a factored message space"
        )
    rule = make_decision_rule(belief.blocks[block], action_dist)
    check_mixture(rule, belief.blocks[block])
    return block, rule


def _apply(belief: Belief, block: int, rule: DecisionRule, executed: int) -> Belief:
    blocks = list(belief.blocks)
    blocks[block] = posterior_update(blocks[block], rule, executed)
    return Belief(tuple(blocks), factored=belief.factored)


def sender_episode(
    q: QTable, mcg: McgSpec, m, rng: np.random.Generator
) -> EpisodeRecord:
    """Play one sender episode carrying message ``m``.

    At each state the sender rebuilds the decision rule from its belief and
    the max-entropy policy, samples its intended action from the row of the
    active message block, passes it through actuator noise, and updates the
    belief with the executed action (mirroring what the receiver will see).
    """
    if not mcg.message_space.contains(m):
        raise ValueError(f"message {m!r} is not in the message space")
    belief = mcg.prior
    trace = [belief]
    steps = []
    s = mcg.mdp.initial_state
    while not mcg.mdp.is_terminal(s):
        block, rule = _plan(belief, softmax_policy(q, s))
        value = m[block] if mcg.message_space.factored else m
        intended = sample_index(rule.per_message[value].probs, rng)
        executed = apply_actuator_noise(intended, mcg.noise_p, mcg.mdp.n_actions, rng)
        belief = _apply(belief, block, rule, executed)
        trace.append(belief)
        nxt, reward = step(mcg.mdp, s, executed, rng)
        steps.append(Step(s, intended, executed, reward))
        s = nxt
    return EpisodeRecord(
        trajectory=Trajectory(steps=tuple(steps), final_state=s),
        sender_belief_trace=tuple(trace),
    )


def map_estimate(belief: Belief, factored: bool):
    """Maximum a posteriori message; argmax per block, ties to the lowest index."""
    picks = [int(np.argmax(b.probs)) for b in belief.blocks]
    return tuple(picks) if factored else picks[0]


def receiver_decode(
    q: QTable, mcg: McgSpec, z: ObservedTrajectory
) -> tuple[object, tuple[Belief, ...]]:
    """Decode a message from an observed trajectory.

    Replays exactly the sender's rule construction and belief updates
    (identical block selection and tie-breaking) over the executed actions,
    then returns the MAP message and the full belief trace.
    """
    _validate_view(mcg, z)
    belief = mcg.prior
    trace = [belief]
    for s, executed in z.steps:
        block, rule = _plan(belief, softmax_policy(q, s))
        belief = _apply(belief, block, rule, executed)
        trace.append(belief)
    return map_estimate(belief, mcg.message_space.factored), tuple(trace)


def _validate_view(mcg: McgSpec, z: ObservedTrajectory) -> None:
    mdp = mcg.mdp
    states = [s for s, _ in z.steps] + [z.final_state]
    if states[0] != mdp.initial_state:
        raise ValueError("trajectory does not start at the MDP's initial state")
    for (s, a), nxt in zip(z.steps, states[1:]):
        if mdp.is_terminal(s):
            raise ValueError(f"trajectory steps from terminal state {s}")
        if not (0 <= a < mdp.n_actions):
            raise ValueError(f"executed action {a} out of range")
        if all(t != nxt or p == 0.0 for t, p in mdp.transitions[s][a]):
            raise ValueError(f"transition {s} -[{a}]-> {nxt} impossible under the MDP")
    if not mdp.is_terminal(z.final_state):
        raise ValueError("trajectory does not end in a terminal state")


def run_roundtrip(q: QTable, mcg: McgSpec, m, rng: np.random.Generator) -> EpisodeRecord:
    """Sender episode followed by decoding; fills the full record."""
    record = sender_episode(q, mcg, m, rng)
    decoded, trace = receiver_decode(q, mcg, record.trajectory.receiver_view())
    record.decoded = decoded
    record.receiver_belief_trace = trace
    return record


def exact_coded_value(q: QTable, mcg: McgSpec) -> tuple[float, float]:
    """Exact message-averaged expected return and decode accuracy, noiseless.

    Walks every (message, trajectory) branch of the coded sender, replicating
    the belief dynamics exactly, so it is exponential in the horizon and only
    suitable for small games.
    """
    if mcg.noise_p != 0.0:
        raise ValueError("exact evaluation assumes a noiseless game")
    total_return = 0.0
    total_acc = 0.0

    def walk(s, belief, m, prob, ret):
        nonlocal total_return, total_acc
        if mcg.mdp.is_terminal(s):
            total_return += prob * ret
            if map_estimate(belief, mcg.message_space.factored) == m:
                total_acc += prob
            return
        block, rule = _plan(belief, softmax_policy(q, s))
        value = m[block] if mcg.message_space.factored else m
        row = rule.per_message[value]
        for a in range(mcg.mdp.n_actions):
            pa = row[a]
            if pa == 0.0:
                continue
            nb = _apply(belief, block, rule, a)
            reward = float(mcg.mdp.rewards[s, a])
            for nxt, pt in mcg.mdp.transitions[s][a]:
                if pt > 0.0:
                    walk(nxt, nb, m, prob * pa * pt, ret + reward)

    for m in mcg.message_space.messages():
        pm = message_prior_prob(mcg, m)
        if pm > 0.0:
            walk(mcg.mdp.initial_state, mcg.prior, m, pm, 0.0)
    return total_return, total_acc
