"""Concrete environments: the one-shot payoff game, a 4x4 gridworld with a
deadline, source-coding MDPs, and a long deterministic channel chain."""

from __future__ import annotations

import dataclasses

import numpy as np

from .dist import Dist
from .mcg import Belief, McgSpec, MessageSpace
from .mdp import MdpSpec


@dataclasses.dataclass(frozen=True)
class CodeGridSpec:
    """A square grid the agent must cross before a deadline.

    Positions are 1-indexed; the state encodes (x, y, t). Bumping a wall
    leaves the position unchanged but still consumes a timestep. Reaching the
    goal ends the episode with reward 1; running out the clock pays 0.
    """

    width: int = 4
    height: int = 4
    start: tuple[int, int] = (1, 1)
    goal: tuple[int, int] = (4, 4)
    max_steps: int = 8


@dataclasses.dataclass(frozen=True)
class CodingMdpSpec:
    """A source-coding task cast as an MDP.

    The agent emits alphabet symbols (paying 1 each, or a per-symbol cost for
    the ``unequal_costs`` variant) and stops with a free terminator action.
    ``length_limit`` bounds the number of emitted symbols; the ``standard``
    variant uses ``max_symbols`` as a generous cap so episodes stay finite.
    """

    variant: str = "standard"
    alphabet_size: int = 2
    length_limit: int | None = None
    symbol_costs: tuple[float, ...] | None = None
    max_symbols: int = 64

    def __post_init__(self):
        if self.variant not in ("standard", "length_limited", "unequal_costs"):
            raise ValueError(f"unknown coding variant {self.variant!r}")
        if self.alphabet_size < 1:
            raise ValueError("alphabet must have at least one symbol")
        if self.variant == "length_limited":
            if self.length_limit is None or self.length_limit < 1:
                raise ValueError("length-limited coding needs a positive limit")
        if self.variant == "unequal_costs":
            if self.symbol_costs is None or len(self.symbol_costs) != self.alphabet_size:
                raise ValueError("unequal-cost coding needs one cost per symbol")
            if any(c < 0 for c in self.symbol_costs):
                raise ValueError("symbol costs must be non-negative")
        if self.max_symbols < 1:
            raise ValueError("symbol cap must be positive")


def build_toy_mcg(priority: float, noise_p: float = 0.0) -> McgSpec:
    """One non-terminal state, three actions with rewards (4, 3, 0), and two
    equiprobable messages."""
    mdp = MdpSpec(
        n_states=2,
        n_actions=3,
        transitions=((((1, 1.0),), ((1, 1.0),), ((1, 1.0),)), ()),
        rewards=np.array([[4.0, 3.0, 0.0], [0.0, 0.0, 0.0]]),
        initial_state=0,
        terminal_states=frozenset({1}),
        horizon_bound=1,
    )
    return McgSpec(
        mdp=mdp,
        message_space=MessageSpace.explicit(2),
        prior=Belief.explicit(Dist.uniform(2)),
        priority=priority,
        noise_p=noise_p,
    )


# Grid actions, in index order.
GRID_ACTIONS = ("left", "right", "up", "down")
_GRID_MOVES = ((-1, 0), (1, 0), (0, 1), (0, -1))


def build_codegrid(
    n_messages: int,
    priority: float = 1.0,
    noise_p: float = 0.0,
    grid: CodeGridSpec = CodeGridSpec(),
) -> McgSpec:
    """Gridworld coding game: reach the far corner within the deadline while
    carrying one of ``n_messages`` equiprobable messages."""
    w, h, t_max = grid.width, grid.height, grid.max_steps
    gx, gy = grid.goal[0] - 1, grid.goal[1] - 1
    sx, sy = grid.start[0] - 1, grid.start[1] - 1

    def sid(x: int, y: int, t: int) -> int:
        return (t * h + y) * w + x

    n_states = w * h * (t_max + 1)
    terminal = set()
    rewards = np.zeros((n_states, 4))
    transitions = []
    for t in range(t_max + 1):
        for y in range(h):
            for x in range(w):
                s = sid(x, y, t)
                if (x, y) == (gx, gy) or t == t_max:
                    terminal.add(s)
    for s in range(n_states):
        t, rem = divmod(s, w * h)
        y, x = divmod(rem, w)
        if s in terminal:
            transitions.append(())
            continue
        per_action = []
        for a, (dx, dy) in enumerate(_GRID_MOVES):
            nx = min(max(x + dx, 0), w - 1)
            ny = min(max(y + dy, 0), h - 1)
            nxt = sid(nx, ny, t + 1)
            per_action.append(((nxt, 1.0),))
            if (nx, ny) == (gx, gy):
                rewards[s, a] = 1.0
        transitions.append(tuple(per_action))
    mdp = MdpSpec(
        n_states=n_states,
        n_actions=4,
        transitions=tuple(transitions),
        rewards=rewards,
        initial_state=sid(sx, sy, 0),
        terminal_states=frozenset(terminal),
        horizon_bound=t_max,
    )
    return McgSpec(
        mdp=mdp,
        message_space=MessageSpace.explicit(n_messages),
        prior=Belief.explicit(Dist.uniform(n_messages)),
        priority=priority,
        noise_p=noise_p,
    )


def build_coding_mdp(spec: CodingMdpSpec) -> MdpSpec:
    """Source coding as an MDP: states count emitted symbols, alphabet actions
    advance at their cost, and the final action stops for free."""
    limit = spec.length_limit if spec.variant == "length_limited" else spec.max_symbols
    k = spec.alphabet_size
    if spec.variant == "unequal_costs":
        costs = list(spec.symbol_costs)
    else:
        costs = [1.0] * k
    # States 0..limit are symbol counts; state limit+1 is the stopped sink.
    n_states = limit + 2
    sink = limit + 1
    rewards = np.zeros((n_states, k + 1))
    transitions = []
    for t in range(limit):
        per_action = [((t + 1, 1.0),) for _ in range(k)]
        per_action.append(((sink, 1.0),))
        rewards[t, :k] = [-c for c in costs]
        transitions.append(tuple(per_action))
    transitions.append(())  # state == limit: forced stop
    transitions.append(())  # sink
    return MdpSpec(
        n_states=n_states,
        n_actions=k + 1,
        transitions=tuple(transitions),
        rewards=rewards,
        initial_state=0,
        terminal_states=frozenset({limit, sink}),
        horizon_bound=limit + 1,
    )


def build_channel_chain(
    steps: int, n_actions: int, rewards: dict | None = None
) -> MdpSpec:
    """Deterministic chain where every action advances one state.

    ``rewards`` optionally maps a step index to the reward every action pays
    there (default 0 everywhere). With all-zero rewards this is a pure
    referential game: the max-entropy policy is uniform and the chain carries
    log2(n_actions) bits of coupling budget per step.
    """
    if steps < 1:
        raise ValueError("chain needs at least one step")
    table = np.zeros((steps + 1, n_actions))
    for t, r in (rewards or {}).items():
        if not 0 <= t < steps:
            raise ValueError(f"reward step {t} outside the chain")
        table[t, :] = r
    transitions = tuple(
        tuple(((t + 1, 1.0),) for _ in range(n_actions)) for t in range(steps)
    ) + ((),)
    return MdpSpec(
        n_states=steps + 1,
        n_actions=n_actions,
        transitions=transitions,
        rewards=table,
        initial_state=0,
        terminal_states=frozenset({steps}),
        horizon_bound=steps,
    )


def chain_mcg(
    mdp: MdpSpec,
    space: MessageSpace,
    priority: float = 1.0,
    noise_p: float = 0.0,
) -> McgSpec:
    """Wrap a chain (or any MDP) with a uniform prior over the given space."""
    return McgSpec(
        mdp=mdp,
        message_space=space,
        prior=Belief.uniform(space),
        priority=priority,
        noise_p=noise_p,
    )
