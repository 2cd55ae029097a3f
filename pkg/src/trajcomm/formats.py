"""File formats: distributions, game specs, Q tables, trajectories, images,
and metrics CSVs. All writers are deterministic byte-for-byte."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dist import Dist
from .mcg import Belief, McgSpec, MessageSpace
from .mdp import MdpSpec, ObservedTrajectory, Step, Trajectory
from .maxent import QTable


def _num(x: float) -> str:
    """Nine significant digits, stable across platforms."""
    return f"{x:.9g}"


# ---------------------------------------------------------------------------
# Distributions: one probability per line, '#' starts a comment.
# ---------------------------------------------------------------------------

def load_dist(path) -> Dist:
    probs = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            probs.append(float(line))
    if not probs:
        raise ValueError(f"no probabilities found in {path}")
    return Dist(np.array(probs))


def save_dist(d: Dist, path) -> None:
    Path(path).write_text("".join(f"{p!r}\n" for p in d.probs))


# ---------------------------------------------------------------------------
# Game specs as JSON documents with dense transition/reward tables.
# ---------------------------------------------------------------------------

def mcg_to_document(mcg: McgSpec) -> dict:
    mdp = mcg.mdp
    dense = np.zeros((mdp.n_states, mdp.n_actions, mdp.n_states))
    for s in range(mdp.n_states):
        if mdp.is_terminal(s):
            continue
        for a in range(mdp.n_actions):
            for nxt, prob in mdp.transitions[s][a]:
                dense[s, a, nxt] += prob
    return {
        "mdp": {
            "n_states": mdp.n_states,
            "n_actions": mdp.n_actions,
            "initial_state": mdp.initial_state,
            "terminal_states": sorted(mdp.terminal_states),
            "horizon_bound": mdp.horizon_bound,
            "transitions": dense.tolist(),
            "rewards": mdp.rewards.tolist(),
        },
        "message_space": {
            "factored": mcg.message_space.factored,
            "block_sizes": list(mcg.message_space.block_sizes),
        },
        "prior": [list(map(float, b.probs)) for b in mcg.prior.blocks],
        "priority": mcg.priority,
        "noise_p": mcg.noise_p,
    }


def mcg_from_document(doc: dict) -> McgSpec:
    m = doc["mdp"]
    terminal = frozenset(m["terminal_states"])
    transitions = []
    for s, per_state in enumerate(m["transitions"]):
        if s in terminal:
            transitions.append(())
            continue
        rows = []
        for row in per_state:
            rows.append(tuple((i, p) for i, p in enumerate(row) if p > 0.0))
        transitions.append(tuple(rows))
    mdp = MdpSpec(
        n_states=m["n_states"],
        n_actions=m["n_actions"],
        transitions=tuple(transitions),
        rewards=np.array(m["rewards"]),
        initial_state=m["initial_state"],
        terminal_states=terminal,
        horizon_bound=m["horizon_bound"],
    )
    space = MessageSpace(
        tuple(doc["message_space"]["block_sizes"]),
        factored=doc["message_space"]["factored"],
    )
    prior = Belief(tuple(Dist(np.array(b)) for b in doc["prior"]), factored=space.factored)
    return McgSpec(
        mdp=mdp,
        message_space=space,
        prior=prior,
        priority=doc["priority"],
        noise_p=doc["noise_p"],
    )


def save_mcg(mcg: McgSpec, path) -> None:
    Path(path).write_text(json.dumps(mcg_to_document(mcg), indent=1, sort_keys=True))


def load_mcg(path) -> McgSpec:
    return mcg_from_document(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Q tables: a header line with the temperature, then 'state action value'.
# ---------------------------------------------------------------------------

def save_qtable(q: QTable, path) -> None:
    lines = [f"alpha {q.alpha!r}"]
    n_states, n_actions = q.values.shape
    for s in range(n_states):
        for a in range(n_actions):
            lines.append(f"{s} {a} {q.values[s, a]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_qtable(path) -> QTable:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    if len(head) != 2 or head[0] != "alpha":
        raise ValueError("Q-table file must start with an 'alpha <value>' header")
    alpha = float(head[1])
    triples = []
    for line in lines[1:]:
        if not line.strip():
            continue
        s, a, v = line.split()
        triples.append((int(s), int(a), float(v)))
    n_states = max(s for s, _, _ in triples) + 1
    n_actions = max(a for _, a, _ in triples) + 1
    values = np.zeros((n_states, n_actions))
    for s, a, v in triples:
        values[s, a] = v
    return QTable(values=values, alpha=alpha)


# ---------------------------------------------------------------------------
# Trajectories: header with the final state, then one step per line.
# ---------------------------------------------------------------------------

def save_trajectory(z: Trajectory, path) -> None:
    lines = [f"final_state {z.final_state}"]
    for s in z.steps:
        lines.append(f"{s.state} {s.intended_action} {s.executed_action} {s.reward!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory(path) -> Trajectory:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    if len(head) != 2 or head[0] != "final_state":
        raise ValueError("trajectory file must start with a 'final_state <s>' header")
    steps = []
    for line in lines[1:]:
        if not line.strip():
            continue
        s, intended, executed, reward = line.split()
        steps.append(Step(int(s), int(intended), int(executed), float(reward)))
    return Trajectory(steps=tuple(steps), final_state=int(head[1]))


# ---------------------------------------------------------------------------
# Plain PBM (P1) images and their factored-message encoding.
# ---------------------------------------------------------------------------

def load_pbm(path) -> np.ndarray:
    tokens = []
    for raw in Path(path).read_text().splitlines():
        tokens.extend(raw.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P1":
        raise ValueError("expected a plain PBM (P1) file")
    if len(tokens) < 3:
        raise ValueError("PBM header is truncated")
    try:
        w, h = int(tokens[1]), int(tokens[2])
    except ValueError as e:
        raise ValueError("PBM dimensions must be integers") from e
    bits = tokens[3:]
    if len(bits) != w * h:
        raise ValueError(f"PBM expects {w * h} bits, found {len(bits)}")
    if any(b not in ("0", "1") for b in bits):
        raise ValueError("PBM bits must be 0 or 1")
    return np.array([int(b) for b in bits], dtype=np.int64).reshape(h, w)


def save_pbm(image: np.ndarray, path) -> None:
    image = np.asarray(image)
    if image.ndim != 2 or not np.isin(image, (0, 1)).all():
        raise ValueError("image must be a 2-D array of 0/1 values")
    h, w = image.shape
    rows = [" ".join(str(int(v)) for v in row) for row in image]
    Path(path).write_text(f"P1\n{w} {h}\n" + "\n".join(rows) + "\n")


def image_space(n_pixels: int, block_pixels: int = 1) -> MessageSpace:
    """Factored message space for a binary image, grouping pixels into blocks."""
    if n_pixels % block_pixels != 0:
        raise ValueError("block size must divide the pixel count")
    return MessageSpace.product([2**block_pixels] * (n_pixels // block_pixels))


def image_to_message(image: np.ndarray, block_pixels: int = 1) -> tuple:
    """Row-major pixels grouped into blocks of ``block_pixels`` bits, MSB first."""
    flat = np.asarray(image).reshape(-1)
    if len(flat) % block_pixels != 0:
        raise ValueError("block size must divide the pixel count")
    out = []
    for i in range(0, len(flat), block_pixels):
        value = 0
        for b in flat[i : i + block_pixels]:
            value = (value << 1) | int(b)
        out.append(value)
    return tuple(out)


def message_to_image(m: tuple, shape: tuple[int, int], block_pixels: int = 1) -> np.ndarray:
    h, w = shape
    bits = []
    for value in m:
        bits.extend((value >> (block_pixels - 1 - k)) & 1 for k in range(block_pixels))
    if len(bits) != h * w:
        raise ValueError("message does not match the image shape")
    return np.array(bits, dtype=np.int64).reshape(h, w)


# ---------------------------------------------------------------------------
# Metrics CSV.
# ---------------------------------------------------------------------------

METRICS_COLUMNS = (
    "method",
    "beta_or_zeta",
    "noise_p",
    "seed",
    "decode_accuracy",
    "accuracy_se",
    "mean_return",
    "return_se",
    "mean_hamming",
    "hamming_se",
    "rollouts",
    "error",
)


def metrics_to_csv(rows) -> str:
    out = [",".join(METRICS_COLUMNS)]
    for r in rows:
        out.append(
            ",".join(
                [
                    r.method,
                    _num(r.param),
                    _num(r.noise_p),
                    str(r.seed),
                    _num(r.decode_accuracy),
                    _num(r.accuracy_se),
                    _num(r.mean_return),
                    _num(r.return_se),
                    _num(r.mean_hamming),
                    _num(r.hamming_se),
                    str(r.rollouts),
                    r.error.replace(",", ";"),
                ]
            )
        )
    return "\n".join(out) + "\n"


def save_metrics_csv(rows, path) -> None:
    Path(path).write_text(metrics_to_csv(rows))


def save_entropy_trace_csv(entropies, path) -> None:
    """Per-decision-point belief entropy (bits), step 0 being the prior."""
    lines = ["step,belief_entropy_bits"]
    for i, h in enumerate(entropies):
        lines.append(f"{i},{_num(h)}")
    Path(path).write_text("\n".join(lines) + "\n")
