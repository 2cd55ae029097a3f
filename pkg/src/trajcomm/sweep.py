"""Parameter sweeps: run (grid x noise x seed) cells and collect metrics rows.

The grid axis is the inverse temperature (beta) for the coupling-coded
sender, or the message priority (zeta) for the RL baseline. Each cell plays
``rollouts`` evaluation episodes and reports means with standard errors.
Cells are fully deterministic given the config, and per-cell failures are
recorded in the row instead of aborting the sweep.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import envs
from .baseline import rollout_rl_pr, train_rl_pr
from .coding import run_roundtrip
from .dist import sample_index
from .formats import image_space, save_metrics_csv
from .maxent import TrainConfig, exact_soft_vi
from .mcg import Belief, McgSpec, MessageSpace, hamming_distance, sample_message
from .mdp import trajectory_return


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    """One sweep: an environment, a method, and the axes to scan.

    ``grid`` holds beta values for the coded sender and zeta values for the
    baseline. ``episodes`` is the per-cell training budget (used by the
    baseline; the coded sender plans exactly). ``method_params`` passes
    training knobs (learning_rate, alpha_start, alpha_end) through to the
    baseline trainer.
    """

    env: str
    env_params: dict
    method: str
    grid: tuple[float, ...]
    seeds: tuple[int, ...]
    episodes: int = 200_000
    rollouts: int = 10
    noise_p: tuple[float, ...] = (0.0,)
    method_params: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if not self.grid:
            raise ValueError("sweep grid must be non-empty")
        if not self.seeds:
            raise ValueError("sweep needs at least one seed")
        if self.method not in ("meme", "rl_pr"):
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "noise_p", tuple(float(n) for n in self.noise_p))


@dataclasses.dataclass(frozen=True)
class MetricsRow:
    method: str
    param: float
    noise_p: float
    seed: int
    decode_accuracy: float
    accuracy_se: float
    mean_return: float
    return_se: float
    mean_hamming: float
    hamming_se: float
    rollouts: int
    error: str = ""

    def __post_init__(self):
        if self.error:
            return
        if not 0.0 <= self.decode_accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        if self.mean_hamming < 0.0:
            raise ValueError("hamming distance cannot be negative")


def build_env(name: str, params: dict, noise_p: float = 0.0) -> McgSpec:
    """Instantiate a named environment with the given parameters."""
    params = dict(params)
    if name == "toy":
        return envs.build_toy_mcg(params.get("priority", 1.0), noise_p=noise_p)
    if name == "codegrid":
        return envs.build_codegrid(
            params["n_messages"], params.get("priority", 1.0), noise_p=noise_p
        )
    if name == "chain":
        mdp = envs.build_channel_chain(
            params["steps"],
            params["n_actions"],
            rewards={int(k): v for k, v in params.get("rewards", {}).items()},
        )
        if "image_pixels" in params:
            space = image_space(params["image_pixels"], params.get("block_pixels", 1))
        else:
            space = MessageSpace.explicit(params["n_messages"])
        return envs.chain_mcg(mdp, space, params.get("priority", 1.0), noise_p=noise_p)
    if name == "coding":
        spec = envs.CodingMdpSpec(
            variant=params.get("variant", "standard"),
            alphabet_size=params.get("alphabet_size", 2),
            length_limit=params.get("length_limit"),
            symbol_costs=tuple(params["symbol_costs"]) if "symbol_costs" in params else None,
            max_symbols=params.get("max_symbols", 64),
        )
        mdp = envs.build_coding_mdp(spec)
        space = MessageSpace.explicit(params.get("n_messages", 2))
        return McgSpec(
            mdp=mdp,
            message_space=space,
            prior=Belief.uniform(space),
            priority=params.get("priority", 1.0),
            noise_p=noise_p,
        )
    raise ValueError(f"unknown environment {name!r}")


def _se(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def _meme_cell(cfg: SweepConfig, mcg: McgSpec, beta: float, rng) -> tuple:
    q = exact_soft_vi(mcg.mdp, alpha=1.0 / beta)
    hits = np.zeros(cfg.rollouts)
    rets = np.zeros(cfg.rollouts)
    hams = np.zeros(cfg.rollouts)
    for i in range(cfg.rollouts):
        m = sample_message(mcg, rng)
        record = run_roundtrip(q, mcg, m, rng)
        hits[i] = 1.0 if record.decoded == m else 0.0
        rets[i] = trajectory_return(record.trajectory)
        if mcg.message_space.factored:
            hams[i] = hamming_distance(m, record.decoded)
        else:
            hams[i] = 0.0 if record.decoded == m else 1.0
    return hits, rets, hams


def _rl_pr_cell(cfg: SweepConfig, mcg: McgSpec, zeta: float, seed: int, rng) -> tuple:
    mp = cfg.method_params
    train_cfg = TrainConfig(
        episodes=cfg.episodes,
        learning_rate=mp.get("learning_rate", 0.25),
        seed=seed,
    )
    q = train_rl_pr(
        mcg,
        priority=zeta,
        cfg=train_cfg,
        rng=rng,
        alpha_start=mp.get("alpha_start", 0.25),
        alpha_end=mp.get("alpha_end", 0.015),
        lr_end=mp.get("lr_end", 0.02),
    )
    hits = np.zeros(cfg.rollouts)
    rets = np.zeros(cfg.rollouts)
    prior = mcg.prior.blocks[0].probs
    greedy = bool(mp.get("greedy_eval", True))
    for i in range(cfg.rollouts):
        m = sample_index(prior, rng)
        guess, ret = rollout_rl_pr(q, mcg, m, rng, greedy=greedy)
        hits[i] = 1.0 if guess == m else 0.0
        rets[i] = ret
    return hits, rets, 1.0 - hits


def run_sweep(cfg: SweepConfig) -> list[MetricsRow]:
    """Run every (grid value, noise level, seed) cell and return its rows."""
    rows = []
    for gi, param in enumerate(cfg.grid):
        for ni, noise in enumerate(cfg.noise_p):
            for seed in cfg.seeds:
                rng = np.random.default_rng(
                    np.random.SeedSequence([seed, gi, ni, 0xC0DE])
                )
                try:
                    mcg = build_env(cfg.env, cfg.env_params, noise_p=noise)
                    if cfg.method == "meme":
                        hits, rets, hams = _meme_cell(cfg, mcg, param, rng)
                    else:
                        hits, rets, hams = _rl_pr_cell(cfg, mcg, param, seed, rng)
                    rows.append(
                        MetricsRow(
                            method=cfg.method,
                            param=param,
                            noise_p=noise,
                            seed=seed,
                            decode_accuracy=float(hits.mean()),
                            accuracy_se=_se(hits),
                            mean_return=float(rets.mean()),
                            return_se=_se(rets),
                            mean_hamming=float(hams.mean()),
                            hamming_se=_se(hams),
                            rollouts=cfg.rollouts,
                        )
                    )
                except Exception as e:  # per-cell failures stay in the row
                    rows.append(
                        MetricsRow(
                            method=cfg.method,
                            param=param,
                            noise_p=noise,
                            seed=seed,
                            decode_accuracy=0.0,
                            accuracy_se=0.0,
                            mean_return=0.0,
                            return_se=0.0,
                            mean_hamming=0.0,
                            hamming_se=0.0,
                            rollouts=0,
                            error=f"{type(e).__name__}: {e}",
                        )
                    )
    return rows


def sweep_config_from_document(doc: dict) -> SweepConfig:
    return SweepConfig(
        env=doc["env"],
        env_params=doc.get("env_params", {}),
        method=doc["method"],
        grid=tuple(doc["grid"]),
        seeds=tuple(doc["seeds"]),
        episodes=doc.get("episodes", 200_000),
        rollouts=doc.get("rollouts", 10),
        noise_p=tuple(doc.get("noise_p", [0.0])),
        method_params=doc.get("method_params", {}),
    )


def write_sweep_csv(cfg: SweepConfig, path) -> list[MetricsRow]:
    rows = run_sweep(cfg)
    save_metrics_csv(rows, path)
    return rows
