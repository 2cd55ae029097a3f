"""Command-line driver.

Subcommands: make-env (emit a game spec), solve (exact planner), train
(sampled learner), send (encode a message into a trajectory), receive
(decode a trajectory), sweep (parameter grid to CSV), and mec (couple two
distribution files).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .coding import receiver_decode, sender_episode
from .dist import coupling_entropies
from .formats import (
    image_space,
    image_to_message,
    load_dist,
    load_mcg,
    load_pbm,
    load_qtable,
    load_trajectory,
    message_to_image,
    save_entropy_trace_csv,
    save_mcg,
    save_pbm,
    save_qtable,
    save_trajectory,
)
from .maxent import TrainConfig, exact_soft_vi, train_soft_q
from .mec import greedy_mec
from .sweep import build_env, sweep_config_from_document, write_sweep_csv


def _add_make_env(sub):
    p = sub.add_parser("make-env", help="emit a game spec document")
    p.add_argument("env", choices=["toy", "codegrid", "chain", "coding"])
    p.add_argument("--out", required=True)
    p.add_argument("--zeta", type=float, default=1.0, help="message priority")
    p.add_argument("--noise-p", type=float, default=0.0)
    p.add_argument("--messages", type=int, default=2, help="explicit message count")
    p.add_argument("--image-pixels", type=int, help="factored image space (chain only)")
    p.add_argument("--block-pixels", type=int, default=1)
    p.add_argument("--steps", type=int, default=200, help="chain length")
    p.add_argument("--actions", type=int, default=2, help="chain action count")
    p.add_argument("--variant", default="standard", help="coding variant")
    p.add_argument("--alphabet", type=int, default=2)
    p.add_argument("--length-limit", type=int)
    p.add_argument("--symbol-costs", type=float, nargs="+")
    p.add_argument("--max-symbols", type=int, default=64)


def _cmd_make_env(args) -> int:
    params = {"priority": args.zeta}
    if args.env == "codegrid":
        params["n_messages"] = args.messages
    elif args.env == "chain":
        params["steps"] = args.steps
        params["n_actions"] = args.actions
        if args.image_pixels:
            params["image_pixels"] = args.image_pixels
            params["block_pixels"] = args.block_pixels
        else:
            params["n_messages"] = args.messages
    elif args.env == "coding":
        params["variant"] = args.variant
        params["alphabet_size"] = args.alphabet
        params["n_messages"] = args.messages
        params["max_symbols"] = args.max_symbols
        if args.length_limit:
            params["length_limit"] = args.length_limit
        if args.symbol_costs:
            params["symbol_costs"] = args.symbol_costs
    mcg = build_env(args.env, params, noise_p=args.noise_p)
    save_mcg(mcg, args.out)
    print(f"wrote {args.env} spec to {args.out}")
    return 0


def _cmd_solve(args) -> int:
    mcg = load_mcg(args.spec)
    q = exact_soft_vi(mcg.mdp, alpha=1.0 / args.beta)
    save_qtable(q, args.out)
    print(f"solved {args.spec} at beta={args.beta}; wrote {args.out}")
    return 0


def _cmd_train(args) -> int:
    mcg = load_mcg(args.spec)
    cfg = TrainConfig(episodes=args.episodes, learning_rate=args.lr, seed=args.seed)
    q = train_soft_q(mcg.mdp, alpha=1.0 / args.beta, cfg=cfg)
    save_qtable(q, args.out)
    print(f"trained {args.episodes} episodes at beta={args.beta}; wrote {args.out}")
    return 0


def _message_from_args(args, mcg):
    if args.image is not None:
        image = load_pbm(args.image)
        space = image_space(image.size, args.block_pixels)
        if space != mcg.message_space:
            raise ValueError(
                "image shape and block size do not match the spec's message space"
            )
        return image_to_message(image, args.block_pixels), image.shape
    if args.message is None:
        raise ValueError("provide --message or --image")
    return args.message, None


def _cmd_send(args) -> int:
    mcg = load_mcg(args.spec)
    if args.noise_p is not None:
        mcg = dataclass_replace_noise(mcg, args.noise_p)
    q = load_qtable(args.qtable)
    _check_qtable(mcg, q)
    m, _ = _message_from_args(args, mcg)
    rng = np.random.default_rng(args.seed)
    record = sender_episode(q, mcg, m, rng)
    save_trajectory(record.trajectory, args.out)
    print(f"sent message through {len(record.trajectory.steps)} steps; wrote {args.out}")
    return 0


def _cmd_receive(args) -> int:
    mcg = load_mcg(args.spec)
    q = load_qtable(args.qtable)
    _check_qtable(mcg, q)
    z = load_trajectory(args.traj).receiver_view()
    decoded, trace = receiver_decode(q, mcg, z)
    if mcg.message_space.factored:
        if args.image_shape is None:
            raise ValueError("factored decoding needs --image-shape H W")
        h, w = args.image_shape
        save_pbm(message_to_image(decoded, (h, w), args.block_pixels), args.out)
    else:
        with open(args.out, "w") as f:
            f.write(f"{decoded}\n")
    if args.entropy_csv:
        save_entropy_trace_csv([b.entropy_bits() for b in trace], args.entropy_csv)
    print(f"decoded {'image' if mcg.message_space.factored else 'message'}; wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config) as f:
        cfg = sweep_config_from_document(json.load(f))
    rows = write_sweep_csv(cfg, args.out)
    failures = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows to {args.out} ({failures} cell failures)")
    return 0


def _cmd_mec(args) -> int:
    p = load_dist(args.p)
    q = load_dist(args.q)
    coupling = greedy_mec(p, q)
    for mass, r, c in coupling.entries:
        print(f"{mass:.9g} {r} {c}")
    e = coupling_entropies(coupling)
    print(f"joint_bits {e.joint_bits:.9g}")
    print(f"row_marginal_bits {e.row_marginal_bits:.9g}")
    print(f"col_marginal_bits {e.col_marginal_bits:.9g}")
    print(f"mutual_info_bits {e.mutual_info_bits:.9g}")
    return 0


def _check_qtable(mcg, q) -> None:
    if q.values.shape != (mcg.mdp.n_states, mcg.mdp.n_actions):
        raise ValueError(
            f"Q table shape {q.values.shape} does not match the spec's MDP "
            f"({mcg.mdp.n_states} states x {mcg.mdp.n_actions} actions)"
        )


def dataclass_replace_noise(mcg, noise_p):
    import dataclasses

    return dataclasses.replace(mcg, noise_p=noise_p)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trajcomm", description="communicate messages through MDP trajectories"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_make_env(sub)

    p = sub.add_parser("solve", help="exact max-entropy planning to a Q-table file")
    p.add_argument("--spec", required=True)
    p.add_argument("--beta", type=float, required=True, help="inverse temperature")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="sampled max-entropy Q-learning")
    p.add_argument("--spec", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--episodes", type=int, default=200_000)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("send", help="encode a message into one trajectory")
    p.add_argument("--spec", required=True)
    p.add_argument("--qtable", required=True)
    p.add_argument("--message", type=int)
    p.add_argument("--image", help="plain PBM file carrying the message")
    p.add_argument("--block-pixels", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-p", type=float, help="override the spec's actuator noise")
    p.add_argument("--out", required=True)

    p = sub.add_parser("receive", help="decode a trajectory file")
    p.add_argument("--spec", required=True)
    p.add_argument("--qtable", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--image-shape", type=int, nargs=2, metavar=("H", "W"))
    p.add_argument("--block-pixels", type=int, default=1)
    p.add_argument("--entropy-csv", help="write the belief-entropy trace here")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="run a parameter sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("mec", help="couple two distribution files")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)

    args = parser.parse_args(argv)
    handlers = {
        "make-env": _cmd_make_env,
        "solve": _cmd_solve,
        "train": _cmd_train,
        "send": _cmd_send,
        "receive": _cmd_receive,
        "sweep": _cmd_sweep,
        "mec": _cmd_mec,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
