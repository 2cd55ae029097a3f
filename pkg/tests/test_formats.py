"""Serialization round-trip tests for every file format."""

import numpy as np
import pytest

from trajcomm.dist import Dist
from trajcomm.envs import (
    CodingMdpSpec,
    build_channel_chain,
    build_codegrid,
    build_coding_mdp,
    build_toy_mcg,
    chain_mcg,
)
from trajcomm.formats import (
    image_space,
    image_to_message,
    load_dist,
    load_mcg,
    load_pbm,
    load_qtable,
    load_trajectory,
    message_to_image,
    metrics_to_csv,
    save_dist,
    save_mcg,
    save_pbm,
    save_qtable,
    save_trajectory,
)
from trajcomm.maxent import QTable, exact_soft_vi
from trajcomm.mcg import MessageSpace
from trajcomm.mdp import Step, Trajectory, rollout
from trajcomm.sweep import MetricsRow


class TestDistFiles:
    def test_round_trip(self, tmp_path):
        d = Dist([0.5, 0.25, 0.25])
        path = tmp_path / "d.txt"
        save_dist(d, path)
        assert np.array_equal(load_dist(path).probs, d.probs)

    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("# a fair coin\n0.5\n\n0.5  # second half\n")
        assert np.array_equal(load_dist(path).probs, [0.5, 0.5])

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("# nothing here\n")
        with pytest.raises(ValueError):
            load_dist(path)


class TestMcgFiles:
    @pytest.mark.parametrize(
        "mcg",
        [
            build_toy_mcg(priority=2.0),
            build_codegrid(8, noise_p=0.1),
            chain_mcg(build_channel_chain(5, 2, rewards={2: 0.5}), MessageSpace.product([2] * 4)),
        ],
        ids=["toy", "codegrid", "chain"],
    )
    def test_round_trip(self, mcg, tmp_path):
        path = tmp_path / "env.json"
        save_mcg(mcg, path)
        loaded = load_mcg(path)
        assert loaded.mdp.n_states == mcg.mdp.n_states
        assert loaded.mdp.n_actions == mcg.mdp.n_actions
        assert loaded.mdp.terminal_states == mcg.mdp.terminal_states
        assert loaded.mdp.initial_state == mcg.mdp.initial_state
        assert np.array_equal(loaded.mdp.rewards, mcg.mdp.rewards)
        assert loaded.mdp.transitions == mcg.mdp.transitions
        assert loaded.message_space == mcg.message_space
        assert loaded.priority == mcg.priority
        assert loaded.noise_p == mcg.noise_p
        for a, b in zip(loaded.prior.blocks, mcg.prior.blocks):
            assert np.array_equal(a.probs, b.probs)

    def test_coding_mdp_survives(self, tmp_path):
        mdp = build_coding_mdp(CodingMdpSpec(variant="length_limited", length_limit=4))
        from trajcomm.mcg import Belief, McgSpec

        mcg = McgSpec(
            mdp=mdp,
            message_space=MessageSpace.explicit(4),
            prior=Belief.uniform(MessageSpace.explicit(4)),
            priority=1.0,
        )
        path = tmp_path / "env.json"
        save_mcg(mcg, path)
        assert load_mcg(path).mdp.transitions == mdp.transitions


class TestQTableFiles:
    def test_round_trip_preserves_bits(self, tmp_path):
        mcg = build_toy_mcg(priority=0.0)
        q = exact_soft_vi(mcg.mdp, alpha=0.37)
        path = tmp_path / "q.txt"
        save_qtable(q, path)
        loaded = load_qtable(path)
        assert loaded.alpha == q.alpha
        assert np.array_equal(loaded.values, q.values)

    def test_header_required(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("0 0 1.0\n")
        with pytest.raises(ValueError):
            load_qtable(path)


class TestTrajectoryFiles:
    def test_round_trip(self, tmp_path):
        z = Trajectory(
            steps=(Step(0, 1, 2, 0.5), Step(3, 0, 0, -1.25)), final_state=7
        )
        path = tmp_path / "z.txt"
        save_trajectory(z, path)
        loaded = load_trajectory(path)
        assert loaded.final_state == 7
        assert loaded.steps == z.steps

    def test_real_rollout_round_trip(self, tmp_path):
        mcg = build_codegrid(8, noise_p=0.2)
        rng = np.random.default_rng(0)
        z = rollout(mcg.mdp, lambda s: Dist.uniform(4), rng, noise_p=0.2)
        path = tmp_path / "z.txt"
        save_trajectory(z, path)
        assert load_trajectory(path).steps == z.steps

    def test_header_required(self, tmp_path):
        path = tmp_path / "z.txt"
        path.write_text("0 0 0 0.0\n")
        with pytest.raises(ValueError):
            load_trajectory(path)


class TestPbm:
    def test_all_zero_image(self, tmp_path):
        img = np.zeros((8, 8), dtype=int)
        path = tmp_path / "img.pbm"
        save_pbm(img, path)
        assert np.array_equal(load_pbm(path), img)
        m = image_to_message(img)
        assert len(m) == 64 and all(v == 0 for v in m)

    def test_random_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 2, size=(6, 10))
        path = tmp_path / "img.pbm"
        save_pbm(img, path)
        assert np.array_equal(load_pbm(path), img)

    def test_checkerboard_blocks(self):
        img = np.indices((8, 8)).sum(axis=0) % 2
        m = image_to_message(img)
        assert m[:4] == (0, 1, 0, 1)
        assert np.array_equal(message_to_image(m, (8, 8)), img)

    def test_block_grouping(self):
        img = np.array([[1, 0, 1, 1]])
        m = image_to_message(img, block_pixels=2)
        assert m == (0b10, 0b11)
        assert np.array_equal(message_to_image(m, (1, 4), block_pixels=2), img)
        assert image_space(4, 2) == MessageSpace.product([4, 4])

    def test_comments_allowed(self, tmp_path):
        path = tmp_path / "img.pbm"
        path.write_text("P1\n# tiny\n2 2\n1 0\n0 1\n")
        assert np.array_equal(load_pbm(path), [[1, 0], [0, 1]])

    @pytest.mark.parametrize(
        "content",
        ["P4\n2 2\n", "P1\n2\n1 0", "P1\n2 2\n1 0 0\n", "P1\n2 2\n1 0 0 2\n", ""],
        ids=["magic", "truncated", "short", "bad-bit", "empty"],
    )
    def test_malformed_rejected(self, content, tmp_path):
        path = tmp_path / "img.pbm"
        path.write_text(content)
        with pytest.raises(ValueError):
            load_pbm(path)


class TestMetricsCsv:
    def test_fixed_columns_and_digits(self):
        row = MetricsRow(
            method="meme",
            param=12.0,
            noise_p=0.05,
            seed=3,
            decode_accuracy=0.123456789123,
            accuracy_se=0.01,
            mean_return=1.0,
            return_se=0.0,
            mean_hamming=2.5,
            hamming_se=0.5,
            rollouts=10,
        )
        text = metrics_to_csv([row])
        header, line = text.strip().split("\n")
        assert header.startswith("method,beta_or_zeta,noise_p,seed,decode_accuracy")
        assert "0.123456789" in line
        assert line.split(",")[0] == "meme"

    def test_error_row_roundtrip(self):
        row = MetricsRow(
            method="rl_pr", param=1.0, noise_p=0.0, seed=0,
            decode_accuracy=0.0, accuracy_se=0.0, mean_return=0.0, return_se=0.0,
            mean_hamming=0.0, hamming_se=0.0, rollouts=0,
            error="ValueError: bad, cell",
        )
        text = metrics_to_csv([row])
        assert "bad; cell" in text
