"""Training mechanics: step-0 state, determinism, detachment, resumption."""

import json
import math

import numpy as np
import pytest

import latentswap.autograd as ag
from latentswap.config import TrainConfig
from latentswap.errors import ContractError, TrainingDivergedError
from latentswap.model import ModelParams
from latentswap.train import TrainState, build_step_losses, resume_state, train_loop, train_step


def first_batches(state, dataset, i=0):
    idx_a, idx_b = state.samplers[i].next_batch()
    return dataset.batch(idx_a) + dataset.batch(idx_b)


class TestTrainStep:
    def test_step_zero_zero_init(self, tiny_config, tiny_synth, tiny_train_config):
        _, dataset, _ = tiny_synth
        state = TrainState.fresh(ModelParams(tiny_config, seed=3), tiny_train_config, dataset)
        a, ba, b, bb = first_batches(state, dataset)
        report = train_step(a, ba, b, bb, 0, state, tiny_train_config)
        assert report.reconstruction == 0.0
        assert abs(report.d_total - 8 * math.log(2)) < 1e-5
        assert abs(report.g_adversarial - 4 * math.log(2)) < 1e-5
        assert report.d_total == report.d1_loss + report.d2_loss
        assert report.g_total == report.reconstruction + report.g_adversarial

    def test_label_preconditions(self, tiny_config, tiny_synth, tiny_train_config):
        _, dataset, _ = tiny_synth
        state = TrainState.fresh(ModelParams(tiny_config, seed=3), tiny_train_config, dataset)
        a, ba, b, bb = first_batches(state, dataset)
        with pytest.raises(ContractError):
            train_step(b, bb, a, ba, 0, state, tiny_train_config)  # swapped pools

    def test_divergence_error_names_term(self, tiny_config, tiny_synth, tiny_train_config):
        _, dataset, _ = tiny_synth
        state = TrainState.fresh(ModelParams(tiny_config, seed=3), tiny_train_config, dataset)
        state.model.encoder.blocks[0].w.data[0, 0, 0, 0] = np.nan
        a, ba, b, bb = first_batches(state, dataset)
        with pytest.raises(TrainingDivergedError) as err:
            train_step(a, ba, b, bb, 0, state, tiny_train_config)
        assert err.value.term in ("d1_loss", "d2_loss", "reconstruction", "g_adversarial")

    def test_updates_touch_only_their_group(self, tiny_config, tiny_synth, tiny_train_config):
        _, dataset, _ = tiny_synth
        model = ModelParams(tiny_config, seed=3)
        state = TrainState.fresh(model, tiny_train_config, dataset)
        a, ba, b, bb = first_batches(state, dataset)

        d1, d2, recon, adv = build_step_losses(model, a, ba, b, bb, 0, tiny_train_config)
        g_before = [p.data.copy() for p in model.generator_parameters()]
        ag.backward(ag.add(d1, d2))
        d_grads = {p.name: p.grad for p in model.discriminator_parameters()
                   if p.grad is not None}
        # the fakes are detached: no gradient may reach the generator
        assert all(p.grad is None for p in model.generator_parameters())
        ag.zero_grads(model.all_parameters())
        state.d_opt.step(d_grads)
        assert all(np.array_equal(p.data, q)
                   for p, q in zip(model.generator_parameters(), g_before))

        d_before = [p.data.copy() for p in model.discriminator_parameters()]
        ag.backward(ag.add(recon, adv))
        g_grads = {p.name: p.grad for p in model.generator_parameters() if p.grad is not None}
        ag.zero_grads(model.all_parameters())
        state.g_opt.step(g_grads)
        assert all(np.array_equal(p.data, q)
                   for p, q in zip(model.discriminator_parameters(), d_before))


class TestTrainLoop:
    def test_round_robin_attribute_schedule(self, tiny_synth):
        from latentswap.config import ModelConfig
        from latentswap.data import ArrayDataset, AttributeTable

        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, (30, 3)).astype(np.uint8)
        bits[:5] = [1, 1, 1]
        bits[5:10] = [0, 0, 0]
        table = AttributeTable(["x", "y", "z"], [f"{k}.png" for k in range(30)], bits)
        images = rng.integers(0, 256, (30, 32, 32, 3), dtype=np.uint8)
        dataset = ArrayDataset(table, images)
        cfg = ModelConfig(n_attributes=3, image_size=32, depth=3, base_channels=4,
                          latent_channels=18)
        tcfg = TrainConfig(batch_size=2, total_steps=7, seed=1)
        _, lines = train_loop(dataset, tcfg, cfg)
        sched = [json.loads(ln)["attribute_index"] for ln in lines]
        assert sched == [0, 1, 2, 0, 1, 2, 0]

    def test_seeded_runs_identical(self, tiny_config, tiny_synth, tiny_train_config):
        _, dataset, _ = tiny_synth
        _, lines1 = train_loop(dataset, tiny_train_config, tiny_config)
        _, lines2 = train_loop(dataset, tiny_train_config, tiny_config)
        assert lines1 == lines2

    def test_resume_bit_identical(self, tmp_path, tiny_config, tiny_synth, tiny_train_config):
        _, dataset, _ = tiny_synth
        _, full = train_loop(dataset, tiny_train_config, tiny_config,
                             out_dir=tmp_path / "full")
        state, tcfg, lines = resume_state(tmp_path / "full" / "ckpt-000003", dataset)
        assert len(lines) == 3
        _, resumed = train_loop(dataset, tcfg, state=state, out_dir=tmp_path / "resumed",
                                loss_lines=lines)
        assert resumed == full
        assert (tmp_path / "resumed" / "loss_log.jsonl").read_text() == \
               (tmp_path / "full" / "loss_log.jsonl").read_text()

    def test_log_lines_are_reports(self, tiny_config, tiny_synth, tiny_train_config):
        _, dataset, _ = tiny_synth
        _, lines = train_loop(dataset, tiny_train_config, tiny_config)
        for ln in lines:
            rec = json.loads(ln)
            assert rec["d_total"] == rec["d1_loss"] + rec["d2_loss"]
            assert rec["g_total"] == rec["reconstruction"] + rec["g_adversarial"]
            assert set(rec) >= {"step", "attribute_index", "d_total", "reconstruction"}
