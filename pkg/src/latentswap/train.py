"""Per-step training graph and the attribute-cycling loop.

One step trains one attribute: a batch with the attribute against a batch
without it. The step runs the full exchange graph, measures every loss
from the same parameter snapshot (so the reported numbers are mutually
consistent), then applies one Adam update to the discriminators on their
total loss and one to the encoder+decoder on the generator total.
Attributes cycle round-robin across steps. Everything is a deterministic
function of (seed, data order, config); checkpoints carry enough state to
resume bit-identically.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .data import EpochPairSampler
from .errors import CheckpointError, ContractError, TrainingDivergedError
from .losses import (
    LossReport,
    discriminator_loss_t,
    generator_adversarial_loss_t,
    reconstruction_loss_t,
)
from .model import ModelParams, compose_t, discriminate_t, encode_t
from .optim import Adam


@dataclass
class TrainState:
    model: ModelParams
    g_opt: Adam
    d_opt: Adam
    step: int
    per_attribute_steps: list
    rng: np.random.Generator
    samplers: list  # EpochPairSampler per attribute

    @classmethod
    def fresh(cls, model, train_config, dataset):
        n = model.config.n_attributes
        g_opt = Adam(
            model.generator_parameters(),
            lr=train_config.learning_rate,
            beta1=train_config.adam_beta1,
            beta2=train_config.adam_beta2,
        )
        d_opt = Adam(
            model.discriminator_parameters(),
            lr=train_config.learning_rate,
            beta1=train_config.adam_beta1,
            beta2=train_config.adam_beta2,
        )
        samplers = [
            EpochPairSampler(dataset.table, i, train_config.batch_size, train_config.seed)
            for i in range(n)
        ]
        rng = np.random.Generator(np.random.PCG64(train_config.seed))
        return cls(model, g_opt, d_opt, 0, [0] * n, rng, samplers)


def _collect_grads(params):
    return {p.name: p.grad for p in params if p.grad is not None}


def _check_finite(report):
    for term in ("d1_loss", "d2_loss", "reconstruction", "g_adversarial"):
        value = getattr(report, term)
        if not np.isfinite(value):
            raise TrainingDivergedError(term, value)


def build_step_losses(model, batch_a, bits_a, batch_b, bits_b, i, tcfg):
    """The full per-step loss graph; returns (d1_t, d2_t, recon_t, adv_t).

    Measured on one parameter snapshot: the discriminator terms see the
    generated images detached, the generator terms see them attached.
    """
    bits_a = np.asarray(bits_a)
    bits_b = np.asarray(bits_b)
    if not np.all(bits_a[:, i] == 1):
        raise ContractError(f"batch A must have attribute bit {i} set on every sample")
    if not np.all(bits_b[:, i] == 0):
        raise ContractError(f"batch B must have attribute bit {i} clear on every sample")

    eps = tcfg.log_clamp_eps
    nb = batch_a.shape[0]
    a = Tensor(np.ascontiguousarray(batch_a, dtype=model.dtype))
    b = Tensor(np.ascontiguousarray(batch_b, dtype=model.dtype))

    # encode A and B in one pass, then exchange part i
    parts_ab, cuts_ab = encode_t(model, ag.concat([a, b], axis=0))
    parts_a = [ag.narrow(p, 0, 0, nb) for p in parts_ab]
    parts_b = [ag.narrow(p, 0, nb, 2 * nb) for p in parts_ab]
    cuts_a = [ag.narrow(c, 0, 0, nb) for c in cuts_ab]
    cuts_b = [ag.narrow(c, 0, nb, 2 * nb) for c in cuts_ab]
    parts_c = list(parts_a)
    parts_d = list(parts_b)
    parts_c[i], parts_d[i] = parts_b[i], parts_a[i]

    # all four residuals from one decoder pass: A', B', C, D stacked
    z_rows = [
        ag.concat(pn + pr, axis=1)
        for pn, pr in ((parts_a, parts_a), (parts_b, parts_b), (parts_c, parts_a),
                       (parts_d, parts_b))
    ]
    cuts_all = [
        ag.concat([ca, cb, ca, cb], axis=0) for ca, cb in zip(cuts_a, cuts_b)
    ]
    res_all = model.decoder(ag.concat(z_rows, axis=0), cuts_all)
    res = [ag.narrow(res_all, 0, k * nb, (k + 1) * nb) for k in range(4)]
    a_rec = compose_t(a, res[0])
    b_rec = compose_t(b, res[1])
    c_img = compose_t(a, res[2])
    d_img = compose_t(b, res[3])

    bits_c = bits_a.copy()
    bits_c[:, i] = 0
    bits_d = bits_b.copy()
    bits_d[:, i] = 1

    # discriminator loss: one batched pass per scale over (A, B, C, D), fakes detached
    real_fake = ag.concat([a, b, c_img.detach(), d_img.detach()], axis=0)
    bits_all = np.concatenate([bits_a, bits_b, bits_c, bits_d])
    d_losses = []
    for scale in (1, 2):
        scores = discriminate_t(model, scale, real_fake, bits_all)
        s = [ag.narrow(scores, 0, k * nb, (k + 1) * nb) for k in range(4)]
        d_losses.append(discriminator_loss_t((s[0], s[1]), (s[2], s[3]), eps))

    # generator loss with gradients flowing through the fakes
    recon_t = reconstruction_loss_t(a, a_rec, b, b_rec)
    fakes = ag.concat([c_img, d_img], axis=0)
    bits_cd = np.concatenate([bits_c, bits_d])
    fake_scores = []
    for scale in (1, 2):
        scores = discriminate_t(model, scale, fakes, bits_cd)
        fake_scores.append(
            (ag.narrow(scores, 0, 0, nb), ag.narrow(scores, 0, nb, 2 * nb))
        )
    adv_t = generator_adversarial_loss_t(tuple(fake_scores), eps)
    return d_losses[0], d_losses[1], recon_t, adv_t


def train_step(batch_a, bits_a, batch_b, bits_b, i, state, tcfg):
    """One optimization step on attribute i.

    batch_a/bits_a must all have bit i set, batch_b/bits_b must all have it
    clear. Returns the LossReport measured before the updates were applied.
    """
    model = state.model
    d1_t, d2_t, recon_t, adv_t = build_step_losses(
        model, batch_a, bits_a, batch_b, bits_b, i, tcfg
    )
    d_total_t = ag.add(d1_t, d2_t)
    g_total_t = ag.add(ag.mul(recon_t, tcfg.recon_weight), ag.mul(adv_t, tcfg.adv_weight))

    d1 = d1_t.item()
    d2 = d2_t.item()
    recon = recon_t.item()
    adv = adv_t.item()
    report = LossReport(
        step=state.step,
        attribute_index=i,
        d1_loss=d1,
        d2_loss=d2,
        d_total=d1 + d2,
        reconstruction=recon,
        g_adversarial=adv,
        g_total=tcfg.recon_weight * recon + tcfg.adv_weight * adv,
    )
    _check_finite(report)

    # collect both gradient sets from the same snapshot, then update D then G
    g_params = model.generator_parameters()
    d_params = model.discriminator_parameters()
    ag.backward(d_total_t)
    d_grads = _collect_grads(d_params)
    ag.zero_grads(g_params + d_params)
    ag.backward(g_total_t)
    g_grads = _collect_grads(g_params)
    ag.zero_grads(g_params + d_params)

    state.d_opt.step(d_grads)
    state.g_opt.step(g_grads)
    state.step += 1
    state.per_attribute_steps[i] += 1
    return report


def _train_state_json(state, tcfg):
    return {
        "step": state.step,
        "per_attribute_steps": list(state.per_attribute_steps),
        "sampler_states": [s.state() for s in state.samplers],
        "adam_t": {"g": state.g_opt.t, "d": state.d_opt.t},
        "rng_state": state.rng.bit_generator.state,
        "train_config": tcfg.to_dict(),
    }


def resume_state(ckpt_dir, dataset):
    """Rebuild a TrainState from a checkpoint for bit-identical continuation."""
    model, manifest, opt_tensors, ts = load_checkpoint(ckpt_dir)
    if ts is None:
        raise CheckpointError(f"{ckpt_dir}: checkpoint has no train_state.json, cannot resume")
    tcfg = TrainConfig.from_dict(ts["train_config"])
    if manifest["attribute_names"] != dataset.attribute_names:
        raise CheckpointError(
            f"{ckpt_dir}: checkpoint attributes {manifest['attribute_names']} do not "
            f"match dataset attributes {dataset.attribute_names}"
        )
    state = TrainState.fresh(model, tcfg, dataset)
    state.g_opt.load_state_tensors("g", opt_tensors)
    state.d_opt.load_state_tensors("d", opt_tensors)
    state.g_opt.t = int(ts["adam_t"]["g"])
    state.d_opt.t = int(ts["adam_t"]["d"])
    state.step = int(ts["step"])
    state.per_attribute_steps = [int(v) for v in ts["per_attribute_steps"]]
    for sampler, s in zip(state.samplers, ts["sampler_states"]):
        sampler.load_state(s)
    state.rng.bit_generator.state = ts["rng_state"]
    loss_lines = (Path(ckpt_dir) / "loss_log.jsonl").read_text().splitlines()
    return state, tcfg, loss_lines


def train_loop(dataset, tcfg, model_config=None, state=None, out_dir=None, log_cb=None,
               loss_lines=None):
    """Run (or continue) training; returns (state, loss_lines).

    Cycles attributes round-robin, one step each. Writes `loss_log.jsonl`
    and periodic checkpoints under out_dir when given. `log_cb` receives
    every LossReport as it is produced. Pass the loss_lines returned by
    resume_state when continuing so the log stays complete.
    """
    loss_lines = list(loss_lines) if loss_lines else []
    if state is None:
        model = ModelParams(model_config, seed=tcfg.seed)
        state = TrainState.fresh(model, tcfg, dataset)
    n = state.model.config.n_attributes
    out_dir = Path(out_dir) if out_dir is not None else None
    log_fh = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        log_fh = open(out_dir / "loss_log.jsonl", "w")
        for line in loss_lines:
            log_fh.write(line + "\n")

    def checkpoint(tag):
        save_checkpoint(
            out_dir / tag,
            state.model,
            dataset.attribute_names,
            state.step,
            state.g_opt,
            state.d_opt,
            _train_state_json(state, tcfg),
            loss_lines,
        )

    try:
        while state.step < tcfg.total_steps:
            i = state.step % n
            idx_a, idx_b = state.samplers[i].next_batch()
            batch_a, bits_a = dataset.batch(idx_a)
            batch_b, bits_b = dataset.batch(idx_b)
            report = train_step(batch_a, bits_a, batch_b, bits_b, i, state, tcfg)
            line = json.dumps(report.to_dict())
            loss_lines.append(line)
            if log_fh is not None:
                log_fh.write(line + "\n")
                log_fh.flush()
            if log_cb is not None:
                log_cb(report)
            if out_dir is not None and state.step % tcfg.checkpoint_interval == 0:
                checkpoint(f"ckpt-{state.step:06d}")
        if out_dir is not None:
            checkpoint("ckpt-final")
    finally:
        if log_fh is not None:
            log_fh.close()
    return state, loss_lines
