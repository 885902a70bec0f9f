"""Adversarial and reconstruction losses.

Both discriminators receive the standard conditional GAN objective: real
images score toward 1, swapped-code images toward 0. The generator is
driven by the mirrored adversarial term plus a mean-L1 reconstruction term
on the identity paths. Log arguments are clamped from below so a saturated
discriminator cannot emit infinities.
"""

from dataclasses import asdict, dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .errors import ContractError, ShapeError

LOG_CLAMP_EPS = 1e-8


@dataclass
class LossReport:
    """Per-step losses; the decomposition identities hold exactly."""

    step: int
    attribute_index: int
    d1_loss: float
    d2_loss: float
    d_total: float
    reconstruction: float
    g_adversarial: float
    g_total: float

    def to_dict(self):
        return asdict(self)


def _as_score_tensor(s, name):
    t = s if isinstance(s, Tensor) else Tensor(np.asarray(s, dtype=np.float64))
    lo, hi = float(t.data.min()), float(t.data.max())
    if lo <= 0.0 or hi >= 1.0:
        raise ContractError(f"{name} scores must lie strictly inside (0, 1), got [{lo}, {hi}]")
    return t


def nll_real(scores, eps=LOG_CLAMP_EPS):
    """-E[log s], the want-it-real term."""
    return -ag.mean_all(ag.log(ag.clamp(scores, lo=eps)))


def nll_fake(scores, eps=LOG_CLAMP_EPS):
    """-E[log(1 - s)], the want-it-fake term."""
    return -ag.mean_all(ag.log(ag.clamp(1.0 - scores, lo=eps)))


def discriminator_loss_t(real_pair, fake_pair, eps=LOG_CLAMP_EPS):
    """Single-scale discriminator loss from ((sA, sB), (sC, sD)) score tensors."""
    s_a, s_b = real_pair
    s_c, s_d = fake_pair
    return ag.add(
        ag.add(nll_real(s_a, eps), nll_fake(s_c, eps)),
        ag.add(nll_real(s_b, eps), nll_fake(s_d, eps)),
    )


def discriminator_loss(real_scores, fake_scores, eps=LOG_CLAMP_EPS):
    """(d1, d2, d_total) from per-scale score pairs.

    `real_scores` is ((sA_1, sB_1), (sA_2, sB_2)) and `fake_scores` is
    ((sC_1, sD_1), (sC_2, sD_2)); entries are arrays of per-sample scores
    in the open interval (0, 1). Fake scores are expected to come from
    detached images; this function itself never backpropagates.
    """
    losses = []
    for scale, (real, fake) in enumerate(zip(real_scores, fake_scores), start=1):
        real = tuple(_as_score_tensor(s, f"scale-{scale} real") for s in real)
        fake = tuple(_as_score_tensor(s, f"scale-{scale} fake") for s in fake)
        losses.append(discriminator_loss_t(real, fake, eps).item())
    d1, d2 = losses
    return d1, d2, d1 + d2


def reconstruction_loss_t(a, a_prime, b, b_prime):
    return ag.add(
        ag.mean_all(ag.absolute(ag.sub(a, a_prime))),
        ag.mean_all(ag.absolute(ag.sub(b, b_prime))),
    )


def reconstruction_loss(a, a_prime, b, b_prime):
    """Mean absolute error of both identity reconstructions, summed."""
    a, a_prime, b, b_prime = (np.asarray(x) for x in (a, a_prime, b, b_prime))
    if a.shape != a_prime.shape or b.shape != b_prime.shape:
        raise ShapeError(
            f"reconstruction pairs disagree in shape: {a.shape} vs {a_prime.shape}, "
            f"{b.shape} vs {b_prime.shape}"
        )
    return reconstruction_loss_t(Tensor(a), Tensor(a_prime), Tensor(b), Tensor(b_prime)).item()


def generator_adversarial_loss_t(fake_scores, eps=LOG_CLAMP_EPS):
    """-E[log s] summed over the C and D scores of both scales."""
    total = None
    for scale_pair in fake_scores:
        for s in scale_pair:
            term = nll_real(s, eps)
            total = term if total is None else ag.add(total, term)
    return total


def generator_adversarial_loss(fake_scores, eps=LOG_CLAMP_EPS):
    """Scalar from ((sC_1, sD_1), (sC_2, sD_2)) arrays of scores in (0, 1)."""
    checked = tuple(
        tuple(_as_score_tensor(s, f"scale-{k} fake") for s in pair)
        for k, pair in enumerate(fake_scores, start=1)
    )
    return generator_adversarial_loss_t(checked, eps).item()


def generator_loss(recon, adv, recon_weight=1.0, adv_weight=1.0):
    """Weighted total; the defaults reproduce the plain unweighted sum."""
    if not (np.isfinite(recon) and np.isfinite(adv)):
        raise ContractError(f"loss components must be finite, got {recon}, {adv}")
    return recon_weight * recon + adv_weight * adv
