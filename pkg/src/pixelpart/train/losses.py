"""Outer-minimization objectives.

    AT      CE(f(x~), y)
    TRADES  CE(f(x), y) + lambda * KL(p(x) || p(x~))
    MART    CE(f(x~), y) - log(1 - max_{k != y} p_k(x~))
            + lambda * mean(KL(p(x) || p(x~)) * (1 - p_y(x)))

Probabilities inside every KL term are floored at 1e-12. The reweighted
variants use the same objectives; only the adversarial examples differ.
"""

import torch
import torch.nn.functional as F

from ..core.specs import Method
from ..nn.losses import PROB_FLOOR, LossFn, LossKind, kl_per_sample
from ..nn.models import ModelBackend

MART_MARGIN_OFFSET = 1.0001


def loss_at(logits_adv: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(logits_adv, labels.long())


def loss_trades(
    model: ModelBackend,
    x: torch.Tensor,
    x_adv: torch.Tensor,
    labels: torch.Tensor,
    lam: float,
) -> torch.Tensor:
    """Natural cross-entropy plus lam * KL(p(x) || p(x_adv)).

    The KL term takes the natural distribution as its reference:
    sum_k p_k(x) * (log p_k(x) - log p_k(x_adv)), averaged over the batch.
    This is the order the TRADES baseline trains with; the reversed order
    KL(p(x_adv) || p(x)) is not used.
    """
    logits = model(x)
    logits_adv = model(x_adv)
    natural = F.cross_entropy(logits, labels.long())
    return natural + lam * kl_per_sample(logits, logits_adv).mean()


def loss_mart(
    model: ModelBackend,
    x: torch.Tensor,
    x_adv: torch.Tensor,
    labels: torch.Tensor,
    lam: float,
) -> torch.Tensor:
    labels = labels.long()
    logits = model(x)
    logits_adv = model(x_adv)
    return mart_from_logits(logits, logits_adv, labels, lam)


def mart_from_logits(
    logits: torch.Tensor, logits_adv: torch.Tensor, labels: torch.Tensor, lam: float
) -> torch.Tensor:
    adv_probs = F.softmax(logits_adv, dim=1)
    top2 = adv_probs.topk(2, dim=1).indices
    runner_up = torch.where(top2[:, 0] == labels, top2[:, 1], top2[:, 0])
    margin = F.nll_loss(torch.log(MART_MARGIN_OFFSET - adv_probs + PROB_FLOOR), runner_up)
    boosted_ce = F.cross_entropy(logits_adv, labels) + margin

    true_probs = F.softmax(logits, dim=1).gather(1, labels.view(-1, 1)).squeeze(1)
    regularizer = (kl_per_sample(logits, logits_adv) * (1 - true_probs)).mean()
    return boosted_ce + lam * regularizer


def method_loss(
    method: Method,
    model: ModelBackend,
    x: torch.Tensor,
    x_adv: torch.Tensor,
    labels: torch.Tensor,
    lam: float,
) -> torch.Tensor:
    base = method.base
    if base is Method.TRADES:
        return loss_trades(model, x, x_adv, labels, lam)
    if base is Method.MART:
        return loss_mart(model, x, x_adv, labels, lam)
    return loss_at(model(x_adv), labels)


def inner_loss(method: Method) -> LossFn:
    """TRADES attacks maximize the KL term; AT and MART maximize CE."""
    if method.base is Method.TRADES:
        return LossFn(LossKind.KL_DIVERGENCE)
    return LossFn(LossKind.CROSS_ENTROPY)
