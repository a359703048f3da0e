"""
Learning from label proportions: bag-level cross-entropy and Jensen-Shannon proportion
matching with a light instance-entropy penalty.

Every tuple is a bag whose target proportion is alpha_t = m_t / n_t.
"""

from enum import Enum

import numpy as np
import torch
import torch.nn.functional as F

import core.config as cfg
from core.losses import clip_scores
from model.objectives import Objective, ObjectiveValue, sample_indices, steps_per_epoch
from model.scorer import as_tensor
from model.trainer import Trainer


class LlpKind(str, Enum):
    BAG_CE = "bagce"
    JS = "js"


def bag_means(scores, sizes):
    """Mean sigmoid(score) of every bag; scores are listed bag after bag."""
    sizes = torch.as_tensor(np.asarray(sizes, dtype=np.int64))
    ids = torch.repeat_interleave(torch.arange(len(sizes)), sizes)
    probs = torch.sigmoid(clip_scores(scores))
    sums = torch.zeros(len(sizes), dtype=probs.dtype).index_add_(0, ids, probs)
    return sums / sizes.to(probs.dtype)


def instance_entropy(scores):
    """Binary entropy of sigmoid(score) in nats, written in logits."""
    z = clip_scores(scores)
    return F.softplus(z) - z * torch.sigmoid(z)


def bernoulli_cross_entropy(p_bar, q):
    p_bar = p_bar.clamp(cfg.llp_prob_clip, 1.0 - cfg.llp_prob_clip)
    return -(q * torch.log(p_bar) + (1.0 - q) * torch.log1p(-p_bar))


def bernoulli_js(p, q):
    """JS divergence between Bernoulli(p) and Bernoulli(q) in nats; 0 log 0 = 0, so it lies in [0, ln 2]."""
    m = 0.5 * (p + q)

    def kl_to_m(x):
        return torch.xlogy(x, x) - torch.xlogy(x, m) + torch.xlogy(1.0 - x, 1.0 - x) - torch.xlogy(1.0 - x, 1.0 - m)

    return 0.5 * (kl_to_m(p) + kl_to_m(q))


def llp_objective(scores, sizes, counts, kind, entropy_weight=cfg.llp_entropy_weight):
    """
    Differentiable LLP loss of a batch of bags.

    Args:
        scores (torch.Tensor): Raw scores of the bag instances, bag after bag.
        sizes (np.ndarray): n_t per bag.
        counts (np.ndarray): m_t per bag.
        kind (LlpKind): Bag-level cross-entropy or JS matching.
        entropy_weight (float): Weight of the mean instance entropy.
    """
    q = torch.as_tensor(np.asarray(counts, dtype=np.float64) / np.asarray(sizes, dtype=np.float64))
    p_bar = bag_means(scores, sizes)
    if LlpKind(kind) is LlpKind.BAG_CE:
        bag = bernoulli_cross_entropy(p_bar, q)
    else:
        bag = bernoulli_js(p_bar.clamp(cfg.llp_prob_clip, 1.0 - cfg.llp_prob_clip), q)
    return bag.mean() + entropy_weight * instance_entropy(scores).mean()


def _llp_value(scorer, tuples, kind, entropy_weight):
    if not len(tuples):
        raise ValueError("LLP losses need at least one tuple")
    with torch.no_grad():
        return float(llp_objective(scorer(as_tensor(tuples.features)), tuples.sizes, tuples.counts, kind,
                                   entropy_weight))


def llp_bagce_loss(scorer, tuples, entropy_weight=cfg.llp_entropy_weight):
    """Mean over tuples of H(alpha_t, p_bar_t) plus the entropy penalty."""
    return _llp_value(scorer, tuples, LlpKind.BAG_CE, entropy_weight)


def llp_js_loss(scorer, tuples, entropy_weight=cfg.llp_entropy_weight):
    """Mean over tuples of JS(Bernoulli(p_bar_t) || Bernoulli(alpha_t)) plus the entropy penalty."""
    return _llp_value(scorer, tuples, LlpKind.JS, entropy_weight)


class LlpObjective(Objective):
    def __init__(self, tuples, kind, batch_tuples, entropy_weight=cfg.llp_entropy_weight):
        self.tuples = tuples
        self.kind = LlpKind(kind)
        self.batch_tuples = batch_tuples
        self.entropy_weight = entropy_weight

    def batches(self, rng):
        for _ in range(steps_per_epoch(len(self.tuples), self.batch_tuples)):
            yield sample_indices(rng, len(self.tuples), self.batch_tuples)

    def evaluate(self, scorer, batch):
        scores = scorer(as_tensor(self.tuples.features[self.tuples.rows_of(batch)]))
        value = llp_objective(scores, self.tuples.sizes[batch], self.tuples.counts[batch], self.kind,
                              self.entropy_weight)
        return ObjectiveValue(value, value.detach().item(), value.detach().item())


def train_llp(tuples, kind, tcfg, scorer=None, audit=None, entropy_weight=cfg.llp_entropy_weight):
    """Minimize the LLP-BagCE or LLP-JS loss with the shared trainer."""
    if not len(tuples):
        raise ValueError("train_llp needs at least one tuple")
    scorer = scorer if scorer is not None else tcfg.make_scorer(tuples.dim)
    objective = LlpObjective(tuples, kind, tcfg.batch_tuples, entropy_weight)
    return Trainer(scorer, objective, tcfg, audit).run()
