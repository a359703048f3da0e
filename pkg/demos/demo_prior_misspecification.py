import numpy as np

import core.config as cfg
from core.losses import LossSpec
from datagen.gaussian import GaussianTaskSpec, gen_gaussian_pool
from model.scorer import Scorer
from risk.bounds import class_conditional_risks, is_unbounded, misspecified_prior_risk, prior_bias_bound

'''
Demo 002:
    * Measures the bias of the plug-in risk when a wrong prior pi_hat replaces the true
      prior pi, for a grid of pi_hat around pi, and prints it next to the bias bound.

    * The bound blows up as pi_hat approaches alpha; on the far side of alpha it is unbounded.

    * Class-conditional risks come from large labeled samples; no training.
'''
def demo_002(pi=0.7, alpha=1.0 / 3.0, n_samples=200_000, seed=0):
    spec = GaussianTaskSpec.symmetric(dim=2, prior_pi=pi, separation=1.0)
    loss = LossSpec.make(cfg.default_loss)
    scorer = Scorer(2, seed=seed)
    pool = gen_gaussian_pool(spec, n_samples, seed)
    risks = class_conditional_risks(scorer, pool.features[pool.labels == 1], pool.features[pool.labels == -1], loss)
    true_risk = risks.true_risk(pi)

    print(f"[INFO] True risk at pi = {pi}: {true_risk:.5f}")
    for pi_hat in np.round(np.arange(0.40, 0.96, 0.05), 2):
        biased = misspecified_prior_risk(risks, pi, pi_hat, alpha)
        bound = prior_bias_bound(loss.bound_B, abs(pi_hat - pi), pi, pi_hat, alpha)
        bound_text = "unbounded" if is_unbounded(bound) else f"{bound:.4f}"
        print(f"[INFO] pi_hat = {pi_hat:.2f}: |bias| = {abs(biased - true_risk):.5f}, bound = {bound_text}")


if __name__ == "__main__":
    demo_002()
