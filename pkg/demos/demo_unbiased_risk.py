import numpy as np

import core.config as cfg
from core.losses import LossSpec
from core.rng import derive_seed
from datagen.gaussian import GaussianTaskSpec, gen_gaussian_pool
from datagen.pools import strip_labels
from datagen.tuples import TupleBuildSpec, build_tuples
from model.scorer import Scorer
from risk.identification import MixConfig
from risk.ure import empirical_ure, supervised_risk

'''
Demo 001:
    * Draws many independent (tuples, unlabeled pool) datasets from a two-Gaussian task and
      evaluates the unbiased risk of one fixed random linear scorer on each of them.

    * The mean of the estimates is compared with the supervised risk of the same scorer on a
      large audit-labeled sample; the gap should stay within a few standard errors.

    * No training.
'''
def demo_001(n_draws=1000, n_tuples=200, n_unlabeled=600, audit_size=1_000_000, seed=0):
    spec = GaussianTaskSpec.symmetric(dim=2, prior_pi=0.5, separation=1.0)
    tuple_spec = TupleBuildSpec(n=3, m=1, n_tuples=n_tuples)
    loss = LossSpec.make(cfg.default_loss)
    scorer = Scorer(2, seed=derive_seed(seed, 0))
    mix = MixConfig(spec.prior_pi, 1.0 / 3.0)

    audit = gen_gaussian_pool(spec, audit_size, derive_seed(seed, 1))
    reference = supervised_risk(scorer, audit.features, audit.labels, loss)

    estimates = []
    for k in range(n_draws):
        source = gen_gaussian_pool(spec, 6 * n_tuples, derive_seed(seed, 2, k))
        tuples, _ = build_tuples(source, tuple_spec, derive_seed(seed, 3, k))
        pool = strip_labels(gen_gaussian_pool(spec, n_unlabeled, derive_seed(seed, 4, k)), spec.prior_pi)
        estimates.append(empirical_ure(scorer, tuples, pool, mix, loss).total_unclamped)
        if (k + 1) % 100 == 0:
            print(f"[INFO] {k + 1}/{n_draws} draws")

    estimates = np.asarray(estimates)
    se = estimates.std(ddof=1) / np.sqrt(n_draws)
    print(f"[INFO] Supervised risk: {reference:.5f}")
    print(f"[INFO] Mean unbiased estimate: {estimates.mean():.5f} (SE {se:.5f})")
    print(f"[INFO] |difference| / SE = {abs(estimates.mean() - reference) / se:.2f}")


if __name__ == "__main__":
    demo_001()
