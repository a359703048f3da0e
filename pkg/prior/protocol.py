"""
The three-step class-prior protocol: positive proxy, score model, NP lower bound and MPE.
"""

import warnings

import core.config as cfg
from core.rng import derive_seed
from core.types import PriorSource
from model.trainer import train_ntmp
from risk.identification import MixConfig

from .mpe import mpe_estimate, np_lower_bound
from .score_model import build_positive_proxy, fit_score_model


def estimate_prior(tuples, pool, scorer, seed, fraction=cfg.proxy_fraction, bootstrap_b=cfg.prior_bootstrap_b,
                   score_epochs=cfg.score_model_epochs, verbose=False):
    """
    Estimate the class prior of the unlabeled pool.

    Args:
        tuples (TupleDataset): Tuples the positive proxy is taken from.
        pool (UnlabeledPool | np.ndarray): Unlabeled instances.
        scorer (Scorer): Current model; its top-scored tuple instances form the proxy.
        seed (int): Run seed.
        fraction (float): Proxy size as a fraction of the number of tuples.
        bootstrap_b (int): Resamples for the pi_hat interval.
        score_epochs (int): Training epochs of the score model.
        verbose (bool): Print the estimate.

    Returns:
        PriorEstimate: pi_hat with its interval, the NP lower bound and its band.
    """
    features_u = getattr(pool, "features", pool)
    proxy = build_positive_proxy(scorer, tuples, fraction)
    scores = fit_score_model(proxy, features_u, derive_seed(seed, 0), epochs=score_epochs, verbose=verbose)
    pi_lb, band = np_lower_bound(scores.proxy, scores.unlabeled)
    estimate = mpe_estimate(scores.proxy, scores.unlabeled, bootstrap_b=bootstrap_b, seed=derive_seed(seed, 1))
    estimate = estimate.with_lower_bound(pi_lb, band)

    if estimate.pi_hat < pi_lb - cfg.sanity_gate_slack:
        warnings.warn(f"pi_hat = {estimate.pi_hat:.4f} falls below the NP lower bound {pi_lb:.4f}; "
                      "the positive proxy may be contaminated", RuntimeWarning, stacklevel=2)
    if verbose:
        print(f"[INFO] pi_hat = {estimate.pi_hat:.4f} (CI [{estimate.ci_low:.4f}, {estimate.ci_high:.4f}]), "
              f"pi_LB = {pi_lb:.4f}")
    return estimate


def estimate_prior_refreshed(tuples, pool, loss, tcfg, initial_prior, seed, **kwargs):
    """
    Run the protocol twice: with a scorer trained at initial_prior, then once more with a
    scorer retrained at the first estimate.

    Returns:
        tuple[PriorEstimate, Scorer]: The refreshed estimate and the scorer that produced its proxy.
    """
    alpha = float(tuples.effective_alpha)
    estimate, prior = None, float(initial_prior)
    for round_ in range(2):
        scorer, _ = train_ntmp(tuples, pool.with_prior(prior, PriorSource.ESTIMATED), MixConfig(prior, alpha),
                               loss, tcfg)
        estimate = estimate_prior(tuples, pool, scorer, derive_seed(seed, round_), **kwargs)
        prior = min(estimate.pi_hat, 1.0 - cfg.hard_gap)
        if abs(prior - alpha) < cfg.hard_gap:
            break
    return estimate, scorer
