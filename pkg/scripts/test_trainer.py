import math
import warnings

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss

import core.config as cfg
from core.errors import IllConditionedError
from core.losses import LossSpec
from datagen.gaussian import GaussianTaskSpec, bayes_accuracy, bayes_log_odds, gen_gaussian_pool
from datagen.pools import strip_labels
from datagen.tuples import TupleBuildSpec, build_tuples, corrupt_counts
from evaluation.metrics import confusion_metrics
from model.scorer import Scorer, predict_labels
from model.trainer import TrainConfig, train_ntmp, train_stratified, train_supervised
from risk.identification import MixConfig
from risk.stratify import stratify_and_solve
from risk.ure import empirical_ure

LOGISTIC = LossSpec.make("logistic")
GRAD_TO_SCALAR = "Converting a tensor with requires_grad"


def _task(seed, n_tuples=1000, variable_nm=None, prior=0.5):
    spec = GaussianTaskSpec.symmetric(2, prior, 1.0)
    source = gen_gaussian_pool(GaussianTaskSpec.symmetric(2, 1.0 / 3.0, 1.0), 6 * n_tuples, seed)
    build = TupleBuildSpec(n=3, m=1, n_tuples=n_tuples, variable_nm=variable_nm)
    tuples, audit = build_tuples(source, build, seed + 1)
    pool = strip_labels(gen_gaussian_pool(spec, 3000, seed + 2), declared_prior=prior)
    test = gen_gaussian_pool(spec, 5000, seed + 3)
    return spec, tuples, audit, pool, test


def _accuracy(scorer, pool):
    return float(np.mean(predict_labels(scorer, pool) == pool.labels))


def _logistic_risk(scorer, spec, nodes=80):
    """Population logistic risk of a linear scorer on a Gaussian task (Gauss-Hermite quadrature)."""
    w = scorer.out.weight.detach().numpy().ravel()
    b = float(scorer.out.bias.detach().numpy()[0])
    z, weights = hermegauss(nodes)
    weights = weights / weights.sum()
    spread = math.sqrt(spec.cov_scale) * float(np.linalg.norm(w))
    risk = 0.0
    for label, mean, share in ((1, spec.mu_pos, spec.prior_pi), (-1, spec.mu_neg, 1.0 - spec.prior_pi)):
        scores = np.clip(w @ mean + b + spread * z, -cfg.score_clip, cfg.score_clip)
        risk += share * float(weights @ np.logaddexp(0.0, -label * scores))
    return risk


def test_ntmp_reaches_bayes_accuracy():
    """
    Separable task with (n, m) = (3, 1), pi = 0.5 and a linear scorer on the unclamped risk.
    """
    for seed in range(5):
        spec, tuples, _, pool, test = _task(10 * seed)
        tcfg = TrainConfig(epochs=20, learning_rate=1e-2, seed=seed)
        scorer, trace = train_ntmp(tuples, pool, MixConfig(0.5, float(tuples.effective_alpha)), LOGISTIC, tcfg)
        accuracy = _accuracy(scorer, test)
        assert accuracy >= 0.95 * bayes_accuracy(spec), (seed, accuracy)
        assert len(trace) == 20


def test_abs_clamp_with_a_negative_tuple_component():
    """
    On this task the tuple component of the risk is negative near the optimum, so ABS trains on -R_T.
    """
    _, tuples, _, pool, _ = _task(60)
    mix = MixConfig(0.5, float(tuples.effective_alpha))
    scorer, _ = train_ntmp(tuples, pool, mix, LOGISTIC, TrainConfig(epochs=20, learning_rate=1e-2, seed=1))
    assert empirical_ure(scorer, tuples, pool, mix, LOGISTIC).r_tuple < 0.0

    _, trace = train_ntmp(tuples, pool, mix, LOGISTIC, TrainConfig(epochs=5, learning_rate=1e-2, clamp_kind="abs"))
    frame = trace.to_frame()
    assert np.isfinite(frame["risk_clamped"]).all()
    assert (frame["risk_clamped"] >= frame["risk_unclamped"] - 1e-12).all()


def test_estimation_error_rate():
    """
    Over N = n_T * n + n_U effective samples, |R_hat - R| of the trained scorer falls like N^-1/2 and
    its excess risk over the Bayes scorer falls at least that fast.
    """
    spec = GaussianTaskSpec.symmetric(2, 0.8, 0.5)
    source_spec = GaussianTaskSpec.symmetric(2, 1.0 / 3.0, 0.5)
    best = _logistic_risk(Scorer.linear(*bayes_log_odds(spec)), spec)
    sizes = [500, 2000, 8000, 32000]
    deviation, excess = [], []
    for size in sizes:
        n_tuples, n_unlabeled = size // 6, size // 2
        dev, exc = [], []
        for seed in range(24):
            base = 100000 * seed + size
            source = gen_gaussian_pool(source_spec, 6 * n_tuples, base + 1)
            tuples, _ = build_tuples(source, TupleBuildSpec(n=3, m=1, n_tuples=n_tuples), base + 2)
            pool = strip_labels(gen_gaussian_pool(spec, n_unlabeled, base + 3), declared_prior=0.8)
            mix = MixConfig(0.8, float(tuples.effective_alpha))
            # full-batch gradient descent to the empirical minimizer
            tcfg = TrainConfig(epochs=150, batch_tuples=n_tuples, batch_unlabeled=n_unlabeled, optimizer="sgd",
                               learning_rate=1.0, weight_decay=0.0, seed=seed)
            scorer, _ = train_ntmp(tuples, pool, mix, LOGISTIC, tcfg)
            risk = _logistic_risk(scorer, spec)
            dev.append(abs(empirical_ure(scorer, tuples, pool, mix, LOGISTIC).total_unclamped - risk))
            exc.append(risk - best)
        deviation.append(np.mean(dev))
        excess.append(np.mean(exc))

    log_n = np.log(sizes)
    slope = np.polyfit(log_n, np.log(deviation), 1)[0]
    assert -0.7 <= slope <= -0.3, (slope, deviation)
    assert min(excess) > 0.0
    assert np.polyfit(log_n, np.log(excess), 1)[0] <= -0.3, excess


def test_count_noise_leaves_the_classifier_stable():
    """
    +/-1 count flips are zero-mean, so the declared alpha_bar stays near m / n and the trained
    classifier barely moves across the flip-probability grid.
    """
    _, tuples, _, pool, test = _task(20)
    tcfg = TrainConfig(epochs=20, learning_rate=1e-2, seed=3)
    rows = []
    for p in (0.0, 0.1, 0.2, 0.3, 0.4, 0.5):
        noisy = corrupt_counts(tuples, p, 31)
        alpha = float(noisy.effective_alpha)
        assert abs(alpha - 1.0 / 3.0) <= 0.03, (p, alpha)
        scorer, _ = train_ntmp(noisy, pool, MixConfig(0.5, alpha), LOGISTIC, tcfg)
        rows.append(confusion_metrics(predict_labels(scorer, test), test.labels))
    clean = rows[0]
    for accuracy, tpr, fpr, _, f1, _ in rows[1:]:
        assert abs(accuracy - clean[0]) <= 0.02
        assert abs(fpr - clean[2]) <= 0.05
        assert abs(tpr - clean[1]) <= 0.05
        assert abs(f1 - clean[4]) <= 0.03


def test_zero_epochs_is_a_no_op():
    _, tuples, _, pool, _ = _task(1, n_tuples=200)
    tcfg = TrainConfig(epochs=0)
    start = tcfg.make_scorer(2)
    scorer, trace = train_ntmp(tuples, pool, MixConfig(0.5, 1.0 / 3.0), LOGISTIC, tcfg, scorer=start.clone())
    assert np.array_equal(scorer.flat_parameters(), start.flat_parameters())
    assert len(trace) == 0


def test_training_is_deterministic():
    _, tuples, audit, pool, _ = _task(2, n_tuples=200)
    tcfg = TrainConfig(epochs=3, learning_rate=1e-2, seed=5, scorer_kind="mlp1", hidden_width=8)
    mix = MixConfig(0.5, 1.0 / 3.0)
    with warnings.catch_warnings():
        warnings.filterwarnings("error", message=GRAD_TO_SCALAR)
        first, trace = train_ntmp(tuples, pool, mix, LOGISTIC, tcfg, audit=(tuples.features, audit.labels))
    second, _ = train_ntmp(tuples, pool, mix, LOGISTIC, tcfg)
    assert np.array_equal(first.flat_parameters(), second.flat_parameters())
    frame = trace.to_frame()
    assert frame["epoch"].tolist() == [1, 2, 3]
    assert frame["audit_accuracy"].between(0.0, 1.0).all()


def test_training_preconditions():
    _, tuples, _, pool, _ = _task(3, n_tuples=100)
    with pytest.raises(IllConditionedError):
        train_ntmp(tuples, pool, MixConfig(1.0 / 3.0, 1.0 / 3.0), LOGISTIC, TrainConfig(epochs=1))
    with pytest.raises(ValueError):
        train_ntmp(tuples, pool, MixConfig(0.5, 1.0 / 3.0), LOGISTIC, TrainConfig(epochs=1, batch_tuples=500))
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_tuples=0)


def test_stratified_training():
    """
    Mixed (3,1) + (5,2) tuples at pi_hat = alpha_bar = 0.375 train per stratum and reach at least
    90% of the accuracy of single-configuration (3,1) training at pi = 0.5.
    """
    mixed_nm = [(3, 1, 0.5), (5, 2, 0.5)]
    for seed in (4, 5, 6):
        _, tuples, _, pool, test = _task(seed, variable_nm=mixed_nm, prior=0.375)
        plan = stratify_and_solve(tuples, 0.375, 0.05)
        assert not plan.is_single
        assert sorted(float(s.alpha) for s in plan.strata) == pytest.approx([1.0 / 3.0, 0.4], abs=0.02)

        tcfg = TrainConfig(epochs=20, learning_rate=1e-2, seed=seed)
        with warnings.catch_warnings():
            warnings.filterwarnings("error", message=GRAD_TO_SCALAR)
            scorer, trace = train_stratified(plan, pool, LOGISTIC, tcfg)
        assert np.isfinite(trace.to_frame()["risk_clamped"]).all()

        _, single, _, single_pool, single_test = _task(seed)
        reference, _ = train_ntmp(single, single_pool, MixConfig(0.5, 1.0 / 3.0), LOGISTIC, tcfg)
        assert _accuracy(scorer, test) >= 0.9 * _accuracy(reference, single_test), seed


def test_supervised_training():
    spec = GaussianTaskSpec.symmetric(2, 0.5, 1.0)
    train = gen_gaussian_pool(spec, 3000, 5)
    test = gen_gaussian_pool(spec, 5000, 6)
    scorer, trace = train_supervised(train.features, train.labels, LOGISTIC,
                                     TrainConfig(epochs=10, learning_rate=1e-2, batch_tuples=64))
    assert _accuracy(scorer, test) >= 0.95 * bayes_accuracy(spec)
    assert not math.isnan(trace.to_frame()["risk_unclamped"].iloc[-1])


if __name__ == "__main__":
    test_ntmp_reaches_bayes_accuracy()
    test_abs_clamp_with_a_negative_tuple_component()
    test_estimation_error_rate()
    test_count_noise_leaves_the_classifier_stable()
    test_zero_epochs_is_a_no_op()
    test_training_is_deterministic()
    test_training_preconditions()
    test_stratified_training()
    test_supervised_training()
    print("[INFO] Training tests passed")
