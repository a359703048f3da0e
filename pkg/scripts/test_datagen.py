import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import norm

from core.errors import CsvParseError, DegenerateInputError, InfeasibleTupleSpecError
from core.types import LabeledPool, TupleDataset, UnlabeledPool
from datagen.csv_io import ingest_csv_pool, load_audit, load_tuples, provenance_line, save_tuples, write_pool_csv
from datagen.gaussian import (GaussianTaskSpec, bayes_accuracy, bayes_log_odds, gaussian_task_with_prior,
                              gen_gaussian_pool)
from datagen.normalization import FeatureNormalizer
from datagen.pools import resample_pool_to_prior, split_pool, strip_labels
from datagen.tuples import ReplacementMode, TupleBuildSpec, build_tuples, corrupt_counts, flatten


def _pool(prior, n, seed=0, dim=2):
    return gen_gaussian_pool(GaussianTaskSpec.symmetric(dim, prior, 1.0), n, seed)


def test_gaussian_prior_concentration():
    assert abs(_pool(0.5, 10000).prior - 0.5) <= 0.02
    assert abs(_pool(0.2, 10000, seed=1).prior - 0.2) <= 0.02


def test_gaussian_bayes_accuracy():
    spec = GaussianTaskSpec.symmetric(2, 0.5, 1.0)
    assert math.isclose(bayes_accuracy(spec), norm.cdf(1.0), rel_tol=1e-12)
    # Monte Carlo check of the closed form at another prior
    skewed = GaussianTaskSpec.symmetric(2, 0.3, 1.0)
    pool = gen_gaussian_pool(skewed, 200000, 3)
    w, b = bayes_log_odds(skewed)
    predictions = np.where(pool.features @ w + b > 0, 1, -1)
    assert abs(np.mean(predictions == pool.labels) - bayes_accuracy(skewed)) < 0.005


def test_task_with_another_prior():
    spec = GaussianTaskSpec.symmetric(2, 0.5, 1.0)
    shifted = gaussian_task_with_prior(spec, 0.2)
    assert shifted.prior_pi == 0.2 and spec.prior_pi == 0.5
    assert shifted.mean_pos == spec.mean_pos and shifted.mean_neg == spec.mean_neg
    assert abs(gen_gaussian_pool(shifted, 10000, 19).prior - 0.2) <= 0.02


def test_gaussian_spec_validation():
    with pytest.raises(DegenerateInputError):
        GaussianTaskSpec(2, 0.5, (0.0, 0.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        GaussianTaskSpec.symmetric(2, 1.0, 1.0)
    with pytest.raises(ValueError):
        gen_gaussian_pool(GaussianTaskSpec.symmetric(2, 0.5, 1.0), 1, 0)


def test_build_tuples_exact_counts():
    pool = _pool(1.0 / 3.0, 6600, seed=2)
    tuples, audit = build_tuples(pool, TupleBuildSpec(n=3, m=1, n_tuples=2000), seed=5)
    assert len(tuples) == 2000 and tuples.n_instances == 6000
    assert (audit.tuple_counts(tuples) == 1).all()
    assert len(np.unique(tuples.instance_indices)) == tuples.n_instances
    assert np.array_equal(pool.labels[tuples.instance_indices], audit.labels)
    assert audit.positive_fraction() == 1.0 / 3.0
    assert tuples.effective_alpha == Fraction(1, 3)


def test_positions_are_shuffled():
    pool = _pool(1.0 / 3.0, 15000, seed=4)
    tuples, audit = build_tuples(pool, TupleBuildSpec(n=3, m=1, n_tuples=3000), seed=6)
    positions = np.flatnonzero(audit.labels == 1) - tuples.offsets[:-1]
    counts = np.bincount(positions, minlength=3)
    assert (np.abs(counts - 1000) < 100).all()


def test_dissimilar_pairs():
    pool = _pool(0.5, 1000, seed=7)
    tuples, audit = build_tuples(pool, TupleBuildSpec(n=2, m=1, n_tuples=300), seed=8)
    assert (tuples.sizes == 2).all()
    labels = audit.labels.reshape(-1, 2)
    assert (labels.sum(axis=1) == 0).all()


def test_infeasible_and_invalid_specs():
    features = np.arange(20, dtype=np.float64).reshape(10, 2)
    pool = LabeledPool(features, [1, 1] + [-1] * 8)
    with pytest.raises(InfeasibleTupleSpecError) as info:
        build_tuples(pool, TupleBuildSpec(n=3, m=3, n_tuples=1), seed=0)
    assert info.value.needed_pos == 3 and info.value.have_pos == 2
    with pytest.raises(ValueError):
        TupleBuildSpec(n=3, m=5)
    with pytest.raises(ValueError):
        TupleBuildSpec(variable_nm=((3, 1, 0.5), (5, 2, 0.2)))
    with pytest.raises(ValueError):
        TupleBuildSpec(replacement="sometimes")


def test_with_replacement_reuses_small_pool():
    features = np.arange(12, dtype=np.float64).reshape(6, 2)
    pool = LabeledPool(features, [1, 1, -1, -1, -1, -1])
    spec = TupleBuildSpec(n=3, m=1, n_tuples=50, replacement=ReplacementMode.WITH_REPLACEMENT)
    tuples, audit = build_tuples(pool, spec, seed=1)
    assert tuples.n_instances == 150
    assert (audit.tuple_counts(tuples) == 1).all()


def test_flatten_variable_alpha():
    sizes = [3] * 50 + [5] * 50
    counts = [1] * 50 + [2] * 50
    dataset = TupleDataset(np.zeros((400, 2)), sizes, counts)
    instances, alpha = flatten(dataset)
    assert instances.shape == (400, 2)
    assert alpha == Fraction(3, 8) and float(alpha) == 0.375
    assert dataset.alphas.min() <= alpha <= dataset.alphas.max()


def test_flattened_marginal_mean():
    spec = GaussianTaskSpec.symmetric(2, 1.0 / 3.0, 1.0)
    pool = gen_gaussian_pool(spec, 150000, 9)
    tuples, _ = build_tuples(pool, TupleBuildSpec(n=3, m=1, n_tuples=33334), seed=10)
    instances, alpha = flatten(tuples)
    expected = float(alpha) * spec.mu_pos + (1.0 - float(alpha)) * spec.mu_neg
    se = instances.std(axis=0, ddof=1) / math.sqrt(len(instances))
    assert (np.abs(instances.mean(axis=0) - expected) <= 3.0 * se).all()


def test_variable_tuples_mixture():
    spec = TupleBuildSpec(n_tuples=4000, variable_nm=[(3, 1, 0.5), (5, 2, 0.5)])
    pool = _pool(0.5, 30000, seed=11)
    tuples, audit = build_tuples(pool, spec, seed=12)
    assert not tuples.is_fixed
    assert set(np.unique(tuples.sizes)) == {3, 5}
    assert np.array_equal(audit.tuple_counts(tuples), tuples.counts)
    assert abs(float(tuples.effective_alpha) - 0.375) < 0.01


def test_corrupt_counts():
    pool = _pool(1.0 / 3.0, 45000, seed=13)
    tuples, _ = build_tuples(pool, TupleBuildSpec(n=3, m=1, n_tuples=10000), seed=14)
    assert np.array_equal(corrupt_counts(tuples, 0.0, seed=1).counts, tuples.counts)
    forced = corrupt_counts(tuples, 1.0, seed=1)
    assert set(np.unique(forced.counts)) <= {0, 2}
    half = corrupt_counts(tuples, 0.5, seed=2)
    assert abs(np.mean(half.counts != 1) - 0.5) <= 0.02
    assert np.array_equal(half.features, tuples.features)
    with pytest.raises(ValueError):
        corrupt_counts(tuples, 1.5, seed=0)


def test_ingest_csv(tmp_path):
    path = tmp_path / "pool.csv"
    path.write_text("1.0,2.0,+1\n3.0,4.0,-1\n5.0,6.0,+1\n")
    pool = ingest_csv_pool(str(path), has_labels=True)
    assert len(pool) == 3 and pool.dim == 2
    assert pool.labels.tolist() == [1, -1, 1]

    binary = tmp_path / "binary.csv"
    binary.write_text("x0,x1,label\n0.5,0.1,1\n0.2,0.3,0\n")
    assert ingest_csv_pool(str(binary), has_labels=True).labels.tolist() == [1, -1]

    unlabeled = ingest_csv_pool(str(binary), has_labels=False, declared_prior=0.4)
    assert isinstance(unlabeled, UnlabeledPool) and unlabeled.dim == 3


def test_ingest_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(CsvParseError, match="no rows"):
        ingest_csv_pool(str(empty), has_labels=True)

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1.0,2.0,1\n3.0,4.0,-1,7.0\n")
    with pytest.raises(CsvParseError) as info:
        ingest_csv_pool(str(ragged), has_labels=True)
    assert info.value.row == 2

    text = tmp_path / "text.csv"
    text.write_text("1.0,2.0,1\n1.0,abc,-1\n")
    with pytest.raises(CsvParseError) as info:
        ingest_csv_pool(str(text), has_labels=True)
    assert info.value.row == 2

    symbol = tmp_path / "symbol.csv"
    symbol.write_text("1.0,2.0,1\n1.0,3.0,7\n")
    with pytest.raises(CsvParseError) as info:
        ingest_csv_pool(str(symbol), has_labels=True)
    assert info.value.row == 2


def test_tuple_files_round_trip(tmp_path):
    pool = _pool(0.5, 400, seed=15)
    tuples, audit = build_tuples(pool, TupleBuildSpec(n=3, m=1, n_tuples=50), seed=16)
    paths = [str(tmp_path / name) for name in ("tuples.jsonl", "instances.csv", "audit.csv")]
    save_tuples(tuples, audit, *paths, provenance=provenance_line("abc123", 16))
    with open(paths[1]) as fh:
        assert fh.readline() == "# config_hash=abc123 seed=16\n"
    loaded = load_tuples(paths[0], paths[1])
    assert np.array_equal(loaded.features, tuples.features)
    assert np.array_equal(loaded.counts, tuples.counts)
    assert np.array_equal(load_audit(paths[2]).labels, audit.labels)


def test_pool_csv_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    write_pool_csv(_pool(0.5, 100, seed=17), str(first), provenance_line("h", 17))
    write_pool_csv(_pool(0.5, 100, seed=17), str(second), provenance_line("h", 17))
    assert first.read_bytes() == second.read_bytes()
    assert np.array_equal(ingest_csv_pool(str(first), has_labels=True).features, _pool(0.5, 100, seed=17).features)


def test_split_and_resample_pools():
    pool = _pool(0.5, 1000, seed=18)
    parts = split_pool(pool, (0.5, 0.3, 0.2), seed=1)
    assert [len(p) for p in parts] == [500, 300, 200]
    rows = np.concatenate([p.features[:, 0] for p in parts])
    assert len(np.unique(rows)) == 1000

    resampled = resample_pool_to_prior(pool, 0.25, seed=2)
    assert abs(resampled.prior - 0.25) < 0.01
    unlabeled = strip_labels(resampled)
    assert unlabeled.declared_prior == resampled.prior
    with pytest.raises(ValueError):
        split_pool(pool, (0.8, 0.3), seed=0)


def test_feature_normalizer():
    features = np.random.default_rng(0).normal(3.0, 2.0, size=(5000, 3))
    normalizer = FeatureNormalizer(3).fit(features)
    scaled = normalizer.normalize(features)
    assert np.allclose(scaled.mean(axis=0), 0.0, atol=1e-10)
    assert np.allclose(scaled.std(axis=0), 1.0, atol=1e-6)
    pool = normalizer.normalize_pool(UnlabeledPool(features, 0.3))
    assert pool.declared_prior == 0.3
    with pytest.raises(ValueError):
        FeatureNormalizer(3).fit(features[:1])


if __name__ == "__main__":
    test_gaussian_prior_concentration()
    test_gaussian_bayes_accuracy()
    test_task_with_another_prior()
    test_gaussian_spec_validation()
    test_build_tuples_exact_counts()
    test_positions_are_shuffled()
    test_dissimilar_pairs()
    test_infeasible_and_invalid_specs()
    test_with_replacement_reuses_small_pool()
    test_flatten_variable_alpha()
    test_flattened_marginal_mean()
    test_variable_tuples_mixture()
    test_corrupt_counts()
    print("[INFO] Generation and tuple tests passed")
