import json

import numpy as np
import pytest
import torch

from model.scorer import Scorer, ScorerKind, as_tensor, predict_labels


def test_linear_forward():
    zero = Scorer(3)
    assert not zero.score(np.random.default_rng(0).normal(size=(10, 3))).any()
    scorer = Scorer.linear([1.0, -1.0])
    assert scorer.score([[2.0, 0.5]])[0] == 1.5
    assert scorer.n_parameters == 3


def test_mlp_forward_matches_manual_computation():
    """
    Same forward pass in plain numpy from the flat parameter vector.
    """
    scorer = Scorer(4, ScorerKind.MLP1, hidden_width=8, activation="tanh", seed=3)
    assert scorer.n_parameters == 4 * 8 + 8 + 8 + 1
    theta = scorer.flat_parameters()
    w1, b1 = theta[:32].reshape(8, 4), theta[32:40]
    w2, b2 = theta[40:48], theta[48]
    x = np.random.default_rng(1).normal(size=(5, 4))
    manual = np.tanh(x @ w1.T + b1) @ w2 + b2
    assert np.allclose(scorer.score(x), manual, atol=1e-12)


def test_initialization_is_seeded():
    a = Scorer(2, "mlp1", seed=11).flat_parameters()
    b = Scorer(2, "mlp1", seed=11).flat_parameters()
    c = Scorer(2, "mlp1", seed=12).flat_parameters()
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    bound = 1.0 / np.sqrt(2)
    assert np.abs(a[:2 * 64 + 64]).max() <= bound


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        Scorer(3)(as_tensor(np.zeros((4, 2))))
    with pytest.raises(ValueError):
        Scorer(3)(torch.zeros(3, dtype=torch.float64))


def test_predict_labels():
    scorer = Scorer.linear([1.0])
    assert predict_labels(scorer, [[0.5], [-0.2]]).tolist() == [1, -1]
    assert predict_labels(scorer, [[0.0]]).tolist() == [-1]
    assert (predict_labels(scorer, [[0.5], [40.0]], threshold=1e12) == -1).all()


def test_json_keeps_parameters():
    scorer = Scorer(3, "mlp1", hidden_width=5, seed=2)
    text = scorer.to_json()
    assert json.loads(text)["hidden_width"] == 5
    twin = Scorer.from_json(text)
    x = np.random.default_rng(2).normal(size=(6, 3))
    assert np.array_equal(twin.score(x), scorer.score(x))
    assert np.array_equal(scorer.clone().flat_parameters(), scorer.flat_parameters())


if __name__ == "__main__":
    test_linear_forward()
    test_mlp_forward_matches_manual_computation()
    test_initialization_is_seeded()
    test_dimension_mismatch()
    test_predict_labels()
    test_json_keeps_parameters()
    print("[INFO] Scorer tests passed")
