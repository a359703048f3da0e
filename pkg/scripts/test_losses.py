import math

import numpy as np
import pytest
import torch

from core.errors import IllConditionedError, InfeasibleTupleSpecError, NTMPError
from core.losses import LossKind, LossSpec, clip_scores, loss_grad, loss_value, partial_loss
from core.rng import RngSeed, derive_seed, make_rng, torch_generator


def test_loss_values():
    """
    Closed-form values of the three surrogates.
    """
    logistic = LossSpec.make("logistic")
    sigmoid = LossSpec.make("sigmoid")
    assert math.isclose(loss_value(logistic, 0.0), math.log(2.0), rel_tol=1e-12)
    assert math.isclose(loss_value(sigmoid, 0.0), 0.5, rel_tol=1e-12)
    assert math.isclose(loss_value(logistic, 30.0), math.log1p(math.exp(-30.0)), rel_tol=1e-9)
    assert math.isclose(loss_value(logistic, 30.0), 9.36e-14, rel_tol=1e-3)
    assert loss_value(LossSpec.make("squared_hinge"), 2.0) == 0.0
    print("[INFO] Loss values match the closed forms")


def test_loss_gradients():
    logistic = LossSpec.make("logistic")
    assert math.isclose(loss_grad(logistic, 0.0), -0.5, rel_tol=1e-12)
    assert math.isclose(loss_grad(LossSpec.make("sigmoid"), 0.0), -0.25, rel_tol=1e-12)
    assert math.isclose(loss_grad(logistic, 2.0), -0.119203, abs_tol=1e-6)


def test_gradient_matches_finite_difference():
    margins = make_rng(0).uniform(-10.0, 10.0, size=1000)
    h = 1e-5
    for kind in LossKind:
        spec = LossSpec.make(kind)
        for t in margins:
            if kind is LossKind.SQUARED_HINGE and abs(t - 1.0) < 1e-3:
                continue
            fd = (loss_value(spec, t + h) - loss_value(spec, t - h)) / (2.0 * h)
            grad = loss_grad(spec, t)
            assert abs(grad - fd) <= 1e-6 * (1.0 + abs(grad)), (kind, t)


def test_sigmoid_symmetry():
    spec = LossSpec.make("sigmoid")
    for t in np.linspace(-25.0, 25.0, 101):
        assert abs(loss_value(spec, t) + loss_value(spec, -t) - 1.0) <= 1e-12


def test_non_finite_margin_rejected():
    spec = LossSpec.make("logistic")
    for bad in (math.inf, -math.inf, math.nan):
        with pytest.raises(ValueError):
            loss_value(spec, bad)
        with pytest.raises(ValueError):
            loss_grad(spec, bad)


def test_loss_bounds_on_clipped_range():
    scores = torch.linspace(-100.0, 100.0, 2001, dtype=torch.float64)
    for kind in LossKind:
        spec = LossSpec.make(kind)
        for label in (1, -1):
            values = partial_loss(spec, scores, label)
            assert float(values.min()) >= 0.0
            assert float(values.max()) <= spec.bound_B * (1.0 + 1e-12)
    assert LossSpec.make("logistic").lipschitz_rho == 1.0
    assert LossSpec.make("sigmoid").bound_B == 1.0
    assert LossSpec.make("squared_hinge").bound_B == 961.0
    assert float(clip_scores(torch.tensor([-50.0, 3.0, 50.0])).abs().max()) == 30.0


def test_psi_is_phi_of_negated_score():
    spec = LossSpec.make("logistic")
    scores = torch.tensor([-3.0, -0.5, 0.0, 1.5, 40.0], dtype=torch.float64)
    assert torch.allclose(partial_loss(spec, scores, -1), partial_loss(spec, -scores, 1))


def test_seeds_are_deterministic():
    a = make_rng(RngSeed(7)).standard_normal(5)
    b = make_rng(7).standard_normal(5)
    assert np.array_equal(a, b)
    assert derive_seed(7, 1) == derive_seed(7, 1)
    assert derive_seed(7, 1) != derive_seed(7, 2)
    assert 0 <= derive_seed(2 ** 64 - 1, 3) < 2 ** 64
    g1, g2 = torch_generator(2 ** 64 - 1), torch_generator(2 ** 64 - 1)
    assert torch.equal(torch.rand(3, generator=g1), torch.rand(3, generator=g2))
    with pytest.raises(ValueError):
        RngSeed(-1)


def test_error_hierarchy():
    err = IllConditionedError(1e-12)
    assert isinstance(err, NTMPError) and isinstance(err, ValueError)
    assert err.gap == 1e-12
    short = InfeasibleTupleSpecError(10, 4, 5, 9)
    assert "short by 6 positives" in str(short)


if __name__ == "__main__":
    test_loss_values()
    test_loss_gradients()
    test_gradient_matches_finite_difference()
    test_sigmoid_symmetry()
    test_non_finite_margin_rejected()
    test_loss_bounds_on_clipped_range()
    test_psi_is_phi_of_negated_score()
    test_seeds_are_deterministic()
    test_error_hierarchy()
