import math
import os

import numpy as np
import pandas as pd
import pytest

from evaluation.statistics import bootstrap_ci, cliffs_delta, cliffs_magnitude, holm_adjust, wilcoxon_signed_rank
from evaluation.window import RobustWindow, annotate_sweep, mark_robust, robustness_window
from prior.sweep import AGGREGATE_COLUMNS, SweepResult

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def _sweep_frame(deltas, means, widths, center=0.5):
    rows = [{"pi": center + d, "delta": d, "mean": m, "std": 0.01, "ci_low": m - w / 2, "ci_high": m + w / 2,
             "ill_conditioned": False} for d, m, w in zip(deltas, means, widths)]
    return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)


def test_wilcoxon_exact_values():
    b = np.arange(10, dtype=np.float64)
    assert math.isclose(wilcoxon_signed_rank(b + 1.0, b), 2.0 / 2 ** 10, rel_tol=1e-12)
    alternating = b + np.array([1.0, -1.0] * 5)
    assert wilcoxon_signed_rank(alternating, b) >= 0.9
    with pytest.warns(RuntimeWarning, match="non-zero"):
        assert wilcoxon_signed_rank(b, b) == 1.0
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(b, b[:5])


def test_wilcoxon_exact_matches_normal_approximation():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.normal(0.3, 1.0, 25), rng.normal(0.0, 1.0, 25)
        exact = wilcoxon_signed_rank(a, b, exact_max_n=25)
        normal = wilcoxon_signed_rank(a, b, exact_max_n=0)
        assert abs(exact - normal) <= 0.01


def test_holm_adjust():
    assert np.allclose(holm_adjust([0.01, 0.02, 0.04]), [0.03, 0.04, 0.04])
    assert holm_adjust([0.2]).tolist() == [0.2]
    assert holm_adjust([0.5, 0.6]).tolist() == [1.0, 1.0]
    p = np.random.default_rng(1).random(12)
    adjusted = holm_adjust(p)
    assert (adjusted >= p).all()
    assert (np.diff(adjusted[np.argsort(p)]) >= 0).all()
    with pytest.raises(ValueError):
        holm_adjust([0.1, 1.5])


def test_cliffs_delta():
    assert cliffs_delta([3.0, 4.0], [1.0, 2.0]) == 1.0
    assert cliffs_delta([1.0, 2.0, 2.0], [2.0, 1.0, 2.0]) == 0.0
    assert cliffs_delta([1.0, 2.0], [1.5]) == 0.0
    rng = np.random.default_rng(2)
    x, y = rng.random(7), rng.random(9)
    assert cliffs_delta(x, y) == -cliffs_delta(y, x)
    assert [cliffs_magnitude(d) for d in (0.1, -0.2, 0.4, -0.9)] == ["negligible", "small", "medium", "large"]


def test_bootstrap_ci():
    assert bootstrap_ci(np.full(10, 0.5), b=500) == (0.5, 0.5)
    low, high = bootstrap_ci([0.0, 1.0] * 50, b=10000, seed=3)
    assert abs(low - 0.40) <= 0.02 and abs(high - 0.60) <= 0.02
    assert bootstrap_ci([0.1, 0.5, 0.9], b=300, seed=4) == bootstrap_ci([0.1, 0.5, 0.9], b=300, seed=4)
    with pytest.raises(ValueError):
        bootstrap_ci([0.5])


def test_bootstrap_coverage():
    rng = np.random.default_rng(5)
    covered = 0
    for rep in range(200):
        low, high = bootstrap_ci(rng.normal(1.0, 2.0, 50), b=2000, seed=rep)
        covered += low <= 1.0 <= high
    assert covered >= 178


def test_window_golden_file(tmp_path):
    """
    Three-point sweep fixture: the window and Delta_crit must match the stored JSON byte for byte.
    """
    sweep = SweepResult.from_aggregate_csv(os.path.join(FIXTURES, "window_sweep.csv"))
    window = robustness_window(sweep)
    with open(os.path.join(FIXTURES, "window_expected.json")) as fh:
        assert window.to_json() == fh.read()
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    window.save(str(first))
    robustness_window(SweepResult.from_aggregate_csv(os.path.join(FIXTURES, "window_sweep.csv"))).save(str(second))
    assert first.read_bytes() == second.read_bytes()


def test_window_cases():
    window = robustness_window(_sweep_frame([0.0, 0.05, 0.1], [0.9, 0.89, 0.86], [0.03, 0.03, 0.06]))
    assert (window.delta_min, window.delta_max, window.delta_crit) == (0.0, 0.05, 0.1)

    steady = robustness_window(_sweep_frame([-0.1, -0.05, 0.0, 0.05, 0.1], [0.9] * 5, [0.02] * 5))
    assert steady.delta_max == 0.1 and steady.delta_crit is None

    shaky = robustness_window(_sweep_frame([0.0, 0.05], [0.9, 0.9], [0.08, 0.02]))
    assert shaky.is_degenerate and shaky.delta_crit == 0.0

    # one failing side ends the window
    lopsided = robustness_window(_sweep_frame([-0.05, 0.0, 0.05, 0.1], [0.8, 0.9, 0.9, 0.9], [0.02] * 4))
    assert lopsided.delta_max == 0.0

    with pytest.raises(ValueError):
        robustness_window(_sweep_frame([0.05, 0.1], [0.9, 0.9], [0.02, 0.02]))
    with pytest.raises(ValueError):
        RobustWindow(0.1, 0.05, None)


def test_annotate_sweep():
    frame = _sweep_frame([0.0, 0.05, 0.1], [0.9, 0.89, 0.86], [0.03, 0.03, 0.06])
    annotated = annotate_sweep(frame, robustness_window(frame))
    assert annotated["robust"].tolist() == [True, True, False]
    assert annotated["in_window"].tolist() == [True, True, False]
    assert annotated["delta_crit"].tolist() == [False, False, True]


def test_mark_robust_flags():
    sweep = SweepResult.from_aggregate_csv(os.path.join(FIXTURES, "window_sweep.csv"))
    frame = mark_robust(sweep, 0.02, 0.05)
    assert frame["robust"].tolist() == [True, True, False]
    assert np.allclose(frame["ci_width"], [0.03, 0.03, 0.06])
    assert mark_robust(sweep, 0.05, 0.1)["robust"].all()


if __name__ == "__main__":
    test_wilcoxon_exact_values()
    test_wilcoxon_exact_matches_normal_approximation()
    test_holm_adjust()
    test_cliffs_delta()
    test_bootstrap_ci()
    test_bootstrap_coverage()
    test_window_cases()
    test_annotate_sweep()
    test_mark_robust_flags()
    print("[INFO] Statistics and window tests passed")
