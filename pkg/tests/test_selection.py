import math

import numpy as np
import pytest

from knockoff_filter import fdp_hat, threshold

W_EXAMPLE = np.array([3.0, -1.0, 2.0, -2.0, 5.0])


# ----------------------------------------------------------------- fdp_hat


def test_fdp_hat_hand_counts():
    # tails at t=2: one entry <= -2, three entries >= 2
    assert fdp_hat(W_EXAMPLE, 2.0, plus=False) == pytest.approx(1 / 3)
    assert fdp_hat(W_EXAMPLE, 2.0, plus=True) == pytest.approx(2 / 3)


def test_fdp_hat_empty_negative_tail():
    w = np.array([0.5, 1.5, 2.5])
    assert fdp_hat(w, 0.5, plus=False) == 0.0


def test_fdp_hat_empty_selection_denominator():
    w = np.array([-1.0, -2.0])
    assert fdp_hat(w, 0.5, plus=False) == 2.0  # max(denominator, 1)


def test_fdp_hat_rejects_nonpositive_t():
    with pytest.raises(ValueError):
        fdp_hat(W_EXAMPLE, 0.0)


# --------------------------------------------------------------- threshold


def test_threshold_example_knockoff():
    # W = {1,2,3,5}: t=1 gives 2/3 > 0.5, t=2 gives 1/3 <= 0.5
    result = threshold(W_EXAMPLE, q=0.5, plus=False)
    assert result.threshold == 2.0
    assert set(result.selected) == {0, 2, 4}
    assert result.fdp_estimate_at_threshold == pytest.approx(1 / 3)


def test_threshold_example_knockoff_plus():
    # t=2 gives 2/3 > 0.5, t=3 gives (1+0)/2 <= 0.5
    result = threshold(W_EXAMPLE, q=0.5, plus=True)
    assert result.threshold == 3.0
    assert set(result.selected) == {0, 4}


def test_threshold_all_zero_w():
    result = threshold(np.zeros(6), q=0.5)
    assert math.isinf(result.threshold)
    assert result.selected.size == 0


def test_threshold_rejects_q_outside_unit_interval():
    for q in (-0.1, 1.5):
        with pytest.raises(ValueError):
            threshold(W_EXAMPLE, q)


def test_threshold_monotone_in_q():
    rng = np.random.default_rng(0)
    for _ in range(20):
        w = rng.normal(0, 2, 40)
        previous: set[int] = set()
        for q in (0.05, 0.1, 0.2, 0.4, 0.8):
            selected = set(threshold(w, q).selected)
            assert previous <= selected
            previous = selected


def test_threshold_plus_is_conservative():
    rng = np.random.default_rng(1)
    for _ in range(50):
        w = rng.normal(0.5, 2, 30)
        plain = threshold(w, 0.3, plus=False)
        plus = threshold(w, 0.3, plus=True)
        assert plus.threshold >= plain.threshold
        assert set(plus.selected) <= set(plain.selected)


def test_threshold_scale_invariant():
    rng = np.random.default_rng(2)
    w = rng.normal(0, 1, 25)
    base = set(threshold(w, 0.25).selected)
    for c in (1e-6, 0.5, 3.0, 1e8):
        assert set(threshold(c * w, 0.25).selected) == base


def test_threshold_zero_w_never_selected():
    w = np.array([0.0, 4.0, 0.0, -1.0])
    result = threshold(w, q=1.0)
    assert 0 not in result.selected and 2 not in result.selected
    assert 1 in result.selected


def test_threshold_merges_float_duplicates():
    t = 1.0
    w = np.array([t, t * (1 + 1e-14), -t])
    result = threshold(w, q=1.0)
    # both positives selected together: the two magnitudes are one candidate
    assert set(result.selected) == {0, 1}
