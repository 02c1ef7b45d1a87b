import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vulncascade.errors import NotNormalizedError
from vulncascade.losses import EPSILON, bce_loss, cce_loss


class TestBce:
    def test_half_probability_gives_ln2(self):
        loss, _ = bce_loss(np.array([[1.0]]), np.array([[0.5]]))
        assert abs(loss - math.log(2.0)) < 1e-9
        loss, _ = bce_loss(np.array([[0.0]]), np.array([[0.5]]))
        assert abs(loss - math.log(2.0)) < 1e-9

    def test_matches_direct_formula(self, rng):
        t = rng.integers(0, 2, size=(8, 1)).astype(np.float64)
        p = rng.uniform(0.01, 0.99, size=(8, 1))
        loss, _ = bce_loss(t, p)
        want = float(np.mean(-(t * np.log(p) + (1 - t) * np.log(1 - p))))
        assert abs(loss - want) < 1e-12

    def test_mean_over_batch(self):
        one, _ = bce_loss(np.array([[1.0]]), np.array([[0.5]]))
        four, _ = bce_loss(np.full((4, 1), 1.0), np.full((4, 1), 0.5))
        assert abs(one - four) < 1e-12

    def test_extreme_probabilities_clamped_finite(self):
        loss, grad = bce_loss(np.array([[1.0], [0.0]]),
                              np.array([[0.0], [1.0]]))
        assert np.isfinite(loss)
        assert np.all(np.isfinite(grad))
        assert abs(loss - (-math.log(EPSILON))) < 1e-6

    def test_gradient_matches_finite_differences(self, rng):
        t = rng.integers(0, 2, size=(5, 1)).astype(np.float64)
        p = rng.uniform(0.05, 0.95, size=(5, 1))
        _, grad = bce_loss(t, p)
        h = 1e-7
        for i in range(5):
            dp = np.zeros_like(p)
            dp[i, 0] = h
            num = (bce_loss(t, p + dp)[0] - bce_loss(t, p - dp)[0]) / (2 * h)
            assert abs(num - grad[i, 0]) < 1e-5


class TestCce:
    def test_uniform_over_four_gives_ln4(self):
        p = np.full((1, 4), 0.25)
        t = np.array([[0.0, 1.0, 0.0, 0.0]])
        loss, _ = cce_loss(t, p)
        assert abs(loss - math.log(4.0)) < 1e-9

    def test_matches_direct_formula(self, rng):
        p = rng.uniform(0.1, 1.0, size=(6, 5))
        p /= p.sum(axis=1, keepdims=True)
        t = np.eye(5)[rng.integers(0, 5, size=6)]
        loss, _ = cce_loss(t, p)
        want = float(-np.sum(t * np.log(p)) / 6)
        assert abs(loss - want) < 1e-12

    def test_rejects_unnormalized_rows(self):
        t = np.array([[1.0, 0.0]])
        with pytest.raises(NotNormalizedError):
            cce_loss(t, np.array([[0.7, 0.7]]))

    def test_accepts_rows_within_tolerance(self):
        t = np.array([[1.0, 0.0]])
        loss, _ = cce_loss(t, np.array([[0.5 + 4e-7, 0.5]]))
        assert np.isfinite(loss)

    def test_perfect_prediction_near_zero_loss(self):
        t = np.array([[0.0, 1.0]])
        loss, _ = cce_loss(t, np.array([[0.0, 1.0]]))
        assert loss < 1e-6

    def test_gradient_matches_finite_differences(self, rng):
        p = rng.uniform(0.2, 1.0, size=(3, 4))
        p /= p.sum(axis=1, keepdims=True)
        t = np.eye(4)[[0, 2, 3]]
        _, grad = cce_loss(t, p)
        h = 1e-8
        # probe only coordinates where the target is hot; the loss ignores
        # the rest and renormalization is not the loss's business
        for i in range(3):
            c = int(np.argmax(t[i]))
            dp = np.zeros_like(p)
            dp[i, c] = h
            num = (-np.log(p[i, c] + h) + np.log(p[i, c] - h)) / (2 * h) / 3
            assert abs(num - grad[i, c]) < 1e-4


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_bce_formula_property(n, seed):
    r = np.random.default_rng(seed)
    t = r.integers(0, 2, size=(n, 1)).astype(np.float64)
    p = r.uniform(1e-4, 1 - 1e-4, size=(n, 1))
    loss, _ = bce_loss(t, p)
    want = float(np.mean(-(t * np.log(p) + (1 - t) * np.log(1 - p))))
    assert abs(loss - want) < 1e-10
