"""Tests for AdamW."""

import numpy as np
import pytest

from artiphon.core.exceptions import ShapeMismatchError, ValidationError
from artiphon.features.training import AdamW, adamw_step
from artiphon.platform.tensor import Parameter


class TestAdamWStep:
    """Tests for a single update."""

    def test_decay_only(self):
        """Test a zero gradient leaves only the decoupled decay."""
        p = Parameter(np.array([1.0]))

        adamw_step([p], [np.zeros(1)], lr=1e-4, weight_decay=5e-4, t=1)

        assert p.data[0] == pytest.approx(1.0 - 5e-8, abs=1e-15)

    def test_first_step_is_sign_sized(self):
        """Test the bias-corrected first step moves by about lr."""
        p = Parameter(np.array([1.0, 1.0]))

        adamw_step([p], [np.array([2.0, -0.5])], lr=1e-3, weight_decay=0.0, t=1)

        np.testing.assert_allclose(p.data, [1.0 - 1e-3, 1.0 + 1e-3], rtol=1e-6)

    def test_frozen_untouched(self):
        """Test frozen parameters skip the update and keep no moments."""
        p = Parameter(np.array([1.0]), frozen=True)

        adamw_step([p], [np.array([3.0])], lr=0.1, weight_decay=0.1, t=1)

        assert p.data[0] == 1.0
        assert p.m is None

    def test_missing_gradient_is_zero(self):
        """Test a None gradient behaves like zeros."""
        p = Parameter(np.array([2.0]))

        adamw_step([p], [None], lr=0.1, weight_decay=0.0, t=1)

        assert p.data[0] == 2.0
        np.testing.assert_array_equal(p.m, [0.0])

    def test_gradient_shape(self):
        """Test a gradient of the wrong shape."""
        with pytest.raises(ShapeMismatchError):
            adamw_step([Parameter(np.ones(2))], [np.ones(3)], lr=0.1, weight_decay=0.0, t=1)

    def test_length_mismatch(self):
        """Test more parameters than gradients."""
        with pytest.raises(ShapeMismatchError):
            adamw_step([Parameter(np.ones(2))], [], lr=0.1, weight_decay=0.0, t=1)

    def test_step_number(self):
        """Test t must start at 1."""
        with pytest.raises(ValidationError):
            adamw_step([Parameter(np.ones(2))], [np.ones(2)], lr=0.1, weight_decay=0.0, t=0)


class TestAdamW:
    """Tests for the optimizer wrapper."""

    def test_minimises_quadratic(self):
        """Test repeated steps approach the minimum of (w − 3)²."""
        p = Parameter(np.array([0.0]))
        optimizer = AdamW([p], lr=0.1, weight_decay=0.0)

        for _ in range(300):
            optimizer.zero_grad()
            p.grad = 2.0 * (p.data - 3.0)
            optimizer.step()

        assert optimizer.t == 300
        assert p.data[0] == pytest.approx(3.0, abs=0.05)

    def test_invalid_lr(self):
        """Test a non-positive learning rate."""
        with pytest.raises(ValueError):
            AdamW([], lr=0.0)
