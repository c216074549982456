"""Tests for the tape, parameters and layer modules."""

import numpy as np
import pytest

from artiphon.core.exceptions import CheckpointError, NotScalarError, NumericError, StaleTapeError
from artiphon.platform.tensor import (
    Parameter,
    Tape,
    Tensor,
    active_tape,
    backward,
    default_dtype,
    no_grad,
    ops,
    set_debug_numerics,
    set_precision,
)
from artiphon.platform.tensor.nn import (
    MLP,
    Conv1d,
    Dropout,
    Linear,
    Module,
    MultiHeadSelfAttention,
    count_parameters,
    dropout_stream,
    sinusoidal_positions,
    trunc_normal,
)


class _Pair(Module):
    def __init__(self, rng):
        self.first = Linear(3, 4, rng)
        self.layers = [Linear(4, 2, rng), Dropout(0.5)]

    def forward(self, x):
        return self.layers[1](self.layers[0](self.first(x)))


class TestTape:
    """Tests for recording and backward."""

    def test_docstring_example(self):
        """Test d(w·w)/dw = 2w."""
        w = Parameter(np.array([1.0, -2.0]), name="w")

        with Tape() as tape:
            loss = (w * w).sum()
            tape.backward(loss)

        np.testing.assert_allclose(w.grad, [2.0, -4.0])

    def test_reused_tensor_accumulates(self):
        """Test a tensor used twice receives both gradients."""
        x = Parameter(np.array(3.0))

        with Tape() as tape:
            tape.backward(x * x + x)

        assert x.grad == pytest.approx(7.0)

    def test_stale_tape(self):
        """Test a tape cannot run backward twice."""
        x = Parameter(np.array(2.0))
        with Tape() as tape:
            loss = x * x
        tape.backward(loss)

        with pytest.raises(StaleTapeError):
            tape.backward(loss)

    def test_record_after_backward(self):
        """Test recording onto a consumed tape."""
        x = Parameter(np.array(2.0))
        with Tape() as tape:
            tape.backward(x * x)
            with pytest.raises(StaleTapeError):
                x * x

    def test_not_scalar(self):
        """Test backward of a vector."""
        x = Parameter(np.ones(3))
        with Tape() as tape:
            y = x * 2.0
            with pytest.raises(NotScalarError):
                tape.backward(y)

    def test_loss_from_other_tape(self):
        """Test a loss recorded elsewhere."""
        x = Parameter(np.array(1.0))
        with Tape():
            loss = x * x
        with Tape() as other:
            with pytest.raises(NumericError):
                other.backward(loss)

    def test_no_grad(self):
        """Test nothing is recorded inside no_grad."""
        x = Parameter(np.ones(2))
        with Tape() as tape:
            with no_grad():
                assert active_tape() is None
                y = x * 2.0
            assert active_tape() is tape

        assert len(tape) == 0
        assert not y.requires_grad

    def test_frozen_parameters_not_recorded(self):
        """Test ops on frozen parameters only are not taped."""
        frozen = Parameter(np.ones(2), frozen=True)
        live = Parameter(np.ones(2))

        with Tape() as tape:
            (frozen * 3.0).sum()
            assert len(tape) == 0
            loss = (frozen * live).sum()
            tape.backward(loss)

        assert frozen.grad is None
        np.testing.assert_allclose(live.grad, [1.0, 1.0])

    def test_backward_helper_zero_fills(self):
        """Test unreached parameters get zero gradients."""
        used = Parameter(np.array([1.0, 2.0]))
        unused = Parameter(np.zeros(3))

        with Tape() as tape:
            grads = backward(tape, (used * used).sum(), [used, unused])

        np.testing.assert_allclose(grads[0], [2.0, 4.0])
        np.testing.assert_array_equal(grads[1], np.zeros(3))

    def test_debug_numerics(self):
        """Test non-finite op outputs raise when the check is on."""
        set_debug_numerics(True)
        try:
            with np.errstate(invalid="ignore"), pytest.raises(NumericError):
                ops.log(Tensor(np.array([-1.0])))
        finally:
            set_debug_numerics(False)

    def test_precision(self):
        """Test switching the default dtype."""
        set_precision("float32")
        try:
            assert Tensor([1.0]).data.dtype == np.float32
        finally:
            set_precision("float64")
        assert default_dtype() == np.float64

    def test_item(self):
        """Test scalar extraction."""
        assert Tensor(np.array([[2.5]])).item() == 2.5
        with pytest.raises(NotScalarError):
            Tensor(np.ones(2)).item()


class TestParameter:
    """Tests for parameter state."""

    def test_freeze_unfreeze(self):
        """Test freezing toggles gradient tracking."""
        p = Parameter(np.ones(2))
        p.freeze()
        assert p.frozen
        p.unfreeze()
        assert not p.frozen

    def test_zero_grad(self):
        """Test zero_grad leaves a zero array."""
        p = Parameter(np.ones(2))
        p.grad = np.array([3.0, 4.0])

        p.zero_grad()

        np.testing.assert_array_equal(p.grad, np.zeros(2))

    def test_assign_shape(self):
        """Test assign checks the shape."""
        p = Parameter(np.ones(2))
        p.assign(np.array([5.0, 6.0]))

        np.testing.assert_array_equal(p.data, [5.0, 6.0])
        with pytest.raises(NumericError):
            p.assign(np.ones(3))


class TestModule:
    """Tests for parameter discovery and state I/O."""

    def test_named_parameters(self, rng):
        """Test names follow attribute order and list indices."""
        model = _Pair(rng)

        names = [name for name, _ in model.named_parameters()]

        assert names == ["first.weight", "first.bias", "layers.0.weight", "layers.0.bias"]
        assert count_parameters(model) == 3 * 4 + 4 + 4 * 2 + 2

    def test_train_eval_propagates(self, rng):
        """Test the training flag reaches nested modules."""
        model = _Pair(rng)

        model.eval()
        assert not model.layers[1].training
        model.train()
        assert model.layers[1].training

    def test_state_dict_round_trip(self, rng):
        """Test loading a state dict into a fresh model."""
        source, target = _Pair(rng), _Pair(np.random.default_rng(99))

        loaded = target.load_state_dict(source.state_dict())

        assert len(loaded) == 4
        np.testing.assert_array_equal(target.first.weight.data, source.first.weight.data)

    def test_strict_load(self, rng):
        """Test strict loading rejects missing and unexpected names."""
        model = _Pair(rng)
        state = model.state_dict()
        state.pop("first.bias")

        with pytest.raises(CheckpointError):
            model.load_state_dict(state)
        assert len(model.load_state_dict(state, strict=False)) == 3

    def test_shape_mismatch_load(self, rng):
        """Test a parameter of the wrong shape."""
        model = _Pair(rng)

        with pytest.raises(CheckpointError):
            model.load_state_dict({"first.bias": np.zeros(7)}, strict=False)

    def test_dropout_stream(self, rng):
        """Test dropout masks follow the (seed, step) stream."""
        model = _Pair(rng)
        model.assign_dropout_keys()
        x = Tensor(np.ones((64, 3)))

        with dropout_stream(5, 1):
            a = model(x).numpy()
        with dropout_stream(5, 1):
            b = model(x).numpy()
        with dropout_stream(5, 2):
            c = model(x).numpy()

        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


class TestLayers:
    """Tests for individual layers."""

    def test_linear_zero_init(self, rng):
        """Test a zero-initialised head outputs zeros."""
        layer = Linear(3, 2, rng, zero_init=True)

        np.testing.assert_array_equal(layer(Tensor(np.ones((4, 3)))).numpy(), np.zeros((4, 2)))

    def test_conv1d_shape(self, rng):
        """Test the conv output is channels-last."""
        conv = Conv1d(1, 5, kernel=10, stride=5, rng=rng)

        assert conv(Tensor(np.zeros((2, 1, 1067)))).shape == (2, 212, 5)

    def test_attention_shape(self, rng):
        """Test self-attention keeps the sequence shape."""
        attention = MultiHeadSelfAttention(8, 2, rng)

        assert attention(Tensor(rng.normal(size=(2, 5, 8)))).shape == (2, 5, 8)

    def test_attention_heads_divide(self, rng):
        """Test the width must split evenly over heads."""
        with pytest.raises(ValueError):
            MultiHeadSelfAttention(10, 3, rng)

    def test_mlp_shape(self, rng):
        """Test the MLP maps the last axis."""
        assert MLP(4, 8, 3, rng)(Tensor(np.ones((2, 6, 4)))).shape == (2, 6, 3)

    def test_trunc_normal_bounds(self, rng):
        """Test truncated normal values stay within two std."""
        values = trunc_normal(rng, (1000,), std=0.02)

        assert np.all(np.abs(values) <= 0.04)

    def test_sinusoidal_positions(self):
        """Test the fixed position table starts with sin 0, cos 0."""
        table = sinusoidal_positions(5, 6)

        assert table.shape == (5, 6)
        np.testing.assert_allclose(table[0], [0, 1, 0, 1, 0, 1])

    def test_exports_resolve(self):
        """Test every exported layer name is defined in the module."""
        from artiphon.platform.tensor import nn

        assert all(hasattr(nn, name) for name in nn.__all__)
        assert "Sequential" not in nn.__all__
