"""Finite-difference checks of every differentiable op."""

import numpy as np
import pytest

from artiphon.core.exceptions import EmptyBatchError, ShapeMismatchError
from artiphon.platform.tensor import Parameter, Tape, Tensor, ops, weighted_cross_entropy

EPS = 1e-5
TRIALS = 100


def check_gradients(fn, *arrays, seed=0, atol=1e-6, rtol=1e-4):
    """Compare tape gradients of sum(fn(...)·R) with central differences."""
    params = [Parameter(np.array(a, dtype=np.float64)) for a in arrays]
    direction = np.random.default_rng(seed).normal(size=fn(*[Tensor(a) for a in arrays]).shape)

    with Tape() as tape:
        loss = ops.sum(fn(*params) * direction)
        tape.backward(loss)

    def value(values):
        return float(np.sum(fn(*[Tensor(v) for v in values]).numpy() * direction))

    for i, param in enumerate(params):
        numeric = np.zeros_like(param.data)
        for index in np.ndindex(param.shape):
            values = [np.array(a, dtype=np.float64) for a in arrays]
            values[i][index] += EPS
            up = value(values)
            values[i][index] -= 2 * EPS
            down = value(values)
            numeric[index] = (up - down) / (2 * EPS)
        np.testing.assert_allclose(param.grad, numeric, atol=atol, rtol=rtol)


def _size(gen, low=1, high=4):
    return int(gen.integers(low, high + 1))


def _shape(gen, n, low=1, high=4):
    return tuple(_size(gen, low, high) for _ in range(n))


def _away_from(gen, point, shape, gap=0.1):
    """Values at least ``gap`` from ``point`` on either side."""
    return point + gen.choice([-1.0, 1.0], size=shape) * gen.uniform(gap, 1.5, size=shape)


# Each case draws (fn, arrays) with fresh shapes and values from ``gen``;
# inputs stay off kinks and away from poles.


def _add_broadcast(gen):
    shape = _shape(gen, 2)
    return lambda a, b: a + b, [gen.normal(size=shape), gen.normal(size=shape[1:])]


def _sub_mul_div(gen):
    shape = _shape(gen, 2)
    return lambda a, b: (a - b) * a / b, [gen.normal(size=shape), gen.uniform(1.0, 2.0, size=shape)]


def _scalar_operands(gen):
    return lambda a: 1.0 - 2.0 / (a + 3.0), [gen.uniform(0.0, 1.0, size=_shape(gen, 1, 1, 6))]


def _power_exp_log_tanh(gen):
    return lambda a: ops.log(ops.exp(ops.tanh(a)) + a**2.0), [gen.uniform(0.5, 1.5, size=_shape(gen, 2))]


def _gelu(gen):
    return ops.gelu, [gen.normal(size=_shape(gen, 2))]


def _relu(gen):
    return ops.relu, [_away_from(gen, 0.0, _shape(gen, 2))]


def _maximum(gen):
    return lambda a: ops.maximum(a, 0.3), [_away_from(gen, 0.3, _shape(gen, 2))]


def _matmul(gen):
    batch, rows, inner, cols = _shape(gen, 4)
    return ops.matmul, [gen.normal(size=(batch, rows, inner)), gen.normal(size=(inner, cols))]


def _reshape_transpose(gen):
    rows, half = _size(gen), _size(gen, 1, 3)
    return lambda a: ops.transpose(a.reshape(rows, 2, -1), (2, 0, 1)), [gen.normal(size=(rows, 2 * half))]


def _concat_getitem(gen):
    rows = _size(gen)
    index = gen.integers(0, rows, size=_size(gen, 2, 5))
    return (
        lambda a, b: ops.concat([a, b], axis=1)[index],
        [gen.normal(size=(rows, _size(gen, 1, 3))), gen.normal(size=(rows, _size(gen)))],
    )


def _stack(gen):
    shape = _shape(gen, 2)
    axis = int(gen.integers(0, 3))
    return lambda a, b: ops.stack([a, b], axis=axis), [gen.normal(size=shape), gen.normal(size=shape)]


def _unfold1d(gen):
    kernel, stride = _size(gen, 1, 4), _size(gen, 1, 3)
    signal = gen.normal(size=(_size(gen, 1, 2), _size(gen, 1, 2), _size(gen, kernel, 10)))
    return lambda x: ops.unfold1d(x, kernel=kernel, stride=stride), [signal]


def _sum_mean(gen):
    return lambda a: ops.mean(a, axis=1) + ops.sum(a, axis=(0, 1)), [gen.normal(size=_shape(gen, 3))]


def _softmax(gen):
    return lambda a: ops.softmax(a, axis=-1), [gen.normal(size=_shape(gen, 2, 1, 5))]


def _log_softmax(gen):
    return lambda a: ops.log_softmax(a, axis=0), [gen.normal(size=_shape(gen, 2, 1, 5))]


def _layer_norm(gen):
    dim = _size(gen, 3, 6)
    x = gen.normal(size=_shape(gen, 2, 1, 3) + (dim,)) + np.linspace(-2.0, 2.0, dim)
    return ops.layer_norm, [x, gen.normal(size=dim), gen.normal(size=dim)]


def _cosine_similarity(gen):
    dim = _size(gen, 2, 5)
    return (
        lambda u, v: ops.cosine_similarity(u, v, axis=-1),
        [_away_from(gen, 0.0, (3, 1, dim), gap=0.5), _away_from(gen, 0.0, (1, 2, dim), gap=0.5)],
    )


def _weighted_cross_entropy(gen):
    items, classes = _size(gen, 2, 6), _size(gen, 2, 4)
    labels = gen.integers(0, classes, size=items)
    mask = gen.random(items) < 0.7
    mask[0] = True
    return (
        lambda z, w: weighted_cross_entropy(z, labels, w, mask),
        [gen.normal(size=(items, classes)), gen.uniform(0.5, 2.0, size=classes)],
    )


OP_CASES = {
    "add_broadcast": _add_broadcast,
    "sub_mul_div": _sub_mul_div,
    "scalar_operands": _scalar_operands,
    "power_exp_log_tanh": _power_exp_log_tanh,
    "gelu": _gelu,
    "relu": _relu,
    "maximum": _maximum,
    "matmul": _matmul,
    "reshape_transpose": _reshape_transpose,
    "concat_getitem": _concat_getitem,
    "stack": _stack,
    "unfold1d": _unfold1d,
    "sum_mean": _sum_mean,
    "softmax": _softmax,
    "log_softmax": _log_softmax,
    "layer_norm": _layer_norm,
    "cosine_similarity": _cosine_similarity,
    "weighted_cross_entropy": _weighted_cross_entropy,
}


@pytest.fixture
def gen():
    return np.random.default_rng(42)


class TestRandomizedGradients:
    """Tape gradients against central differences over random shapes and values."""

    @pytest.mark.parametrize("name", sorted(OP_CASES))
    def test_op(self, name):
        """Test one op over a hundred random draws."""
        for trial in range(TRIALS):
            fn, arrays = OP_CASES[name](np.random.default_rng(trial))
            check_gradients(fn, *arrays, seed=trial)


class TestShapeErrors:
    """Tests for rejected shapes."""

    def test_matmul_shape_mismatch(self):
        """Test incompatible inner dimensions."""
        with pytest.raises(ShapeMismatchError):
            ops.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))

    def test_unfold1d_too_short(self):
        """Test a signal shorter than the kernel."""
        with pytest.raises(ShapeMismatchError):
            ops.unfold1d(Tensor(np.zeros((1, 1, 2))), kernel=3, stride=1)

    def test_broadcast_mismatch(self):
        """Test shapes that do not broadcast."""
        with pytest.raises(ShapeMismatchError):
            ops.add(Tensor(np.zeros(3)), Tensor(np.zeros(4)))


class TestNumerics:
    """Value checks for softmax and cosine similarity."""

    def test_softmax_is_stable(self):
        """Test large logits do not overflow."""
        out = ops.softmax(Tensor(np.array([1000.0, 1000.0]))).numpy()

        np.testing.assert_allclose(out, [0.5, 0.5])

    def test_cosine_identities(self, gen):
        """Test cos(x, x) = 1 and cos(x, -x) = -1."""
        x = gen.normal(size=(3, 6))

        np.testing.assert_allclose(ops.cosine_similarity(Tensor(x), Tensor(x)).numpy(), 1.0)
        np.testing.assert_allclose(ops.cosine_similarity(Tensor(x), Tensor(-x)).numpy(), -1.0)

class TestDropout:
    """Tests for counter-keyed dropout."""

    def test_same_key_same_mask(self):
        """Test masks depend only on the key."""
        x = Tensor(np.ones((50,)))

        first = ops.dropout(x, 0.5, (1, 2, 3)).numpy()
        second = ops.dropout(x, 0.5, (1, 2, 3)).numpy()
        other = ops.dropout(x, 0.5, (1, 2, 4)).numpy()

        np.testing.assert_array_equal(first, second)
        assert not np.array_equal(first, other)
        assert set(np.unique(first)) <= {0.0, 2.0}

    def test_identity_in_eval(self):
        """Test dropout is a no-op outside training."""
        x = Tensor(np.ones((5,)))

        assert ops.dropout(x, 0.5, (0,), training=False) is x
        assert ops.dropout(x, 0.0, (0,)) is x


class TestWeightedCrossEntropy:
    """Tests for the class-weighted, masked cross-entropy."""

    def test_uniform_logits(self):
        """Test uniform logits give log C."""
        loss = weighted_cross_entropy(
            Tensor(np.zeros((4, 3))), np.array([0, 1, 2, 0]), Tensor(np.ones(3)), np.ones(4, bool)
        )

        assert loss.item() == pytest.approx(np.log(3))

    def test_weight_scale_invariance(self, gen):
        """Test scaling every weight leaves the loss unchanged."""
        logits = Tensor(gen.normal(size=(5, 3)))
        labels = np.array([0, 1, 2, 1, 0])
        weights = gen.uniform(0.5, 2.0, size=3)
        mask = np.ones(5, bool)

        base = weighted_cross_entropy(logits, labels, Tensor(weights), mask).item()
        scaled = weighted_cross_entropy(logits, labels, Tensor(7.0 * weights), mask).item()

        assert scaled == pytest.approx(base)

    def test_masked_items_ignored(self, gen):
        """Test masked items do not affect the loss."""
        logits = gen.normal(size=(3, 3))
        changed = logits.copy()
        changed[1] = 100.0
        labels = np.array([0, 1, 2])
        mask = np.array([True, False, True])
        weights = Tensor(np.ones(3))

        a = weighted_cross_entropy(Tensor(logits), labels, weights, mask).item()
        b = weighted_cross_entropy(Tensor(changed), labels, weights, mask).item()

        assert a == pytest.approx(b)

    def test_all_masked(self):
        """Test a batch with nothing to score."""
        with pytest.raises(EmptyBatchError):
            weighted_cross_entropy(Tensor(np.zeros((2, 3))), np.array([0, 1]), Tensor(np.ones(3)), np.zeros(2, bool))

    def test_label_out_of_range(self):
        """Test a label at or above C."""
        with pytest.raises(ShapeMismatchError):
            weighted_cross_entropy(Tensor(np.zeros((2, 3))), np.array([0, 3]), Tensor(np.ones(3)), np.ones(2, bool))
