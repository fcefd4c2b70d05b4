import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pushpull import ops
from pushpull.errors import ShapeError

from helpers import conv2d_bruteforce, finite_difference_grad, relative_error


class TestConv2dForward:
    def test_zero_input_gives_zero_output(self):
        x = np.zeros((2, 3, 8, 8))
        k = np.random.default_rng(0).standard_normal((4, 3, 3, 3))
        out = ops.conv2d(x, k, np.zeros(4), padding=(1, 1))
        assert np.all(out == 0)

    def test_impulse_reproduces_kernel(self):
        # unit impulse at the center with same-padding: the output around
        # the impulse equals the kernel read off by direct summation
        x = np.zeros((1, 1, 3, 3))
        x[0, 0, 1, 1] = 1.0
        k = np.arange(9, dtype=np.float64).reshape(1, 1, 3, 3)
        out = ops.conv2d(x, k, padding=(1, 1))
        expected = conv2d_bruteforce(x, k, padding=(1, 1))
        np.testing.assert_allclose(out, expected)

    def test_ones_4x4_with_ones_2x2(self):
        x = np.ones((1, 1, 4, 4))
        k = np.ones((1, 1, 2, 2))
        out = ops.conv2d(x, k)
        assert out.shape == (1, 1, 3, 3)
        np.testing.assert_allclose(out, 4.0)

    @pytest.mark.parametrize("padding,stride", [((0, 0), (1, 1)), ((1, 1), (1, 1)),
                                                ((2, 1), (2, 2)), ((1, 2), (2, 3))])
    def test_matches_bruteforce(self, padding, stride):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2, 3, 9, 8))
        k = rng.standard_normal((4, 3, 3, 3))
        b = rng.standard_normal(4)
        out = ops.conv2d(x, k, b, padding=padding, stride=stride)
        np.testing.assert_allclose(
            out, conv2d_bruteforce(x, k, b, padding, stride), atol=1e-12)

    def test_channel_mismatch_raises(self):
        with pytest.raises(ShapeError, match="channel"):
            ops.conv2d(np.zeros((1, 2, 5, 5)), np.zeros((1, 3, 3, 3)))

    def test_kernel_too_large_raises(self):
        with pytest.raises(ShapeError, match="fit"):
            ops.conv2d(np.zeros((1, 1, 3, 3)), np.zeros((1, 1, 5, 5)))

    @given(c=st.floats(-3, 3, allow_nan=False))
    @settings(max_examples=20, deadline=None)
    def test_1x1_kernel_is_scalar_multiplication(self, c):
        x = np.random.default_rng(3).standard_normal((1, 1, 4, 4))
        k = np.full((1, 1, 1, 1), c)
        np.testing.assert_allclose(ops.conv2d(x, k), c * x, atol=1e-12)


class TestConv2dBackward:
    def test_zero_cotangent(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 2, 5, 5))
        k = rng.standard_normal((3, 2, 3, 3))
        go = np.zeros((2, 3, 3, 3))
        gi, gk, gb = ops.conv2d_backward(go, x, k)
        assert np.all(gi == 0) and np.all(gk == 0) and np.all(gb == 0)

    def test_grad_kernel_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((1, 1, 5, 5))
        k = rng.standard_normal((1, 1, 3, 3))
        go = np.ones((1, 1, 3, 3))
        _, gk, _ = ops.conv2d_backward(go, x, k)
        fd = finite_difference_grad(lambda kk: ops.conv2d(x, kk).sum(), k)
        assert relative_error(gk, fd) < 1e-6

    @pytest.mark.parametrize("padding,stride", [((0, 0), (1, 1)), ((1, 1), (1, 1)),
                                                ((1, 1), (2, 2)), ((2, 0), (1, 2))])
    def test_grads_match_finite_differences(self, padding, stride):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((2, 2, 6, 7))
        k = rng.standard_normal((3, 2, 3, 3))
        b = rng.standard_normal(3)
        go = rng.standard_normal(ops.conv2d(x, k, b, padding, stride).shape)

        def loss_x(xx):
            return (ops.conv2d(xx, k, b, padding, stride) * go).sum()

        def loss_k(kk):
            return (ops.conv2d(x, kk, b, padding, stride) * go).sum()

        gi, gk, gb = ops.conv2d_backward(go, x, k, padding, stride)
        assert relative_error(gi, finite_difference_grad(loss_x, x)) < 1e-6
        assert relative_error(gk, finite_difference_grad(loss_k, k)) < 1e-6
        np.testing.assert_allclose(gb, go.sum(axis=(0, 2, 3)), atol=1e-12)

    def test_shape_mismatch_raises(self):
        x = np.zeros((1, 1, 5, 5))
        k = np.zeros((1, 1, 3, 3))
        with pytest.raises(ShapeError, match="grad_out"):
            ops.conv2d_backward(np.zeros((1, 1, 4, 4)), x, k)


class TestReLU:
    def test_definition(self):
        np.testing.assert_array_equal(ops.relu(np.array([-1.0, 0.0, 2.0])),
                                      [0.0, 0.0, 2.0])

    def test_backward_mask(self):
        g = ops.relu_backward(np.array([5.0, 5.0, 5.0]),
                              np.array([-1.0, 0.0, 2.0]))
        np.testing.assert_array_equal(g, [0.0, 0.0, 5.0])

    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_relu_identity(self, values):
        x = np.array(values)
        np.testing.assert_allclose(ops.relu(x) - ops.relu(-x), x)


class TestMaxPool:
    def test_2x2_single_window(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
        assert ops.maxpool2d(x, 2)[0, 0, 0, 0] == 4.0

    def test_tie_break_routes_single_position(self):
        x = np.ones((1, 1, 4, 4))
        out, idx = ops.maxpool2d(x, 2, return_indices=True)
        np.testing.assert_allclose(out, 1.0)
        assert np.all(idx == 0)  # first position in row-major order
        gi = ops.maxpool2d_backward(np.ones((1, 1, 2, 2)), x, 2, indices=idx)
        assert gi.sum() == 4.0
        assert (gi != 0).sum() == 4

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((1, 1, 6, 6))
        out = ops.maxpool2d(x, 2, 2)
        for y in range(3):
            for xx in range(3):
                assert out[0, 0, y, xx] == x[0, 0, 2 * y:2 * y + 2, 2 * xx:2 * xx + 2].max()

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((2, 2, 6, 6))
        go = rng.standard_normal((2, 2, 3, 3))
        gi = ops.maxpool2d_backward(go, x, 2, 2)
        fd = finite_difference_grad(lambda xx: (ops.maxpool2d(xx, 2, 2) * go).sum(), x)
        assert relative_error(gi, fd) < 1e-4

    def test_window_too_large_raises(self):
        with pytest.raises(ShapeError):
            ops.maxpool2d(np.zeros((1, 1, 2, 2)), 3)


class TestLinear:
    def test_identity_weight(self):
        x = np.random.default_rng(0).standard_normal((4, 5))
        out = ops.linear(x, np.eye(5), np.zeros(5))
        np.testing.assert_allclose(out, x)

    def test_zero_input_broadcasts_bias(self):
        b = np.arange(3.0)
        out = ops.linear(np.zeros((4, 5)), np.zeros((3, 5)), b)
        np.testing.assert_allclose(out, np.tile(b, (4, 1)))

    def test_gradcheck(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((3, 4))
        w = rng.standard_normal((2, 4))
        b = rng.standard_normal(2)
        go = rng.standard_normal((3, 2))
        gi, gw, gb = ops.linear_backward(go, x, w)
        assert relative_error(
            gi, finite_difference_grad(lambda xx: (ops.linear(xx, w, b) * go).sum(), x)) < 1e-6
        assert relative_error(
            gw, finite_difference_grad(lambda ww: (ops.linear(x, ww, b) * go).sum(), w)) < 1e-6
        assert relative_error(
            gb, finite_difference_grad(lambda bb: (ops.linear(x, w, bb) * go).sum(), b)) < 1e-6

    def test_mismatch_raises(self):
        with pytest.raises(ShapeError):
            ops.linear(np.zeros((2, 3)), np.zeros((4, 5)), np.zeros(4))


class TestSoftmaxCrossEntropy:
    def test_uniform_logits(self):
        loss, _ = ops.softmax_cross_entropy(np.zeros((4, 10)), np.zeros(4, dtype=int))
        assert loss == pytest.approx(np.log(10), abs=1e-9)

    def test_large_logit_is_stable(self):
        logits = np.zeros((1, 10))
        logits[0, 3] = 1000.0
        loss, grad = ops.softmax_cross_entropy(logits, np.array([3]))
        assert np.isfinite(loss) and loss == pytest.approx(0.0, abs=1e-9)
        assert np.all(np.isfinite(grad))

    def test_gradcheck(self):
        rng = np.random.default_rng(9)
        logits = rng.standard_normal((3, 5))
        labels = np.array([1, 0, 4])
        _, grad = ops.softmax_cross_entropy(logits, labels)
        fd = finite_difference_grad(
            lambda z: ops.softmax_cross_entropy(z, labels)[0], logits)
        assert relative_error(grad, fd) < 1e-6

    def test_label_out_of_range_raises(self):
        with pytest.raises(ShapeError, match="labels"):
            ops.softmax_cross_entropy(np.zeros((2, 3)), np.array([0, 3]))


def test_composition_determinism():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((2, 3, 8, 8)).astype(np.float32)
    k = rng.standard_normal((4, 3, 3, 3)).astype(np.float32)
    a = ops.conv2d(x, k, padding=(1, 1))
    b = ops.conv2d(x.copy(), k.copy(), padding=(1, 1))
    assert a.tobytes() == b.tobytes()
