import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pushpull.errors import ConfigError
from pushpull.pull import derive_pull, derive_pull_adjoint, pull_kernel_size, resize_matrix


def bilinear_resize_oracle(img, dst):
    """Dense corner-aligned bilinear resize, written directly from the
    interpolation formula (independent of the matrix construction)."""
    src = img.shape[0]
    out = np.zeros((dst, dst))
    for ty in range(dst):
        for tx in range(dst):
            sy = ty * (src - 1) / (dst - 1) if dst > 1 else (src - 1) / 2
            sx = tx * (src - 1) / (dst - 1) if dst > 1 else (src - 1) / 2
            y0, x0 = int(np.floor(sy)), int(np.floor(sx))
            y1, x1 = min(y0 + 1, src - 1), min(x0 + 1, src - 1)
            fy, fx = sy - y0, sx - x0
            out[ty, tx] = (img[y0, x0] * (1 - fy) * (1 - fx)
                           + img[y0, x1] * (1 - fy) * fx
                           + img[y1, x0] * fy * (1 - fx)
                           + img[y1, x1] * fy * fx)
    return out


class TestPullKernelSize:
    @pytest.mark.parametrize("k,h,expected", [
        (5, 1.0, 5), (5, 2.0, 11), (5, 1.5, 9), (3, 1.0, 3),
        (3, 2.0, 7), (3, 1.5, 5), (7, 2.0, 15),
    ])
    def test_sizes(self, k, h, expected):
        assert pull_kernel_size(k, h) == expected

    def test_h_below_one_raises(self):
        with pytest.raises(ConfigError):
            pull_kernel_size(5, 0.5)


class TestDerivePull:
    def test_h1_is_exact_negation(self):
        k = np.random.default_rng(0).standard_normal((3, 2, 5, 5))
        np.testing.assert_array_equal(derive_pull(k, 1.0), -k)

    def test_constant_kernel_stays_constant(self):
        k = np.full((1, 1, 5, 5), 0.7)
        pull = derive_pull(k, 2.0)
        assert pull.shape == (1, 1, 11, 11)
        np.testing.assert_allclose(pull, -0.7, atol=1e-12)

    @pytest.mark.parametrize("k,h", [(5, 1.5), (5, 2.0), (3, 2.0), (7, 1.5)])
    def test_matches_resize_oracle(self, k, h):
        rng = np.random.default_rng(42)
        push = rng.standard_normal((2, 1, k, k))
        pull = derive_pull(push, h)
        kp = pull_kernel_size(k, h)
        for o in range(2):
            expected = -bilinear_resize_oracle(push[o, 0], kp)
            np.testing.assert_allclose(pull[o, 0], expected, atol=1e-12)

    @given(a=st.floats(-2, 2, allow_nan=False), b=st.floats(-2, 2, allow_nan=False))
    @settings(max_examples=25, deadline=None)
    def test_linearity(self, a, b):
        rng = np.random.default_rng(3)
        k1 = rng.standard_normal((1, 1, 5, 5))
        k2 = rng.standard_normal((1, 1, 5, 5))
        lhs = derive_pull(a * k1 + b * k2, 1.5)
        rhs = a * derive_pull(k1, 1.5) + b * derive_pull(k2, 1.5)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_adjoint_identity(self):
        # <derive_pull(K), G> == <K, derive_pull_adjoint(G)> for all K, G
        rng = np.random.default_rng(4)
        k, h = 5, 2.0
        push = rng.standard_normal((2, 3, k, k))
        g = rng.standard_normal((2, 3, pull_kernel_size(k, h), pull_kernel_size(k, h)))
        lhs = (derive_pull(push, h) * g).sum()
        rhs = (push * derive_pull_adjoint(g, k, h)).sum()
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_h_below_one_raises(self):
        with pytest.raises(ConfigError):
            derive_pull(np.zeros((1, 1, 3, 3)), 0.9)


def test_resize_matrix_h1_is_identity():
    np.testing.assert_array_equal(resize_matrix(5, 5), np.eye(25))
