import numpy as np

from pushpull.synth import synthetic_digits, synthetic_rgb


def test_digits_shapes_and_range():
    ds = synthetic_digits(5, seed=0)
    assert ds.images.shape == (50, 1, 28, 28)
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0
    for c in range(10):
        assert (ds.labels == c).sum() == 5


def test_digits_deterministic():
    a = synthetic_digits(3, seed=9)
    b = synthetic_digits(3, seed=9)
    assert a.images.tobytes() == b.images.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()


def test_digits_seed_changes_content():
    a = synthetic_digits(3, seed=1)
    b = synthetic_digits(3, seed=2)
    assert a.images.tobytes() != b.images.tobytes()


def test_rgb_shapes():
    ds = synthetic_rgb(4, seed=0)
    assert ds.images.shape == (40, 3, 32, 32)
    assert ds.class_count == 10
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0


def test_rgb_classes_distinguishable():
    # class prototypes should differ far more across classes than within
    ds = synthetic_rgb(10, seed=3)
    means = np.stack([ds.images[ds.labels == c].mean(axis=0) for c in range(10)])
    across = np.abs(means[:, None] - means[None, :]).mean()
    assert across > 0.01
