import numpy as np
import pytest


class StubEncoder:
    """Stands in for the backbone: deterministic, row-wise, 768 wide.

    Pools each image to its three channel means and projects them through a
    fixed matrix, so outputs never depend on batch boundaries.
    """

    def __init__(self, dim=768, seed=7):
        rs = np.random.RandomState(seed)
        self.proj = rs.uniform(-1.0, 1.0, size=(3, dim)).astype(np.float32)

    def __call__(self, x):
        pooled = x.mean(dim=(2, 3)).cpu().numpy().astype(np.float32)  # (n, 3)
        return pooled @ self.proj


class WrongDimEncoder:
    def __call__(self, x):
        return np.zeros((x.shape[0], 16), dtype=np.float32)


def stub_images(num_classes=10, per_class=4, seed=3):
    """uint8 blobs whose channel intensities encode the class id."""
    rs = np.random.RandomState(seed)
    images, labels = [], []
    for c in range(num_classes):
        base = np.array([20 * c + 10, 15 * c + 5, 25 * c % 250], dtype=np.int64)
        for _ in range(per_class):
            img = base.reshape(1, 1, 3) + rs.randint(-4, 5, size=(32, 32, 3))
            images.append(np.clip(img, 0, 255).astype(np.uint8))
            labels.append(c)
    return np.stack(images), np.asarray(labels, dtype=np.int64)


@pytest.fixture
def stub_provider():
    def provider(spec):
        return stub_images()
    return provider


@pytest.fixture
def stub_encoder():
    return StubEncoder()
