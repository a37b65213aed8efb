import csv

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, n, dim, n_classes):
    """Random Gaussian classes, each with at least a handful of members."""
    labels = np.concatenate([np.arange(n_classes), rng.integers(0, n_classes, n - n_classes)])
    labels = rng.permutation(labels)
    centers = rng.normal(scale=2.0, size=(n_classes, dim))
    return centers[labels] + rng.normal(size=(n, dim)), labels


@pytest.fixture(scope="session")
def wdbc_csv(tmp_path_factory):
    """WDBC in the UCI ``wdbc.data`` layout: id, diagnosis, 30 measurements, no header."""
    datasets = pytest.importorskip("sklearn.datasets")
    bunch = datasets.load_breast_cancer()
    path = tmp_path_factory.mktemp("wdbc") / "wdbc.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for i, (row, target) in enumerate(zip(bunch.data, bunch.target)):
            w.writerow([842302 + i, "M" if target == 0 else "B", *[repr(float(v)) for v in row]])
    return path
