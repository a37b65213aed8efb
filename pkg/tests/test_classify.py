import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geu.classify import KnnModel, accuracy, knn_predict, knn_predict_many
from geu.errors import EmptyModel, LengthMismatch


def brute_force_knn(train, labels, queries, k):
    out = []
    for q in queries:
        d = [(float(np.sqrt(np.sum((q - t) ** 2))), i) for i, t in enumerate(train)]
        d.sort()
        near = d[:k]
        votes = {}
        for dist, i in near:
            c, best = votes.get(labels[i], (0, np.inf))
            votes[labels[i]] = (c + 1, min(best, dist))
        out.append(min(votes, key=lambda lab: (-votes[lab][0], votes[lab][1], lab)))
    return np.array(out)


def test_one_nn_recovers_training_label():
    train = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]])
    model = KnnModel(train, np.array([3, 7, 9]), 1)
    np.testing.assert_array_equal(knn_predict(model, train), [3, 7, 9])


def test_majority_vote():
    train = np.array([[0.0], [0.1], [0.2], [10.0]])
    model = KnnModel(train, np.array(["A", "A", "B", "B"]), 3)
    assert knn_predict(model, np.array([[0.05]]))[0] == "A"


def test_vote_tie_goes_to_closest_label():
    train = np.array([[0.0], [1.0], [-1.5], [3.0]])
    model = KnnModel(train, np.array([1, 0, 1, 0]), 2)
    # neighbours of 0.6: 1.0 (label 0, dist .4) and 0.0 (label 1, dist .6)
    assert knn_predict(model, np.array([[0.6]]))[0] == 0


def test_distance_tie_goes_to_smaller_index():
    train = np.array([[-1.0], [1.0]])
    model = KnnModel(train, np.array([5, 2]), 1)
    assert knn_predict(model, np.array([[0.0]]))[0] == 5


@pytest.mark.parametrize("k", [1, 2, 3, 4, 7])
def test_against_brute_force(k):
    rng = np.random.default_rng(k)
    train = rng.normal(size=(50, 3))
    labels = rng.integers(0, 3, 50)
    queries = rng.normal(size=(40, 3))
    got = knn_predict(KnnModel(train, labels, k), queries)
    np.testing.assert_array_equal(got, brute_force_knn(train, labels, queries, k))


def test_brute_force_with_ties():
    rng = np.random.default_rng(0)
    train = rng.integers(0, 3, size=(30, 2)).astype(float)
    labels = rng.integers(0, 2, 30)
    queries = rng.integers(0, 3, size=(20, 2)).astype(float)
    for k in (1, 2, 3, 6, 30):
        np.testing.assert_array_equal(knn_predict(KnnModel(train, labels, k), queries),
                                      brute_force_knn(train, labels, queries, k))


def test_many_matches_single():
    rng = np.random.default_rng(1)
    train = rng.normal(size=(25, 2))
    labels = rng.integers(0, 2, 25)
    q = rng.normal(size=(10, 2))
    many = knn_predict_many(train, labels, q, [1, 3, 5])
    for k, pred in many.items():
        np.testing.assert_array_equal(pred, knn_predict(KnnModel(train, labels, k), q))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 5))
def test_rigid_transform_invariance(seed, k):
    rng = np.random.default_rng(seed)
    train = rng.normal(size=(30, 3))
    labels = rng.integers(0, 3, 30)
    q = rng.normal(size=(15, 3))
    rot, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    shift = rng.normal(size=3)
    a = knn_predict(KnnModel(train, labels, k), q)
    b = knn_predict(KnnModel(train @ rot + shift, labels, k), q @ rot + shift)
    np.testing.assert_array_equal(a, b)


def test_model_validation():
    with pytest.raises(EmptyModel):
        KnnModel(np.zeros((0, 2)), np.zeros(0), 1)
    with pytest.raises(ValueError):
        KnnModel(np.zeros((2, 2)), np.zeros(2), 3)


def test_accuracy():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([1, 1], [2, 2]) == 0.0
    assert accuracy([1, 2, 3, 4], [1, 2, 3, 0]) == 0.75
    with pytest.raises(LengthMismatch):
        accuracy([1], [1, 2])
