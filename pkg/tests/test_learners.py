import numpy as np
import pytest

from bbccv.errors import GridError, LearnerError
from bbccv.learners import (
    ConfigGrid,
    Configuration,
    Dataset,
    count_trainings,
    expand_grid,
    register_learner,
    train,
    training_count,
)


def test_majority_predicts_constant():
    model = train(Configuration("majority"), Dataset(np.zeros((3, 1)), [1, 1, 0]))
    assert model.predict(np.arange(5.0)).tolist() == [1] * 5
    assert model.predict(np.arange(2.0), "score").tolist() == pytest.approx([2 / 3] * 2)


def test_majority_tie_goes_to_lowest_class():
    model = train(Configuration("majority"), Dataset(np.zeros((4, 1)), [1, 0, 1, 0]))
    assert model.predict(np.zeros(1)).tolist() == [0]


def test_one_nn_memorises_training_points(toy_data):
    model = train(Configuration.make("knn", k=1), toy_data)
    assert (model.predict(toy_data.X) == toy_data.y).all()


def test_three_nn_hand_computed():
    data = Dataset(np.array([0, 1, 2, 10, 11, 12.0]), np.array([0, 0, 0, 1, 1, 1]))
    model = train(Configuration.make("knn", k=3), data)
    assert model.predict(np.array([1.5])).tolist() == [0]


def test_knn_vote_fractions(toy_data):
    k = 4
    model = train(Configuration.make("knn", k=k, distance="manhattan"), toy_data)
    scores = model.predict(toy_data.X, "score")
    assert set(np.round(scores * k, 12)) <= set(range(k + 1))


def test_logistic_zero_weights_score_half(toy_data):
    model = train(Configuration.make("logistic", iterations=0), toy_data)
    assert np.allclose(model.predict(toy_data.X, "score"), 0.5)
    assert (model.predict(toy_data.X) == 0).all()


def test_logistic_learns_and_single_class_falls_back(toy_data):
    model = train(Configuration.make("linear-logistic", iterations=200, learning_rate=0.5), toy_data)
    assert np.mean(model.predict(toy_data.X) == toy_data.y) > 0.8
    flat = train(Configuration("logistic"), Dataset(np.arange(4.0), [1, 1, 1, 1]))
    assert flat.degenerate and flat.predict(np.zeros(2)).tolist() == [1, 1]


def test_stump_finds_threshold():
    data = Dataset(np.array([[0.0, 5], [1, 3], [2, 9], [3, 1]]), [0, 0, 1, 1])
    model = train(Configuration("stump"), data)
    assert model.predict(np.array([[0.5, 0], [2.5, 0]])).tolist() == [0, 1]
    reg = train(Configuration("stump"), Dataset(np.arange(4.0), np.array([1.0, 1, 5, 5])), "regression")
    assert reg.predict(np.array([0.0, 3.0]), "value").tolist() == [1.0, 5.0]


def test_risk_is_negated_value():
    data = Dataset(np.arange(4.0), np.column_stack([[1.0, 2, 3, 4], [1, 1, 0, 1]]))
    model = train(Configuration.make("knn", k=1), data)
    assert model.predict(np.array([0.0]), "risk").tolist() == [-1.0]


def test_arity_mismatch(toy_data):
    model = train(Configuration("majority"), toy_data)
    with pytest.raises(LearnerError):
        model.predict(np.zeros((2, 5)))


def test_training_is_deterministic_and_row_order_invariant(toy_data):
    config = Configuration.make("knn", k=3)
    perm = np.random.default_rng(0).permutation(len(toy_data))
    a = train(config, toy_data).predict(toy_data.X, "score")
    b = train(config, toy_data.take(perm)).predict(toy_data.X, "score")
    assert np.array_equal(a, b)
    c = train(Configuration.make("logistic"), toy_data).predict(toy_data.X, "score")
    d = train(Configuration.make("logistic"), toy_data).predict(toy_data.X, "score")
    assert np.array_equal(c, d)


def test_training_counter(toy_data):
    before = training_count()
    with count_trainings() as t:
        for _ in range(3):
            train(Configuration("majority"), toy_data)
    assert t.n == 3 and training_count() == before + 3


def test_expand_grid_order_and_size():
    g = expand_grid({"learner": "knn", "params": {"k": [1, 3, 5]}})
    assert [c.params["k"] for c in g] == [1, 3, 5]
    g = expand_grid(
        [{"learner": "knn", "params": {"k": [1, 3, 5], "distance": ["euclidean", "manhattan"]}}]
    )
    assert len(g) == 6
    assert g[1].params == {"k": 1, "distance": "manhattan"}
    assert g[2].params == {"k": 3, "distance": "euclidean"}
    g = expand_grid({"grid": [{"learner": "majority"}, {"learner": "stump", "params": {"min_leaf": 2}}]})
    assert g.ids == ["majority", "stump(min_leaf=2)"]


def test_expand_grid_errors():
    with pytest.raises(GridError):
        expand_grid({"learner": "knn", "params": {"k": []}})
    with pytest.raises(GridError):
        expand_grid({"learner": "knn", "params": {"k": [1, 1]}})
    with pytest.raises(GridError):
        expand_grid({"learner": "forest"})
    with pytest.raises(GridError):
        ConfigGrid([])
    with pytest.raises(GridError):
        ConfigGrid([Configuration("majority"), Configuration("majority")])


def test_register_learner(toy_data):
    def fit(X, y, task, value=0):
        return (lambda Xq, kind: np.full(Xq.shape[0], value)), False

    register_learner("constant-test", fit, replace=True)
    with pytest.raises(ValueError):
        register_learner("constant-test", fit)
    model = train(Configuration.make("constant-test", value=7), toy_data)
    assert model.predict(toy_data.X[:2]).tolist() == [7, 7]
    with pytest.raises(LearnerError):
        train(Configuration("nope"), toy_data)
