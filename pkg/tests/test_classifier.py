import numpy as np
import pytest

from focal.classifier import (
    ClassifierHead,
    TrainConfig,
    cross_entropy,
    cross_entropy_gradients,
    evaluate,
    expand,
    predict,
    predict_batch,
    train,
)


def separable_blobs(n=50, gap=4.0, seed=0):
    rng = np.random.default_rng(seed)
    left = rng.normal(loc=(-gap, 0.0), scale=0.5, size=(n, 2))
    right = rng.normal(loc=(gap, 0.0), scale=0.5, size=(n, 2))
    x = np.vstack([left, right])
    labels = ["neg"] * n + ["pos"] * n
    return x, labels


# ---------------------------------------------------------------- expand

def test_expand_from_empty():
    head = expand(ClassifierHead.empty(3), ["a", "b", "c"])
    assert head.label_order == ["a", "b", "c"]
    np.testing.assert_array_equal(head.weights, np.zeros((3, 3)))
    np.testing.assert_array_equal(head.biases, np.zeros(3))


def test_expand_preserves_existing_rows_bitwise():
    head = expand(ClassifierHead.empty(2), ["a", "b"])
    x, labels = separable_blobs(20)
    trained = train(head, x, ["a" if l == "neg" else "b" for l in labels],
                    TrainConfig(epochs=3))
    grown = expand(trained, ["c"])
    assert grown.num_labels == 3
    np.testing.assert_array_equal(grown.weights[:2], trained.weights)
    np.testing.assert_array_equal(grown.biases[:2], trained.biases)
    np.testing.assert_array_equal(grown.weights[2], [0.0, 0.0])
    assert grown.biases[2] == 0.0


def test_expand_rejects_known_label():
    head = expand(ClassifierHead.empty(2), ["a"])
    with pytest.raises(ValueError):
        expand(head, ["a"])
    with pytest.raises(ValueError):
        expand(head, ["b", "b"])


# ---------------------------------------------------------------- predict

def test_predict_single_category():
    head = expand(ClassifierHead.empty(2), ["only"])
    label, probs = predict(head, np.array([3.0, -1.0]))
    assert label == "only"
    np.testing.assert_array_equal(probs, [1.0])


def test_predict_zero_weights_is_uniform_with_tie_to_first_row():
    head = expand(ClassifierHead.empty(3), ["a", "b", "c", "d"])
    label, probs = predict(head, np.array([1.0, 2.0, 3.0]))
    assert label == "a"
    np.testing.assert_allclose(probs, [0.25] * 4, atol=1e-15)


def test_predict_frozen_logit_pair():
    # logits (2, 0): softmax = (e^2, 1) / (e^2 + 1)
    head = ClassifierHead(np.array([[2.0], [0.0]]), np.zeros(2), ["hi", "lo"])
    label, probs = predict(head, np.array([1.0]))
    assert label == "hi"
    e2 = np.exp(2.0)
    np.testing.assert_allclose(probs, [e2 / (e2 + 1), 1 / (e2 + 1)], rtol=1e-12)
    assert probs[0] == pytest.approx(0.8808, abs=5e-5)


def test_predict_errors():
    with pytest.raises(ValueError):
        predict(ClassifierHead.empty(2), np.array([0.0, 0.0]))
    head = expand(ClassifierHead.empty(2), ["a"])
    with pytest.raises(ValueError):
        predict(head, np.array([0.0, 0.0, 0.0]))


def test_softmax_sums_to_one_and_shift_invariant():
    rng = np.random.default_rng(5)
    head = ClassifierHead(rng.normal(size=(6, 4)), rng.normal(size=6),
                          [f"c{i}" for i in range(6)])
    x = rng.normal(size=4)
    _, probs = predict(head, x)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    shifted = ClassifierHead(head.weights, head.biases + 17.5, head.label_order)
    _, probs2 = predict(shifted, x)
    np.testing.assert_allclose(probs2, probs, atol=1e-12)


# ---------------------------------------------------------------- gradients

def numeric_gradients(w, b, x, y, eps=1e-6):
    gw = np.zeros_like(w)
    for idx in np.ndindex(*w.shape):
        wp, wm = w.copy(), w.copy()
        wp[idx] += eps
        wm[idx] -= eps
        gw[idx] = (cross_entropy(wp, b, x, y) - cross_entropy(wm, b, x, y)) / (2 * eps)
    gb = np.zeros_like(b)
    for i in range(b.size):
        bp, bm = b.copy(), b.copy()
        bp[i] += eps
        bm[i] -= eps
        gb[i] = (cross_entropy(w, bp, x, y) - cross_entropy(w, bm, x, y)) / (2 * eps)
    return gw, gb


@pytest.mark.parametrize("seed", range(8))
def test_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 6))
    n_cat = int(rng.integers(2, 5))
    n = int(rng.integers(2, 9))
    w = rng.normal(size=(n_cat, dim))
    b = rng.normal(size=n_cat)
    x = rng.normal(size=(n, dim))
    y = rng.integers(0, n_cat, size=n)
    gw, gb = cross_entropy_gradients(w, b, x, y)
    nw, nb = numeric_gradients(w, b, x, y)
    np.testing.assert_allclose(gw, nw, rtol=1e-4, atol=1e-8)
    np.testing.assert_allclose(gb, nb, rtol=1e-4, atol=1e-8)


def test_gradient_zero_at_perfect_prediction_limit():
    # enormous correct logit: softmax saturates, gradient vanishes
    w = np.array([[40.0], [-40.0]])
    b = np.zeros(2)
    x = np.array([[1.0]])
    y = np.array([0])
    gw, gb = cross_entropy_gradients(w, b, x, y)
    np.testing.assert_allclose(gw, 0.0, atol=1e-10)
    np.testing.assert_allclose(gb, 0.0, atol=1e-10)


# ---------------------------------------------------------------- train

def test_train_reaches_full_accuracy_on_separable_blobs():
    x, labels = separable_blobs()
    head = expand(ClassifierHead.empty(2), ["neg", "pos"])
    head = train(head, x, labels, TrainConfig())
    assert evaluate(head, x, labels) == 1.0


def test_train_zero_epochs_returns_head_unchanged():
    head = expand(ClassifierHead.empty(2), ["a", "b"])
    out = train(head, np.zeros((3, 2)), ["a", "b", "a"], TrainConfig(epochs=0))
    assert out is head


def test_train_deterministic():
    x, labels = separable_blobs(30, seed=2)
    head = expand(ClassifierHead.empty(2), ["neg", "pos"])
    cfg = TrainConfig(epochs=5, shuffle_seed=9)
    a = train(head, x, labels, cfg)
    b = train(head, x, labels, cfg)
    np.testing.assert_array_equal(a.weights, b.weights)
    np.testing.assert_array_equal(a.biases, b.biases)


def test_train_shuffle_seed_changes_trajectory():
    x, labels = separable_blobs(30, seed=2)
    head = expand(ClassifierHead.empty(2), ["neg", "pos"])
    a = train(head, x, labels, TrainConfig(epochs=2, shuffle_seed=1, batch_size=8))
    b = train(head, x, labels, TrainConfig(epochs=2, shuffle_seed=2, batch_size=8))
    assert not np.array_equal(a.weights, b.weights)


def test_train_does_not_mutate_input_head():
    x, labels = separable_blobs(20)
    head = expand(ClassifierHead.empty(2), ["neg", "pos"])
    before = head.weights.copy()
    train(head, x, labels, TrainConfig(epochs=2))
    np.testing.assert_array_equal(head.weights, before)


def test_train_loss_drops_from_first_epoch():
    x, labels = separable_blobs()
    head = expand(ClassifierHead.empty(2), ["neg", "pos"])
    y = np.array([head.row(l) for l in labels])
    after_one = train(head, x, labels, TrainConfig(epochs=1))
    after_all = train(head, x, labels, TrainConfig())
    loss_one = cross_entropy(after_one.weights, after_one.biases, x, y)
    loss_all = cross_entropy(after_all.weights, after_all.biases, x, y)
    assert loss_all <= loss_one


def test_train_uses_last_partial_batch():
    # one sample fewer than the batch size with epochs=1: the only step IS
    # the partial batch, so weights must move
    x, labels = separable_blobs(4)  # 8 samples
    head = expand(ClassifierHead.empty(2), ["neg", "pos"])
    out = train(head, x, labels, TrainConfig(epochs=1, batch_size=64))
    assert not np.array_equal(out.weights, head.weights)


def test_train_warm_start_continues_from_weights():
    x, labels = separable_blobs(25, seed=3)
    head = expand(ClassifierHead.empty(2), ["neg", "pos"])
    first = train(head, x, labels, TrainConfig(epochs=4, shuffle_seed=0))
    second = train(first, x, labels, TrainConfig(epochs=4, shuffle_seed=0))
    assert not np.array_equal(second.weights, first.weights)
    y = np.array([head.row(l) for l in labels])
    assert cross_entropy(second.weights, second.biases, x, y) <= cross_entropy(
        first.weights, first.biases, x, y
    )


def test_train_rejects_unknown_label_and_empty_data():
    head = expand(ClassifierHead.empty(2), ["a"])
    with pytest.raises(ValueError, match="unknown label"):
        train(head, np.zeros((1, 2)), ["mystery"], TrainConfig(epochs=1))
    with pytest.raises(ValueError, match="empty"):
        train(head, np.zeros((0, 2)), [], TrainConfig(epochs=1))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(momentum=1.0)
    assert TrainConfig().epochs == 25
    assert TrainConfig().learning_rate == 0.01
    assert TrainConfig().momentum == 0.9
    assert TrainConfig().batch_size == 64


# ---------------------------------------------------------------- evaluate

def test_evaluate_balanced_baseline():
    # a head that always answers "c0" scores 1/10 on a balanced 10-way set
    head = expand(ClassifierHead.empty(1), [f"c{i}" for i in range(10)])
    x = np.ones((100, 1))
    labels = [f"c{i}" for i in range(10) for _ in range(10)]
    assert evaluate(head, x, labels) == pytest.approx(0.10)


def test_evaluate_disjoint_labels_scores_zero():
    head = expand(ClassifierHead.empty(2), ["a", "b"])
    assert evaluate(head, np.zeros((5, 2)), ["z"] * 5) == 0.0


def test_evaluate_perfect_head():
    x, labels = separable_blobs(seed=4)
    head = train(expand(ClassifierHead.empty(2), ["neg", "pos"]), x, labels,
                 TrainConfig())
    assert evaluate(head, x, labels) == 1.0


def test_evaluate_empty_set_raises():
    head = expand(ClassifierHead.empty(2), ["a"])
    with pytest.raises(ValueError):
        evaluate(head, np.zeros((0, 2)), [])


def test_predict_batch_matches_predict():
    rng = np.random.default_rng(8)
    head = ClassifierHead(rng.normal(size=(4, 3)), rng.normal(size=4),
                          ["a", "b", "c", "d"])
    xs = rng.normal(size=(10, 3))
    batch = predict_batch(head, xs)
    assert batch == [predict(head, x)[0] for x in xs]
