import numpy as np
import pytest

from conftest import max_rel_error, numeric_grad
from siameseduo.exceptions import ConfigurationError
from siameseduo.memory import EncodingMemory, make_pairs
from siameseduo.nn import sigmoid
from siameseduo.siamese import (
    SiameseEncoderNet,
    SiameseHeadNet,
    predict_class,
    queue_scores,
    s1_encode,
    s1_pair_prob,
    s2_pair_prob,
)


def test_encode_width_and_determinism(rng):
    s1 = SiameseEncoderNet(2, (32, 32), rng=rng)
    x = rng.normal(size=2)
    z = s1_encode(s1, x)
    assert z.shape == (32,)
    np.testing.assert_array_equal(z, s1_encode(s1, x))


def test_zero_encoder_gives_zero_encoding(rng):
    s1 = SiameseEncoderNet(3, (4, 4), rng=rng)
    s1.encoder.params[:] = 0
    np.testing.assert_array_equal(s1_encode(s1, rng.normal(size=3)), 0)


def test_encode_width_mismatch(rng):
    s1 = SiameseEncoderNet(3, (4,), rng=rng)
    with pytest.raises(ConfigurationError):
        s1_pair_prob(s1, np.zeros(2), np.zeros(2))


def test_s1_symmetry_and_self_constancy(rng):
    s1 = SiameseEncoderNet(4, (8, 6), rng=rng)
    a, b = rng.normal(size=(2, 4))
    assert s1_pair_prob(s1, a, b) == s1_pair_prob(s1, b, a)
    assert s1_pair_prob(s1, a, a) == s1_pair_prob(s1, b, b)


def test_s1_compositional_oracle(rng):
    s1 = SiameseEncoderNet(4, (8, 6), rng=rng)
    a, b = rng.normal(size=(2, 4))
    d = np.abs(s1_encode(s1, a) - s1_encode(s1, b))
    W, bias = s1.head.weights[0], s1.head.biases[0]
    assert s1_pair_prob(s1, a, b) == pytest.approx(sigmoid(d @ W + bias)[0], abs=1e-15)


def test_s2_properties(rng):
    s2 = SiameseHeadNet(6, (16,), rng=rng)
    za, zb = rng.normal(size=(2, 6))
    assert s2_pair_prob(s2, za, zb) == s2_pair_prob(s2, zb, za)
    assert s2_pair_prob(s2, za, za) == s2_pair_prob(s2, zb, zb)
    assert s2_pair_prob(s2, za, zb) == pytest.approx(
        s2.head.predict(np.abs(za - zb)[None, :])[0, 0], abs=1e-15)


def _objective_grad_check(net, A, B, y, params_list, objective):
    net.compute_gradients(A, B, y)
    analytic = np.concatenate([p.grads for p in params_list])
    flat = [p.params for p in params_list]
    numeric = np.concatenate([numeric_grad(lambda: objective(A, B, y), f) for f in flat])
    return max_rel_error(analytic, numeric)


def test_s1_gradient_sums_both_twins():
    rng = np.random.default_rng(5)
    s1 = SiameseEncoderNet(3, (6, 5), l2_rate=1e-3, rng=rng)
    A, B = rng.normal(size=(2, 10, 3))
    y = rng.integers(0, 2, (10, 1)).astype(float)
    err = _objective_grad_check(s1, A, B, y, [s1.encoder, s1.head], s1.objective)
    assert err < 1e-4


def test_s2_gradient():
    rng = np.random.default_rng(6)
    s2 = SiameseHeadNet(5, (7,), l2_rate=1e-3, rng=rng)
    A, B = rng.normal(size=(2, 10, 5))
    y = rng.integers(0, 2, (10, 1)).astype(float)
    assert _objective_grad_check(s2, A, B, y, [s2.head], s2.objective) < 1e-4


def test_training_on_predicted_targets_barely_moves(rng):
    s2 = SiameseHeadNet(4, (8,), l2_rate=0.0, rng=rng)
    A, B = rng.normal(size=(2, 30, 4))
    y = s2.pair_prob(A, B)[:, None]
    before = s2.head.params.copy()
    s2.train_batch(A, B, y)
    assert np.max(np.abs(s2.head.params - before)) < 1e-9


def _toy_pairs(rng):
    X = np.vstack((rng.normal(-2, 0.3, (10, 2)), rng.normal(2, 0.3, (10, 2))))
    labels = np.repeat([0, 1], 10)
    return make_pairs(X, labels, rng)


def test_s1_loss_decreases_over_epochs(rng):
    s1 = SiameseEncoderNet(2, (16, 8), learning_rate=0.01, rng=rng)
    pairs = _toy_pairs(rng)
    A, B, y = pairs.arrays()
    first = s1.objective(A, B, y)
    for _ in range(50):
        s1.train(pairs, rng)
    assert s1.objective(A, B, y) < 0.5 * first


def test_s2_loss_decreases_over_epochs(rng):
    s2 = SiameseHeadNet(2, (16,), learning_rate=0.01, rng=rng)
    pairs = _toy_pairs(rng)
    A, B, y = pairs.arrays()
    first = s2.objective(A, B, y)
    for _ in range(50):
        s2.train(pairs, rng)
    assert s2.objective(A, B, y) < 0.5 * first


def test_empty_pairs_are_a_no_op(rng):
    s1 = SiameseEncoderNet(2, (4,), rng=rng)
    before = s1.encoder.params.copy()
    pairs = make_pairs(np.zeros((3, 2)), np.zeros(3, int), rng)
    s1.train(pairs, rng)
    np.testing.assert_array_equal(before, s1.encoder.params)


class _StubHead:
    """Similarity 1 for zero distance, 0 otherwise."""

    def distance_prob(self, D):
        return (np.abs(D).sum(axis=1) == 0).astype(float)


def test_predict_class_with_stub():
    enc = EncodingMemory([np.zeros((2, 1)), np.ones((2, 1)), 2 * np.ones((2, 1))])
    cls, scores = predict_class(_StubHead(), np.ones(1), enc)
    assert cls == 1
    np.testing.assert_array_equal(scores, [0, 1, 0])


def test_predict_class_brute_force(rng):
    s2 = SiameseHeadNet(3, (16,), rng=rng)
    enc = EncodingMemory([rng.normal(size=(4, 3)) for _ in range(3)])
    q = rng.normal(size=3)
    cls, scores = predict_class(s2, q, enc)
    brute = [np.mean([s2_pair_prob(s2, q, z) for z in enc.per_class[c]]) for c in range(3)]
    np.testing.assert_allclose(scores, brute, rtol=1e-12)
    assert cls == int(np.argmax(brute))
    sums = [np.sum([s2_pair_prob(s2, q, z) for z in enc.per_class[c]]) for c in range(3)]
    assert cls == int(np.argmax(sums))


def test_empty_queues_score_zero_and_never_win_ties():
    sim = np.zeros((1, 2))
    scores, populated = queue_scores(sim, np.array([1, 1]), 3)
    np.testing.assert_array_equal(populated, [False, True, False])
    enc = EncodingMemory([np.zeros((0, 1)), np.ones((2, 1)), np.zeros((0, 1))])
    cls, _ = predict_class(_StubHead(), np.zeros(1), enc)
    assert cls == 1


def test_ties_go_to_lowest_index():
    enc = EncodingMemory([np.ones((1, 1)), np.ones((1, 1))])
    assert predict_class(_StubHead(), np.ones(1), enc)[0] == 0


def test_predict_from_empty_memory_fails():
    enc = EncodingMemory([np.zeros((0, 1)), np.zeros((0, 1))])
    with pytest.raises(ConfigurationError):
        predict_class(_StubHead(), np.zeros(1), enc)
