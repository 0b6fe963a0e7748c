"""The two siamese networks and similarity-based class prediction.

``SiameseEncoderNet`` (the first network) maps inputs to a latent space with a
shared encoder and scores a pair through a sigmoid unit on the element-wise
absolute difference of the two encodings. ``SiameseHeadNet`` (the second
network) has no encoder of its own: it scores latent pairs through a small
fully-connected stack on their absolute difference.
"""

import numpy as np

from .exceptions import ConfigurationError
from .nn import DenseNet, loss, minibatches, output_delta


class SiameseEncoderNet:
    """Twin encoder plus sigmoid head over ``|enc(a) - enc(b)|``.

    The twins are the same :class:`DenseNet`; both branches are pushed through
    it as one stacked batch, so the encoder gradient is automatically the sum
    of the two branch contributions.
    """

    def __init__(self, n_features, hidden_layers=(32, 32), learning_rate=0.01,
                 l2_rate=1e-4, rng=None):
        rng = np.random.default_rng() if rng is None else rng
        hidden_layers = list(hidden_layers)
        self.encoder = DenseNet([n_features, *hidden_layers],
                                ["leaky_relu"] * len(hidden_layers),
                                learning_rate, l2_rate, rng)
        self.head = DenseNet([hidden_layers[-1], 1], ["sigmoid"],
                             learning_rate, l2_rate, rng)

    @property
    def n_features(self):
        return self.encoder.n_inputs

    @property
    def latent_dim(self):
        return self.encoder.n_outputs

    def encode(self, X):
        return self.encoder.predict(np.atleast_2d(X))

    def distance_prob(self, D):
        """Head probability for precomputed absolute-difference vectors."""
        return self.head.predict(D)[:, 0]

    def pair_prob(self, A, B):
        A, B = np.atleast_2d(A), np.atleast_2d(B)
        if A.shape[1] != self.n_features or B.shape[1] != self.n_features:
            raise ConfigurationError(f"pair inputs must have width {self.n_features}")
        return self.distance_prob(np.abs(self.encode(A) - self.encode(B)))

    def compute_gradients(self, A, B, y):
        """Fill both nets' gradient buffers for the mean pair BCE; return the loss."""
        return loss("binary_ce", self._backprop(A, B, y), y)

    def _backprop(self, A, B, y):
        n = len(A)
        enc_out = self.encoder._forward(np.vstack((A, B)))
        Z = enc_out[-1]
        diff = Z[:n] - Z[n:]
        head_out = self.head._forward(np.abs(diff))
        p = head_out[-1]
        grad_dist = self.head.backward(head_out, output_delta(p, y),
                                       preactivation=True, need_input_grad=True)
        grad_diff = grad_dist * np.sign(diff)
        self.encoder.backward(enc_out, np.vstack((grad_diff, -grad_diff)))
        return p

    def objective(self, A, B, y):
        """Pair BCE plus the L2 penalty of both nets (what the gradients descend)."""
        p = self.pair_prob(A, B)[:, None]
        return loss("binary_ce", p, y) + self.encoder.l2_penalty() + self.head.l2_penalty()

    def train_batch(self, A, B, y):
        self._backprop(A, B, y)
        self.encoder.apply_gradients()
        self.head.apply_gradients()

    def train(self, pairs, rng, batch_size=64):
        """One epoch over a :class:`PairSet`; an empty set is a no-op."""
        if len(pairs) == 0:
            return self
        A, B, y = pairs.arrays()
        for idx in minibatches(len(y), rng, batch_size):
            self.train_batch(A[idx], B[idx], y[idx])
        return self


class SiameseHeadNet:
    """Fully-connected head over ``|z_a - z_b|`` for latent pairs."""

    def __init__(self, latent_dim, hidden_layers=(16,), learning_rate=0.001,
                 l2_rate=1e-4, rng=None):
        rng = np.random.default_rng() if rng is None else rng
        hidden_layers = list(hidden_layers)
        self.head = DenseNet([latent_dim, *hidden_layers, 1],
                             ["leaky_relu"] * len(hidden_layers) + ["sigmoid"],
                             learning_rate, l2_rate, rng)

    @property
    def latent_dim(self):
        return self.head.n_inputs

    def distance_prob(self, D):
        return self.head.predict(D)[:, 0]

    def pair_prob(self, Za, Zb):
        Za, Zb = np.atleast_2d(Za), np.atleast_2d(Zb)
        if Za.shape[1] != self.latent_dim or Zb.shape[1] != self.latent_dim:
            raise ConfigurationError(f"latent inputs must have width {self.latent_dim}")
        return self.distance_prob(np.abs(Za - Zb))

    def compute_gradients(self, Za, Zb, y):
        return loss("binary_ce", self._backprop(Za, Zb, y), y)

    def _backprop(self, Za, Zb, y):
        out = self.head.forward(np.abs(Za - Zb))
        self.head.backward(out, output_delta(out[-1], y), preactivation=True)
        return out[-1]

    def objective(self, Za, Zb, y):
        p = self.pair_prob(Za, Zb)[:, None]
        return loss("binary_ce", p, y) + self.head.l2_penalty()

    def train_batch(self, Za, Zb, y):
        self._backprop(Za, Zb, y)
        self.head.apply_gradients()

    def train(self, pairs, rng, batch_size=64):
        if len(pairs) == 0:
            return self
        A, B, y = pairs.arrays()
        D = np.abs(A - B)
        head = self.head
        for idx in minibatches(len(y), rng, batch_size):
            out = head._forward(D[idx])
            head.backward(out, output_delta(out[-1], y[idx]), preactivation=True)
            head.apply_gradients()
        return self


def s1_encode(s1, x):
    return s1.encode(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]


def s1_pair_prob(s1, x_i, x_j):
    return float(s1.pair_prob(x_i, x_j)[0])


def s2_pair_prob(s2, z_i, z_j):
    return float(s2.pair_prob(z_i, z_j)[0])


def train_s1(s1, pairs, rng, batch_size=64):
    return s1.train(pairs, rng, batch_size)


def train_s2(s2, pairs, rng, batch_size=64):
    return s2.train(pairs, rng, batch_size)


def queue_scores(similarity, labels, n_classes):
    """Mean similarity per class queue.

    ``similarity`` has shape ``(n_queries, n_stored)`` and ``labels`` gives the
    queue of every stored column. Returns ``(scores, populated)`` where empty
    queues score 0.
    """
    onehot = (labels[:, None] == np.arange(n_classes)).astype(np.float64)
    counts = onehot.sum(axis=0)
    sums = similarity @ onehot
    populated = counts > 0
    scores = np.zeros_like(sums)
    scores[:, populated] = sums[:, populated] / counts[populated]
    return scores, populated


def argmax_populated(scores, populated):
    """Row-wise argmax restricted to populated queues; ties go to the lowest index."""
    masked = np.where(populated, scores, -np.inf)
    return masked.argmax(axis=1)


def predict_class(s2, query_encoding, enc_memory):
    """Class whose stored encodings are on average most similar to the query.

    Returns ``(class_index, scores)`` with one mean similarity per queue.
    """
    data, labels = enc_memory.as_arrays()
    if len(data) == 0:
        raise ConfigurationError("cannot predict from an empty memory")
    z = np.asarray(query_encoding, dtype=np.float64).reshape(1, -1)
    sim = s2.distance_prob(np.abs(data - z))[None, :]
    scores, populated = queue_scores(sim, labels, enc_memory.n_classes)
    return int(argmax_populated(scores, populated)[0]), scores[0]
