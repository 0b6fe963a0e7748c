"""Dense feed-forward networks with hand-written backpropagation and Adam.

All parameters of a network live in one flat float64 vector; the per-layer
weight and bias arrays are views into it, which keeps the Adam update to a
handful of vectorised operations regardless of depth.
"""

import numpy as np

from .exceptions import ConfigurationError, TrainingError

LEAKY_SLOPE = 0.01
ACTIVATIONS = ("leaky_relu", "sigmoid", "softmax", "identity")
LOSSES = ("binary_ce", "categorical_ce")
PROB_EPS = 1e-12


def he_normal_init(fan_in, fan_out, rng):
    """Draw a ``(fan_in, fan_out)`` weight matrix from N(0, 2 / fan_in)."""
    if fan_in < 1 or fan_out < 1:
        raise ConfigurationError("fan_in and fan_out must be >= 1")
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))


def leaky_relu(a):
    # equals where(a > 0, a, slope * a) because the slope is below 1
    return np.maximum(a, LEAKY_SLOPE * a)


def sigmoid(a):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def softmax(a):
    e = np.exp(a - a.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _activate(name, a):
    if name == "leaky_relu":
        return leaky_relu(a)
    if name == "sigmoid":
        return sigmoid(a)
    if name == "softmax":
        return softmax(a)
    return a


def _activation_backward(name, out, grad):
    """Map d(loss)/d(output) to d(loss)/d(pre-activation)."""
    if name == "leaky_relu":
        # out > 0 exactly when the pre-activation is > 0
        return grad * np.where(out > 0, 1.0, LEAKY_SLOPE)
    if name == "sigmoid":
        return grad * out * (1.0 - out)
    if name == "softmax":
        return out * (grad - (grad * out).sum(axis=1, keepdims=True))
    return grad


def loss(kind, predictions, targets):
    """Mean cross-entropy; probabilities are clamped to [1e-12, 1 - 1e-12]."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ConfigurationError(
            f"prediction shape {predictions.shape} != target shape {targets.shape}"
        )
    p = np.clip(predictions, PROB_EPS, 1.0 - PROB_EPS)
    if kind == "binary_ce":
        terms = -(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p))
        return float(terms.reshape(len(p), -1).sum(axis=1).mean())
    if kind == "categorical_ce":
        return float(-(targets * np.log(p)).sum(axis=1).mean())
    raise ConfigurationError(f"unknown loss {kind!r}")


def output_delta(predictions, targets):
    """Gradient of the mean cross-entropy w.r.t. the output pre-activations.

    Valid for sigmoid + binary CE and softmax + categorical CE alike.
    """
    return (predictions - targets) / len(predictions)


class Adam:
    """Adam over a flat parameter vector (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, size, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grads
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * np.square(grads)
        # bias corrections folded into scalars: lr * m_hat / (sqrt(v_hat) + eps)
        c1 = 1.0 - self.beta1 ** self.t
        c2 = np.sqrt(1.0 - self.beta2 ** self.t)
        denom = np.sqrt(self.v)
        denom += self.eps * c2
        params -= (self.learning_rate * c2 / c1) * (self.m / denom)


class DenseNet:
    """Fully connected network, one activation tag per layer.

    Parameters
    ----------
    layer_sizes : sequence of int
        ``[n_in, h1, ..., n_out]``.
    activations : sequence of str
        One of ``ACTIVATIONS`` per layer (``len(layer_sizes) - 1`` entries).
    learning_rate : float
        Adam step size.
    l2_rate : float
        Coefficient added as ``l2_rate * W`` to every weight gradient; biases
        are not regularised.
    rng : numpy.random.Generator
        Source for He-normal initialisation. Biases start at zero.
    """

    def __init__(self, layer_sizes, activations, learning_rate=0.01, l2_rate=1e-4,
                 rng=None):
        layer_sizes = [int(n) for n in layer_sizes]
        activations = list(activations)
        if len(layer_sizes) < 2 or any(n < 1 for n in layer_sizes):
            raise ConfigurationError(f"invalid layer sizes {layer_sizes}")
        if len(activations) != len(layer_sizes) - 1:
            raise ConfigurationError("need exactly one activation per layer")
        for name in activations:
            if name not in ACTIVATIONS:
                raise ConfigurationError(f"unknown activation {name!r}")
        if learning_rate <= 0 or l2_rate < 0:
            raise ConfigurationError("learning_rate must be > 0 and l2_rate >= 0")
        rng = np.random.default_rng() if rng is None else rng

        self.layer_sizes = layer_sizes
        self.activations = activations
        self.l2_rate = float(l2_rate)

        n_params = sum(i * o + o for i, o in zip(layer_sizes[:-1], layer_sizes[1:]))
        self.params = np.zeros(n_params)
        self.grads = np.zeros(n_params)
        self.weights, self.biases = self._views(self.params)
        self.grad_weights, self.grad_biases = self._views(self.grads)
        for W, (fan_in, fan_out) in zip(self.weights,
                                        zip(layer_sizes[:-1], layer_sizes[1:])):
            W[...] = he_normal_init(fan_in, fan_out, rng)
        self.optimizer = Adam(n_params, learning_rate)

    def _views(self, flat):
        weights, biases = [], []
        offset = 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            weights.append(flat[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out))
            offset += fan_in * fan_out
            biases.append(flat[offset:offset + fan_out])
            offset += fan_out
        return weights, biases

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    @property
    def learning_rate(self):
        return self.optimizer.learning_rate

    def forward(self, X):
        """Return the list ``[X, out_1, ..., out_L]`` of layer outputs."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_inputs:
            raise ConfigurationError(
                f"input width {X.shape[-1] if X.ndim else None} != {self.n_inputs}"
            )
        return self._forward(X)

    def _forward(self, X):
        outputs = [X]
        for W, b, name in zip(self.weights, self.biases, self.activations):
            a = outputs[-1] @ W
            a += b
            outputs.append(_activate(name, a))
        return outputs

    def predict(self, X):
        return self.forward(X)[-1]

    def backward(self, outputs, grad, *, preactivation=False, need_input_grad=False):
        """Backpropagate ``grad`` and store parameter gradients in ``self.grads``.

        ``grad`` is the loss gradient w.r.t. the network output, or w.r.t. the
        final pre-activation when ``preactivation`` is true (the fused
        cross-entropy form from :func:`output_delta`). Returns the gradient
        w.r.t. the input when ``need_input_grad`` is set.
        """
        n_layers = len(self.weights)
        for i in range(n_layers - 1, -1, -1):
            if not (preactivation and i == n_layers - 1):
                grad = _activation_backward(self.activations[i], outputs[i + 1], grad)
            W = self.weights[i]
            np.dot(outputs[i].T, grad, out=self.grad_weights[i])
            if self.l2_rate:
                self.grad_weights[i] += self.l2_rate * W
            self.grad_biases[i][...] = grad.sum(axis=0)
            if i > 0 or need_input_grad:
                grad = grad @ W.T
        return grad if need_input_grad else None

    def apply_gradients(self):
        """One Adam step using the gradients from the last ``backward`` call."""
        if not np.isfinite(self.grads).all():
            raise TrainingError("non-finite gradient encountered; aborting update")
        self.optimizer.step(self.params, self.grads)

    def l2_penalty(self):
        """The penalty whose gradient ``backward`` adds: 0.5 * l2 * sum(W^2)."""
        return 0.5 * self.l2_rate * sum(float((W * W).sum()) for W in self.weights)

    def train_batch(self, X, Y):
        """Fused output + cross-entropy gradient step on one mini-batch."""
        outputs = self.forward(X)
        self.backward(outputs, output_delta(outputs[-1], Y), preactivation=True)
        self.apply_gradients()
        return outputs[-1]

    def train_epoch(self, X, Y, rng, batch_size=64):
        """Shuffle, then one pass of sequential mini-batches (last one may be short)."""
        for idx in minibatches(len(X), rng, batch_size):
            self.train_batch(X[idx], Y[idx])


def minibatches(n, rng, batch_size=64):
    """Index arrays for one shuffled epoch over ``n`` items."""
    order = rng.permutation(n)
    return [order[s:s + batch_size] for s in range(0, n, batch_size)]
