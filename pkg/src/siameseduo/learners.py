"""Active stream learners with a scikit-learn estimator interface.

Every learner follows the same protocol::

    learner = SiameseDuoLearner(budget=0.01, random_state=0)
    learner.fit(X_seed, y_seed, classes=[1, 2, 3])   # no pre-training
    for x, y in stream:
        outcome = learner.step(x, Oracle(y))         # predict, maybe query+learn

``fit`` only stores the initial labelled data (memory-based learners) and
initialises the networks. ``step`` predicts before any learning happens, so its
output is a valid prequential prediction. ``predict`` / ``predict_proba`` score
a batch without touching the state.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    as_generator,
    check_features,
    check_layers,
    check_sample,
    check_scalar,
)
from .active_learning import (
    BudgetTracker,
    VariableThreshold,
    budget_allows,
    budget_update,
    rvus_decide,
)
from .augmentation import AugmentConfig, build_augmented, build_generated
from .exceptions import ConfigurationError
from .memory import build_pairs, encode_all, init_memory, make_pairs
from .nn import DenseNet
from .siamese import SiameseEncoderNet, SiameseHeadNet, argmax_populated, queue_scores

_CHUNK = 256


@dataclass
class LearnerStepOutcome:
    predicted_class: object
    class_scores: np.ndarray
    queried: bool
    budget_spent: float


class Oracle:
    """Deferred label provider for one stream instance; answers at most once."""

    def __init__(self, label):
        self._label = label
        self.calls = 0

    def __call__(self):
        if self.calls:
            raise RuntimeError("label already requested for this instance")
        self.calls += 1
        return self._label


def _normalise(scores):
    total = scores.sum(axis=-1, keepdims=True)
    uniform = np.full_like(scores, 1.0 / scores.shape[-1])
    return np.where(total > 0, scores / np.where(total > 0, total, 1.0), uniform)


class StreamLearner(ClassifierMixin, BaseEstimator):
    """Shared predict / gate / query / learn loop.

    Subclasses implement ``_init_state``, ``_score`` (prediction for a batch,
    returning class scores and a context for the criterion), ``_criterion``
    and ``_learn``.
    """

    uses_memory = False

    def fit(self, X, y, classes=None):
        """Store the initial labelled set and initialise networks.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
            Initial labelled examples (may be a handful per class).
        y : array-like of shape (n_samples,)
        classes : array-like, optional
            Every class the stream can produce. Defaults to ``np.unique(y)``.
        """
        X = check_features(X)
        y = np.asarray(y).ravel()
        if len(y) != len(X):
            raise ConfigurationError("X and y have different lengths")
        self.classes_ = np.unique(y) if classes is None else np.asarray(classes)
        if len(self.classes_) < 2:
            raise ConfigurationError("need at least two classes")
        if np.unique(self.classes_).size != self.classes_.size:
            raise ConfigurationError("classes must be unique")
        self._index_of = {c: i for i, c in enumerate(self.classes_.tolist())}
        self.n_features_in_ = X.shape[1]
        self._validate_hyperparameters()
        self.rng_ = as_generator(self.random_state)
        self.threshold_ = VariableThreshold(theta=1.0, step=self.threshold_step,
                                            std=self.threshold_std)
        self.budget_ = BudgetTracker(self.budget, self.budget_window)
        self.n_queries_ = 0
        self.n_steps_ = 0
        idx = self._label_indices(y)
        if self.uses_memory:
            self.memory_ = init_memory(len(self.classes_), self.memory_size,
                                       zip(X, idx))
        self._init_state()
        return self

    def _validate_hyperparameters(self):
        check_scalar(self.budget, "budget", low=0.0, high=1.0)
        check_scalar(self.learning_rate, "learning_rate", low=0.0, include_low=False)
        check_scalar(self.l2_rate, "l2_rate", low=0.0)
        check_scalar(self.batch_size, "batch_size", int, low=1)
        check_scalar(self.budget_window, "budget_window", int, low=2)
        check_layers(self.hidden_layers, "hidden_layers")
        if self.uses_memory:
            check_scalar(self.memory_size, "memory_size", int, low=1)

    def _label_indices(self, y):
        try:
            return np.array([self._index_of[v] for v in np.asarray(y).ravel().tolist()],
                            dtype=np.intp)
        except KeyError as err:
            raise ConfigurationError(f"unknown class label {err.args[0]!r}") from None

    @property
    def n_classes_(self):
        return len(self.classes_)

    def decision_scores(self, X):
        """Raw per-class scores (softmax outputs or mean queue similarities)."""
        check_is_fitted(self, "classes_")
        X = check_features(X, self.n_features_in_)
        parts = [self._score(X[s:s + _CHUNK])[0] for s in range(0, len(X), _CHUNK)]
        return np.vstack(parts)

    def predict_proba(self, X):
        return _normalise(self.decision_scores(X))

    def predict(self, X):
        scores = self.decision_scores(X)
        return self.classes_[self._argmax(scores)]

    def _argmax(self, scores):
        return scores.argmax(axis=1)

    def step(self, x, oracle):
        """Process one stream instance.

        Predicts first, then (budget permitting) evaluates the query criterion
        and, if the label is requested, calls ``oracle()`` and learns. If the
        oracle raises, the learner state is left as it was before the call.
        """
        if not hasattr(self, "budget_"):
            raise ConfigurationError("call fit() before step()")
        x = check_sample(x, self.n_features_in_)
        scores, ctx = self._score(x)
        pred = int(self._argmax(scores)[0])
        queried = False
        if budget_allows(self.budget_):
            value = self._criterion(x, pred, ctx)
            rng_state = self.rng_.bit_generator.state
            decision = rvus_decide(value, self.threshold_, self.rng_)
            if decision.query:
                try:
                    label = oracle()
                except Exception:
                    self.rng_.bit_generator.state = rng_state
                    raise
                self._learn(x, int(self._label_indices([label])[0]))
                self.n_queries_ += 1
                queried = True
            self.threshold_.theta = decision.theta_after
        budget_update(self.budget_, queried)
        self.n_steps_ += 1
        return LearnerStepOutcome(self.classes_[pred], _normalise(scores[0]),
                                  queried, self.budget_.b_hat)

    def _onehot(self, idx):
        Y = np.zeros((len(idx), self.n_classes_))
        Y[np.arange(len(idx)), idx] = 1.0
        return Y


class _SoftmaxLearner(StreamLearner):
    """Standard network with softmax output and uncertainty sampling."""

    def _init_state(self):
        sizes = [self.n_features_in_, *check_layers(self.hidden_layers, "hidden_layers"),
                 self.n_classes_]
        acts = ["leaky_relu"] * (len(sizes) - 2) + ["softmax"]
        self.net_ = DenseNet(sizes, acts, self.learning_rate, self.l2_rate, self.rng_)

    def _score(self, X):
        proba = self.net_.predict(X)
        return proba, proba

    def _criterion(self, x, pred, proba):
        return float(proba[0].max())


class BaselineLearner(_SoftmaxLearner):
    """Memory-less learner: trains one gradient step on each queried instance.

    Parameters
    ----------
    budget : float, default=0.01
        Maximum long-run fraction of instances whose label may be requested.
    hidden_layers : tuple of int, default=(32, 32)
    learning_rate : float, default=0.01
    l2_rate : float, default=1e-4
    batch_size : int, default=64
        Unused by this learner (one example per update); kept for a uniform
        parameter set.
    threshold_step, threshold_std : float, default=0.01, 1.0
        Variable-threshold step size and randomisation spread.
    budget_window : int, default=300
    random_state : int, Generator or None
    """

    def __init__(self, budget=0.01, hidden_layers=(32, 32), learning_rate=0.01,
                 l2_rate=1e-4, batch_size=64, threshold_step=0.01, threshold_std=1.0,
                 budget_window=300, random_state=None):
        self.budget = budget
        self.hidden_layers = hidden_layers
        self.learning_rate = learning_rate
        self.l2_rate = l2_rate
        self.batch_size = batch_size
        self.threshold_step = threshold_step
        self.threshold_std = threshold_std
        self.budget_window = budget_window
        self.random_state = random_state

    def _learn(self, x, y_idx):
        self.net_.train_batch(x, self._onehot([y_idx]))


class ActiQLearner(_SoftmaxLearner):
    """Softmax network trained one epoch over a per-class FIFO memory per query.

    Takes the :class:`BaselineLearner` parameters plus ``memory_size`` (queue
    length per class, default 10).
    """

    uses_memory = True

    def __init__(self, budget=0.01, memory_size=10, hidden_layers=(32, 32),
                 learning_rate=0.01, l2_rate=1e-4, batch_size=64, threshold_step=0.01,
                 threshold_std=1.0, budget_window=300, random_state=None):
        self.budget = budget
        self.memory_size = memory_size
        self.hidden_layers = hidden_layers
        self.learning_rate = learning_rate
        self.l2_rate = l2_rate
        self.batch_size = batch_size
        self.threshold_step = threshold_step
        self.threshold_std = threshold_std
        self.budget_window = budget_window
        self.random_state = random_state

    def _learn(self, x, y_idx):
        self.memory_.append(x[0], y_idx)
        X, idx = self.memory_.as_arrays()
        self.net_.train_epoch(X, self._onehot(idx), self.rng_, self.batch_size)


class _MemorySimilarityLearner(StreamLearner):
    """Prediction by mean similarity to the stored queues (siamese learners)."""

    uses_memory = True

    def _argmax(self, scores):
        return argmax_populated(scores, self._populated)

    def _similarities(self, X):
        raise NotImplementedError

    def _score(self, X):
        sim = self._similarities(X)
        scores, self._populated = queue_scores(sim, self._stored_labels, self.n_classes_)
        return scores, sim

    def _criterion(self, x, pred, sim):
        mask = self._stored_labels == pred
        return float(sim[0, mask].max()) if mask.any() else 0.0


class ActiSiameseLearner(_MemorySimilarityLearner):
    """One siamese network over a per-class memory, with density sampling.

    Predicts the class whose queue has the highest mean first-network
    similarity to the instance; the query criterion is the highest similarity
    inside the predicted queue. On a query the memory is updated and the
    network is trained one epoch on balanced pairs drawn from it.

    Parameters are those of :class:`ActiQLearner`; ``hidden_layers`` sizes the
    shared encoder.
    """

    def __init__(self, budget=0.01, memory_size=10, hidden_layers=(32, 32),
                 learning_rate=0.01, l2_rate=1e-4, batch_size=64, threshold_step=0.01,
                 threshold_std=1.0, budget_window=300, random_state=None):
        self.budget = budget
        self.memory_size = memory_size
        self.hidden_layers = hidden_layers
        self.learning_rate = learning_rate
        self.l2_rate = l2_rate
        self.batch_size = batch_size
        self.threshold_step = threshold_step
        self.threshold_std = threshold_std
        self.budget_window = budget_window
        self.random_state = random_state

    def _init_state(self):
        self.s1_ = SiameseEncoderNet(self.n_features_in_, self.hidden_layers,
                                     self.learning_rate, self.l2_rate, self.rng_)
        self._refresh_encodings()

    def _refresh_encodings(self):
        self.enc_memory_ = encode_all(self.memory_, self.s1_)
        self._stored, self._stored_labels = self.enc_memory_.as_arrays()
        if len(self._stored) == 0:
            raise ConfigurationError("memory-based learners need labelled seed data")

    def _similarities(self, X):
        Z = self.s1_.encode(X)
        D = np.abs(Z[:, None, :] - self._stored[None, :, :])
        return self.s1_.distance_prob(D.reshape(-1, Z.shape[1])).reshape(len(X), -1)

    def _learn(self, x, y_idx):
        self.memory_.append(x[0], y_idx)
        pairs = build_pairs(self.memory_, self.rng_)
        self.s1_.train(pairs, self.rng_, self.batch_size)
        self._refresh_encodings()


class SiameseDuoLearner(_MemorySimilarityLearner):
    """Two cooperating siamese networks with latent-space augmentation.

    The first network learns encodings from balanced pairs of the memory. The
    stored examples are re-encoded after every update, augmented in latent space
    (interpolation, extrapolation, Gaussian noise), and the second network is
    trained on balanced pairs over originals plus generated vectors. Prediction
    and the query criterion both use the second network on encodings; generated
    vectors never take part in prediction.

    Parameters
    ----------
    budget : float, default=0.01
    memory_size : int, default=10
    hidden_layers : tuple of int, default=(32, 32)
        Encoder widths of the first network; the last one is the latent size.
    learning_rate : float, default=0.01
        First-network step size.
    s2_hidden_layers : tuple of int, default=(16,)
    s2_learning_rate : float, default=0.001
    l2_rate : float, default=1e-4
    batch_size : int, default=64
    augment_counts : tuple of 3 int, default=(3, 3, 3)
        Generated vectors per stored encoding for interpolation, extrapolation
        and Gaussian noise.
    beta1, beta2, beta3 : float, default=0.1
        Scaling factors of the three transforms.
    distance : {"cosine", "euclidean"}, default="cosine"
        Neighbour metric for interpolation.
    max_augmented_positives : int or None, default=4500
        Upper bound on positive latent pairs per update of the second network
        (sampled without replacement when exceeded). ``None`` enumerates all.
    threshold_step, threshold_std : float, default=0.01, 1.0
    budget_window : int, default=300
    random_state : int, Generator or None
    """

    def __init__(self, budget=0.01, memory_size=10, hidden_layers=(32, 32),
                 learning_rate=0.01, s2_hidden_layers=(16,), s2_learning_rate=0.001,
                 l2_rate=1e-4, batch_size=64, augment_counts=(3, 3, 3), beta1=0.1,
                 beta2=0.1, beta3=0.1, distance="cosine", max_augmented_positives=4500,
                 threshold_step=0.01, threshold_std=1.0, budget_window=300,
                 random_state=None):
        self.budget = budget
        self.memory_size = memory_size
        self.hidden_layers = hidden_layers
        self.learning_rate = learning_rate
        self.s2_hidden_layers = s2_hidden_layers
        self.s2_learning_rate = s2_learning_rate
        self.l2_rate = l2_rate
        self.batch_size = batch_size
        self.augment_counts = augment_counts
        self.beta1 = beta1
        self.beta2 = beta2
        self.beta3 = beta3
        self.distance = distance
        self.max_augmented_positives = max_augmented_positives
        self.threshold_step = threshold_step
        self.threshold_std = threshold_std
        self.budget_window = budget_window
        self.random_state = random_state

    def _validate_hyperparameters(self):
        super()._validate_hyperparameters()
        check_layers(self.s2_hidden_layers, "s2_hidden_layers")
        check_scalar(self.s2_learning_rate, "s2_learning_rate", low=0.0,
                     include_low=False)
        if self.max_augmented_positives is not None:
            check_scalar(self.max_augmented_positives, "max_augmented_positives", int,
                         low=1)
        self.augment_config_ = AugmentConfig(self.beta1, self.beta2, self.beta3,
                                             tuple(self.augment_counts), self.distance)

    def _init_state(self):
        self.s1_ = SiameseEncoderNet(self.n_features_in_, self.hidden_layers,
                                     self.learning_rate, self.l2_rate, self.rng_)
        self.s2_ = SiameseHeadNet(self.s1_.latent_dim, self.s2_hidden_layers,
                                  self.s2_learning_rate, self.l2_rate, self.rng_)
        self._refresh_encodings()

    def _refresh_encodings(self):
        self.enc_memory_ = encode_all(self.memory_, self.s1_)
        self._stored, self._stored_labels = self.enc_memory_.as_arrays()
        if len(self._stored) == 0:
            raise ConfigurationError("memory-based learners need labelled seed data")

    def encode(self, X):
        check_is_fitted(self, "s1_")
        return self.s1_.encode(check_features(X, self.n_features_in_))

    def _similarities(self, X):
        Z = self.s1_.encode(X)
        D = np.abs(Z[:, None, :] - self._stored[None, :, :])
        return self.s2_.distance_prob(D.reshape(-1, Z.shape[1])).reshape(len(X), -1)

    def _learn(self, x, y_idx):
        self.memory_.append(x[0], y_idx)
        pairs = build_pairs(self.memory_, self.rng_)
        self.s1_.train(pairs, self.rng_, self.batch_size)
        self._refresh_encodings()
        generated = build_generated(self.enc_memory_, self.augment_config_, self.rng_)
        augmented = build_augmented(self.enc_memory_, generated)
        data, labels = augmented.as_arrays()
        latent_pairs = make_pairs(data, labels, self.rng_,
                                  max_positives=self.max_augmented_positives)
        self.s2_.train(latent_pairs, self.rng_, self.batch_size)


LEARNERS = {
    "baseline": BaselineLearner,
    "nn": ActiQLearner,
    "siamese": ActiSiameseLearner,
    "siameseduo": SiameseDuoLearner,
}


def make_learner(kind, **params):
    try:
        cls = LEARNERS[kind]
    except KeyError:
        raise ConfigurationError(
            f"unknown learner {kind!r}; expected one of {sorted(LEARNERS)}"
        ) from None
    return cls(**params)
