"""Prequential metrics: fading-factor G-mean and sliding-window multi-class AUC.

Both metric states work on 0-based class indices. The harness converts labels
before updating them.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import AggregationError, ConfigurationError

METRICS = ("gmean", "pmauc", "budget_spent")


class FadingGmean:
    """Per-class fading recalls and their geometric mean.

    ``S[c]`` is the faded count of correctly predicted class-``c`` instances
    and ``N[c]`` the faded count of all class-``c`` instances. Classes never
    observed are left out of the product.
    """

    def __init__(self, n_classes, alpha=0.99):
        if not 0.0 < alpha <= 1.0:
            raise ConfigurationError("alpha must lie in (0, 1]")
        self.alpha = float(alpha)
        self.S = np.zeros(n_classes)
        self.N = np.zeros(n_classes)

    @property
    def n_classes(self):
        return len(self.N)

    def update(self, predicted, actual):
        if not (0 <= actual < self.n_classes and 0 <= predicted < self.n_classes):
            raise ConfigurationError("class index out of range")
        self.S *= self.alpha
        self.N *= self.alpha
        self.N[actual] += 1.0
        if predicted == actual:
            self.S[actual] += 1.0
        return self

    def recalls(self):
        seen = self.N > 0
        return self.S[seen] / self.N[seen]

    def value(self):
        r = self.recalls()
        if len(r) == 0 or np.any(r == 0):
            return 0.0
        return float(np.exp(np.log(r).mean()))


def gmean_update(state, predicted, actual):
    return state.update(predicted, actual)


def gmean_value(state):
    return state.value()


class SlidingPmauc:
    """Average one-vs-one AUC over the last ``window`` (scores, label) records.

    For ``i < j`` the pairwise term is the AUC of ``i`` (positive) against
    ``j`` using score column ``i``. With ``symmetric=True`` it is instead the
    mean of both directions, which makes the value invariant to relabelling
    the classes. Ties count one half. Pairs with a class absent from the window
    are skipped.
    """

    def __init__(self, n_classes, window=500, symmetric=False):
        if window < 1:
            raise ConfigurationError("window must be >= 1")
        self.window = int(window)
        self.symmetric = bool(symmetric)
        self._scores = np.zeros((self.window, n_classes))
        self._labels = np.zeros(self.window, dtype=np.intp)
        self._size = 0
        self._next = 0

    @property
    def n_classes(self):
        return self._scores.shape[1]

    def __len__(self):
        return self._size

    def update(self, scores, actual):
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (self.n_classes,) or not np.isfinite(scores).all():
            raise ConfigurationError("scores must be a finite vector with one entry per class")
        if not 0 <= actual < self.n_classes:
            raise ConfigurationError("class index out of range")
        self._scores[self._next] = scores
        self._labels[self._next] = actual
        self._next = (self._next + 1) % self.window
        self._size = min(self._size + 1, self.window)
        return self

    def records(self):
        """Buffered ``(scores, labels)``, oldest first."""
        if self._size < self.window:
            order = np.arange(self._size)
        else:
            order = (np.arange(self.window) + self._next) % self.window
        return self._scores[order], self._labels[order]

    def value(self):
        scores, labels = self.records()
        return pmauc_from_window(scores, labels, self.n_classes, self.symmetric)


def one_vs_one_auc(scores, labels, n_classes):
    """Matrix ``A[i, j]``: AUC of class ``i`` against ``j`` on score column ``i``.

    Entries with an empty side are NaN.
    """
    labels = np.asarray(labels, dtype=np.intp)
    counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
    onehot = (labels[:, None] == np.arange(n_classes)).astype(np.float64)
    A = np.full((n_classes, n_classes), np.nan)
    for i in np.flatnonzero(counts):
        col = scores[:, i]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        # cum[k, j]: records of class j among the k lowest scores
        cum = np.vstack((np.zeros(n_classes), np.cumsum(onehot[order], axis=0)))
        pos = col[labels == i]
        left = np.searchsorted(sorted_col, pos, side="left")
        right = np.searchsorted(sorted_col, pos, side="right")
        below = cum[left].sum(axis=0)
        ties = (cum[right] - cum[left]).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            A[i] = (below + 0.5 * ties) / (counts[i] * counts)
    np.fill_diagonal(A, np.nan)
    return A


def pmauc_from_window(scores, labels, n_classes, symmetric=False):
    if len(labels) == 0:
        return 0.0
    A = one_vs_one_auc(np.asarray(scores, dtype=np.float64), labels, n_classes)
    iu = np.triu_indices(n_classes, k=1)
    pair = 0.5 * (A[iu] + A.T[iu]) if symmetric else A[iu]
    pair = pair[np.isfinite(pair)]
    return float(pair.mean()) if len(pair) else 0.0


def pmauc_update(state, scores, actual):
    return state.update(scores, actual)


def pmauc_value(state):
    return state.value()


@dataclass
class RunLog:
    """Per-step records of one (learner, dataset, seed) run."""

    learner: str
    dataset: str
    seed: int
    t: list = field(default_factory=list)
    predicted: list = field(default_factory=list)
    actual: list = field(default_factory=list)
    queried: list = field(default_factory=list)
    gmean: list = field(default_factory=list)
    pmauc: list = field(default_factory=list)
    budget_spent: list = field(default_factory=list)

    def record(self, t, predicted, actual, queried, gmean, pmauc, budget_spent):
        if self.t and t <= self.t[-1]:
            raise ConfigurationError("time steps must be strictly increasing")
        self.t.append(int(t))
        self.predicted.append(predicted)
        self.actual.append(actual)
        self.queried.append(bool(queried))
        self.gmean.append(float(gmean))
        self.pmauc.append(float(pmauc))
        self.budget_spent.append(float(budget_spent))

    def __len__(self):
        return len(self.t)

    def column(self, name):
        return np.asarray(getattr(self, name))

    def query_fraction(self):
        return float(np.mean(self.queried)) if self.queried else 0.0

    def at(self, t):
        """Index of step ``t`` in the log."""
        idx = int(np.searchsorted(self.t, t))
        if idx >= len(self.t) or self.t[idx] != t:
            raise KeyError(t)
        return idx


def aggregate_runs(logs, metrics=METRICS):
    """Element-wise mean and population standard deviation across runs.

    Returns ``{metric: (mean, std)}`` with arrays of the common run length.
    """
    logs = list(logs)
    if not logs:
        raise AggregationError("no runs to aggregate")
    n = len(logs[0])
    if any(len(log) != n for log in logs):
        raise AggregationError(f"run lengths differ: {sorted({len(g) for g in logs})}")
    out = {}
    for name in metrics:
        M = np.vstack([log.column(name) for log in logs]).astype(np.float64)
        out[name] = (M.mean(axis=0), M.std(axis=0))
    return out
