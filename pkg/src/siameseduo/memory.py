"""Class-partitioned FIFO memory and balanced pair creation.

Class labels here are 0-based queue indices; estimators translate their
``classes_`` into these indices before touching the memory.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class LabelledExample:
    features: np.ndarray
    label: int


class MultiMemory:
    """``n_classes`` bounded FIFO queues, one per class.

    Index 0 of a queue is the oldest stored example, the last index the most
    recent one. Appending to a full queue evicts its oldest element.
    """

    def __init__(self, n_classes, capacity):
        if n_classes < 2:
            raise ConfigurationError("need at least two classes")
        if capacity < 1:
            raise ConfigurationError("queue capacity must be >= 1")
        self.n_classes = int(n_classes)
        self.capacity = int(capacity)
        self.queues = [deque(maxlen=self.capacity) for _ in range(self.n_classes)]

    def _check_label(self, label):
        if not 0 <= label < self.n_classes:
            raise ConfigurationError(
                f"label {label} outside [0, {self.n_classes - 1}]"
            )

    def append(self, features, label):
        label = int(label)
        self._check_label(label)
        features = np.asarray(features, dtype=np.float64).ravel()
        if not np.isfinite(features).all():
            raise ConfigurationError("cannot store non-finite features")
        self.queues[label].append(features)
        return self

    def __len__(self):
        return sum(len(q) for q in self.queues)

    def lengths(self):
        return [len(q) for q in self.queues]

    def examples(self, label):
        return [LabelledExample(x, label) for x in self.queues[label]]

    def as_arrays(self):
        """Stacked ``(X, labels)`` in class order, FIFO order within a class."""
        rows = [x for q in self.queues for x in q]
        labels = np.repeat(np.arange(self.n_classes), self.lengths())
        if not rows:
            return np.empty((0, 0)), labels
        return np.vstack(rows), labels


def init_memory(n_classes, capacity, seed_data=()):
    """Build a memory pre-filled with labelled seed examples in arrival order.

    ``seed_data`` is an iterable of :class:`LabelledExample` or
    ``(features, label)`` pairs.
    """
    memory = MultiMemory(n_classes, capacity)
    for item in seed_data:
        if isinstance(item, LabelledExample):
            memory.append(item.features, item.label)
        else:
            memory.append(*item)
    return memory


@dataclass
class PairSet:
    """Pairs as row indices into a shared example array.

    ``left[k]`` and ``right[k]`` index rows of ``data``; ``same[k]`` is 1 when
    both rows carry the same class.
    """

    data: np.ndarray
    labels: np.ndarray
    left: np.ndarray
    right: np.ndarray
    same: np.ndarray

    def __len__(self):
        return len(self.same)

    @property
    def n_positive(self):
        return int(self.same.sum())

    @property
    def n_negative(self):
        return len(self) - self.n_positive

    def arrays(self):
        """Materialise ``(A, B, y)`` with ``y`` shaped ``(n, 1)``."""
        return (self.data[self.left], self.data[self.right],
                self.same.astype(np.float64)[:, None])


def _empty_pairs(data, labels):
    e = np.empty(0, dtype=np.intp)
    return PairSet(data, labels, e, e, np.empty(0, dtype=np.int8))


def make_pairs(data, labels, rng, max_positives=None):
    """Balanced pair set over rows of ``data`` grouped by ``labels``.

    Positives are every unordered within-class pair (no self-pairs); when
    ``max_positives`` is set and exceeded, that many are drawn uniformly
    without replacement. Negatives are drawn uniformly without replacement
    from all cross-class pairs to match the positive count, falling back to
    sampling with replacement if there are fewer cross-class pairs than
    positives. Returns an empty set when no positive or no negative pair can
    be formed.
    """
    data = np.asarray(data, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    if len(data) < 2:
        return _empty_pairs(data, labels)

    order = np.argsort(labels, kind="stable")
    classes, starts, counts = np.unique(labels[order], return_index=True,
                                        return_counts=True)
    pos_left, pos_right = [], []
    for start, n in zip(starts, counts):
        if n >= 2:
            i, j = np.triu_indices(n, k=1)
            pos_left.append(order[start + i])
            pos_right.append(order[start + j])
    if not pos_left:
        return _empty_pairs(data, labels)
    pos_left = np.concatenate(pos_left)
    pos_right = np.concatenate(pos_right)
    if max_positives is not None and len(pos_left) > max_positives:
        keep = rng.choice(len(pos_left), size=int(max_positives), replace=False)
        pos_left, pos_right = pos_left[keep], pos_right[keep]
    n_pos = len(pos_left)

    # cross-class pairs enumerated virtually: one block per class pair (a < b)
    block_a, block_b = np.triu_indices(len(classes), k=1)
    block_sizes = counts[block_a] * counts[block_b]
    n_cross = int(block_sizes.sum())
    if n_cross == 0:
        return _empty_pairs(data, labels)
    flat = rng.choice(n_cross, size=n_pos, replace=n_cross < n_pos)
    offsets = np.concatenate(([0], np.cumsum(block_sizes)))
    block = np.searchsorted(offsets, flat, side="right") - 1
    within = flat - offsets[block]
    na, nb = block_a[block], block_b[block]
    neg_left = order[starts[na] + within // counts[nb]]
    neg_right = order[starts[nb] + within % counts[nb]]

    left = np.concatenate((pos_left, neg_left))
    right = np.concatenate((pos_right, neg_right))
    same = np.concatenate((np.ones(n_pos, np.int8), np.zeros(n_pos, np.int8)))
    perm = rng.permutation(len(same))
    return PairSet(data, labels, left[perm], right[perm], same[perm])


def build_pairs(memory, rng, max_positives=None):
    """Balanced pair set from the current contents of a :class:`MultiMemory`."""
    data, labels = memory.as_arrays()
    return make_pairs(data, labels, rng, max_positives=max_positives)


class EncodingMemory:
    """Per-class latent encodings mirroring a :class:`MultiMemory`."""

    def __init__(self, per_class):
        self.per_class = [np.asarray(z, dtype=np.float64) for z in per_class]
        self._stacked = None

    @property
    def n_classes(self):
        return len(self.per_class)

    def lengths(self):
        return [len(z) for z in self.per_class]

    def __len__(self):
        return sum(self.lengths())

    def as_arrays(self):
        if self._stacked is None:
            nonempty = [z for z in self.per_class if len(z)]
            data = np.vstack(nonempty) if nonempty else np.empty((0, 0))
            labels = np.repeat(np.arange(self.n_classes), self.lengths())
            self._stacked = (data, labels)
        return self._stacked


def encode_all(memory, s1):
    """Encode every stored example with ``s1.encode`` (or a bare callable)."""
    encode = s1.encode if hasattr(s1, "encode") else s1
    data, _ = memory.as_arrays()
    if len(data) == 0:
        return EncodingMemory([np.empty((0, 0))] * memory.n_classes)
    Z = encode(data)
    bounds = np.cumsum([0] + memory.lengths())
    return EncodingMemory([Z[a:b] for a, b in zip(bounds[:-1], bounds[1:])])
