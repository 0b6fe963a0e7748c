"""Synthetic drifting streams (Sea, Circles, Blobs) and delimited-file ingestion.

The three generators are geometric reconstructions with every geometry
parameter exposed as a module constant or ``StreamSpec`` field:

* **Sea** -- ``x`` in [0, 15]^2, class = index of the band of ``x1 + x2``
  among ten equal-width bands of [0, 30].
* **Circles** -- ``x`` in [0, 15]^2, class = index of the annulus around
  (7.5, 7.5) among ten equal-width annuli reaching the square's corners.
* **Blobs** -- twelve isotropic Gaussian blobs in [0, 15]^3.

Drift is posterior-only: the drifted concept relabels regions with a fixed
derangement (the reversed class order), so p(x) never changes. Class labels
are 1-based (``1..K``). Sampling draws the class first (uniformly, or with the
multi-minority imbalance) and then a point uniformly inside that class's
region, so the per-region mass is the same under both concepts.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, IngestionError
from .memory import LabelledExample

SQUARE = 15.0
N_BANDS = 10
BAND_WIDTH = 2 * SQUARE / N_BANDS
CIRCLE_CENTER = np.array([7.5, 7.5])
N_RINGS = 10
MAX_RADIUS = np.hypot(7.5, 7.5)
RING_WIDTH = MAX_RADIUS / N_RINGS
BLOB_CENTERS = np.array([[x, y, z] for x in (2.5, 7.5, 12.5)
                         for y in (4.0, 11.0) for z in (4.0, 11.0)])
BLOB_SIGMA = 1.0

N_CLASSES = {"sea": N_BANDS, "circles": N_RINGS, "blobs": len(BLOB_CENTERS)}
N_FEATURES = {"sea": 2, "circles": 2, "blobs": 3}
CHUNK = 1000  # steps per independent random source

VARIANTS = {
    "original": dict(drift_times=(), imbalance_ratio=None),
    "abrupt": dict(drift_times=(3000,), imbalance_ratio=None),
    "imbalance": dict(drift_times=(), imbalance_ratio=0.001),
    "abrupt_imbalance": dict(drift_times=(3000,), imbalance_ratio=0.01),
    "recurrent": dict(drift_times=(3000, 6000, 9000, 12000), imbalance_ratio=None),
}


def drifted_map(n_classes):
    """Region -> label map of the drifted concept (0-based, a derangement)."""
    return np.arange(n_classes)[::-1].copy()


@dataclass
class StreamSpec:
    source: str = "sea"
    length: int = 18000
    drift_times: tuple = ()
    imbalance_ratio: float = None
    majority_class: int = 1
    seed: int = 0
    n_seed_per_class: int = 10
    blob_sigma: float = BLOB_SIGMA
    ring_width: float = RING_WIDTH
    path: str = None
    header: bool = None
    name: str = None

    def __post_init__(self):
        self.drift_times = tuple(int(t) for t in self.drift_times)
        if self.source not in (*N_CLASSES, "file"):
            raise ConfigurationError(f"unknown stream source {self.source!r}")
        if self.source == "file" and not self.path:
            raise ConfigurationError("file streams need a path")
        if any(b <= a for a, b in zip(self.drift_times, self.drift_times[1:])):
            raise ConfigurationError("drift_times must be strictly increasing")
        if self.length is not None and self.drift_times and \
                self.drift_times[-1] >= self.length:
            raise ConfigurationError("drift_times must be < length")
        if not 0 < self.ring_width < MAX_RADIUS / (N_RINGS - 1):
            # the outermost annulus must keep some area inside the square
            raise ConfigurationError(
                f"ring_width must lie in (0, {MAX_RADIUS / (N_RINGS - 1):.4f})")
        if self.blob_sigma < 0:
            raise ConfigurationError("blob_sigma must be >= 0")
        if self.imbalance_ratio is not None and not 0 < self.imbalance_ratio <= 1:
            raise ConfigurationError("imbalance_ratio must lie in (0, 1]")
        if self.name is None:
            self.name = Path(self.path).stem if self.source == "file" else self.source

    @property
    def n_classes(self):
        return N_CLASSES.get(self.source)

    @classmethod
    def variant(cls, source, variant="original", **kwargs):
        if variant not in VARIANTS:
            raise ConfigurationError(
                f"unknown variant {variant!r}; expected one of {sorted(VARIANTS)}"
            )
        return cls(source=source, **{**VARIANTS[variant], **kwargs})


def concept_at(spec, t):
    """0 for the original concept, 1 for the drifted one, at step ``t`` (1-based)."""
    return sum(1 for d in spec.drift_times if d <= t) % 2


# -- region geometry (0-based region indices) --------------------------------

def sea_region(X):
    X = np.atleast_2d(X)
    return np.minimum((X[:, 0] + X[:, 1]) // BAND_WIDTH, N_BANDS - 1).astype(np.intp)


def circles_region(X, ring_width=RING_WIDTH):
    """Annulus index by distance from the centre; the last one takes everything beyond."""
    X = np.atleast_2d(X)
    r = np.hypot(X[:, 0] - CIRCLE_CENTER[0], X[:, 1] - CIRCLE_CENTER[1])
    return np.minimum(r // ring_width, N_RINGS - 1).astype(np.intp)


def _region_box(source, region, ring_width=RING_WIDTH):
    """Bounding boxes ``(lo, hi)`` of the given regions, used for rejection sampling."""
    region = np.asarray(region)
    if source == "sea":
        lo = np.clip(region * BAND_WIDTH - SQUARE, 0, SQUARE)
        hi = np.clip((region + 1) * BAND_WIDTH, 0, SQUARE)
    else:
        reach = np.where(region == N_RINGS - 1, np.inf, (region + 1) * ring_width)
        lo = np.clip(CIRCLE_CENTER[0] - reach, 0, SQUARE)
        hi = np.clip(CIRCLE_CENTER[0] + reach, 0, SQUARE)
    return np.stack([lo, lo], 1), np.stack([hi, hi], 1)


def _sample_regions(source, regions, rng, ring_width=RING_WIDTH):
    """Uniform points inside each requested planar region."""
    if source == "sea":
        region_of = sea_region
    else:
        def region_of(X):
            return circles_region(X, ring_width)
    regions = np.asarray(regions, dtype=np.intp)
    out = np.empty((len(regions), 2))
    lo, hi = _region_box(source, regions, ring_width)
    todo = np.arange(len(regions))
    while len(todo):
        cand = lo[todo] + rng.random((len(todo), 2)) * (hi[todo] - lo[todo])
        ok = region_of(cand) == regions[todo]
        out[todo[ok]] = cand[ok]
        todo = todo[~ok]
    return out


def _label_from_region(region, concept, n_classes):
    return (drifted_map(n_classes)[region] if concept else region) + 1


def _region_from_label(label, concept, n_classes):
    idx = np.asarray(label) - 1
    # the drift map is an involution, so it is its own inverse
    return drifted_map(n_classes)[idx] if concept else idx


def sea_label(X, concept=0):
    return _label_from_region(sea_region(X), concept, N_BANDS)


def circles_label(X, concept=0, ring_width=RING_WIDTH):
    return _label_from_region(circles_region(X, ring_width), concept, N_RINGS)


def _planar_example(source, concept, rng, label):
    n_classes = N_CLASSES[source]
    if label is None:
        x = rng.random(2) * SQUARE
        label_fn = sea_label if source == "sea" else circles_label
        return LabelledExample(x, int(label_fn(x, concept)[0]))
    region = _region_from_label([label], concept, n_classes)
    return LabelledExample(_sample_regions(source, region, rng)[0], int(label))


def gen_sea(concept, rng, label=None):
    """One Sea example; uniform on the square, or uniform in ``label``'s band."""
    return _planar_example("sea", concept, rng, label)


def gen_circles(concept, rng, label=None):
    """One Circles example; uniform on the square, or uniform in ``label``'s annulus."""
    return _planar_example("circles", concept, rng, label)


def gen_blobs(concept, rng, label=None, sigma=BLOB_SIGMA):
    """One Blobs example around the centre assigned to ``label`` under ``concept``."""
    if label is None:
        label = int(rng.integers(1, len(BLOB_CENTERS) + 1))
    center = BLOB_CENTERS[_region_from_label([label], concept, len(BLOB_CENTERS))[0]]
    return LabelledExample(center + sigma * rng.standard_normal(3), int(label))


def class_probabilities(n_classes, imbalance_ratio=None, majority_class=1):
    if imbalance_ratio is None:
        return np.full(n_classes, 1.0 / n_classes)
    if (n_classes - 1) * imbalance_ratio >= 1:
        raise ConfigurationError(
            f"imbalance ratio {imbalance_ratio} leaves no mass for the majority class"
        )
    if not 1 <= majority_class <= n_classes:
        raise ConfigurationError(f"majority_class {majority_class} out of range")
    p = np.full(n_classes, float(imbalance_ratio))
    p[majority_class - 1] = 1.0 - (n_classes - 1) * imbalance_ratio
    return p


def apply_imbalance(spec, rng, size=None):
    """Draw class label(s): minorities with probability ``imbalance_ratio`` each."""
    p = class_probabilities(spec.n_classes, spec.imbalance_ratio, spec.majority_class)
    labels = rng.choice(len(p), size=size, p=p) + 1
    return labels if size is not None else int(labels)


def _features_for(spec, labels, concepts, rng):
    n_features = N_FEATURES[spec.source]
    X = np.empty((len(labels), n_features))
    for concept in (0, 1):
        sel = np.flatnonzero(concepts == concept)
        if not len(sel):
            continue
        regions = _region_from_label(labels[sel], concept, spec.n_classes)
        if spec.source == "blobs":
            X[sel] = BLOB_CENTERS[regions] + \
                spec.blob_sigma * rng.standard_normal((len(sel), n_features))
        else:
            X[sel] = _sample_regions(spec.source, regions, rng, spec.ring_width)
    return X


@dataclass
class Stream:
    """A materialised stream plus its initial labelled set (not part of the stream)."""

    X_seed: np.ndarray
    y_seed: np.ndarray
    X: np.ndarray
    y: np.ndarray
    classes: np.ndarray
    concepts: np.ndarray = field(default=None)
    name: str = ""

    def __len__(self):
        return len(self.y)

    def __iter__(self):
        return zip(self.X, self.y)


def _chunk_rng(seed, k):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def make_stream(spec):
    """Generate (or load) the seed set and the evaluated stream for ``spec``."""
    if spec.source == "file":
        return _file_stream(spec)
    K = spec.n_classes
    y_seed = np.repeat(np.arange(1, K + 1), spec.n_seed_per_class)
    X_seed = _features_for(spec, y_seed, np.zeros(len(y_seed), np.intp),
                           _chunk_rng(spec.seed, 0))
    t = np.arange(1, spec.length + 1)
    concepts = (np.searchsorted(np.asarray(spec.drift_times, dtype=np.intp), t,
                                side="right") % 2)
    # each chunk has its own random source, so a shorter stream is a prefix of
    # a longer one with the same seed
    n_chunks = -(-spec.length // CHUNK)
    padded = np.concatenate((concepts, np.full(n_chunks * CHUNK - spec.length,
                                               concepts[-1])))
    ys, Xs = [], []
    for k in range(n_chunks):
        # whole chunks are always drawn, then the tail is cut
        rng = _chunk_rng(spec.seed, k + 1)
        y_k = apply_imbalance(spec, rng, size=CHUNK)
        ys.append(y_k)
        Xs.append(_features_for(spec, y_k, padded[k * CHUNK:(k + 1) * CHUNK], rng))
    y = np.concatenate(ys)[:spec.length]
    X = np.vstack(Xs)[:spec.length]
    return Stream(X_seed, y_seed, X, y, np.arange(1, K + 1), concepts, spec.name)


def _file_stream(spec):
    X_all, y_all = load_delimited(spec.path, header=spec.header)
    classes = np.unique(y_all)
    seed_idx = []
    for c in classes:
        seed_idx.extend(np.flatnonzero(y_all == c)[:spec.n_seed_per_class])
    seed_idx = np.sort(np.asarray(seed_idx, dtype=np.intp))
    rest = np.setdiff1d(np.arange(len(y_all)), seed_idx)
    if spec.length is not None:
        rest = rest[:spec.length]
    if len(rest) == 0:
        raise IngestionError(f"{spec.path}: no examples left after the initial "
                             f"{spec.n_seed_per_class} per class")
    return Stream(X_all[seed_idx], y_all[seed_idx], X_all[rest], y_all[rest], classes,
                  np.zeros(len(rest), np.intp), spec.name)


# -- delimited files ----------------------------------------------------------

def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_delimited(path, header=None, n_features=None, n_classes=None):
    """Read ``feature_1, ..., feature_d, label`` rows in file order.

    Parameters
    ----------
    path : str or Path
    header : bool or None
        Skip the first line. ``None`` skips it only when it is not numeric.
    n_features : int, optional
        Expected feature count; inferred from the first data row otherwise.
    n_classes : int, optional
        Maximum number of distinct labels allowed.

    Returns
    -------
    X : ndarray of shape (n, d)
    y : ndarray of shape (n,)
        Labels remapped densely to ``1..K`` in sorted order of the raw labels.
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"{path}: no such file")
    rows, raw_labels = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if lineno == 1 and (header or (header is None and
                                           not all(_is_number(c) for c in row))):
                continue
            if n_features is None:
                n_features = len(row) - 1
                if n_features < 1:
                    raise IngestionError("need at least one feature and a label", lineno)
            if len(row) != n_features + 1:
                raise IngestionError(
                    f"expected {n_features + 1} columns, found {len(row)}", lineno)
            try:
                rows.append([float(c) for c in row[:-1]])
            except ValueError:
                raise IngestionError("non-numeric feature", lineno) from None
            label = row[-1].strip()
            try:
                value = float(label)
            except ValueError:
                raise IngestionError(f"label {label!r} is not an integer", lineno) \
                    from None
            if not value.is_integer():
                raise IngestionError(f"label {label!r} is not an integer", lineno)
            raw_labels.append(int(value))
            if n_classes is not None and len(set(raw_labels)) > n_classes:
                raise IngestionError(
                    f"label {int(value)} exceeds the {n_classes} expected classes",
                    lineno)
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    X = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(X).all():
        raise IngestionError(f"{path}: non-finite feature values")
    _, y = np.unique(np.asarray(raw_labels), return_inverse=True)
    return X, y + 1


def iter_examples(X, y):
    for x, label in zip(X, y):
        yield LabelledExample(x, int(label))


def write_delimited(path, X, y, header=True):
    """Write rows as ``x1, ..., xd, label`` (the format :func:`load_delimited` reads)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"x{i + 1}" for i in range(X.shape[1])] + ["label"])
        for x, label in zip(X, y):
            writer.writerow([repr(float(v)) for v in x] + [int(label)])
    return path
