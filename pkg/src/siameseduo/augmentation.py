"""Latent-space augmentation: interpolation, extrapolation and Gaussian noise.

Generated vectors are only ever used to build training pairs for the second
network; they are rebuilt at every training event and never stored.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .memory import EncodingMemory

TRANSFORMS = ("interpolation", "extrapolation", "noise")


@dataclass
class AugmentConfig:
    beta1: float = 0.1
    beta2: float = 0.1
    beta3: float = 0.1
    counts: tuple = (3, 3, 3)
    distance: str = "cosine"

    def __post_init__(self):
        self.counts = tuple(int(c) for c in self.counts)
        if len(self.counts) != 3 or any(c < 0 for c in self.counts):
            raise ConfigurationError("counts needs three non-negative integers")
        for name in ("beta1", "beta2", "beta3"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if self.distance not in ("cosine", "euclidean"):
            raise ConfigurationError(f"unknown distance {self.distance!r}")

    @property
    def enabled(self):
        return sum(self.counts) > 0


def _class_array(enc_memory, c):
    Z = enc_memory.per_class[c]
    if len(Z) == 0:
        raise ConfigurationError(f"class {c} has no stored encodings")
    return Z


def class_stats(enc_memory, c):
    """Element-wise mean and population standard deviation of class ``c``."""
    Z = _class_array(enc_memory, c)
    return Z.mean(axis=0), Z.std(axis=0)


def pairwise_distances(A, B, metric="cosine"):
    if metric == "euclidean":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.sqrt(np.maximum(sq, 0.0))
    if metric == "cosine":
        na = np.linalg.norm(A, axis=1)
        nb = np.linalg.norm(B, axis=1)
        na[na == 0] = 1.0
        nb[nb == 0] = 1.0
        # a zero vector has similarity 0 (distance 1) to everything
        return 1.0 - (A @ B.T) / na[:, None] / nb[None, :]
    raise ConfigurationError(f"unknown distance {metric!r}")


def neighbour_order(Z, metric="cosine"):
    """For every row, the other rows of ``Z`` sorted nearest first."""
    D = pairwise_distances(Z, Z, metric)
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :len(Z) - 1]


def interpolate(z, c, enc_memory, beta1, distance="cosine", index=None):
    """Step ``beta1`` of the way from ``z`` towards its nearest class-``c`` neighbour.

    ``index`` is ``z``'s own slot in the class queue, which is excluded from
    the neighbour search. With no other candidate the output equals ``z``.
    """
    Z = _class_array(enc_memory, c)
    z = np.asarray(z, dtype=np.float64)
    candidates = np.arange(len(Z))
    if index is not None:
        candidates = candidates[candidates != index]
    if len(candidates) == 0:
        return z.copy()
    d = pairwise_distances(z[None, :], Z[candidates], distance)[0]
    eps = Z[candidates[np.argmin(d)]]
    return z + beta1 * (eps - z)


def extrapolate(z, c, enc_memory, beta2):
    """Push ``z`` away from the class mean by a factor ``beta2``."""
    mu, _ = class_stats(enc_memory, c)
    z = np.asarray(z, dtype=np.float64)
    return z + beta2 * (z - mu)


def gauss_noise(z, c, enc_memory, beta3, rng):
    """Add ``beta3`` times N(0, diag(sigma_c^2)) noise."""
    _, sigma = class_stats(enc_memory, c)
    z = np.asarray(z, dtype=np.float64)
    return z + beta3 * sigma * rng.standard_normal(z.shape)


def _generate_class(Z, config, rng):
    n, _ = Z.shape
    n_interp, n_extra, n_noise = config.counts
    out = []
    if n_interp:
        if n == 1:
            out.append(np.repeat(Z, n_interp, axis=0))
        else:
            # copy j of a source uses its (j mod n-1)-th nearest neighbour
            order = neighbour_order(Z, config.distance)
            cols = np.arange(n_interp) % (n - 1)
            eps = Z[order[:, cols]]                      # (n, n_interp, m)
            out.append((Z[:, None, :] + config.beta1 * (eps - Z[:, None, :]))
                       .reshape(-1, Z.shape[1]))
    if n_extra:
        mu = Z.mean(axis=0)
        a = Z + config.beta2 * (Z - mu)
        out.append(np.repeat(a, n_extra, axis=0))
    if n_noise:
        sigma = Z.std(axis=0)
        eta = rng.standard_normal((n, n_noise, Z.shape[1])) * sigma
        out.append((Z[:, None, :] + config.beta3 * eta).reshape(-1, Z.shape[1]))
    return np.vstack(out) if out else np.empty((0, Z.shape[1]))


def build_generated(enc_memory, config, rng):
    """Generated latent vectors per class, ``sum(config.counts)`` per original."""
    per_class = []
    for Z in enc_memory.per_class:
        if len(Z) == 0:
            per_class.append(Z.reshape(0, -1) if Z.ndim == 2 else np.empty((0, 0)))
        else:
            per_class.append(_generate_class(Z, config, rng))
    return EncodingMemory(per_class)


def build_augmented(enc_memory, generated):
    """Per-class union of the original encodings followed by the generated ones."""
    per_class = []
    for Z, G in zip(enc_memory.per_class, generated.per_class):
        if len(G) == 0:
            per_class.append(Z)
        elif len(Z) == 0:
            per_class.append(G)
        else:
            per_class.append(np.vstack((Z, G)))
    return EncodingMemory(per_class)
