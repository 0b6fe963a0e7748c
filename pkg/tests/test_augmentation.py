import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from siameseduo.augmentation import (
    AugmentConfig,
    build_augmented,
    build_generated,
    class_stats,
    extrapolate,
    gauss_noise,
    interpolate,
    pairwise_distances,
)
from siameseduo.exceptions import ConfigurationError
from siameseduo.memory import EncodingMemory


def enc(*classes):
    return EncodingMemory([np.asarray(c, dtype=float).reshape(len(c), -1) for c in classes])


def test_class_stats_examples():
    mu, sigma = class_stats(enc([[3.0, 4.0]]), 0)
    np.testing.assert_array_equal(mu, [3, 4])
    np.testing.assert_array_equal(sigma, [0, 0])
    mu, sigma = class_stats(enc([[0, 0], [2, 4]]), 0)
    np.testing.assert_array_equal(mu, [1, 2])
    np.testing.assert_array_equal(sigma, [1, 2])


def test_class_stats_two_pass_reference(rng):
    Z = rng.normal(size=(10, 5))
    mu, sigma = class_stats(enc(Z), 0)
    ref_mu = [sum(Z[i, j] for i in range(10)) / 10 for j in range(5)]
    ref_sd = [np.sqrt(sum((Z[i, j] - ref_mu[j]) ** 2 for i in range(10)) / 10)
              for j in range(5)]
    np.testing.assert_allclose(mu, ref_mu, rtol=1e-12)
    np.testing.assert_allclose(sigma, ref_sd, rtol=1e-12)


def test_class_stats_empty_class():
    with pytest.raises(ConfigurationError):
        class_stats(EncodingMemory([np.zeros((0, 2)), np.ones((1, 2))]), 0)


def test_interpolate_examples():
    memory = enc([[0, 0], [2, 4], [-5, -5]])
    z = np.array([0.0, 0.0])
    # nearest by cosine to (0,0) is undefined; use euclidean for the worked example
    np.testing.assert_allclose(interpolate(z, 0, memory, 0.5, "euclidean", index=0), [1, 2])
    np.testing.assert_array_equal(interpolate(z, 0, memory, 0.0, "euclidean", index=0), z)
    np.testing.assert_allclose(interpolate(z, 0, memory, 1.0, "euclidean", index=0), [2, 4])


def test_interpolate_cosine_picks_angular_neighbour():
    memory = enc([[1, 0], [10, 1], [0.1, 1]])
    out = interpolate(np.array([1.0, 0.0]), 0, memory, 1.0, "cosine", index=0)
    np.testing.assert_array_equal(out, [10, 1])


def test_interpolate_singleton_returns_input():
    z = np.array([1.0, 2.0])
    np.testing.assert_array_equal(interpolate(z, 0, enc([z]), 0.7, index=0), z)


def test_extrapolate_examples():
    np.testing.assert_allclose(extrapolate(np.array([2.0]), 0, enc([[2.0], [0.0]]), 0.1),
                               [2.1])
    z = np.array([1.0, 1.0])
    np.testing.assert_array_equal(extrapolate(z, 0, enc([z]), 0.5), z)
    np.testing.assert_array_equal(extrapolate(z, 0, enc([[3, 3], [0, 1]]), 0.0), z)


def test_gauss_noise_zero_cases(rng):
    z = np.array([1.0, -1.0])
    np.testing.assert_array_equal(gauss_noise(z, 0, enc([[0, 0], [4, 4]]), 0.0, rng), z)
    np.testing.assert_array_equal(gauss_noise(z, 0, enc([z, z]), 0.3, rng), z)


def test_gauss_noise_statistics():
    rng = np.random.default_rng(0)
    memory = enc([[0.0, 0.0], [2.0, 6.0]])  # sigma = (1, 3)
    z = np.array([1.0, 1.0])
    draws = np.array([gauss_noise(z, 0, memory, 0.1, rng) for _ in range(100_000)])
    se = np.array([0.1, 0.3]) / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(0) - z) < 3 * se)
    np.testing.assert_allclose(draws.std(0), [0.1, 0.3], rtol=0.05)


def test_build_generated_counts(rng):
    memory = enc(*[rng.normal(size=(10, 4)) for _ in range(3)])
    assert len(build_generated(memory, AugmentConfig(counts=(0, 0, 0)), rng)) == 0
    assert len(build_generated(memory, AugmentConfig(counts=(3, 3, 3)), rng)) == 270
    nine = build_generated(memory, AugmentConfig(counts=(9, 0, 0)), rng)
    assert len(nine) == 9 * len(memory)
    assert len(build_augmented(memory, nine)) == 10 * len(memory)


def test_build_augmented_keeps_originals_first(rng):
    memory = enc(rng.normal(size=(4, 2)), rng.normal(size=(3, 2)))
    gen = build_generated(memory, AugmentConfig(), rng)
    aug = build_augmented(memory, gen)
    for c in range(2):
        np.testing.assert_array_equal(aug.per_class[c][:len(memory.per_class[c])],
                                      memory.per_class[c])
    empty = build_generated(memory, AugmentConfig(counts=(0, 0, 0)), rng)
    np.testing.assert_array_equal(build_augmented(memory, empty).as_arrays()[0],
                                  memory.as_arrays()[0])


def test_batched_interpolation_uses_nearest_neighbour(rng):
    Z = rng.normal(size=(6, 3))
    memory = enc(Z)
    cfg = AugmentConfig(counts=(1, 0, 0), beta1=0.3)
    gen = build_generated(memory, cfg, rng).per_class[0]
    for i in range(6):
        np.testing.assert_allclose(gen[i], interpolate(Z[i], 0, memory, 0.3, index=i))


def test_batched_extrapolation_matches_single(rng):
    Z = rng.normal(size=(5, 3))
    memory = enc(Z)
    gen = build_generated(memory, AugmentConfig(counts=(0, 2, 0), beta2=0.2), rng)
    ref = np.repeat([extrapolate(z, 0, memory, 0.2) for z in Z], 2, axis=0)
    np.testing.assert_allclose(gen.per_class[0], ref)


def test_zero_vector_cosine_distance():
    D = pairwise_distances(np.zeros((1, 2)), np.array([[1.0, 0.0]]))
    assert D[0, 0] == 1.0


def test_config_validation():
    with pytest.raises(ConfigurationError):
        AugmentConfig(counts=(1, 2))
    with pytest.raises(ConfigurationError):
        AugmentConfig(beta1=1.5)
    with pytest.raises(ConfigurationError):
        AugmentConfig(distance="manhattan")
    assert not AugmentConfig(counts=(0, 0, 0)).enabled


latent = st.integers(1, 5).flatmap(
    lambda m: st.lists(arrays(np.float64, st.tuples(st.integers(1, 6), st.just(m)),
                              elements=st.floats(-10, 10)), min_size=1, max_size=4))


@given(latent, st.integers(0, 2 ** 32 - 1))
@settings(max_examples=200, deadline=None)
def test_identities_and_sizes(per_class, seed):
    rng = np.random.default_rng(seed)
    memory = EncodingMemory(per_class)
    zero = AugmentConfig(beta1=0, beta2=0, beta3=0)
    gen = build_generated(memory, zero, rng)
    for Z, G in zip(memory.per_class, gen.per_class):
        # three blocks (one per transform), each repeating every source 3 times
        np.testing.assert_array_equal(G, np.tile(np.repeat(Z, 3, axis=0), (3, 1)))
    mixed = build_augmented(memory, build_generated(memory, AugmentConfig(), rng))
    assert len(mixed) == 10 * len(memory)
    for Z in memory.per_class:
        if len(Z) == 1:
            single = EncodingMemory([Z])
            out = build_generated(single, AugmentConfig(beta1=0.9, beta2=0.9, beta3=0.9),
                                  rng)
            np.testing.assert_array_equal(out.per_class[0], np.repeat(Z, 9, axis=0))


@given(arrays(np.float64, (5, 3), elements=st.floats(-5, 5)), st.floats(0, 1))
@settings(max_examples=100)
def test_interpolation_stays_on_segment(Z, beta):
    memory = EncodingMemory([Z])
    for i in range(len(Z)):
        a = interpolate(Z[i], 0, memory, beta, "euclidean", index=i)
        d = pairwise_distances(Z[i][None], np.delete(Z, i, 0), "euclidean")[0]
        eps = np.delete(Z, i, 0)[np.argmin(d)]
        lo, hi = np.minimum(Z[i], eps), np.maximum(Z[i], eps)
        assert np.all(a >= lo - 1e-12) and np.all(a <= hi + 1e-12)
