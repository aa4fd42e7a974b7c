import numpy as np
import pytest

from eigenflow.rng import SplitMix64, derive_seed


def test_same_seed_identical_stream():
    assert np.array_equal(SplitMix64(42).normal(64), SplitMix64(42).normal(64))
    assert np.array_equal(SplitMix64(42).uniform(64), SplitMix64(42).uniform(64))


def test_different_seeds_differ():
    assert not np.array_equal(SplitMix64(1).uniform(16), SplitMix64(2).uniform(16))


def test_stream_is_resumable_counter():
    r = SplitMix64(7)
    first = r.uniform(3)
    second = r.uniform(5)
    assert np.array_equal(np.concatenate([first, second]), SplitMix64(7).uniform(8))


def test_uniform_range_and_moments():
    u = SplitMix64(5).uniform(200000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert u.mean() == pytest.approx(0.5, abs=0.01)


def test_normal_moments():
    g = SplitMix64(9).normal(200000)
    assert g.mean() == pytest.approx(0.0, abs=0.01)
    assert g.std() == pytest.approx(1.0, abs=0.01)
    assert np.all(np.isfinite(g))


def test_known_reference_outputs():
    # frozen reference values pin the documented stream across platforms
    raw = SplitMix64(0).uint64(3)
    assert list(raw) == [16294208416658607535, 7960286522194355700, 487617019471545679]


def test_derive_seed_stable_and_distinct():
    assert derive_seed(7, 0) == derive_seed(7, 0)
    assert derive_seed(7, 0) != derive_seed(7, 1)
    assert derive_seed(7, 0) != derive_seed(8, 0)
