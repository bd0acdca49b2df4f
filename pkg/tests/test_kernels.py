import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from meltline import kernels
from meltline._accel import NUMBA_AVAILABLE

from oracles import all_warping_paths, brute_force_dtw

IMPLS = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_path_enumeration_counts_delannoy_numbers():
    # central Delannoy numbers 1, 3, 13, 63, 321
    assert [sum(1 for _ in all_warping_paths(n, n)) for n in range(1, 6)] == [1, 3, 13, 63, 321]


@pytest.mark.parametrize("impl", IMPLS)
def test_dtw_matches_exhaustive_paths(impl):
    rng = np.random.default_rng(8)
    for _ in range(50):
        n, m = rng.integers(1, 7, size=2)
        a, b = rng.normal(size=n), rng.normal(size=m)
        got = math.sqrt(kernels.dtw_sq(a, b, impl=impl))
        assert got == pytest.approx(brute_force_dtw(a, b), abs=1e-12)


@pytest.mark.parametrize("impl", IMPLS)
@pytest.mark.parametrize("band", [0, 1, 2])
def test_banded_dtw_matches_exhaustive_paths(impl, band):
    rng = np.random.default_rng(band)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        a, b = rng.normal(size=n), rng.normal(size=n)
        got = math.sqrt(kernels.dtw_sq(a, b, band, impl=impl))
        assert got == pytest.approx(brute_force_dtw(a, b, band), abs=1e-12)


def test_resampled_example_pair():
    a = np.interp(np.linspace(0, 2, 4), [0, 1, 2], [0.0, 1.0, 2.0])
    b = np.array([0.0, 0.0, 1.0, 2.0])
    assert math.sqrt(kernels.dtw_sq(a, b)) == pytest.approx(brute_force_dtw(a, b), abs=1e-12)


def test_band_zero_is_euclidean():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=30), rng.normal(size=30)
    assert kernels.dtw_sq(a, b, 0) == pytest.approx(np.sum((a - b) ** 2), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12).flatmap(lambda n: st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite))))
def test_dtw_bounded_by_euclidean(pair):
    a, b = pair
    assert kernels.dtw_sq(a, b) <= np.sum((a - b) ** 2) + 1e-9


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(1, 10), elements=finite), arrays(float, st.integers(1, 10), elements=finite))
def test_dtw_symmetric_and_zero_on_self(a, b):
    assert kernels.dtw_sq(a, b) == pytest.approx(kernels.dtw_sq(b, a), rel=1e-12, abs=1e-9)
    assert kernels.dtw_sq(a, a) == 0.0


@pytest.mark.parametrize("impl", IMPLS)
def test_path_is_valid_and_attains_cost(impl):
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=9), rng.normal(size=7)
    path = kernels.dtw_path(a, b, impl=impl)
    assert tuple(path[0]) == (0, 0) and tuple(path[-1]) == (8, 6)
    steps = np.diff(path, axis=0)
    assert all(tuple(s) in {(1, 0), (0, 1), (1, 1)} for s in steps)
    cost = sum((a[i] - b[j]) ** 2 for i, j in path)
    assert cost == pytest.approx(kernels.dtw_sq(a, b), rel=1e-12)


@pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")
@pytest.mark.parametrize("band", [None, 0, 3])
def test_backends_agree_bit_for_bit(band):
    rng = np.random.default_rng(5)
    X = np.cumsum(rng.normal(size=(7, 25)), axis=1)
    Y = X[:3, :20]
    for args in ((X,), (X, X[:4])):
        np.testing.assert_array_equal(
            kernels.cdist_dtw_sq(*args, band=band, impl="numba"),
            kernels.cdist_dtw_sq(*args, band=band, impl="numpy"),
        )
    np.testing.assert_array_equal(kernels.dba(X[0], X, band, impl="numba"), kernels.dba(X[0], X, band, impl="numpy"))
    for a, b in ((X[0], X[1]), (X[2], Y[0])):
        np.testing.assert_array_equal(kernels.dtw_path(a, b, band, impl="numba"), kernels.dtw_path(a, b, band, impl="numpy"))
        assert kernels.dtw_sq(a, b, band, impl="numba") == kernels.dtw_sq(a, b, band, impl="numpy")


def test_numpy_batches_split_consistently(monkeypatch):
    rng = np.random.default_rng(12)
    X = rng.normal(size=(9, 16))
    whole = kernels.cdist_dtw_sq(X, impl="numpy")
    centroid = kernels.dba(X[0], X, impl="numpy")
    monkeypatch.setattr(kernels, "_BATCH_CELLS", 1)
    np.testing.assert_array_equal(kernels.cdist_dtw_sq(X, impl="numpy"), whole)
    np.testing.assert_array_equal(kernels.dba(X[0], X, impl="numpy"), centroid)


def test_cdist_matches_pairwise_calls():
    rng = np.random.default_rng(6)
    X, Y = rng.normal(size=(4, 10)), rng.normal(size=(3, 10))
    D = kernels.cdist_dtw_sq(X, Y)
    for i in range(4):
        for j in range(3):
            assert D[i, j] == pytest.approx(kernels.dtw_sq(X[i], Y[j]), rel=1e-12)
    S = kernels.cdist_dtw_sq(X)
    np.testing.assert_array_equal(S, S.T)
    assert np.all(np.diag(S) == 0)


def test_sq_euclidean_cdist():
    rng = np.random.default_rng(7)
    X, Y = rng.normal(size=(5, 4)), rng.normal(size=(2, 4))
    expected = np.array([[np.sum((x - y) ** 2) for y in Y] for x in X])
    np.testing.assert_allclose(kernels.cdist_sq_euclidean(X, Y), expected, rtol=1e-12)


def test_dba_of_identical_members_is_that_member():
    x = np.sin(np.linspace(0, 3, 20))
    out = kernels.dba(np.zeros(20), np.vstack([x, x, x]))
    np.testing.assert_allclose(out, x, atol=1e-12)


def test_dba_does_not_increase_within_cluster_cost():
    rng = np.random.default_rng(9)
    members = np.cumsum(rng.normal(size=(8, 30)), axis=1)
    start = members.mean(axis=0)
    before = sum(kernels.dtw_sq(start, m) for m in members)
    after = sum(kernels.dtw_sq(kernels.dba(start, members), m) for m in members)
    assert after <= before + 1e-9


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.backend("fortran")


@pytest.mark.parametrize("value,expected", [("1", "numpy"), ("true", "numpy"), ("0", None), ("", None)])
def test_env_flag_selects_backend(value, expected):
    import os
    import subprocess
    import sys

    env = dict(os.environ, MELTLINE_NO_NUMBA=value)
    out = subprocess.run(
        [sys.executable, "-c", "from meltline._accel import backend_name; print(backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    ).stdout.strip()
    assert out == (expected or ("numba" if NUMBA_AVAILABLE else "numpy"))


@pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")
def test_dtw_kmeans_identical_on_both_backends(monkeypatch):
    from meltline.cluster import fit_kmeans
    from meltline.synth import template_profiles

    X, _ = template_profiles(5, 24, 0.02, seed=3)
    models = {}
    for use in (True, False):
        monkeypatch.setattr(kernels, "USE_NUMBA", use)
        models[use] = fit_kmeans(X, 3, "dtw", seed=2, n_init=2)
    np.testing.assert_array_equal(models[True].centroids, models[False].centroids)
    np.testing.assert_array_equal(models[True].labels, models[False].labels)
    assert models[True].inertia_trace == models[False].inertia_trace
