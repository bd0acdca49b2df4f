import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.metrics import adjusted_rand_score, silhouette_score

from meltline.cluster import (
    DTW,
    EUCLIDEAN,
    KSweepReport,
    Metric,
    ProfileVector,
    _assign,
    derive_seed,
    distance,
    fit_kmeans,
    knee_point,
    predict,
    quality_metrics,
    resample_profile,
    silhouette_from_distances,
    sweep_k,
)
from meltline.errors import AllIdentical, DegenerateSegment, LengthMismatch, SingleCluster, TooFewProfiles
from meltline.synth import template_profiles

from helpers import make_segment
from oracles import silhouette_by_hand

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def profiles(X):
    return [ProfileVector(i, x) for i, x in enumerate(X)]


# -- metric parsing ---------------------------------------------------------


@pytest.mark.parametrize("text,kind,band", [("euclidean", "euclidean", None), ("dtw", "dtw", None), ("dtw:5", "dtw", 5)])
def test_metric_parse(text, kind, band):
    m = Metric.parse(text)
    assert (m.kind, m.band) == (kind, band)
    assert Metric.parse(str(m)) == m


@pytest.mark.parametrize("text", ["manhattan", "dtw:-1", "dtw:x", "euclidean:3"])
def test_metric_parse_rejects(text):
    with pytest.raises(ValueError):
        Metric.parse(text)


# -- resampling --------------------------------------------------------------


def test_resample_linear_ramp():
    seg = make_segment(np.linspace(0, 3600, 361), np.linspace(600, 1500, 361))
    np.testing.assert_allclose(resample_profile(seg, 3).values, [600, 1050, 1500])


def test_resample_on_native_grid_is_identity():
    t = np.arange(0, 1280, 10.0)
    v = np.random.default_rng(0).normal(1000, 50, t.size)
    np.testing.assert_allclose(resample_profile(make_segment(t, v), 128).values, v, atol=1e-9)


def test_resample_picks_samples_of_quadratic():
    t = np.arange(0, 10.5, 0.5)
    out = resample_profile(make_segment(t, t**2), 11).values
    np.testing.assert_allclose(out, np.arange(11.0) ** 2, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.integers(2, 40), elements=finite), st.integers(2, 64))
def test_resample_keeps_endpoints_and_range(temps, length):
    seg = make_segment(np.arange(temps.size) * 10.0, temps)
    out = resample_profile(seg, length).values
    assert out.size == length
    assert out[0] == temps[0] and out[-1] == temps[-1]
    assert temps.min() - 1e-9 <= out.min() and out.max() <= temps.max() + 1e-9


def test_resample_znorm():
    seg = make_segment(np.arange(50) * 10.0, np.linspace(600, 1500, 50))
    out = resample_profile(seg, 32, znorm=True).values
    assert out.mean() == pytest.approx(0, abs=1e-12)
    assert out.std() == pytest.approx(1, rel=1e-12)


def test_resample_rejects_degenerate():
    with pytest.raises(DegenerateSegment):
        resample_profile(make_segment([5.0], [1000.0]), 8)
    with pytest.raises(DegenerateSegment):
        resample_profile(make_segment([5.0, 5.0], [1000.0, 1001.0]), 8)


# -- distances ---------------------------------------------------------------


def test_distance_examples():
    assert distance([0, 0], [3, 4]) == 5.0
    a = [1.0, 2.0, 3.0]
    assert distance(a, a, DTW) == 0.0
    assert distance(a, a, EUCLIDEAN) == 0.0
    with pytest.raises(LengthMismatch):
        distance([1, 2], [1, 2, 3])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10).flatmap(lambda n: st.tuples(*[arrays(float, n, elements=finite)] * 3)))
def test_euclidean_triangle_inequality(abc):
    a, b, c = abc
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-7


def test_dtw_not_above_euclidean_on_random_pairs():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 40))
        a, b = rng.normal(size=n), rng.normal(size=n)
        assert distance(a, b, DTW) <= distance(a, b, EUCLIDEAN) + 1e-12


# -- k-means -----------------------------------------------------------------


def test_two_constant_groups_split_exactly():
    X = np.array([[600.0] * 8, [600.0] * 8, [1500.0] * 8, [1500.0] * 8])
    for metric in ("euclidean", "dtw"):
        model = fit_kmeans(profiles(X), 2, metric, seed=0)
        assert model.labels[0] == model.labels[1] != model.labels[2] == model.labels[3]
        assert model.inertia == 0.0
        assert sorted(model.centroids[:, 0].tolist()) == [600.0, 1500.0]


def test_k1_centroid_is_mean():
    X = np.random.default_rng(2).normal(size=(10, 6))
    model = fit_kmeans(profiles(X), 1, "euclidean")
    np.testing.assert_allclose(model.centroids[0], X.mean(axis=0), atol=1e-12)
    assert model.inertia == pytest.approx(np.sum((X - X.mean(axis=0)) ** 2), rel=1e-12)
    with pytest.raises(SingleCluster) as err:
        quality_metrics(model, profiles(X))
    assert err.value.inertia == pytest.approx(model.inertia)
    assert err.value.distortion == pytest.approx(model.inertia / 10)


@pytest.mark.parametrize("metric", ["euclidean", "dtw"])
def test_template_recovery(metric):
    X, truth = template_profiles(20, 64, 0.01, seed=4)
    model = fit_kmeans(profiles(X), 3, metric, seed=1, n_init=3)
    assert adjusted_rand_score(truth, model.labels) >= 0.9
    assert model.sizes().sum() == 60
    assert model.assignments == {i: int(c) for i, c in enumerate(model.labels)}


def test_fit_is_deterministic():
    X, _ = template_profiles(10, 32, 0.05, seed=1)
    a = fit_kmeans(profiles(X), 3, "euclidean", seed=9)
    b = fit_kmeans(profiles(X), 3, "euclidean", seed=9)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.centroids, b.centroids)
    assert a.inertia == b.inertia


def test_euclidean_inertia_trace_non_increasing():
    X = np.random.default_rng(3).normal(size=(80, 5))
    model = fit_kmeans(profiles(X), 4, "euclidean", n_init=1)
    trace = np.array(model.inertia_trace)
    assert np.all(np.diff(trace) <= 1e-9 * trace[0])


def test_dtw_final_inertia_not_above_first():
    X, _ = template_profiles(6, 32, 0.05, seed=2)
    model = fit_kmeans(profiles(X), 3, "dtw", n_init=1)
    assert model.inertia_trace[-1] <= model.inertia_trace[0] + 1e-9


def test_best_of_n_init_is_not_worse_than_single_run():
    X = np.random.default_rng(4).normal(size=(60, 4))
    single = fit_kmeans(profiles(X), 5, "euclidean", seed=3, n_init=1)
    multi = fit_kmeans(profiles(X), 5, "euclidean", seed=3, n_init=10)
    assert multi.inertia <= single.inertia


def test_empty_cluster_is_repaired():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.2, 5.0]])
    C = np.array([[0.0, 0.0], [5.0, 5.0], [100.0, 100.0]])
    labels, _ = _assign(X, C, EUCLIDEAN)
    assert set(labels.tolist()) == {0, 1, 2}


def test_fit_errors():
    X = np.random.default_rng(0).normal(size=(3, 4))
    with pytest.raises(TooFewProfiles):
        fit_kmeans(profiles(X), 4)
    with pytest.raises(TooFewProfiles):
        fit_kmeans([], 2)
    with pytest.raises(AllIdentical):
        fit_kmeans(profiles(np.ones((5, 4))), 2)
    with pytest.raises(LengthMismatch):
        fit_kmeans([ProfileVector(0, [1, 2]), ProfileVector(1, [1, 2, 3])], 1)


def test_predict_matches_training_labels():
    X, _ = template_profiles(10, 32, 0.01, seed=5)
    model = fit_kmeans(profiles(X), 3)
    np.testing.assert_array_equal(predict(model, profiles(X)), model.labels)


# -- quality -----------------------------------------------------------------


def test_silhouette_four_points_by_hand():
    pts = [0.0, 1.0, 10.0, 11.0]
    labels = [0, 0, 1, 1]
    D = np.abs(np.subtract.outer(pts, pts))
    expected = 359 / 399  # (19/21 + 17/19) / 2
    assert silhouette_from_distances(D, np.array(labels)) == pytest.approx(expected, abs=1e-12)
    assert silhouette_by_hand(pts, labels, lambda a, b: abs(a - b)) == pytest.approx(expected, abs=1e-12)


def test_silhouette_matches_sklearn():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(40, 3))
    labels = rng.integers(0, 4, 40)
    D = np.sqrt(np.sum((X[:, None] - X[None]) ** 2, axis=-1))
    assert silhouette_from_distances(D, labels) == pytest.approx(
        silhouette_score(D, labels, metric="precomputed"), abs=1e-12
    )


def test_perfect_split_silhouette_is_one():
    X = np.array([[600.0] * 4] * 3 + [[1500.0] * 4] * 3)
    model = fit_kmeans(profiles(X), 2)
    q = quality_metrics(model, profiles(X))
    assert q.silhouette == 1.0 and q.inertia == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_silhouette_in_range(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(12, 3))
    labels = np.arange(12) % 3
    D = np.sqrt(np.sum((X[:, None] - X[None]) ** 2, axis=-1))
    assert -1.0 <= silhouette_from_distances(D, labels) <= 1.0


def test_knee_point():
    assert knee_point([1, 2, 3, 4, 5], [100, 20, 15, 12, 10]) == 2
    assert knee_point([2, 3], [5, 4]) is None


# -- K sweep -----------------------------------------------------------------


def test_sweep_suggests_three_templates():
    X, _ = template_profiles(20, 128, 0.01, seed=0)
    report = sweep_k(profiles(X), (2, 8), "euclidean", seed=0)
    assert report.suggested_k == 3
    assert [e.k for e in report.entries] == list(range(2, 9))
    inertias = [e.inertia for e in report.entries]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(inertias, inertias[1:]))


def test_sweep_suggests_two_for_two_groups():
    X = np.vstack([np.full((5, 6), 600.0), np.full((5, 6), 1500.0)])
    X += np.random.default_rng(0).normal(0, 1, X.shape)
    assert sweep_k(X, (2, 4)).suggested_k == 2


def test_sweep_records_k_above_n():
    X = np.random.default_rng(1).normal(size=(4, 3))
    report = sweep_k(X, [2, 5])
    assert report.entries[1].error.startswith("TooFewProfiles")
    assert report.suggested_k == 2


def test_sweep_rejects_k_below_two():
    with pytest.raises(ValueError):
        sweep_k(np.eye(4), (1, 3))


def test_sweep_report_round_trip():
    X, _ = template_profiles(5, 16, 0.01, seed=0)
    report = sweep_k(X, (2, 4))
    assert KSweepReport.from_dict(report.to_dict()).to_json() == report.to_json()


def test_derive_seed_varies_with_k():
    assert derive_seed(0, 2) != derive_seed(0, 3)
    assert derive_seed(5, 2) == derive_seed(5, 2)
