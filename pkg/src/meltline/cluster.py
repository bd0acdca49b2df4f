"""Time-series K-means over fixed-length melt temperature profiles.

Profiles are compared with either Euclidean distance or DTW (optionally
Sakoe-Chiba banded). Under Euclidean the centroid update is the pointwise
mean; under DTW it is DTW barycenter averaging seeded from the previous
centroid.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from meltline import kernels
from meltline.errors import (
    AllIdentical,
    DegenerateSegment,
    LengthMismatch,
    MeltlineError,
    SingleCluster,
    TooFewProfiles,
)
from meltline.segment import MeltSegment

log = logging.getLogger(__name__)

DBA_ITERATIONS = 10
DEFAULT_PROFILE_LENGTH = 128


@dataclass(frozen=True)
class Metric:
    kind: str = "euclidean"
    band: int | None = None

    def __post_init__(self):
        if self.kind not in ("euclidean", "dtw"):
            raise ValueError(f"unknown metric {self.kind!r}")
        if self.kind == "euclidean" and self.band is not None:
            raise ValueError("band only applies to dtw")
        if self.band is not None and self.band < 0:
            raise ValueError("band must be non-negative")

    @classmethod
    def parse(cls, text: str | "Metric") -> "Metric":
        """``"euclidean"``, ``"dtw"`` or ``"dtw:<band>"``."""
        if isinstance(text, Metric):
            return text
        kind, _, band = str(text).strip().lower().partition(":")
        return cls(kind, int(band) if band else None)

    def __str__(self) -> str:
        if self.kind == "dtw" and self.band is not None:
            return f"dtw:{self.band}"
        return self.kind

    def pairwise_sq(self, X, Y=None) -> np.ndarray:
        if self.kind == "euclidean":
            return kernels.cdist_sq_euclidean(X, Y)
        return kernels.cdist_dtw_sq(X, Y, self.band)

    def sq(self, a, b) -> float:
        if self.kind == "euclidean":
            d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
            return float(d @ d)
        return kernels.dtw_sq(a, b, self.band)


EUCLIDEAN = Metric("euclidean")
DTW = Metric("dtw")


@dataclass(frozen=True)
class ProfileVector:
    melt_id: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("profile values must be a finite 1-D array")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def resample_profile(segment: MeltSegment, length: int = DEFAULT_PROFILE_LENGTH, znorm: bool = False) -> ProfileVector:
    """Linear interpolation of the melt temperature onto ``length`` equally
    spaced instants over [start_time, end_time]. The first and last samples
    are reproduced exactly."""
    if length < 2:
        raise ValueError("profile length must be at least 2")
    if segment.n_samples < 2 or not segment.duration_s > 0:
        raise DegenerateSegment(f"melt {segment.id}: zero duration or fewer than 2 samples")
    grid = np.linspace(segment.start_time, segment.end_time, length)
    values = np.interp(grid, segment.times, segment.temperatures)
    values[0] = segment.temperatures[0]
    values[-1] = segment.temperatures[-1]
    if znorm:
        sd = values.std()
        values = (values - values.mean()) / sd if sd > 0 else values - values.mean()
    return ProfileVector(segment.id, values)


def _values(p) -> np.ndarray:
    return p.values if isinstance(p, ProfileVector) else np.asarray(p, dtype=np.float64)


def distance(a, b, metric: Metric | str = EUCLIDEAN) -> float:
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"profile lengths differ: {a.size} vs {b.size}")
    return float(np.sqrt(Metric.parse(metric).sq(a, b)))


def _stack(profiles) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(profiles, np.ndarray):
        X = np.atleast_2d(np.asarray(profiles, dtype=np.float64))
        return np.arange(X.shape[0]), X
    profiles = list(profiles)
    if not profiles:
        raise TooFewProfiles("no profiles given")
    lengths = {len(p) for p in profiles}
    if len(lengths) != 1:
        raise LengthMismatch(f"profiles have differing lengths {sorted(lengths)}")
    ids = np.array([p.melt_id for p in profiles])
    return ids, np.vstack([p.values for p in profiles])


@dataclass
class ClusterModel:
    k: int
    metric: Metric
    centroids: np.ndarray
    labels: np.ndarray
    melt_ids: np.ndarray
    seed: int
    iterations_run: int
    converged: bool
    inertia: float
    inertia_trace: list = field(default_factory=list)

    @property
    def assignments(self) -> dict[int, int]:
        return {int(m): int(c) for m, c in zip(self.melt_ids, self.labels)}

    @property
    def centroid_profiles(self) -> list[ProfileVector]:
        return [ProfileVector(c, v) for c, v in enumerate(self.centroids)]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


def _kmeanspp(X, k, metric, rng) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = metric.pairwise_sq(X, X[chosen[-1]][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(free))
        chosen.append(idx)
        closest = np.minimum(closest, metric.pairwise_sq(X, X[idx][None, :])[:, 0])
    return X[chosen].copy()


def _assign(X, C, metric) -> tuple[np.ndarray, np.ndarray]:
    D = metric.pairwise_sq(X, C)
    labels = np.argmin(D, axis=1)
    k = C.shape[0]
    repaired = False
    for c in range(k):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k)
        own = D[np.arange(X.shape[0]), labels]
        own = np.where(sizes[labels] > 1, own, -np.inf)
        far = int(np.argmax(own))
        labels[far] = c
        C[c] = X[far]
        repaired = True
    if repaired:
        D = metric.pairwise_sq(X, C)
    inertia = float(D[np.arange(X.shape[0]), labels].sum())
    return labels, inertia


def _update(X, labels, C, metric) -> np.ndarray:
    new = np.empty_like(C)
    for c in range(C.shape[0]):
        members = X[labels == c]
        if metric.kind == "euclidean":
            new[c] = members.mean(axis=0)
        else:
            new[c] = kernels.dba(C[c], members, metric.band, DBA_ITERATIONS)
    return new


def _single_run(X, k, metric, rng, max_iter, tol):
    C = _kmeanspp(X, k, metric, rng)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        labels, inertia = _assign(X, C, metric)
        trace.append(inertia)
        new = _update(X, labels, C, metric)
        shift = max(np.sqrt(metric.sq(C[c], new[c])) for c in range(k))
        C = new
        if shift < tol:
            converged = True
            break
    labels, inertia = _assign(X, C, metric)
    trace.append(inertia)
    return labels, C, inertia, it, converged, trace


def fit_kmeans(
    profiles,
    k: int,
    metric: Metric | str = EUCLIDEAN,
    seed: int = 0,
    n_init: int = 10,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> ClusterModel:
    """Best-of-``n_init`` K-means with k-means++ seeding.

    Run ``r`` draws from ``np.random.default_rng([seed, r])``, so results
    depend only on the arguments. The run with the lowest final inertia wins
    (earliest run on ties).
    """
    metric = Metric.parse(metric)
    ids, X = _stack(profiles)
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if n_init < 1 or max_iter < 1 or not tol > 0:
        raise ValueError("n_init, max_iter and tol must be positive")
    if k > n:
        raise TooFewProfiles(f"k={k} exceeds the number of profiles ({n})")
    if k > 1 and np.all(X == X[0]):
        raise AllIdentical(f"all {n} profiles are identical; cannot form {k} clusters")

    best = None
    for run in range(n_init):
        rng = np.random.default_rng([seed, run])
        result = _single_run(X, k, metric, rng, max_iter, tol)
        if best is None or result[2] < best[2]:
            best = result
    labels, C, inertia, it, converged, trace = best
    log.debug("k=%d metric=%s inertia=%.6g iterations=%d", k, metric, inertia, it)
    return ClusterModel(
        k=k,
        metric=metric,
        centroids=C,
        labels=labels,
        melt_ids=ids,
        seed=seed,
        iterations_run=it,
        converged=converged,
        inertia=inertia,
        inertia_trace=trace,
    )


def predict(model: ClusterModel, profiles) -> np.ndarray:
    _, X = _stack(profiles)
    return np.argmin(model.metric.pairwise_sq(X, model.centroids), axis=1)


# ---------------------------------------------------------------------------
# quality


def silhouette_from_distances(D: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over points given a full distance matrix.

    Points in singleton clusters score 0.
    """
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise SingleCluster("silhouette needs at least two non-empty clusters")
    n = labels.size
    member = labels[None, :] == clusters[:, None]  # (c, n)
    counts = member.sum(axis=1)
    sums = D @ member.T.astype(float)  # (n, c): distance sum to each cluster
    own = np.searchsorted(clusters, labels)
    s = np.zeros(n)
    for i in range(n):
        ci = own[i]
        if counts[ci] == 1:
            continue
        a = sums[i, ci] / (counts[ci] - 1)
        others = np.delete(np.arange(clusters.size), ci)
        b = np.min(sums[i, others] / counts[others])
        m = max(a, b)
        s[i] = (b - a) / m if m > 0 else 0.0
    return float(s.mean())


@dataclass(frozen=True)
class QualityMetrics:
    inertia: float
    distortion: float
    silhouette: float


def inertia_distortion(model: ClusterModel, profiles) -> tuple[float, float]:
    _, X = _stack(profiles)
    D = model.metric.pairwise_sq(X, model.centroids)
    inertia = float(D[np.arange(X.shape[0]), model.labels].sum())
    return inertia, inertia / X.shape[0]


def quality_metrics(model: ClusterModel, profiles, distances: np.ndarray | None = None) -> QualityMetrics:
    """Inertia, distortion (inertia per profile) and mean silhouette.

    Raises ``SingleCluster`` when only one cluster is populated; the error
    carries the inertia and distortion.
    """
    inertia, distortion = inertia_distortion(model, profiles)
    if np.unique(model.labels).size < 2:
        raise SingleCluster("silhouette undefined for a single cluster", inertia, distortion)
    if distances is None:
        _, X = _stack(profiles)
        distances = np.sqrt(np.maximum(model.metric.pairwise_sq(X), 0.0))
    return QualityMetrics(inertia, distortion, silhouette_from_distances(distances, model.labels))


def knee_point(ks, values) -> int | None:
    """K at the largest gap between the curve and the chord joining its ends."""
    ks = np.asarray(ks, dtype=float)
    v = np.asarray(values, dtype=float)
    if ks.size < 3 or not np.all(np.isfinite(v)) or v[0] == v[-1]:
        return None
    x = (ks - ks[0]) / (ks[-1] - ks[0])
    y = (v - v[-1]) / (v[0] - v[-1])
    gap = (1.0 - x) - y
    return int(ks[int(np.argmax(gap))])


@dataclass
class KSweepEntry:
    k: int
    inertia: float | None = None
    distortion: float | None = None
    silhouette: float | None = None
    error: str | None = None


@dataclass
class KSweepReport:
    entries: list
    suggested_k: int | None
    suggestion_rule: str = "max-silhouette"
    metric: str = "euclidean"
    inertia_knee: int | None = None
    distortion_knee: int | None = None

    @property
    def per_k(self) -> list[tuple]:
        return [(e.k, e.inertia, e.distortion, e.silhouette) for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "suggested_k": self.suggested_k,
            "suggestion_rule": self.suggestion_rule,
            "metric": self.metric,
            "inertia_knee": self.inertia_knee,
            "distortion_knee": self.distortion_knee,
            "per_k": [e.__dict__ for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KSweepReport":
        return cls(
            entries=[KSweepEntry(**e) for e in d["per_k"]],
            suggested_k=d["suggested_k"],
            suggestion_rule=d["suggestion_rule"],
            metric=d["metric"],
            inertia_knee=d.get("inertia_knee"),
            distortion_knee=d.get("distortion_knee"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def derive_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def sweep_k(
    profiles,
    k_range,
    metric: Metric | str = EUCLIDEAN,
    seed: int = 0,
    n_init: int = 10,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> KSweepReport:
    """Fit one model per K and suggest the K with the highest silhouette.

    ``k_range`` is an inclusive ``(k_min, k_max)`` pair or an iterable of K
    values. Fit failures are stored on the entry instead of aborting.
    """
    metric = Metric.parse(metric)
    if isinstance(k_range, tuple) and len(k_range) == 2:
        ks = list(range(k_range[0], k_range[1] + 1))
    else:
        ks = sorted(set(int(k) for k in k_range))
    if not ks or ks[0] < 2:
        raise ValueError("k_range must start at 2 or above")
    _, X = _stack(profiles)
    distances = np.sqrt(np.maximum(metric.pairwise_sq(X), 0.0))
    entries = []
    for k in ks:
        try:
            model = fit_kmeans(X, k, metric, derive_seed(seed, k), n_init, max_iter, tol)
            q = quality_metrics(model, X, distances)
            entries.append(KSweepEntry(k, q.inertia, q.distortion, q.silhouette))
        except MeltlineError as exc:
            entries.append(KSweepEntry(k, error=f"{exc.code}: {exc}"))
    suggested, best = None, -np.inf
    for e in entries:
        if e.silhouette is not None and e.silhouette > best:
            suggested, best = e.k, e.silhouette
    ok = [e for e in entries if e.error is None]
    return KSweepReport(
        entries=entries,
        suggested_k=suggested,
        metric=str(metric),
        inertia_knee=knee_point([e.k for e in ok], [e.inertia for e in ok]),
        distortion_knee=knee_point([e.k for e in ok], [e.distortion for e in ok]),
    )
