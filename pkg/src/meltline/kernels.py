"""Hot numeric kernels: DTW cost accumulation, warping paths, DBA updates.

Every kernel has two implementations with identical floating-point semantics:

* a scalar-loop version compiled with ``numba.njit``;
* a pure-numpy version that runs the DTW recursion as an anti-diagonal
  wavefront over a batch of pairs and scatters DBA sums with ``np.add.at``.

The module-level functions dispatch on :data:`meltline._accel.USE_NUMBA`.
Both sets are importable explicitly through :func:`backend` so tests and the
benchmark can compare them.

Band convention: ``band`` is the Sakoe-Chiba half-width, cells with
``|i - j| > band`` are excluded. ``None`` (or a negative value inside the
kernels) disables the constraint. For unequal lengths the band is widened to
``|n - m|`` so that the end cell stays reachable.
"""

from types import SimpleNamespace

import numpy as np

from meltline._accel import USE_NUMBA, njit


def _band_arg(band, n, m):
    if band is None:
        return -1
    band = int(band)
    if band < 0:
        raise ValueError("band must be non-negative or None")
    return max(band, abs(n - m))


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------


@njit(cache=False)
def _dtw_sq_nb(a, b, band):
    n = a.shape[0]
    m = b.shape[0]
    prev = np.full(m + 1, np.inf)
    curr = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        curr[:] = np.inf
        lo = 1
        hi = m
        if band >= 0:
            lo = max(1, i - band)
            hi = min(m, i + band)
        for j in range(lo, hi + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if curr[j - 1] < best:
                best = curr[j - 1]
            d = a[i - 1] - b[j - 1]
            curr[j] = d * d + best
        prev, curr = curr, prev
    return prev[m]


@njit(cache=False)
def _dtw_matrix_nb(a, b, band):
    n = a.shape[0]
    m = b.shape[0]
    D = np.full((n + 1, m + 1), np.inf)
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        lo = 1
        hi = m
        if band >= 0:
            lo = max(1, i - band)
            hi = min(m, i + band)
        for j in range(lo, hi + 1):
            best = D[i - 1, j - 1]
            if D[i - 1, j] < best:
                best = D[i - 1, j]
            if D[i, j - 1] < best:
                best = D[i, j - 1]
            d = a[i - 1] - b[j - 1]
            D[i, j] = d * d + best
    return D


@njit(cache=False)
def _backtrack_nb(D):
    n = D.shape[0] - 1
    m = D.shape[1] - 1
    path = np.empty((n + m, 2), dtype=np.int64)
    i = n
    j = m
    k = 0
    while True:
        path[k, 0] = i - 1
        path[k, 1] = j - 1
        k += 1
        if i == 1 and j == 1:
            break
        diag = D[i - 1, j - 1]
        up = D[i - 1, j]
        left = D[i, j - 1]
        if diag <= up and diag <= left:
            i -= 1
            j -= 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
    return path[:k][::-1].copy()


@njit(cache=False)
def _cdist_dtw_sq_nb(X, Y, band, symmetric):
    nx = X.shape[0]
    ny = Y.shape[0]
    out = np.zeros((nx, ny))
    for p in range(nx):
        q0 = p + 1 if symmetric else 0
        for q in range(q0, ny):
            out[p, q] = _dtw_sq_nb(X[p], Y[q], band)
            if symmetric:
                out[q, p] = out[p, q]
    return out


@njit(cache=False)
def _dba_nb(centroid, members, band, n_iter):
    L = centroid.shape[0]
    c = centroid.copy()
    sums = np.zeros(L)
    counts = np.zeros(L)
    for _ in range(n_iter):
        sums[:] = 0.0
        counts[:] = 0.0
        for r in range(members.shape[0]):
            path = _backtrack_nb(_dtw_matrix_nb(c, members[r], band))
            for k in range(path.shape[0]):
                sums[path[k, 0]] += members[r, path[k, 1]]
                counts[path[k, 0]] += 1.0
        c = sums / counts
    return c


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------


# Batched over pairs: the Python loop runs once per anti-diagonal, not once
# per cell, and each step handles every pair of the batch at once.
_BATCH_CELLS = 1 << 22


def _dtw_matrices_np(A, B, band):
    """Accumulated cost matrices for the row pairs ``(A[p], B[p])``."""
    P, n = A.shape
    m = B.shape[1]
    diff = A[:, :, None] - B[:, None, :]
    cost = diff * diff
    D = np.full((P, n + 1, m + 1), np.inf)
    D[:, 0, 0] = 0.0
    for s in range(2, n + m + 1):
        i = np.arange(max(1, s - m), min(n, s - 1) + 1)
        j = s - i
        if band >= 0:
            keep = np.abs(i - j) <= band
            i = i[keep]
            j = j[keep]
            if i.size == 0:
                continue
        best = np.minimum(np.minimum(D[:, i - 1, j - 1], D[:, i - 1, j]), D[:, i, j - 1])
        D[:, i, j] = cost[:, i - 1, j - 1] + best
    return D


def _chunks(n_pairs, n, m):
    step = max(1, _BATCH_CELLS // ((n + 1) * (m + 1)))
    for lo in range(0, n_pairs, step):
        yield slice(lo, min(n_pairs, lo + step))


def _dtw_matrix_np(a, b, band):
    return _dtw_matrices_np(a[None, :], b[None, :], band)[0]


def _dtw_sq_np(a, b, band):
    return float(_dtw_matrix_np(a, b, band)[-1, -1])


def _backtrack_many_np(D):
    """Warping paths of a batch of cost matrices.

    Returns ``(pair, step, i, j)`` arrays, one entry per path cell, where
    ``step`` counts from the end cell backwards.
    """
    P, n1, m1 = D.shape
    rows = np.arange(P)
    i = np.full(P, n1 - 1)
    j = np.full(P, m1 - 1)
    out_p, out_t, out_i, out_j = [], [], [], []
    t = 0
    while rows.size:
        out_p.append(rows)
        out_t.append(np.full(rows.size, t))
        out_i.append(i - 1)
        out_j.append(j - 1)
        active = (i > 1) | (j > 1)
        rows, i, j = rows[active], i[active], j[active]
        diag = D[rows, i - 1, j - 1]
        up = D[rows, i - 1, j]
        left = D[rows, i, j - 1]
        take_diag = (diag <= up) & (diag <= left)
        take_up = ~take_diag & (up <= left)
        i = i - (take_diag | take_up)
        j = j - (take_diag | ~take_up)
        t += 1
    return (np.concatenate(out_p), np.concatenate(out_t), np.concatenate(out_i), np.concatenate(out_j))


def _backtrack_np(D):
    _, t, i, j = _backtrack_many_np(D[None])
    order = np.argsort(-t)
    return np.stack([i[order], j[order]], axis=1).astype(np.int64)


def _cdist_dtw_sq_np(X, Y, band, symmetric):
    nx, ny = X.shape[0], Y.shape[0]
    if symmetric:
        p, q = np.triu_indices(nx, k=1)
    else:
        p, q = (g.ravel() for g in np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij"))
    out = np.zeros((nx, ny))
    for sl in _chunks(p.size, X.shape[1], Y.shape[1]):
        out[p[sl], q[sl]] = _dtw_matrices_np(X[p[sl]], Y[q[sl]], band)[:, -1, -1]
    if symmetric:
        out[q, p] = out[p, q]
    return out


def _dba_np(centroid, members, band, n_iter):
    c = centroid.copy()
    L = c.shape[0]
    R = members.shape[0]
    for _ in range(n_iter):
        parts = []
        for sl in _chunks(R, L, members.shape[1]):
            D = _dtw_matrices_np(np.broadcast_to(c, (sl.stop - sl.start, L)), members[sl], band)
            pair, t, i, j = _backtrack_many_np(D)
            parts.append((pair + sl.start, t, i, j))
        pair, t, i, j = (np.concatenate(x) for x in zip(*parts))
        # same summation order as the scalar kernel: member, then path position
        order = np.lexsort((-t, pair))
        sums = np.zeros(L)
        counts = np.zeros(L)
        np.add.at(sums, i[order], members[pair[order], j[order]])
        np.add.at(counts, i[order], 1.0)
        c = sums / counts
    return c


_BACKENDS = {
    "numba": SimpleNamespace(
        dtw_sq=_dtw_sq_nb,
        dtw_matrix=_dtw_matrix_nb,
        backtrack=_backtrack_nb,
        cdist_dtw_sq=_cdist_dtw_sq_nb,
        dba=_dba_nb,
    ),
    "numpy": SimpleNamespace(
        dtw_sq=_dtw_sq_np,
        dtw_matrix=_dtw_matrix_np,
        backtrack=_backtrack_np,
        cdist_dtw_sq=_cdist_dtw_sq_np,
        dba=_dba_np,
    ),
}


def backend(name: str | None = None) -> SimpleNamespace:
    """Return the kernel namespace for ``"numba"`` or ``"numpy"``.

    ``None`` picks the active backend.
    """
    if name is None:
        name = "numba" if USE_NUMBA else "numpy"
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; expected one of {sorted(_BACKENDS)}")
    return _BACKENDS[name]


# --------------------------------------------------------------------------
# public dispatchers
# --------------------------------------------------------------------------


def _as_series(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def dtw_sq(a, b, band=None, *, impl=None) -> float:
    """Accumulated squared-difference cost of the optimal warping path."""
    a, b = _as_series(a), _as_series(b)
    return float(backend(impl).dtw_sq(a, b, _band_arg(band, len(a), len(b))))


def dtw_path(a, b, band=None, *, impl=None) -> np.ndarray:
    """Optimal warping path as an ``(P, 2)`` array of index pairs ``(i, j)``.

    Ties prefer the diagonal step, then advancing ``a`` only.
    """
    a, b = _as_series(a), _as_series(b)
    be = backend(impl)
    return be.backtrack(be.dtw_matrix(a, b, _band_arg(band, len(a), len(b))))


def cdist_dtw_sq(X, Y=None, band=None, *, impl=None) -> np.ndarray:
    """Pairwise accumulated DTW costs between the rows of ``X`` and ``Y``."""
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    symmetric = Y is None
    Y = X if symmetric else np.ascontiguousarray(np.atleast_2d(Y), dtype=np.float64)
    return backend(impl).cdist_dtw_sq(X, Y, _band_arg(band, X.shape[1], Y.shape[1]), symmetric)


def cdist_sq_euclidean(X, Y=None) -> np.ndarray:
    """Pairwise squared Euclidean distances, accumulated explicitly.

    The ``|x|^2 + |y|^2 - 2xy`` shortcut is avoided: it loses the exact zero
    on identical rows and its BLAS reduction order is not reproducible.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=np.float64))
    diff = X[:, None, :] - Y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def dba(centroid, members, band=None, n_iter: int = 10, *, impl=None) -> np.ndarray:
    """DTW barycenter averaging starting from ``centroid``.

    Each iteration aligns every member to the current barycenter and replaces
    each barycenter coordinate by the mean of the member values warped onto it.
    """
    c = _as_series(centroid)
    M = np.ascontiguousarray(np.atleast_2d(members), dtype=np.float64)
    return backend(impl).dba(c, M, _band_arg(band, len(c), M.shape[1]), int(n_iter))
