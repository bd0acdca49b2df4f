"""Slow, obviously-correct reference implementations used only by tests."""

import itertools
import math


def all_warping_paths(n, m):
    """Every monotone path from (0, 0) to (n-1, m-1) with unit steps."""
    def walk(i, j, path):
        if (i, j) == (n - 1, m - 1):
            yield list(path)
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                path.append((a, b))
                yield from walk(a, b, path)
                path.pop()

    yield from walk(0, 0, [(0, 0)])


def brute_force_dtw(a, b, band=None):
    best = math.inf
    for path in all_warping_paths(len(a), len(b)):
        if band is not None and any(abs(i - j) > band for i, j in path):
            continue
        best = min(best, sum((a[i] - b[j]) ** 2 for i, j in path))
    return math.sqrt(best)


def silhouette_by_hand(points, labels, dist):
    n = len(points)
    total = 0.0
    for i in range(n):
        same = [dist(points[i], points[j]) for j in range(n) if j != i and labels[j] == labels[i]]
        if not same:
            continue
        a = sum(same) / len(same)
        b = math.inf
        for c in set(labels) - {labels[i]}:
            other = [dist(points[i], points[j]) for j in range(n) if labels[j] == c]
            b = min(b, sum(other) / len(other))
        total += (b - a) / max(a, b)
    return total / n


def column_norm(values, j):
    return math.sqrt(sum(row[j] * row[j] for row in values))


def topsis_loops(values, weights, modified=False):
    """Cost-only TOPSIS / mTOPSIS written with plain loops."""
    m, n = len(values), len(values[0])
    norms = [column_norm(values, j) for j in range(n)]
    r = [[values[i][j] / norms[j] for j in range(n)] for i in range(m)]
    if not modified:
        r = [[weights[j] * r[i][j] for j in range(n)] for i in range(m)]
    best = [min(r[i][j] for i in range(m)) for j in range(n)]
    worst = [max(r[i][j] for i in range(m)) for j in range(n)]
    out = []
    for i in range(m):
        scale = weights if modified else [1.0] * n
        dp = math.sqrt(sum(scale[j] * (r[i][j] - best[j]) ** 2 for j in range(n)))
        dm = math.sqrt(sum(scale[j] * (r[i][j] - worst[j]) ** 2 for j in range(n)))
        out.append(dm / (dp + dm))
    return out


def permutations_count(n):
    return sum(1 for _ in itertools.permutations(range(n)))
