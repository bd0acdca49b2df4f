"""Ranking alternatives with SAW, MEW, TOPSIS, mTOPSIS and VIKOR.

All methods work on vector-normalized columns (each column divided by its
Euclidean norm). SAW and MEW score the normalized values directly and need a
single criterion direction: with cost criteria the lowest score is best. The
distance-based methods (TOPSIS, mTOPSIS, VIKOR) handle directions through
their choice of ideal point, so mixed matrices are fine there.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from meltline.errors import (
    ConstantColumn,
    MeltlineError,
    MixedDirections,
    NonPositiveEntry,
    SingleAlternative,
    ZeroColumn,
)
from meltline.metrics import CriterionSpec, DecisionMatrix, normalize_weights

METHODS = ("SAW", "MEW", "TOPSIS", "mTOPSIS", "VIKOR")


@dataclass(frozen=True)
class NormalizedMatrix:
    values: np.ndarray
    directions: list
    source: DecisionMatrix
    method: str = "vector"

    @property
    def alternatives(self) -> list:
        return self.source.alternatives


@dataclass
class MethodScores:
    method: str
    alternatives: list
    scores: np.ndarray
    orientation: str
    ranking: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if not self.ranking:
            self.ranking = rank_by_scores(self.alternatives, self.scores, self.orientation)

    def score_of(self, alternative) -> float:
        return float(self.scores[self.alternatives.index(alternative)])

    def rank_of(self, alternative) -> int:
        return self.ranking.index(alternative) + 1


def rank_by_scores(alternatives, scores, orientation: str) -> list:
    """Best first; ties go to the smaller alternative id."""
    sign = 1.0 if orientation == "min_best" else -1.0
    keyed = sorted(zip((sign * s for s in np.asarray(scores).tolist()), alternatives))
    return [a for _, a in keyed]


def _weights(matrix: DecisionMatrix, weights) -> np.ndarray:
    if weights is None:
        return matrix.weights
    w = normalize_weights(weights)
    if w.size != matrix.shape[1]:
        raise ValueError(f"expected {matrix.shape[1]} weights, got {w.size}")
    return w


def normalize_vector(matrix: DecisionMatrix) -> NormalizedMatrix:
    norms = np.sqrt(np.sum(matrix.values**2, axis=0))
    zero = [c.name for c, n in zip(matrix.criteria, norms) if n == 0]
    if zero:
        raise ZeroColumn(f"all-zero column(s): {', '.join(zero)}")
    return NormalizedMatrix(matrix.values / norms, matrix.directions, matrix)


def to_benefit(matrix: DecisionMatrix) -> DecisionMatrix:
    """Reciprocal cost-to-benefit transform ``x -> min_i x_ij / x_ij``.

    Benefit columns pass through. Needed before SAW/MEW on mixed matrices.
    """
    v = matrix.values.copy()
    for j, d in enumerate(matrix.directions):
        if d == "cost":
            col = v[:, j]
            if np.any(col <= 0):
                raise NonPositiveEntry(f"column {matrix.criteria[j].name!r} must be positive")
            v[:, j] = col.min() / col
    crit = [CriterionSpec(c.name, "benefit", c.weight) for c in matrix.criteria]
    return DecisionMatrix(matrix.alternatives, crit, v, dict(matrix.notes))


def _single_direction(norm: NormalizedMatrix, method: str) -> str:
    dirs = set(norm.directions)
    if len(dirs) != 1:
        raise MixedDirections(f"{method} needs one criterion direction; apply to_benefit() first")
    return "min_best" if dirs == {"cost"} else "max_best"


def score_saw(norm: NormalizedMatrix, weights=None) -> MethodScores:
    """Weighted sum of normalized values."""
    orientation = _single_direction(norm, "SAW")
    w = _weights(norm.source, weights)
    return MethodScores("SAW", norm.alternatives, norm.values @ w, orientation)


def score_mew(norm: NormalizedMatrix, weights=None) -> MethodScores:
    """Weighted geometric product of normalized values."""
    orientation = _single_direction(norm, "MEW")
    if np.any(norm.values <= 0):
        raise NonPositiveEntry("MEW requires strictly positive entries")
    w = _weights(norm.source, weights)
    scores = np.exp(np.log(norm.values) @ w)
    return MethodScores("MEW", norm.alternatives, scores, orientation)


def _ideals(values, directions):
    cost = np.array([d == "cost" for d in directions])
    best = np.where(cost, values.min(axis=0), values.max(axis=0))
    worst = np.where(cost, values.max(axis=0), values.min(axis=0))
    return best, worst


def _closeness(d_plus, d_minus, method):
    denom = d_plus + d_minus
    if np.any(denom == 0):
        raise SingleAlternative(f"{method}: alternatives are indistinguishable (0/0 closeness)")
    return d_minus / denom


def score_topsis(matrix: DecisionMatrix, weights=None) -> MethodScores:
    """Relative closeness to the ideal in the weighted normalized space."""
    if matrix.shape[0] < 2:
        raise SingleAlternative("TOPSIS needs at least two alternatives")
    w = _weights(matrix, weights)
    V = normalize_vector(matrix).values * w
    best, worst = _ideals(V, matrix.directions)
    d_plus = np.sqrt(np.sum((V - best) ** 2, axis=1))
    d_minus = np.sqrt(np.sum((V - worst) ** 2, axis=1))
    return MethodScores("TOPSIS", matrix.alternatives, _closeness(d_plus, d_minus, "TOPSIS"), "max_best")


def score_mtopsis(matrix: DecisionMatrix, weights=None) -> MethodScores:
    """TOPSIS with the weights moved inside the distance.

    ``d = sqrt(Σ_j w_j (r_ij - r*_j)^2)`` on the unweighted normalized matrix.
    """
    if matrix.shape[0] < 2:
        raise SingleAlternative("mTOPSIS needs at least two alternatives")
    w = _weights(matrix, weights)
    R = normalize_vector(matrix).values
    best, worst = _ideals(R, matrix.directions)
    d_plus = np.sqrt(np.sum(w * (R - best) ** 2, axis=1))
    d_minus = np.sqrt(np.sum(w * (R - worst) ** 2, axis=1))
    return MethodScores("mTOPSIS", matrix.alternatives, _closeness(d_plus, d_minus, "mTOPSIS"), "max_best")


# S and R lie in [0, 1]; spreads below this are rounding noise, not preference
_SPREAD_EPS = 1e-12


def _degenerate(x) -> bool:
    return bool(x.max() - x.min() <= _SPREAD_EPS)


def _spread(x):
    return np.zeros_like(x) if _degenerate(x) else (x - x.min()) / (x.max() - x.min())


def score_vikor(matrix: DecisionMatrix, weights=None, v: float = 0.5) -> MethodScores:
    """Compromise index Q from group utility S and individual regret R.

    Lower Q is better. If all S (or all R) coincide to within 1e-12 that
    term of Q is taken as 0 and ``flags["degenerate_spread"]`` is set. The
    acceptable-advantage and acceptable-stability conditions are reported in
    ``flags`` and do not change the ranking.
    """
    if not 0.0 <= v <= 1.0:
        raise ValueError("v must lie in [0, 1]")
    w = _weights(matrix, weights)
    f = matrix.values
    best, worst = _ideals(f, matrix.directions)
    const = [c.name for c, b, x in zip(matrix.criteria, best, worst) if b == x]
    if const:
        raise ConstantColumn(f"VIKOR: constant column(s): {', '.join(const)}")
    terms = w * (f - best) / (worst - best)
    S = terms.sum(axis=1)
    R = terms.max(axis=1)
    Q = v * _spread(S) + (1.0 - v) * _spread(R)

    alts = matrix.alternatives
    flags: dict = {
        "v": v,
        "S": S.tolist(),
        "R": R.tolist(),
        "degenerate_spread": _degenerate(S) or _degenerate(R),
    }
    ranking = rank_by_scores(alts, Q, "min_best")
    m = len(alts)
    if m >= 2:
        q_sorted = [Q[alts.index(a)] for a in ranking]
        dq = 1.0 / (m - 1)
        first = ranking[0]
        flags["acceptable_advantage"] = bool(q_sorted[1] - q_sorted[0] >= dq)
        flags["acceptable_stability"] = bool(
            rank_by_scores(alts, S, "min_best")[0] == first or rank_by_scores(alts, R, "min_best")[0] == first
        )
    return MethodScores("VIKOR", alts, Q, "min_best", ranking, flags)


@dataclass
class RankingTable:
    alternatives: list
    methods: dict  # name -> MethodScores
    errors: dict = field(default_factory=dict)  # name -> message
    unanimous_best: object = None
    consensus_best: object = None

    def mean_ranks(self) -> dict:
        if not self.methods:
            return {}
        return {
            a: float(np.mean([ms.rank_of(a) for ms in self.methods.values()])) for a in self.alternatives
        }

    @property
    def best(self):
        return self.unanimous_best if self.unanimous_best is not None else self.consensus_best

    def to_rows(self, decimals: int = 5) -> list[list[str]]:
        header = ["cluster"] + list(METHODS)
        rows = [header]
        for a in self.alternatives:
            row = [str(a)]
            for name in METHODS:
                ms = self.methods.get(name)
                row.append("" if ms is None else f"{ms.score_of(a):.{decimals}f}")
            rows.append(row)
        return rows

    def to_csv(self, path, format_line: str | None = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if format_line:
                fh.write(format_line + "\n")
            csv.writer(fh, lineterminator="\n").writerows(self.to_rows())

    def to_dict(self) -> dict:
        def _r(x):
            return round(float(x), 5)

        return {
            "alternatives": self.alternatives,
            "methods": {
                name: {
                    "orientation": ms.orientation,
                    "scores": {str(a): _r(s) for a, s in zip(ms.alternatives, ms.scores)},
                    "ranking": ms.ranking,
                    **(
                        {
                            "acceptable_advantage": ms.flags.get("acceptable_advantage"),
                            "acceptable_stability": ms.flags.get("acceptable_stability"),
                            "degenerate_spread": ms.flags.get("degenerate_spread"),
                        }
                        if name == "VIKOR"
                        else {}
                    ),
                }
                for name, ms in self.methods.items()
            },
            "unavailable": self.errors,
            "mean_rank": {str(a): _r(r) for a, r in self.mean_ranks().items()},
            "unanimous_best": self.unanimous_best,
            "consensus_best": self.consensus_best,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        rows = self.to_rows()
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(c.rjust(wd) for c, wd in zip(r, widths)) for r in rows]
        lines.append(f"unanimous best: {self.unanimous_best}")
        lines.append(f"consensus best: {self.consensus_best}")
        return "\n".join(lines)


def rank_all(matrix: DecisionMatrix, weights=None, v: float = 0.5) -> RankingTable:
    """Run all five methods; failures mark the method unavailable."""
    w = _weights(matrix, weights)
    methods: dict = {}
    errors: dict = {}
    runners = {
        "SAW": lambda: score_saw(normalize_vector(matrix), w),
        "MEW": lambda: score_mew(normalize_vector(matrix), w),
        "TOPSIS": lambda: score_topsis(matrix, w),
        "mTOPSIS": lambda: score_mtopsis(matrix, w),
        "VIKOR": lambda: score_vikor(matrix, w, v),
    }
    for name, run in runners.items():
        try:
            methods[name] = run()
        except MeltlineError as exc:
            errors[name] = f"{exc.code}: {exc}"
    table = RankingTable(list(matrix.alternatives), methods, errors)
    if methods:
        firsts = {ms.ranking[0] for ms in methods.values()}
        if len(firsts) == 1 and not errors:
            table.unanimous_best = firsts.pop()
        mean = table.mean_ranks()
        table.consensus_best = min(matrix.alternatives, key=lambda a: (mean[a], a))
    return table
