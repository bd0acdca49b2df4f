"""Stage artifacts in the output directory and their format tags.

CSV artifacts start with a ``# format: <tag>`` line, JSON artifacts carry a
top-level ``"format"`` key. Readers refuse artifacts whose tag differs from
the one this version writes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from meltline.errors import MissingArtifact, StaleArtifact

FORMATS = {
    "completeness.json": "meltline.completeness/1",
    "telemetry_clean.csv": "meltline.telemetry/1",
    "segments.csv": "meltline.segments/1",
    "k_sweep.json": "meltline.k_sweep/1",
    "cluster_model.json": "meltline.cluster_model/1",
    "assignments.csv": "meltline.assignments/1",
    "centroids.csv": "meltline.centroids/1",
    "cluster_sizes.csv": "meltline.cluster_sizes/1",
    "decision_matrix.csv": "meltline.decision_matrix/1",
    "rankings.csv": "meltline.rankings/1",
    "rankings.json": "meltline.rankings/1",
    "savings.csv": "meltline.savings/1",
    "savings_per_melt.csv": "meltline.savings_per_melt/1",
}


def format_line(name: str) -> str:
    return f"# format: {FORMATS[name]}"


def _require(path: Path) -> Path:
    if not path.is_file():
        raise MissingArtifact(f"{path.name} not found in {path.parent}; run the producing stage first")
    return path


def check_csv(path, name: str | None = None) -> Path:
    """Verify the format line of a CSV artifact."""
    path = _require(Path(path))
    name = name or path.name
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    if first != format_line(name):
        raise StaleArtifact(f"{path}: expected '{format_line(name)}', found {first[:60]!r}")
    return path


def write_json(path, payload: dict) -> None:
    path = Path(path)
    body = {"format": FORMATS[path.name], **payload}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    path = _require(Path(path))
    body = json.loads(path.read_text(encoding="utf-8"))
    if body.get("format") != FORMATS[path.name]:
        raise StaleArtifact(f"{path}: format {body.get('format')!r}, expected {FORMATS[path.name]!r}")
    return body


def _rows(path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]


def write_assignments(path, assignments: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_line("assignments.csv") + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["melt_id", "cluster"])
        for m in sorted(assignments):
            w.writerow([m, assignments[m]])


def read_assignments(path) -> dict[int, int]:
    rows = _rows(check_csv(path, "assignments.csv"))
    return {int(r[0]): int(r[1]) for r in rows[1:]}


def write_centroids(path, centroids: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_line("centroids.csv") + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster"] + [f"v{i}" for i in range(centroids.shape[1])])
        for c, row in enumerate(centroids.tolist()):
            w.writerow([c] + [f"{x:.6f}" for x in row])


def read_centroids(path) -> np.ndarray:
    rows = _rows(check_csv(path, "centroids.csv"))
    return np.array([[float(x) for x in r[1:]] for r in rows[1:]])


def write_cluster_sizes(path, sizes: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_line("cluster_sizes.csv") + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "n_melts"])
        for c in sorted(sizes):
            w.writerow([c, sizes[c]])
