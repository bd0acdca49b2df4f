"""Command line entry point: ``meltline <stage> --config run.ini --out out/``.

Every stage reads its inputs from the output directory (or the config for the
first stage) and writes its own artifacts there, so a run can be resumed from
any stage. ``pipeline`` runs them all in order.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

from meltline import __version__, artifacts, cluster, counterfactual, ingest, mcdm, metrics, segment, synth
from meltline.config import PipelineConfig
from meltline.errors import ConfigError, MeltlineError

log = logging.getLogger("meltline")

STAGES = ("ingest-report", "segment", "sweep-k", "cluster", "matrix", "rank", "savings")


class LockHeld(MeltlineError):
    pass


@contextmanager
def _locked(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".meltline.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockHeld(f"{lock} exists; another run is using this output directory") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _need(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} is not configured")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {p}")
    return p


def _series(cfg: PipelineConfig, kind: str):
    if kind == "price":
        path, flat, cls = cfg.prices_path, cfg.flat_price, metrics.PriceSeries
    else:
        path, flat, cls = cfg.emissions_path, cfg.flat_emission_intensity, metrics.EmissionSeries
    if path:
        return metrics.read_hourly_csv(_need(path, f"{kind} series"), cls)
    if flat is not None:
        return cls.flat(flat)
    raise ConfigError(f"costs: neither a {kind} series file nor a flat value is configured")


def _segments(out: Path):
    artifacts.check_csv(out / "segments.csv")
    return segment.read_segments(out)


def _profiles(cfg: PipelineConfig, out: Path):
    return [cluster.resample_profile(s, cfg.profile_length, cfg.znorm) for s in _segments(out)]


def _matrix_path(cfg: PipelineConfig, out: Path) -> Path:
    return Path(cfg.matrix_path) if cfg.matrix_path else out / "decision_matrix.csv"


# -- stages ----------------------------------------------------------------


def stage_ingest_report(cfg: PipelineConfig, out: Path) -> dict:
    frame = ingest.load_telemetry(_need(cfg.telemetry_path, "telemetry.path"), cfg.schema(), cfg.delimiter)
    report = ingest.completeness_report(frame)
    artifacts.write_json(
        out / "completeness.json",
        {
            "total_rows": report.total_rows,
            "per_field": {k: round(v, 6) for k, v in report.per_field.items()},
            "unparseable_cells": frame.unparseable_cells,
            "duplicates_dropped": frame.duplicates_dropped,
        },
    )
    print(report.to_table())
    clean = ingest.clean_telemetry(frame, cfg.drop_fields, cfg.require_present)
    ingest.write_telemetry(clean, out / "telemetry_clean.csv", format_line=artifacts.format_line("telemetry_clean.csv"))
    return {"rows": len(frame), "clean_rows": len(clean)}


def stage_segment(cfg: PipelineConfig, out: Path) -> dict:
    frame = ingest.load_canonical(artifacts.check_csv(out / "telemetry_clean.csv"))
    segs = segment.segment_frame(frame, cfg.segmentation)
    segment.write_segments(segs, out, artifacts.format_line("segments.csv"))
    print(f"melts: {len(segs)}")
    return {"melts": len(segs)}


def stage_sweep_k(cfg: PipelineConfig, out: Path) -> dict:
    profiles = _profiles(cfg, out)
    k_max = min(cfg.k_max, len(profiles))
    report = cluster.sweep_k(
        profiles, (cfg.k_min, max(cfg.k_min, k_max)), cfg.metric_obj, cfg.seed, cfg.n_init, cfg.max_iter, cfg.tol
    )
    artifacts.write_json(out / "k_sweep.json", report.to_dict())
    for e in report.entries:
        if e.error:
            print(f"k={e.k:3d}  error: {e.error}")
        else:
            print(f"k={e.k:3d}  inertia={e.inertia:.6g}  distortion={e.distortion:.6g}  silhouette={e.silhouette:.5f}")
    print(f"suggested k: {report.suggested_k} ({report.suggestion_rule})")
    if cfg.plots:
        from meltline import plots

        (out / "plots").mkdir(exist_ok=True)
        plots.plot_k_sweep(report, out / "plots" / "k_sweep.svg")
    return {"suggested_k": report.suggested_k}


def stage_cluster(cfg: PipelineConfig, out: Path) -> dict:
    k = cfg.k
    if k is None:
        sweep_path = out / "k_sweep.json"
        if not sweep_path.exists():
            stage_sweep_k(cfg, out)
        k = artifacts.read_json(sweep_path)["suggested_k"]
        if k is None:
            raise ConfigError("no K configured and the K sweep produced no suggestion")
    profiles = _profiles(cfg, out)
    model = cluster.fit_kmeans(profiles, k, cfg.metric_obj, cfg.seed, cfg.n_init, cfg.max_iter, cfg.tol)
    sizes = metrics.cluster_sizes(model.assignments)
    artifacts.write_assignments(out / "assignments.csv", model.assignments)
    artifacts.write_centroids(out / "centroids.csv", model.centroids)
    artifacts.write_cluster_sizes(out / "cluster_sizes.csv", sizes)
    artifacts.write_json(
        out / "cluster_model.json",
        {
            "k": model.k,
            "metric": str(model.metric),
            "seed": model.seed,
            "n_init": cfg.n_init,
            "max_iter": cfg.max_iter,
            "tol": cfg.tol,
            "profile_length": cfg.profile_length,
            "znorm": cfg.znorm,
            "iterations_run": model.iterations_run,
            "converged": model.converged,
            "inertia": round(model.inertia, 6),
        },
    )
    print(f"k={k} inertia={model.inertia:.6g} converged={model.converged} sizes={sizes}")
    if cfg.plots:
        from meltline import plots

        (out / "plots").mkdir(exist_ok=True)
        plots.plot_cluster_profiles(model.centroids, sizes, out / "plots" / "cluster_profiles.svg")
        plots.plot_cluster_sizes(sizes, out / "plots" / "cluster_sizes.svg")
    return {"k": k}


def stage_matrix(cfg: PipelineConfig, out: Path) -> dict:
    segs = _segments(out)
    assignments = artifacts.read_assignments(out / "assignments.csv")
    dm = metrics.build_decision_matrix(assignments, segs, _series(cfg, "emission"), cfg.tax_DKK_per_kg, cfg.weights)
    dm.to_csv(out / "decision_matrix.csv", artifacts.format_line("decision_matrix.csv"))
    print(f"decision matrix: {dm.shape[0]} alternatives x {dm.shape[1]} criteria")
    return {"alternatives": dm.shape[0]}


def _read_matrix(cfg: PipelineConfig, out: Path) -> metrics.DecisionMatrix:
    path = artifacts.check_csv(_matrix_path(cfg, out), "decision_matrix.csv")
    return metrics.DecisionMatrix.read_csv(path, weights=cfg.weights)


def stage_rank(cfg: PipelineConfig, out: Path) -> dict:
    table = mcdm.rank_all(_read_matrix(cfg, out), cfg.weights, cfg.vikor_v)
    table.to_csv(out / "rankings.csv", artifacts.format_line("rankings.csv"))
    artifacts.write_json(out / "rankings.json", table.to_dict())
    print(table.to_text())
    return {"unanimous_best": table.unanimous_best, "consensus_best": table.consensus_best}


def stage_savings(cfg: PipelineConfig, out: Path) -> dict:
    ranking = artifacts.read_json(out / "rankings.json")
    best_id = ranking["unanimous_best"] if ranking["unanimous_best"] is not None else ranking["consensus_best"]
    best = counterfactual.BestPracticeProfile.from_matrix(_read_matrix(cfg, out), best_id)
    segs = _segments(out)
    assign_path = out / "assignments.csv"
    assignments = artifacts.read_assignments(assign_path) if assign_path.exists() else {}
    report = counterfactual.project_best_practice(
        segs, assignments, best, _series(cfg, "price"), _series(cfg, "emission"), cfg.tax_DKK_per_kg
    )
    report.to_csv(out / "savings.csv", artifacts.format_line("savings.csv"))
    report.per_melt_csv(out / "savings_per_melt.csv", artifacts.format_line("savings_per_melt.csv"))
    for row in report.table_rows():
        print("  ".join(f"{c:>20}" for c in row))
    pct = report.percent_changes()
    return {"best_cluster": best.cluster_id, "electricity_cost_change_pct": round(pct["electricity_cost"], 2)}


RUNNERS = {
    "ingest-report": stage_ingest_report,
    "segment": stage_segment,
    "sweep-k": stage_sweep_k,
    "cluster": stage_cluster,
    "matrix": stage_matrix,
    "rank": stage_rank,
    "savings": stage_savings,
}


def run_pipeline(cfg: PipelineConfig, out: Path) -> dict:
    summary = {}
    for name in STAGES:
        if name == "sweep-k" and cfg.k is not None:
            continue
        log.info("stage %s", name)
        summary[name] = RUNNERS[name](cfg, out)
    return summary


def cmd_synth(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    data = synth.synthetic_telemetry(args.melts, seed=args.seed if args.seed is not None else 0)
    ingest.write_telemetry(data.frame, out / "telemetry.csv")
    t = data.frame.time
    margin = 2 * 86400.0
    for kind, fname, cls in (
        ("price", "prices.csv", metrics.PriceSeries),
        ("emission", "emissions.csv", metrics.EmissionSeries),
    ):
        hours, values = synth.hourly_series(t[0] - margin, t[-1] + margin, kind, seed=args.seed or 0)
        metrics.write_hourly_csv(cls(hours, values), out / fname)
    cfg = PipelineConfig(
        telemetry_path="telemetry.csv",
        column_map={f: f for f in ["timestamp"] + data.frame.fields},
        k_min=2,
        k_max=8,
        prices_path="prices.csv",
        emissions_path="emissions.csv",
        output_dir="out",
    )
    (out / "meltline.ini").write_text(cfg.dumps(), encoding="utf-8")
    print(f"wrote {len(data.frame)} rows with {data.n_melts} melts to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meltline", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"meltline {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config (INI)")
    common.add_argument("--out", help="output directory (overrides [output] dir)")
    common.add_argument("--seed", type=int, help="master seed (overrides [cluster] seed)")
    common.add_argument("--plots", action="store_true", help="also write SVG plots")
    for name in STAGES + ("pipeline",):
        sub.add_parser(name, parents=[common], help=f"run the {name} stage" if name != "pipeline" else "run all stages")
    sp = sub.add_parser("synth", parents=[common], help="write synthetic telemetry, series and a config")
    sp.add_argument("--melts", type=int, default=60)
    return parser


def _fail(code: int, exc: Exception, stage: str | None) -> int:
    err = {
        "error": getattr(exc, "code", type(exc).__name__),
        "message": str(exc),
        "stage": stage,
    }
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("MELTLINE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    if args.command == "synth":
        return cmd_synth(args)
    try:
        if not args.config:
            raise ConfigError("--config is required")
        cfg = PipelineConfig.load(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.plots:
            overrides["plots"] = True
        if args.out:
            overrides["output_dir"] = args.out
        cfg = cfg.replace(**overrides)
        if not cfg.output_dir:
            raise ConfigError("no output directory: pass --out or set [output] dir")
    except ConfigError as exc:
        return _fail(2, exc, None)

    out = Path(cfg.output_dir)
    stage = args.command
    try:
        with _locked(out):
            if stage == "pipeline":
                run_pipeline(cfg, out)
            else:
                RUNNERS[stage](cfg, out)
    except ConfigError as exc:
        return _fail(2, exc, stage)
    except (MeltlineError, ValueError, KeyError, OSError) as exc:
        return _fail(1, exc, stage)
    return 0


if __name__ == "__main__":
    sys.exit(main())
