"""Command-line front end: ``ddqcl train | scan | report``.

Run directory layout (``train``)::

    manifest.json      config snapshot, seeds, versions, file list, status
    history.jsonl      one JSON object per evaluation, appended as it happens
    distribution.csv   final distribution, 2**n comma-separated probabilities
    metrics.json       d_kl, qbas, entanglement_entropy and auxiliary values

``scan`` writes ``per_seed.csv`` (best-so-far per evaluation, one column per
seed), ``aggregate.csv`` (p5, median and p95 per evaluation), ``finals.csv``
and a manifest.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, build_config, load_config
from .trainer import ExperimentConfig, run_ddqcl, seed_scan

log = logging.getLogger("ddqcl")

FORMAT_VERSION = 1
FORMATS = {
    "history": "jsonl; keys evaluation_index, cost, best_so_far, parameters (radians)",
    "distribution": "csv; one line of 2**n probabilities, pixel-ordered, pixel 0 = MSB",
    "metrics": "json; d_kl is KL(target, max(eps, q)) in bits, qbas from a fresh sample",
    "aggregate": "csv; evaluation_index, p5, median, p95 of best-so-far cost",
}
REPORT_HEADER = ["run", "circuit", "optimizer", "d_kl", "qbas", "S"]


def _now():
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def read_config(path) -> ExperimentConfig:
    """Load a key-value config, or the config snapshot inside a run manifest."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        snapshot = data.get("config", data)
        try:
            return ExperimentConfig.from_dict(snapshot)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
    return load_config(path)


def apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    d = config.to_dict()
    if getattr(args, "budget", None) is not None:
        d["budget"] = args.budget
    if getattr(args, "exact", False):
        d["exact"] = True
    if getattr(args, "noise", None) is not None:
        d["noise"] = args.noise
    seeds = getattr(args, "train_seeds", None)
    if seeds:
        parts = [int(s) for s in seeds.split(",")]
        d["optimizer_seed"] = parts[0]
        d["sampling_seed"] = parts[1] if len(parts) > 1 else parts[0]
    return build_config(d)


def _manifest(config, command, files, **extra):
    return {
        "format_version": FORMAT_VERSION,
        "artifact_version": __version__,
        "command": command,
        "config": config.to_dict(),
        "seeds": {"optimizer_seed": config.optimizer_seed, "sampling_seed": config.sampling_seed},
        "files": files,
        "formats": FORMATS,
        **extra,
    }


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def train(config: ExperimentConfig, out_dir) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"history": "history.jsonl", "distribution": "distribution.csv",
             "metrics": "metrics.json", "manifest": "manifest.json"}
    manifest = _manifest(config, "train", files, started=_now(), status="running")
    _write_json(out / "manifest.json", manifest)

    with open(out / files["history"], "w") as hist:
        def on_row(row):
            hist.write(json.dumps(row) + "\n")
            hist.flush()

        try:
            record = run_ddqcl(config, on_row)
        except Exception as exc:  # keep the history prefix and flag the run
            log.error("run failed: %s", exc)
            manifest.update(status="failed", error=f"{type(exc).__name__}: {exc}", finished=_now())
            _write_json(out / "manifest.json", manifest)
            return 3

    if record.final_distribution is not None:
        (out / files["distribution"]).write_text(
            ",".join(repr(float(v)) for v in record.final_distribution) + "\n")
        metrics = {
            **asdict(record.metrics),
            **record.extra_metrics,
            "best_cost": record.best_cost,
            "cost_kind": config.cost_kind,
            "best_parameters": [float(v) for v in record.best_params],
            "circuit": config.ansatz().label,
            "optimizer": config.optimizer,
            "evaluations": len(record.rows),
            "d_kl_definition": "KL(target || max(epsilon, model)), base 2",
        }
        _write_json(out / files["metrics"], metrics)
    manifest.update(status=record.status, error=record.error, finished=_now(),
                    evaluations=len(record.rows))
    _write_json(out / "manifest.json", manifest)
    log.info("%s: %d evaluations, best cost %.6g", out, len(record.rows), record.best_cost)
    return 0 if record.status == "complete" else 4


def scan(config: ExperimentConfig, n_seeds: int, out_dir, workers: int = 1) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"per_seed": "per_seed.csv", "aggregate": "aggregate.csv",
             "finals": "finals.csv", "manifest": "manifest.json"}
    manifest = _manifest(config, "scan", files, started=_now(), n_seeds=n_seeds, status="running")
    _write_json(out / "manifest.json", manifest)

    summary = seed_scan(config, n_seeds, workers=workers)
    n_eval = summary.curves.shape[1]
    with open(out / files["per_seed"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["evaluation_index"] + [f"seed_{s}" for s in summary.seeds])
        for i in range(n_eval):
            w.writerow([i] + [repr(float(v)) for v in summary.curves[:, i]])
    p5, med, p95 = summary.percentiles()
    with open(out / files["aggregate"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["evaluation_index", "p5", "median", "p95"])
        for i in range(n_eval):
            w.writerow([i, repr(float(p5[i])), repr(float(med[i])), repr(float(p95[i]))])
    with open(out / files["finals"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "best_cost", "d_kl", "qbas", "S", "status"])
        for s, r in zip(summary.seeds, summary.records):
            m = r.metrics
            w.writerow([s, repr(r.best_cost), repr(m.d_kl), repr(m.qbas),
                        repr(m.entanglement_entropy), r.status])
    manifest.update(status="complete", finished=_now(), seeds_run=summary.seeds)
    _write_json(out / "manifest.json", manifest)
    return 0


def report_rows(run_dirs) -> list[list]:
    rows = []
    for d in run_dirs:
        d = Path(d)
        try:
            metrics = json.loads((d / "metrics.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise FileNotFoundError(f"{d}: missing or unreadable metrics.json ({exc})") from None
        rows.append([d.name, metrics["circuit"], metrics["optimizer"],
                     f"{metrics['d_kl']:.4f}", f"{metrics['qbas']:.4f}",
                     f"{metrics['entanglement_entropy']:.4f}"])
    return rows


def report(run_dirs, stream=None) -> int:
    stream = stream or sys.stdout
    rows = report_rows(run_dirs)
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    w.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddqcl", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="key = value config or a run manifest.json")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--budget", type=int, help="override evaluation budget")
        sp.add_argument("--exact", action="store_true", help="use exact probabilities instead of sampling")
        sp.add_argument("--noise", type=float, help="per-gate depolarizing error")

    t = sub.add_parser("train", help="run one training")
    common(t)
    t.add_argument("--seeds", dest="train_seeds", metavar="OPT[,SAMP]",
                   help="optimizer and sampling seeds")

    s = sub.add_parser("scan", help="run a seed scan")
    common(s)
    s.add_argument("--seeds", type=int, required=True, help="number of seeds")
    s.add_argument("--workers", type=int, default=1)

    r = sub.add_parser("report", help="tabulate final metrics of completed runs")
    r.add_argument("runs", nargs="*", help="run directories")
    r.add_argument("--out", help="also write the table to this file")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "report":
        try:
            if args.out:
                with open(args.out, "w") as fh:
                    report(args.runs, fh)
            return report(args.runs)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2

    try:
        config = apply_overrides(read_config(args.config), args)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "train":
        return train(config, args.out)
    if args.seeds < 1:
        print("error: --seeds must be >= 1", file=sys.stderr)
        return 2
    return scan(config, args.seeds, args.out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
