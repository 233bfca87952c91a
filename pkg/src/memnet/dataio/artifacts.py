"""Run artifacts on disk: CSV logs, snapshots and the post-training heatmap."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .. import plotting
from ..errors import DataError
from .tables import parse_snapshot, write_snapshot

ACCURACY = "accuracy.csv"
WEIGHTS = "weights_trace.csv"
FIRES = "fire_history.csv"
SNAP_PRE = "resistance_snapshot_pre.csv"
SNAP_POST = "resistance_snapshot_post.csv"
SNAP = "resistance_snapshot.csv"
HEATMAP = "resistance_heatmap.svg"
SUMMARY = "run.json"


def _num(x):
    return "" if x is None else repr(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_artifacts(runlog, out_dir) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e}") from e
    _write_csv(out / ACCURACY, ["epoch", "train_acc", "test_acc"],
               [(e, _num(a), _num(t)) for e, a, t in runlog.accuracy])
    _write_csv(out / WEIGHTS, ["epoch", "synapse", "conductance"],
               [(e, s, repr(g)) for e, s, g in runlog.weight_trace])
    _write_csv(out / FIRES, ["step", "epoch", "label", "winner"],
               [(s, e, lab, "" if w is None else w) for s, e, lab, w in runlog.fire_history])
    (out / SNAP_PRE).write_text(write_snapshot(runlog.snapshot_pre))
    post = write_snapshot(runlog.snapshot_post)
    (out / SNAP_POST).write_text(post)
    (out / SNAP).write_text(post)
    (out / SUMMARY).write_text(json.dumps({
        "seed": runlog.seed,
        "config_digest": runlog.config_digest,
        "train_accuracy": runlog.train_accuracy,
        "test_accuracy": runlog.test_accuracy,
        "programming": runlog.stats,
    }, indent=2, sort_keys=True) + "\n")
    plotting.heatmap_figure(runlog.snapshot_post, out / HEATMAP, "resistive states after training")
    return [out / n for n in (ACCURACY, WEIGHTS, FIRES, SNAP_PRE, SNAP_POST, SNAP, SUMMARY, HEATMAP)]


def _opt_float(s):
    return float(s) if s.strip() else None


def read_accuracy(path) -> list:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != ["epoch", "train_acc", "test_acc"]:
        raise DataError(f"{path}: not an accuracy log")
    try:
        return [(int(e), _opt_float(a), _opt_float(t)) for e, a, t in rows[1:]]
    except ValueError as e:
        raise DataError(f"{path}: corrupt row ({e})") from None


def read_weight_trace(path) -> list:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != ["epoch", "synapse", "conductance"]:
        raise DataError(f"{path}: not a weight trace")
    try:
        return [(int(e), s, float(g)) for e, s, g in rows[1:]]
    except ValueError as e:
        raise DataError(f"{path}: corrupt row ({e})") from None


ANALYSIS_INPUTS = (ACCURACY, WEIGHTS, SNAP_PRE, SNAP_POST)


def render_analysis(run_dir, out_dir=None) -> list[Path]:
    """Figures from a run directory's CSVs alone (works for hardware-run logs too)."""
    run = Path(run_dir)
    missing = [n for n in ANALYSIS_INPUTS if not (run / n).is_file()]
    if missing:
        raise DataError(f"{run}: missing {', '.join(missing)}")
    out = Path(out_dir) if out_dir is not None else run / "analysis"
    out.mkdir(parents=True, exist_ok=True)
    acc = read_accuracy(run / ACCURACY)
    trace = read_weight_trace(run / WEIGHTS)
    pre = parse_snapshot((run / SNAP_PRE).read_text())
    post = parse_snapshot((run / SNAP_POST).read_text())
    paths = [out / "accuracy.svg", out / "weights_trace.svg",
             out / "heatmap_pre.svg", out / "heatmap_post.svg"]
    plotting.accuracy_figure(acc, paths[0])
    plotting.weight_trace_figure(trace, paths[1])
    plotting.heatmap_figure(pre, paths[2], "resistive states before training")
    plotting.heatmap_figure(post, paths[3], "resistive states after training")
    return paths
