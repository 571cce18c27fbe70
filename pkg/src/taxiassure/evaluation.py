"""Sensitivity/specificity of the network and of the perception loop, per environment.

Positive class is "assured": the vehicle is within the offset. The network
predicts positive when the sufficiency criterion holds at the current
slice; the learning-enabled system (LES) predicts positive when its own CTE
estimate is within the offset.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assurance import STOP_THRESHOLD, AssuranceReport, monitor_trajectory
from .statespace import IntervalPartition
from .trajectory import group_by_env

SUBJECTS = ("dbn", "les")
EVAL_COLUMNS = ("env", "subject", "sensitivity", "specificity", "n_frames")


@dataclass
class ConfusionCounts:
    subject: str
    environment: str
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def add(self, predicted: bool, truth: bool):
        if truth:
            if predicted:
                self.tp += 1
            else:
                self.fn += 1
        elif predicted:
            self.fp += 1
        else:
            self.tn += 1

    @property
    def n(self):
        return self.tp + self.fp + self.tn + self.fn

    @property
    def sensitivity(self):
        d = self.tp + self.fn
        return self.tp / d if d else None

    @property
    def specificity(self):
        d = self.tn + self.fp
        return self.tn / d if d else None


def classify_frame(report: AssuranceReport, cte_e, cte_true, offset, threshold=STOP_THRESHOLD):
    """``(dbn_pred, les_pred, truth)`` for one frame.

    The network verdict is recomputed at ``offset`` from the report's
    current-slice measure, so it must be one of the report's offsets.
    """
    measure = report.measures.get(float(offset))
    if measure is None:
        raise ValueError(f"report has no measure for offset {offset}")
    dbn_pred = not (1.0 - measure >= threshold)
    les_pred = abs(cte_e) < offset
    truth = abs(cte_true) < offset
    return dbn_pred, les_pred, truth


@dataclass
class EvalRow:
    env: str
    subject: str
    sensitivity: float | None
    specificity: float | None
    n_frames: int
    counts: ConfusionCounts


class EnvironmentOverlapError(ValueError):
    pass


def check_disjoint(model, environments, allow_overlap=False):
    overlap = sorted(set(environments) & set(model.training_environments))
    if overlap and not allow_overlap:
        raise EnvironmentOverlapError(
            f"test environments {overlap} were used for training; pass allow_overlap to evaluate anyway"
        )
    return overlap


def evaluate(model, trajectories, offset=2.0, allow_overlap=False, **session_kw) -> list[EvalRow]:
    """Confusion-based rates per environment for both subjects.

    ``trajectories`` is a list of trajectories or a mapping env -> list.
    Every trajectory is replayed through its own session from a uniform
    belief, so results do not depend on trajectory order.
    """
    groups = trajectories if isinstance(trajectories, dict) else group_by_env(trajectories)
    if not groups:
        raise ValueError("nothing to evaluate")
    check_disjoint(model, groups, allow_overlap)
    offsets = tuple(session_kw.pop("offsets", (offset,)))
    if float(offset) not in map(float, offsets):
        offsets = (float(offset),) + offsets
    rows = []
    for env in sorted(groups):
        trs = groups[env]
        if not trs or not any(len(t) for t in trs):
            raise ValueError(f"environment {env!r} has no frames")
        counts = {s: ConfusionCounts(s, env) for s in SUBJECTS}
        for tr in trs:
            reports = monitor_trajectory(model, tr, offsets=offsets, **session_kw)
            for r, ce, ct in zip(reports, tr.cte_e, tr.cte_true):
                dbn, les, truth = classify_frame(r, ce, ct, offset)
                counts["dbn"].add(dbn, truth)
                counts["les"].add(les, truth)
        for s in SUBJECTS:
            c = counts[s]
            rows.append(EvalRow(env, s, c.sensitivity, c.specificity, c.n, c))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVAL_COLUMNS)
    for r in rows:
        w.writerow([r.env, r.subject,
                    "" if r.sensitivity is None else repr(r.sensitivity),
                    "" if r.specificity is None else repr(r.specificity),
                    r.n_frames])
    return buf.getvalue()


def read_eval_csv(text):
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append({
            "env": rec["env"],
            "subject": rec["subject"],
            "sensitivity": float(rec["sensitivity"]) if rec["sensitivity"] else None,
            "specificity": float(rec["specificity"]) if rec["specificity"] else None,
            "n_frames": int(rec["n_frames"]),
        })
    return rows


def surface_grid(reports, partition: IntervalPartition, cte_true=None, cte_e=None) -> dict:
    """Probability surface for a mission: one (H+1) x K grid per frame plus overlay lines."""
    if not reports:
        raise ValueError("no reports to export")
    n = len(reports)
    return {
        "boundaries": list(partition.boundaries),
        "horizon": reports[0].horizon,
        "t": [r.t for r in reports],
        "grids": [r.surface().tolist() for r in reports],
        "cte_true": None if cte_true is None else [float(v) for v in np.asarray(cte_true)[:n]],
        "cte_e": None if cte_e is None else [float(v) for v in np.asarray(cte_e)[:n]],
    }


def surface_export(reports, partition, out, fmt="json", cte_true=None, cte_e=None) -> list[Path]:
    """Write the surface as one JSON document (``out`` is a file) or one CSV per frame (``out`` is a dir).

    CSV columns: ``step`` (0 = filtered, 1..H lookahead), one column per
    state, then ``cte_true`` and ``cte_e`` (filled on the ``step == 0`` row).
    """
    grid = surface_grid(reports, partition, cte_true, cte_e)
    out = Path(out)
    if fmt == "json":
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(grid, separators=(",", ":")))
        return [out]
    if fmt != "csv":
        raise ValueError(f"unknown surface format {fmt!r}")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    states = [f"s{i}" for i in range(partition.n_states)]
    for i, (t, g) in enumerate(zip(grid["t"], grid["grids"])):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", *states, "cte_true", "cte_e"])
        for k, row in enumerate(g):
            extra = ["", ""]
            if k == 0:
                extra = ["" if grid["cte_true"] is None else repr(grid["cte_true"][i]),
                         "" if grid["cte_e"] is None else repr(grid["cte_e"][i])]
            w.writerow([k, *map(repr, row), *extra])
        p = out / f"surface_{t:05d}.csv"
        p.write_text(buf.getvalue())
        written.append(p)
    return written
