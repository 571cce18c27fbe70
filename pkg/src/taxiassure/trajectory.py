"""Recorded taxi missions and their CSV format.

Header: ``t,env,cte_true,cte_e,he_e,f0..f{d-1}``. Floats are written with
``repr`` so a save/load cycle is exact and output is byte-reproducible.
"""
from __future__ import annotations

import csv
import glob as _glob
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

BASE_COLUMNS = ("t", "env", "cte_true", "cte_e", "he_e")


@dataclass
class Trajectory:
    env: str
    cte_true: np.ndarray
    cte_e: np.ndarray
    he_e: np.ndarray
    features: np.ndarray  # (n, d)
    he_true: np.ndarray | None = None
    injected_outlier: np.ndarray | None = None

    def __post_init__(self):
        self.cte_true = np.asarray(self.cte_true, dtype=float)
        self.cte_e = np.asarray(self.cte_e, dtype=float)
        self.he_e = np.asarray(self.he_e, dtype=float)
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        n = len(self.cte_true)
        if not (len(self.cte_e) == len(self.he_e) == len(self.features) == n):
            raise ValueError("trajectory columns differ in length")

    def __len__(self):
        return len(self.cte_true)

    @property
    def t(self):
        return np.arange(len(self))

    @property
    def n_features(self):
        return self.features.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BASE_COLUMNS + tuple(f"f{i}" for i in range(self.n_features)))
        for i in range(len(self)):
            w.writerow(
                [i, self.env, repr(float(self.cte_true[i])), repr(float(self.cte_e[i])), repr(float(self.he_e[i]))]
                + [repr(float(v)) for v in self.features[i]]
            )
        return buf.getvalue()

    def save(self, path):
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty trajectory file")
        header, body = rows[0], rows[1:]
        if tuple(header[:5]) != BASE_COLUMNS:
            raise ValueError(f"unexpected trajectory header {header[:5]}")
        fcols = header[5:]
        if fcols != [f"f{i}" for i in range(len(fcols))]:
            raise ValueError("feature columns must be f0..f{d-1}")
        if not body:
            raise ValueError("trajectory has no frames")
        t = [int(r[0]) for r in body]
        if t != list(range(len(body))):
            raise ValueError("time indices must be contiguous from 0")
        envs = {r[1] for r in body}
        if len(envs) != 1:
            raise ValueError(f"one environment per trajectory, found {sorted(envs)}")
        num = np.array([[float(v) for v in r[2:]] for r in body])
        return cls(
            env=envs.pop(),
            cte_true=num[:, 0],
            cte_e=num[:, 1],
            he_e=num[:, 2],
            features=num[:, 3:],
        )

    @classmethod
    def load(cls, path) -> "Trajectory":
        return cls.from_csv(Path(path).read_text())


def load_glob(pattern) -> list[Trajectory]:
    """Load every CSV matching ``pattern`` in sorted path order."""
    paths = sorted(_glob.glob(str(pattern)))
    if not paths:
        raise FileNotFoundError(f"no trajectory files match {pattern!r}")
    return [Trajectory.load(p) for p in paths]


def group_by_env(trajectories) -> dict[str, list[Trajectory]]:
    groups: dict[str, list[Trajectory]] = {}
    for tr in trajectories:
        groups.setdefault(tr.env, []).append(tr)
    return groups
