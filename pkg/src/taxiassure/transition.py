"""Transition model Pr(cte_a[t] | cte_a[t-1], cte_e[t-1], he_e[t-1]).

The table is dense, indexed ``table[a_prev, e_prev, h_prev, a_next]``. Rows
are MAP estimates of a multinomial under a symmetric Dirichlet prior, so a
parent configuration never seen in training gets an exactly uniform row.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statespace import IntervalPartition, locate_many

ROW_TOL = 1e-12


@dataclass
class TransitionCPT:
    table: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float)
        if self.table.ndim != 4 or self.table.shape[0] != self.table.shape[3]:
            raise ValueError("table must have shape (Ka, Ke, Kh, Ka)")
        if np.any(self.table < 0):
            raise ValueError("transition probabilities must be non-negative")
        err = np.abs(self.table.sum(axis=-1) - 1.0).max()
        if err > ROW_TOL:
            raise ValueError(f"transition rows must sum to 1 (max error {err:.3g})")

    @property
    def shape(self):
        return self.table.shape

    @property
    def n_states(self):
        return self.table.shape[0]

    def row(self, a_prev, e_prev, h_prev) -> np.ndarray:
        return self.table[a_prev, e_prev, h_prev]

    def matrix(self, e_prev, h_prev) -> np.ndarray:
        """Ka x Ka stochastic matrix for fixed observed parents."""
        return self.table[:, e_prev, h_prev, :]

    def visited(self) -> int | None:
        """Number of parent configurations with at least one observation."""
        if self.counts is None:
            return None
        return int((self.counts.sum(axis=-1) > 0).sum())

    def to_dict(self):
        # row-major over (a_prev, e_prev, h_prev, a_next)
        return {"shape": list(self.table.shape), "order": ["cte_a_prev", "cte_e_prev", "he_e_prev", "cte_a"],
                "values": self.table.ravel().tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["values"], dtype=float).reshape(d["shape"]))


def map_rows(counts, alpha) -> np.ndarray:
    """``(count + alpha - 1) / (N + K (alpha - 1))`` along the last axis."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1; alpha = 1 leaves unseen rows undefined")
    counts = np.asarray(counts, dtype=float)
    k = counts.shape[-1]
    n = counts.sum(axis=-1, keepdims=True)
    rows = (counts + alpha - 1.0) / (n + k * (alpha - 1.0))
    # unseen rows: exact uniform, not merely (alpha-1)/(K(alpha-1))
    rows[(n == 0).squeeze(-1)] = 1.0 / k
    return rows


def count_transitions(trajectories, cte_partition: IntervalPartition, cte_e_partition: IntervalPartition,
                      he_partition: IntervalPartition) -> np.ndarray:
    ka, ke, kh = cte_partition.n_states, cte_e_partition.n_states, he_partition.n_states
    counts = np.zeros((ka, ke, kh, ka), dtype=np.int64)
    for tr in trajectories:
        if len(tr) < 2:
            continue
        a = locate_many(cte_partition, cte_partition.clamp(tr.cte_true))
        e = locate_many(cte_e_partition, cte_e_partition.clamp(tr.cte_e))
        h = locate_many(he_partition, he_partition.clamp(tr.he_e))
        np.add.at(counts, (a[:-1], e[:-1], h[:-1], a[1:]), 1)
    return counts


def fit_transition(trajectories, cte_partition, cte_e_partition, he_partition, alpha=2.0) -> TransitionCPT:
    """MAP transition table from consecutive frames of the given trajectories."""
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("no trajectories to fit the transition model on")
    if not alpha > 1:
        raise ValueError("alpha must exceed 1; alpha = 1 leaves unseen rows undefined")
    counts = count_transitions(trajectories, cte_partition, cte_e_partition, he_partition)
    if counts.sum() == 0:
        raise ValueError("trajectories contain no consecutive frames")
    return TransitionCPT(map_rows(counts, alpha), counts=counts)


@dataclass
class ParentModel:
    """Distributions for the observed parents once observations stop.

    ``sensor[a, e]`` is Pr(cte_e | cte_a) in the same slice and
    ``heading[h, h']`` is Pr(he_e[t+1] | he_e[t]). Both are MAP estimates
    with the same Dirichlet prior as the transition table.
    """

    sensor: np.ndarray
    heading: np.ndarray

    def __post_init__(self):
        self.sensor = np.asarray(self.sensor, dtype=float)
        self.heading = np.asarray(self.heading, dtype=float)
        if self.sensor.ndim != 2 or self.heading.ndim != 2 or self.heading.shape[0] != self.heading.shape[1]:
            raise ValueError("sensor must be (Ka, Ke) and heading (Kh, Kh)")
        for name, m in (("sensor", self.sensor), ("heading", self.heading)):
            if np.any(m < 0) or np.abs(m.sum(axis=-1) - 1.0).max() > ROW_TOL:
                raise ValueError(f"{name} rows must be probability vectors")

    def to_dict(self):
        return {"sensor": self.sensor.tolist(), "heading": self.heading.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["sensor"], d["heading"])


def fit_parents(trajectories, cte_partition, cte_e_partition, he_partition, alpha=2.0) -> ParentModel:
    ka, ke, kh = cte_partition.n_states, cte_e_partition.n_states, he_partition.n_states
    sensor = np.zeros((ka, ke))
    heading = np.zeros((kh, kh))
    for tr in trajectories:
        a = locate_many(cte_partition, cte_partition.clamp(tr.cte_true))
        e = locate_many(cte_e_partition, cte_e_partition.clamp(tr.cte_e))
        h = locate_many(he_partition, he_partition.clamp(tr.he_e))
        np.add.at(sensor, (a, e), 1)
        np.add.at(heading, (h[:-1], h[1:]), 1)
    return ParentModel(map_rows(sensor, alpha), map_rows(heading, alpha))
