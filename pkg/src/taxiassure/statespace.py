"""Discretized random variables and discrete-distribution helpers.

Every continuous quantity the network reasons about (true and estimated
cross-track error, estimated heading error) is mapped onto an
:class:`IntervalPartition`. Intervals are half-open ``[a, b)`` except the
last one, which is closed, so every admissible value has exactly one state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# Renormalization is only a float-drift fix; anything larger is a caller bug.
BELIEF_DRIFT_TOL = 1e-9


class OutOfRangeError(ValueError):
    """Raised when a value falls outside a partition's outer bounds."""


@dataclass(frozen=True)
class IntervalPartition:
    """Ordered, gap-free intervals over a real line segment.

    Parameters
    ----------
    boundaries : sequence of float
        Strictly increasing edges; ``len(boundaries) - 1`` intervals.
    unit : str
        ``"m"`` for cross-track variables, ``"deg"`` for heading.
    labels : tuple of str, optional
        One label per interval. Generated from the edges when omitted.
    """

    boundaries: tuple[float, ...]
    unit: str = "m"
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        if len(b) < 2:
            raise ValueError("a partition needs at least two boundaries")
        if not all(np.isfinite(b)):
            raise ValueError("boundaries must be finite")
        if any(hi <= lo for lo, hi in zip(b, b[1:])):
            raise ValueError("boundaries must be strictly increasing")
        object.__setattr__(self, "boundaries", b)
        if not self.labels:
            labels = tuple(f"[{lo:.3g},{hi:.3g})" for lo, hi in zip(b, b[1:]))
            labels = labels[:-1] + (labels[-1][:-1] + "]",)
            object.__setattr__(self, "labels", labels)
        elif len(self.labels) != len(b) - 1:
            raise ValueError("need exactly one label per interval")
        else:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_states(self) -> int:
        return len(self.boundaries) - 1

    @property
    def low(self) -> float:
        return self.boundaries[0]

    @property
    def high(self) -> float:
        return self.boundaries[-1]

    @property
    def edges(self) -> np.ndarray:
        return np.asarray(self.boundaries)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    def locate(self, value: float) -> int:
        return locate(self, value)

    def clamp(self, value):
        return np.clip(value, self.low, self.high)

    def to_dict(self) -> dict:
        return {"boundaries": list(self.boundaries), "unit": self.unit}

    @classmethod
    def from_dict(cls, d: dict) -> "IntervalPartition":
        return cls(tuple(d["boundaries"]), unit=d.get("unit", "m"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "IntervalPartition":
        return cls.from_dict(json.loads(text))


def make_symmetric_partition(offset, inner_states, half_width, unit="m"):
    """Equal-width inner states over ``[-offset, offset]`` plus two outer states.

    The outer states run from ``-half_width`` to ``-offset`` and from
    ``offset`` to ``half_width``. Negative values are left of the centerline.
    """
    if not offset > 0:
        raise ValueError(f"offset must be positive, got {offset}")
    if int(inner_states) != inner_states or inner_states < 3 or inner_states % 2 == 0:
        raise ValueError(f"inner_states must be an odd integer >= 3, got {inner_states}")
    if not half_width > offset:
        raise ValueError(f"half_width ({half_width}) must exceed offset ({offset})")
    inner_states = int(inner_states)
    width = 2.0 * offset / inner_states
    inner = [-offset + i * width for i in range(inner_states + 1)]
    # Pin the end point and force exact antisymmetry so +/-x are both edges.
    inner[-1] = offset
    half = inner_states // 2
    for i in range(half + 1):
        inner[inner_states - i] = -inner[i]
    return IntervalPartition((-half_width, *inner, half_width), unit=unit)


def make_cte_partition(offset=2.0, inner_states=7, half_width=10.0):
    """Cross-track error partition in meters."""
    return make_symmetric_partition(offset, inner_states, half_width, unit="m")


def make_heading_partition(offset=30.0, inner_states=7, half_width=90.0):
    """Heading-error partition in degrees."""
    return make_symmetric_partition(offset, inner_states, half_width, unit="deg")


def locate(partition: IntervalPartition, value: float) -> int:
    """Index of the interval containing ``value``.

    Intervals are ``[a, b)``; the last is ``[a, b]``. So a value sitting
    exactly on an interior edge belongs to the interval to its right.
    """
    v = float(value)
    if not (partition.low <= v <= partition.high):
        raise OutOfRangeError(
            f"{v} outside [{partition.low}, {partition.high}] {partition.unit}; clamp first"
        )
    idx = int(np.searchsorted(partition.edges, v, side="right")) - 1
    return min(idx, partition.n_states - 1)


def locate_many(partition: IntervalPartition, values) -> np.ndarray:
    """Vectorized :func:`locate`; same convention and range check."""
    v = np.asarray(values, dtype=float)
    if v.size and (v.min() < partition.low or v.max() > partition.high):
        raise OutOfRangeError(f"values outside [{partition.low}, {partition.high}]")
    idx = np.searchsorted(partition.edges, v, side="right") - 1
    return np.minimum(idx, partition.n_states - 1)


def as_belief(probabilities, n_states: int | None = None) -> np.ndarray:
    """Validate a probability vector and return it as a float array.

    Negative entries are rejected. A sum off by less than ``1e-9`` is
    renormalized away; any larger drift raises.
    """
    p = np.array(probabilities, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("a belief is a non-empty 1-d vector")
    if n_states is not None and p.size != n_states:
        raise ValueError(f"belief has {p.size} states, expected {n_states}")
    if not np.all(np.isfinite(p)):
        raise ValueError("belief entries must be finite")
    if np.any(p < 0):
        raise ValueError("belief entries must be non-negative")
    total = p.sum()
    if abs(total - 1.0) > BELIEF_DRIFT_TOL:
        raise ValueError(f"belief sums to {total!r}, not 1")
    return p / total


def normalize(weights) -> np.ndarray:
    """Scale non-negative weights to sum to one."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not total > 0:
        raise ValueError("cannot normalize an all-zero weight vector")
    return w / total


def uniform(n_states: int) -> np.ndarray:
    return np.full(n_states, 1.0 / n_states)


def entropy(belief) -> float:
    """Shannon entropy in nats, with ``0 log 0 = 0``."""
    p = np.asarray(belief, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())
