"""Assurance measures, the sufficiency criterion, and contingency actions.

The measure for ``|cte_a| < offset`` is the belief mass on the states lying
inside ``[-offset, offset]``. Offsets must coincide with partition edges; a
value quoted to two decimals (1.43 for 10/7) is snapped to the nearest edge
within :data:`OFFSET_SNAP` meters.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dbn import DbnModel, EvidenceFrame, FilterDiagnostics, evidence, filter_step, forecast
from .statespace import IntervalPartition

STOP_THRESHOLD = 0.3
SLOW_THRESHOLD = 0.15
DEFAULT_OFFSETS = (2.0, 1.43)
DEFAULT_HORIZON = 6
OFFSET_SNAP = 5e-3

CONTINUE, SLOW, STOP = "continue", "slow", "stop"


def inside_mask(partition: IntervalPartition, offset) -> np.ndarray:
    """Boolean mask of states whose interval lies within ``[-offset, offset]``."""
    edges = partition.edges
    lo = edges[np.argmin(np.abs(edges + offset))]
    hi = edges[np.argmin(np.abs(edges - offset))]
    if abs(lo + offset) > OFFSET_SNAP or abs(hi - offset) > OFFSET_SNAP:
        raise ValueError(f"offset {offset} is not a boundary of the CTE partition")
    if not lo < hi:
        raise ValueError(f"offset {offset} must be positive")
    return (edges[:-1] >= lo) & (edges[1:] <= hi)


def assurance_measure(belief, partition: IntervalPartition, offset) -> float:
    """Pr(|cte_a| < offset) under ``belief``.

    Computed as one minus the outside mass, so including every state gives
    exactly 1 and a wider offset can never give a smaller value.
    """
    return _measure(np.asarray(belief, dtype=float), ~inside_mask(partition, offset))


def _measure(belief, outside):
    return float(min(1.0, max(0.0, 1.0 - np.sum(np.where(outside, belief, 0.0)))))


def sufficiency(measures, threshold=STOP_THRESHOLD) -> list[bool]:
    """Per-step verdict: assured unless the violation mass ``1 - measure`` reaches ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return [not (1.0 - float(m) >= threshold) for m in measures]


def contingency(verdicts, measures, slow_threshold=SLOW_THRESHOLD) -> str:
    """Map a horizon of verdicts and measures to ``stop``, ``slow`` or ``continue``.

    Any non-assured step means stop now. Otherwise slow down when the worst
    violation mass over the horizon is at least ``slow_threshold``.
    """
    verdicts = list(verdicts)
    if not verdicts:
        raise ValueError("need at least one step")
    if not all(verdicts):
        return STOP
    worst = max(1.0 - float(m) for m in measures)
    return SLOW if worst >= slow_threshold else CONTINUE


@dataclass
class AssuranceReport:
    t: int
    measures: dict            # offset -> Pr at t = 0
    forecast_measures: list   # one dict per lookahead step
    verdicts: list            # t = 0..H, for the criterion offset
    action: str
    ood: bool
    belief: np.ndarray
    forecast_beliefs: list = field(default_factory=list)

    @property
    def horizon(self):
        return len(self.forecast_measures)

    def surface(self) -> np.ndarray:
        """(horizon + 1) x n_states belief grid, filtered row first."""
        return np.vstack([self.belief, *self.forecast_beliefs])

    def to_dict(self):
        key = _offset_key
        return {
            "t": self.t,
            "measures": {key(o): p for o, p in self.measures.items()},
            "forecast_measures": [{key(o): p for o, p in m.items()} for m in self.forecast_measures],
            "verdicts": list(self.verdicts),
            "action": self.action,
            "ood": self.ood,
            "belief": self.belief.tolist(),
            "forecast_beliefs": [b.tolist() for b in self.forecast_beliefs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d):
        return cls(
            t=d["t"],
            measures={float(o): p for o, p in d["measures"].items()},
            forecast_measures=[{float(o): p for o, p in m.items()} for m in d["forecast_measures"]],
            verdicts=list(d["verdicts"]),
            action=d["action"],
            ood=d["ood"],
            belief=np.asarray(d["belief"]),
            forecast_beliefs=[np.asarray(b) for b in d["forecast_beliefs"]],
        )


def _offset_key(o):
    return repr(float(o))


class AssuranceSession:
    """Per-mission monitor state: the running belief and the last frame.

    Verdicts and actions use the first offset as the criterion offset.
    """

    def __init__(self, model: DbnModel, offsets=DEFAULT_OFFSETS, horizon=DEFAULT_HORIZON,
                 threshold=STOP_THRESHOLD, slow_threshold=SLOW_THRESHOLD, belief=None, forecast_mode=None):
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        self.model = model
        self.offsets = tuple(float(o) for o in offsets)
        if not self.offsets:
            raise ValueError("need at least one offset")
        self._masks = [~inside_mask(model.cte_partition, o) for o in self.offsets]
        self.horizon = int(horizon)
        self.threshold = threshold
        self.slow_threshold = slow_threshold
        self.forecast_mode = forecast_mode
        self.belief = model.initial_belief() if belief is None else np.asarray(belief, dtype=float)
        self.prev_frame = None
        self.diagnostics = FilterDiagnostics()

    def _measures(self, b):
        return {o: _measure(b, outside) for o, outside in zip(self.offsets, self._masks)}

    def step(self, frame: EvidenceFrame) -> AssuranceReport:
        ev = evidence(self.model, frame)
        b = filter_step(self.model, self.belief, frame, self.prev_frame, self.diagnostics, _evidence=ev)
        ahead = forecast(self.model, b, frame, self.horizon, self.forecast_mode)
        now = self._measures(b)
        future = [self._measures(x) for x in ahead]
        crit = self.offsets[0]
        series = [now[crit]] + [m[crit] for m in future]
        verdicts = sufficiency(series, self.threshold)
        action = contingency(verdicts, series, self.slow_threshold)
        self.belief, self.prev_frame = b, frame
        return AssuranceReport(frame.t, now, future, verdicts, action, ev[1], b, ahead)


def step(model, session: AssuranceSession, frame: EvidenceFrame) -> AssuranceReport:
    if session.model is not model:
        raise ValueError("session was opened on a different model")
    return session.step(frame)


def monitor_trajectory(model, trajectory, **session_kw) -> list[AssuranceReport]:
    """Replay a recorded mission through a fresh session."""
    s = AssuranceSession(model, **session_kw)
    return [
        s.step(EvidenceFrame(trajectory.features[i], float(trajectory.cte_e[i]), float(trajectory.he_e[i]), i))
        for i in range(len(trajectory))
    ]


def write_reports(reports, fh):
    for r in reports:
        fh.write(r.to_json() + "\n")


def read_reports(fh) -> list[AssuranceReport]:
    return [AssuranceReport.from_dict(json.loads(line)) for line in fh if line.strip()]
