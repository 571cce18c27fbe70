"""Two-slice dynamic Bayesian network over the true cross-track error.

Per slice the latent ``cte_a`` has three parents in the previous slice
(``cte_a``, ``cte_e``, ``he_e``) and receives evidence from the current
perception features, gated by the outlier flag ``D``. When ``D`` is raised
the features carry no evidence and the likelihood is uniform.

Filtering is exact forward recursion. Forecasting unrolls the network with
no further evidence. The first lookahead step uses the last observed
``cte_e``/``he_e``; later steps either marginalize those parents through a
learned sensor/heading-persistence model (``"marginal"``) or hold the last
observation fixed (``"hold"``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forest import EmissionForest
from .ood import OodMonitor
from .statespace import IntervalPartition, locate, uniform
from .transition import ParentModel, TransitionCPT

FORMAT_VERSION = 1
FORECAST_MODES = ("marginal", "hold")


class ModelError(ValueError):
    """Inconsistent model components or inputs of the wrong shape."""


@dataclass(frozen=True)
class EvidenceFrame:
    features: np.ndarray
    cte_e: float
    he_e: float
    t: int = 0


@dataclass
class DbnModel:
    cte_partition: IntervalPartition
    cte_e_partition: IntervalPartition
    he_partition: IntervalPartition
    transition: TransitionCPT
    emission: EmissionForest | None
    ood: OodMonitor | None
    step_duration: float = 0.33
    training_environments: tuple = ()
    metadata: dict = field(default_factory=dict)
    parents: ParentModel | None = None

    def __post_init__(self):
        ka = self.cte_partition.n_states
        expected = (ka, self.cte_e_partition.n_states, self.he_partition.n_states, ka)
        if self.transition.shape != expected:
            raise ModelError(f"transition table {self.transition.shape} does not match partitions {expected}")
        if self.emission is not None:
            if self.emission.n_states != ka:
                raise ModelError("emission forest and CTE partition disagree on state count")
            if self.ood is not None and self.ood.n_features != self.emission.n_features:
                raise ModelError("OOD monitor and emission forest disagree on feature dimension")
        if self.parents is not None:
            ke, kh = self.cte_e_partition.n_states, self.he_partition.n_states
            if self.parents.sensor.shape != (ka, ke) or self.parents.heading.shape != (kh, kh):
                raise ModelError("parent model does not match partitions")
        if not self.step_duration > 0:
            raise ModelError("step_duration must be positive")
        self.training_environments = tuple(self.training_environments)

    @property
    def n_states(self):
        return self.cte_partition.n_states

    @property
    def n_features(self):
        if self.emission is not None:
            return self.emission.n_features
        return self.ood.n_features if self.ood is not None else None

    def discretize_parents(self, cte_e, he_e):
        """State indices of the observed parents, clamping raw values into range."""
        e = locate(self.cte_e_partition, self.cte_e_partition.clamp(cte_e))
        h = locate(self.he_partition, self.he_partition.clamp(he_e))
        return e, h

    def initial_belief(self):
        return uniform(self.n_states)

    # -- persistence -------------------------------------------------------
    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "step_duration": self.step_duration,
            "training_environments": list(self.training_environments),
            "partitions": {
                "cte_a": self.cte_partition.to_dict(),
                "cte_e": self.cte_e_partition.to_dict(),
                "he_e": self.he_partition.to_dict(),
            },
            "transition": self.transition.to_dict(),
            "emission": None if self.emission is None else self.emission.to_dict(),
            "ood": None if self.ood is None else self.ood.to_dict(),
            "parents": None if self.parents is None else self.parents.to_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION:
            raise ModelError(f"unsupported model format {d.get('format_version')!r}")
        p = d["partitions"]
        return cls(
            cte_partition=IntervalPartition.from_dict(p["cte_a"]),
            cte_e_partition=IntervalPartition.from_dict(p["cte_e"]),
            he_partition=IntervalPartition.from_dict(p["he_e"]),
            transition=TransitionCPT.from_dict(d["transition"]),
            emission=None if d["emission"] is None else EmissionForest.from_dict(d["emission"]),
            ood=None if d["ood"] is None else OodMonitor.from_dict(d["ood"]),
            step_duration=float(d["step_duration"]),
            training_environments=tuple(d.get("training_environments", ())),
            metadata=d.get("metadata", {}),
            parents=None if d.get("parents") is None else ParentModel.from_dict(d["parents"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "DbnModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check_belief(model, belief):
    b = np.asarray(belief, dtype=float)
    if b.shape != (model.n_states,):
        raise ModelError(f"belief has shape {b.shape}, model has {model.n_states} CTE states")
    return b


def predict_step(model: DbnModel, belief, cte_e_state: int, he_e_state: int) -> np.ndarray:
    """One time-slice transition: ``b'(x) = sum_x' T(x | x', e, h) b(x')``."""
    b = _check_belief(model, belief)
    out = b @ model.transition.matrix(cte_e_state, he_e_state)
    return out / out.sum()


def evidence(model: DbnModel, frame: EvidenceFrame):
    """``(likelihood, outlier_flag)`` for one frame; uniform likelihood when flagged."""
    x = np.asarray(frame.features, dtype=float)
    if model.n_features is not None and x.shape != (model.n_features,):
        raise ModelError(f"frame has {x.shape} features, model expects {model.n_features}")
    flagged = model.ood.detect(x) if model.ood is not None else False
    if flagged or model.emission is None:
        return uniform(model.n_states), bool(flagged)
    return model.emission.predict(x), False


def emission_likelihood(model: DbnModel, frame: EvidenceFrame) -> np.ndarray:
    return evidence(model, frame)[0]


@dataclass
class FilterDiagnostics:
    zero_product_fallbacks: int = 0


def filter_step(model: DbnModel, belief, frame: EvidenceFrame, prev_frame: EvidenceFrame | None = None,
                diagnostics: FilterDiagnostics | None = None, _evidence=None) -> np.ndarray:
    """Posterior over ``cte_a`` at ``frame.t``.

    ``belief`` is the posterior at the previous slice and ``prev_frame`` the
    observations recorded there; they supply the ``cte_e``/``he_e`` parents
    of the transition. With ``prev_frame=None`` (the first frame of a
    mission) ``belief`` is taken as the prior for this slice directly.
    """
    if prev_frame is None:
        prior = _check_belief(model, belief)
    else:
        prior = predict_step(model, belief, *model.discretize_parents(prev_frame.cte_e, prev_frame.he_e))
    likelihood, flagged = _evidence if _evidence is not None else evidence(model, frame)
    if flagged:
        return prior
    post = prior * likelihood
    total = post.sum()
    if not total > 0:
        if diagnostics is not None:
            diagnostics.zero_product_fallbacks += 1
        return prior
    return post / total


def forecast(model: DbnModel, belief, last_frame: EvidenceFrame, steps: int, mode=None) -> list[np.ndarray]:
    """Beliefs for lookahead steps ``1..steps`` with no new evidence.

    ``mode`` defaults to ``"marginal"`` when the model carries a parent
    model and ``"hold"`` otherwise. In marginal mode the forecast runs over
    the joint ``(cte_a, he_e)``; ``cte_e`` is summed out through the sensor
    model at every step.
    """
    if steps < 1:
        raise ValueError("forecast needs at least one step")
    if mode is None:
        mode = "marginal" if model.parents is not None else "hold"
    if mode not in FORECAST_MODES:
        raise ValueError(f"unknown forecast mode {mode!r}")
    if mode == "marginal" and model.parents is None:
        raise ModelError("marginal forecasting needs a parent model")
    e, h = model.discretize_parents(last_frame.cte_e, last_frame.he_e)
    b = _check_belief(model, belief) @ model.transition.matrix(e, h)
    b = b / b.sum()
    out = [b]
    if mode == "hold":
        m = model.transition.matrix(e, h)
        for _ in range(steps - 1):
            b = b @ m
            b = b / b.sum()
            out.append(b)
        return out
    sensor, persist = model.parents.sensor, model.parents.heading
    # K[a, h, a'] = sum_e Pr(e | a) T(a' | a, e, h)
    K = np.einsum("ae,aehb->ahb", sensor, model.transition.table)
    joint = np.outer(b, persist[h])
    for _ in range(steps - 1):
        joint = np.einsum("ah,ahb,hk->bk", joint, K, persist)
        joint = joint / joint.sum()
        out.append(joint.sum(axis=1))
    return out


def run_filter(model: DbnModel, frames, belief=None) -> list[np.ndarray]:
    """Filtered beliefs for a whole frame sequence, starting from ``belief`` (uniform by default)."""
    b = model.initial_belief() if belief is None else belief
    prev = None
    out = []
    for f in frames:
        b = filter_step(model, b, f, prev)
        out.append(b)
        prev = f
    return out
