"""Fit every learned distribution of the network from recorded missions."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dbn import DbnModel
from .forest import ForestConfig, fit_forest
from .ood import fit_ood
from .statespace import locate_many, make_cte_partition, make_heading_partition
from .transition import fit_parents, fit_transition

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    forest: ForestConfig = field(default_factory=ForestConfig)
    alpha: float = 2.0
    ood_quantile: float = 0.99
    offset: float = 2.0
    inner_states: int = 7
    half_width: float = 10.0
    he_offset: float = 30.0
    he_half_width: float = 90.0
    step_duration: float = 0.33


@dataclass
class TrainingSummary:
    frames: int
    environments: tuple
    rows_visited: int
    rows_total: int
    oob_accuracy: float | None
    ood_threshold: float

    def lines(self):
        oob = "n/a" if self.oob_accuracy is None else f"{self.oob_accuracy:.3f}"
        return [
            f"frames: {self.frames} from {', '.join(self.environments)}",
            f"transition rows visited: {self.rows_visited}/{self.rows_total}",
            f"forest out-of-bag accuracy: {oob}",
            f"OOD threshold (distance): {self.ood_threshold:.3f}",
        ]


def train_model(trajectories, config: TrainingConfig | None = None):
    """Return ``(DbnModel, TrainingSummary)`` fitted on ``trajectories``."""
    config = config or TrainingConfig()
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("no training trajectories")
    cte_p = make_cte_partition(config.offset, config.inner_states, config.half_width)
    cte_e_p = make_cte_partition(config.offset, config.inner_states, config.half_width)
    he_p = make_heading_partition(config.he_offset, config.inner_states, config.he_half_width)

    cpt = fit_transition(trajectories, cte_p, cte_e_p, he_p, alpha=config.alpha)
    parents = fit_parents(trajectories, cte_p, cte_e_p, he_p, alpha=config.alpha)

    X = np.vstack([tr.features for tr in trajectories])
    y = np.concatenate([locate_many(cte_p, cte_p.clamp(tr.cte_true)) for tr in trajectories])
    forest = fit_forest(X, y, cte_p.n_states, config.forest)
    ood = fit_ood(X, config.ood_quantile)

    envs = tuple(sorted({tr.env for tr in trajectories}))
    model = DbnModel(cte_p, cte_e_p, he_p, cpt, forest, ood, step_duration=config.step_duration,
                     training_environments=envs,
                     metadata={"alpha": config.alpha, "ood_quantile": config.ood_quantile},
                     parents=parents)
    summary = TrainingSummary(
        frames=len(y),
        environments=envs,
        rows_visited=cpt.visited(),
        rows_total=int(np.prod(cpt.shape[:3])),
        oob_accuracy=forest.oob_accuracy(X, y),
        ood_threshold=ood.threshold,
    )
    for line in summary.lines():
        log.info(line)
    return model, summary
