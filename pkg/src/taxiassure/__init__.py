"""Runtime assurance for vision-based autonomous taxiing.

A discrete dynamic Bayesian network tracks the true cross-track error from
perception features and the perception loop's own estimates, then turns
filtered and forecast beliefs into assurance measures and contingency
actions (continue, slow, stop).
"""
__version__ = "0.1.0"

from .assurance import (
    AssuranceReport,
    AssuranceSession,
    assurance_measure,
    contingency,
    monitor_trajectory,
    step,
    sufficiency,
)
from .dbn import DbnModel, EvidenceFrame, filter_step, forecast, predict_step, run_filter
from .evaluation import ConfusionCounts, classify_frame, evaluate, surface_export
from .forest import EmissionForest, ForestConfig, fit_forest
from .ood import OodMonitor, fit_ood
from .sim import PRESETS, Environment, SimConfig, generate_missions, run_mission
from .statespace import IntervalPartition, make_cte_partition, make_heading_partition
from .trajectory import Trajectory
from .training import TrainingConfig, train_model
from .transition import ParentModel, TransitionCPT, fit_parents, fit_transition
