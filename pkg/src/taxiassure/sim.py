"""Desk-scale surrogate for the camera, perception network and steering loop.

Kinematics are constant-speed unicycle motion relative to the centerline.
Perception returns noisy (optionally biased) CTE/HE estimates and a feature
vector standing in for normalized image pixels: a sigmoid population code of
the true pose through a fixed embedding shared by every environment, shifted
by a per-environment bias to model lighting/visibility changes.
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .trajectory import Trajectory

N_FEATURES = 16
EMBEDDING_SEED = 20191105
MAX_HEADING = 90.0


def substream(seed, name, *keys):
    """Independent generator for a named component, e.g. ``substream(7, "sim", 3)``."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode()), *map(int, keys)])


@dataclass(frozen=True)
class Environment:
    name: str
    cte_std: float = 0.1
    he_std: float = 1.0
    cte_bias: float = 0.0
    feature_bias: float | tuple = 0.0
    feature_std: float = 0.02
    outlier_rate: float = 0.0
    disturbance_std: float = 0.0  # heading gust per step, degrees

    def __post_init__(self):
        if min(self.cte_std, self.he_std, self.feature_std, self.disturbance_std) < 0:
            raise ValueError("noise standard deviations must be non-negative")
        if not 0.0 <= self.outlier_rate <= 1.0:
            raise ValueError("outlier_rate must be a probability")
        if not isinstance(self.feature_bias, (int, float)):
            object.__setattr__(self, "feature_bias", tuple(float(b) for b in self.feature_bias))

    def bias_vector(self, d=N_FEATURES) -> np.ndarray:
        b = np.broadcast_to(np.asarray(self.feature_bias, dtype=float), (d,))
        return b.copy()

    def to_dict(self):
        d = dict(self.__dict__)
        if isinstance(d["feature_bias"], tuple):
            d["feature_bias"] = list(d["feature_bias"])
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def load_environments(path) -> list[Environment]:
    """Read one environment object, a list of them, or ``{"environments": [...]}``."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "environments" in data:
        data = data["environments"]
    if isinstance(data, dict):
        data = [data]
    envs = [Environment.from_dict(d) for d in data]
    if not envs:
        raise ValueError(f"{path}: no environments defined")
    return envs


def save_environments(envs, path):
    Path(path).write_text(json.dumps({"environments": [e.to_dict() for e in envs]}, indent=2) + "\n")


# Reference environments. The two training conditions and the unseen
# in-distribution one differ only mildly. The "shifted" pair changes the
# lighting a little (partly flagged as OOD) while the perception estimate
# becomes biased by a meter; "dusk-1930" is a gross shift that the monitor
# should flag almost always.
PRESETS = {
    "clear-0730": Environment("clear-0730", cte_std=0.10, he_std=1.0, feature_bias=0.0, feature_std=0.02,
                              outlier_rate=0.002, disturbance_std=3.0),
    "overcast-1215": Environment("overcast-1215", cte_std=0.15, he_std=1.5, feature_bias=0.15, feature_std=0.025,
                                 outlier_rate=0.002, disturbance_std=3.0),
    "clear-1000": Environment("clear-1000", cte_std=0.12, he_std=1.2, feature_bias=0.05, feature_std=0.02,
                              outlier_rate=0.002, disturbance_std=3.0),
    "clear-1145": Environment("clear-1145", cte_std=0.15, he_std=1.5, cte_bias=1.0, feature_bias=0.2,
                              feature_std=0.025, outlier_rate=0.02, disturbance_std=3.5),
    "overcast-1400": Environment("overcast-1400", cte_std=0.2, he_std=2.0, cte_bias=-1.0, feature_bias=-0.2,
                                 feature_std=0.025, outlier_rate=0.02, disturbance_std=3.5),
    "dusk-1930": Environment("dusk-1930", cte_std=0.25, he_std=2.0, cte_bias=1.0, feature_bias=3.5,
                             feature_std=0.03, outlier_rate=0.02, disturbance_std=3.5),
}
TRAIN_ENVS = ("clear-0730", "overcast-1215")
IN_DISTRIBUTION_TEST_ENV = "clear-1000"
SHIFTED_TEST_ENVS = ("clear-1145", "overcast-1400")
GROSS_SHIFT_ENV = "dusk-1930"


def embedding(d=N_FEATURES):
    """Fixed ``(d, 3)`` map of ``[cte_m, he_deg, 1]`` to feature logits.

    Each feature responds to CTE around its own center (spread over
    [-4, 4] m) with a slope of 1.5-4 per meter; heading enters weakly.
    """
    rng = np.random.default_rng(EMBEDDING_SEED)
    slope = rng.uniform(1.5, 4.0, d) * rng.choice([-1.0, 1.0], d)
    centers = np.linspace(-4.0, 4.0, d)
    rng.shuffle(centers)
    w_he = rng.normal(0.0, 0.03, d)
    return np.column_stack([slope, w_he, -slope * centers])


_W = embedding()


def features_for(cte, he, bias, noise):
    logits = _W[:, 0] * cte + _W[:, 1] * he + _W[:, 2] + bias
    return np.clip(1.0 / (1.0 + np.exp(-logits)) + noise, 0.0, 1.0)


@dataclass
class VehicleState:
    cte: float
    heading: float  # heading error, degrees
    speed: float = 4.0


@dataclass(frozen=True)
class PidGains:
    kp: float = 1.0
    ki: float = 0.05
    kd: float = 0.8
    u_max: float = 10.0  # deg/s


@dataclass
class PidController:
    """Steering-rate PID on the estimated CTE, damped by estimated heading error."""

    gains: PidGains = field(default_factory=PidGains)
    integral: float = 0.0
    integral_limit: float = 5.0

    def command(self, cte_e, he_e, dt):
        g = self.gains
        self.integral = float(np.clip(self.integral + cte_e * dt, -self.integral_limit, self.integral_limit))
        u = -(g.kp * cte_e + g.ki * self.integral + g.kd * he_e)
        return float(np.clip(u, -g.u_max, g.u_max))


@dataclass(frozen=True)
class Perception:
    cte_e: float
    he_e: float
    features: np.ndarray
    injected_outlier: bool


def perceive(state: VehicleState, env: Environment, rng, d=N_FEATURES) -> Perception:
    cte_e = state.cte + env.cte_bias + (rng.normal(0.0, env.cte_std) if env.cte_std > 0 else 0.0)
    he_e = state.heading + (rng.normal(0.0, env.he_std) if env.he_std > 0 else 0.0)
    noise = rng.normal(0.0, env.feature_std, d) if env.feature_std > 0 else np.zeros(d)
    feats = features_for(state.cte, state.heading, env.bias_vector(d), noise)
    outlier = bool(env.outlier_rate > 0 and rng.random() < env.outlier_rate)
    if outlier:
        feats = rng.random(d)
    return Perception(float(cte_e), float(he_e), feats, outlier)


def control_step(state: VehicleState, cte_e, he_e, pid: PidController, dt, half_width=10.0) -> VehicleState:
    u = pid.command(cte_e, he_e, dt)
    heading = float(np.clip(state.heading + u * dt, -MAX_HEADING, MAX_HEADING))
    cte = state.cte + state.speed * math.sin(math.radians(heading)) * dt
    cte = float(np.clip(cte, -half_width, half_width))
    return VehicleState(cte, heading, state.speed)


@dataclass(frozen=True)
class SimConfig:
    environment: Environment
    dt: float = 0.33
    duration: int = 200
    gains: PidGains = field(default_factory=PidGains)
    initial: VehicleState = field(default_factory=lambda: VehicleState(0.0, 0.0))
    seed: int = 0
    mission_id: int = 0
    half_width: float = 10.0
    n_features: int = N_FEATURES

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.duration < 1:
            raise ValueError("duration must be at least one step")


class Mission:
    """Step-by-step simulator, for running a monitor in lockstep."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.rng = substream(config.seed, "sim", config.mission_id)
        s = config.initial
        self.state = VehicleState(
            float(np.clip(s.cte, -config.half_width, config.half_width)),
            float(np.clip(s.heading, -MAX_HEADING, MAX_HEADING)),
            s.speed,
        )
        self.pid = PidController(config.gains)
        self.t = 0

    def observe(self) -> Perception:
        return perceive(self.state, self.config.environment, self.rng, self.config.n_features)

    def advance(self, obs: Perception):
        s = control_step(self.state, obs.cte_e, obs.he_e, self.pid, self.config.dt, self.config.half_width)
        gust = self.config.environment.disturbance_std
        if gust > 0:
            s.heading = float(np.clip(s.heading + self.rng.normal(0.0, gust), -MAX_HEADING, MAX_HEADING))
        self.state = s
        self.t += 1


def run_mission(config: SimConfig) -> Trajectory:
    m = Mission(config)
    n, d = config.duration, config.n_features
    cte, he, cte_e, he_e = np.empty(n), np.empty(n), np.empty(n), np.empty(n)
    feats, outl = np.empty((n, d)), np.zeros(n, dtype=bool)
    for i in range(n):
        obs = m.observe()
        cte[i], he[i] = m.state.cte, m.state.heading
        cte_e[i], he_e[i], feats[i], outl[i] = obs.cte_e, obs.he_e, obs.features, obs.injected_outlier
        m.advance(obs)
    return Trajectory(config.environment.name, cte, cte_e, he_e, feats, he_true=he, injected_outlier=outl)


def random_initial_state(rng, max_cte=4.0, max_heading=5.0, speed=4.0):
    return VehicleState(float(rng.uniform(-max_cte, max_cte)), float(rng.uniform(-max_heading, max_heading)), speed)


def generate_missions(envs, missions, steps, seed, **kw) -> list[Trajectory]:
    """``missions`` runs assigned round-robin over ``envs``, each with its own RNG stream."""
    out = []
    for i in range(missions):
        env = envs[i % len(envs)]
        init = random_initial_state(substream(seed, "init", i))
        out.append(run_mission(SimConfig(env, duration=steps, initial=init, seed=seed, mission_id=i, **kw)))
    return out


def with_outliers(env: Environment, rate=1.0) -> Environment:
    return replace(env, outlier_rate=rate)
