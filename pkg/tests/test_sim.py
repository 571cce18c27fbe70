import numpy as np
import pytest

from taxiassure.sim import (
    PRESETS,
    Environment,
    Mission,
    PidController,
    SimConfig,
    VehicleState,
    control_step,
    features_for,
    generate_missions,
    load_environments,
    perceive,
    run_mission,
    save_environments,
    substream,
    with_outliers,
)
from taxiassure.trajectory import Trajectory, group_by_env, load_glob


def test_substreams_are_independent_and_stable():
    a = substream(7, "sim", 0).random(3)
    np.testing.assert_array_equal(a, substream(7, "sim", 0).random(3))
    assert not np.allclose(a, substream(7, "sim", 1).random(3))
    assert not np.allclose(a, substream(7, "forest", 0).random(3))


def test_pid_pulls_toward_centerline():
    s = VehicleState(1.5, 0.0)
    pid = PidController()
    for _ in range(60):
        s = control_step(s, s.cte, s.heading, pid, 0.33)
    assert abs(s.cte) < 0.2


def test_from_1p5m_stays_inside_2m():
    env = Environment("calm", cte_std=0.1, he_std=1.0, disturbance_std=3.0)
    tr = run_mission(SimConfig(env, duration=300, initial=VehicleState(1.5, 0.0), seed=3))
    assert np.mean(np.abs(tr.cte_true) < 2.0) >= 0.95


def test_features_are_bounded_and_pose_dependent():
    f0 = features_for(0.0, 0.0, np.zeros(16), np.zeros(16))
    f1 = features_for(1.0, 0.0, np.zeros(16), np.zeros(16))
    assert ((0 <= f0) & (f0 <= 1)).all()
    assert np.abs(f1 - f0).max() > 0.2


def test_forced_outliers_are_marked():
    env = with_outliers(PRESETS["clear-1000"])
    p = perceive(VehicleState(0.0, 0.0), env, np.random.default_rng(0))
    assert p.injected_outlier
    tr = run_mission(SimConfig(env, duration=20))
    assert tr.injected_outlier.all()


def test_bias_shifts_estimate():
    env = Environment("b", cte_std=0.0, he_std=0.0, cte_bias=1.0)
    p = perceive(VehicleState(0.5, 2.0), env, np.random.default_rng(0))
    assert (p.cte_e, p.he_e) == (1.5, 2.0)


def test_generate_is_deterministic_and_round_robin():
    envs = [PRESETS["clear-0730"], PRESETS["overcast-1215"]]
    a = generate_missions(envs, 3, 50, seed=4)
    b = generate_missions(envs, 3, 50, seed=4)
    assert [t.env for t in a] == ["clear-0730", "overcast-1215", "clear-0730"]
    for x, y in zip(a, b):
        assert x.to_csv() == y.to_csv()
    assert generate_missions(envs, 1, 50, seed=5)[0].to_csv() != a[0].to_csv()
    assert sum(len(t) for t in generate_missions(envs, 50, 200, seed=1)) == 10_000


def test_mission_lockstep_matches_batch():
    cfg = SimConfig(PRESETS["clear-1000"], duration=30, seed=2, initial=VehicleState(0.7, 1.0))
    m = Mission(cfg)
    cte = []
    for _ in range(30):
        obs = m.observe()
        cte.append(m.state.cte)
        m.advance(obs)
    np.testing.assert_array_equal(cte, run_mission(cfg).cte_true)


def test_environment_files(tmp_path):
    p = tmp_path / "envs.json"
    save_environments([PRESETS["clear-1145"], Environment("v", feature_bias=(0.1,) * 16)], p)
    envs = load_environments(p)
    assert envs[0] == PRESETS["clear-1145"] and envs[1].feature_bias == (0.1,) * 16
    (tmp_path / "one.json").write_text('{"name": "solo", "cte_std": 0.3}')
    assert load_environments(tmp_path / "one.json")[0].cte_std == 0.3
    with pytest.raises(ValueError):
        Environment("bad", cte_std=-1.0)
    with pytest.raises(ValueError):
        Environment("bad", outlier_rate=2.0)


def test_trajectory_csv_round_trip(tmp_path):
    tr = generate_missions([PRESETS["clear-1000"]], 2, 40, seed=9)
    for i, t in enumerate(tr):
        t.save(tmp_path / f"m{i}.csv")
    back = load_glob(str(tmp_path / "*.csv"))
    np.testing.assert_array_equal(back[0].features, tr[0].features)
    np.testing.assert_array_equal(back[1].cte_true, tr[1].cte_true)
    assert list(group_by_env(back)) == ["clear-1000"]
    with pytest.raises(FileNotFoundError):
        load_glob(str(tmp_path / "nothing*.csv"))
    with pytest.raises(ValueError):
        Trajectory("x", [0.0, 1.0], [0.0], [0.0, 0.0], np.zeros((2, 3)))
