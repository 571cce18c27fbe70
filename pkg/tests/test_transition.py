import numpy as np
import pytest

from taxiassure.statespace import make_cte_partition, make_heading_partition
from taxiassure.trajectory import Trajectory
from taxiassure.transition import (
    ParentModel,
    TransitionCPT,
    count_transitions,
    fit_parents,
    fit_transition,
    map_rows,
)


def test_map_rows_closed_form():
    counts = np.array([[3, 0, 1], [0, 0, 0]])
    rows = map_rows(counts, 2.0)
    np.testing.assert_array_equal(rows[0], [4 / 7, 1 / 7, 2 / 7])
    np.testing.assert_array_equal(rows[1], [1 / 3, 1 / 3, 1 / 3])


def test_map_rows_rejects_alpha_one():
    with pytest.raises(ValueError):
        map_rows(np.ones((2, 2)), 1.0)


def _tiny_traj(cte, cte_e, he_e, env="x"):
    n = len(cte)
    return Trajectory(env, cte, cte_e, he_e, np.zeros((n, 2)))


def test_count_transitions_by_hand():
    cp, hp = make_cte_partition(), make_heading_partition()
    # a: 4 -> 4 -> 8, e: 4, 4, 4; h: 4
    tr = _tiny_traj([0.0, 0.1, 3.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    c = count_transitions([tr], cp, cp, hp)
    assert c.sum() == 2
    assert c[4, 4, 4, 4] == 1 and c[4, 4, 4, 8] == 1


def test_fit_transition_uniform_for_unseen(train_trajs):
    cp, hp = make_cte_partition(), make_heading_partition()
    cpt = fit_transition(train_trajs, cp, cp, hp)
    seen = cpt.counts.sum(-1) > 0
    assert seen.any() and (~seen).any()
    np.testing.assert_array_equal(cpt.table[~seen], 1.0 / 9)
    assert cpt.visited() == int(seen.sum())


def test_cpt_validation_and_round_trip():
    t = np.full((2, 1, 1, 2), 0.5)
    cpt = TransitionCPT(t)
    assert TransitionCPT.from_dict(cpt.to_dict()).table.tolist() == t.tolist()
    with pytest.raises(ValueError):
        TransitionCPT(np.full((2, 1, 1, 2), 0.6))
    with pytest.raises(ValueError):
        TransitionCPT(np.full((2, 1, 2), 0.5))


def test_fit_transition_errors():
    cp, hp = make_cte_partition(), make_heading_partition()
    with pytest.raises(ValueError):
        fit_transition([], cp, cp, hp)
    with pytest.raises(ValueError):
        fit_transition([_tiny_traj([0.0], [0.0], [0.0])], cp, cp, hp)


def test_parent_model(train_trajs):
    cp, hp = make_cte_partition(), make_heading_partition()
    pm = fit_parents(train_trajs, cp, cp, hp)
    assert pm.sensor.shape == (9, 9) and pm.heading.shape == (9, 9)
    # the estimate mostly lands in the true state for the in-distribution runs
    assert pm.sensor[4].argmax() == 4
    back = ParentModel.from_dict(pm.to_dict())
    np.testing.assert_array_equal(back.sensor, pm.sensor)
    with pytest.raises(ValueError):
        ParentModel(np.ones((2, 2)), np.eye(2))
