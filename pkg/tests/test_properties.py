import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracle import enumerate_filter, random_case
from taxiassure.assurance import assurance_measure, contingency, sufficiency
from taxiassure.dbn import run_filter
from taxiassure.statespace import locate, make_cte_partition, make_symmetric_partition
from taxiassure.transition import map_rows

P = make_cte_partition()
weights = arrays(np.float64, 9, elements=st.floats(0.0, 1.0)).filter(lambda w: w.sum() > 1e-6)


@given(weights)
def test_measure_monotone_in_offset(w):
    b = w / w.sum()
    m1, m2, m10 = (assurance_measure(b, P, o) for o in (1.43, 2.0, 10.0))
    assert 0.0 <= m1 <= m2 <= m10 == 1.0


@given(st.floats(-10.0, 10.0))
def test_locate_contains_value(x):
    i = locate(P, x)
    lo, hi = P.boundaries[i], P.boundaries[i + 1]
    assert lo <= x <= hi
    if i < P.n_states - 1:
        assert x < hi


@given(st.floats(0.1, 5.0), st.sampled_from([3, 5, 7, 9]), st.floats(1.01, 4.0))
def test_symmetric_partition(offset, k, ratio):
    p = make_symmetric_partition(offset, k, offset * ratio)
    assert p.n_states == k + 2
    np.testing.assert_array_equal(p.edges, -p.edges[::-1])


@given(arrays(np.int64, (3, 4), elements=st.integers(0, 50)), st.floats(1.01, 10.0))
def test_map_rows_are_distributions(counts, alpha):
    rows = map_rows(counts, alpha)
    assert (rows > 0).all()
    np.testing.assert_allclose(rows.sum(-1), 1.0, atol=1e-12)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_stop_iff_any_violation(measures):
    verdicts = sufficiency(measures)
    action = contingency(verdicts, measures)
    assert (action == "stop") == any(1.0 - m >= 0.3 for m in measures)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_filter_oracle_random_seeds(seed):
    model, frames, b0, raw = random_case(seed, max_states=4, max_steps=4)
    got = run_filter(model, frames, b0)
    want = enumerate_filter(b0, raw["table"], raw["lik"], raw["flags"], raw["e"], raw["h"])
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)
