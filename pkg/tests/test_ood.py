import numpy as np
import pytest

from taxiassure.ood import OodMonitor, detect, fit_ood
from taxiassure.sim import GROSS_SHIFT_ENV, IN_DISTRIBUTION_TEST_ENV, PRESETS, generate_missions


def test_calibration_flags_top_quantile():
    X = np.random.default_rng(0).normal(size=(1000, 4))
    for method in ("mahalanobis", "std-euclidean"):
        m = fit_ood(X, 0.99, method)
        assert np.mean(m.distances(X) > m.threshold) == pytest.approx(0.01, abs=0.002)


def test_mahalanobis_sees_correlation():
    rng = np.random.default_rng(1)
    z = rng.normal(size=1000)
    X = np.column_stack([z, z + rng.normal(0, 0.05, 1000)])
    maha, diag = fit_ood(X, 0.99), fit_ood(X, 0.99, "std-euclidean")
    off_manifold = np.array([1.0, -1.0])
    assert maha.detect(off_manifold)
    assert not diag.detect(off_manifold)


def test_forced_methods():
    m = fit_ood(np.random.default_rng(2).normal(size=(100, 3)))
    assert m.with_method("always").detect(m.mean)
    assert not m.with_method("never").detect(np.full(3, 1e6))
    assert detect(m, np.full(3, 1e6))


def test_round_trip_and_validation():
    m = fit_ood(np.random.default_rng(3).normal(size=(100, 3)))
    back = OodMonitor.from_dict(m.to_dict())
    x = np.array([0.3, -2.0, 1.0])
    assert back.distance(x) == m.distance(x) and back.threshold == m.threshold
    with pytest.raises(ValueError):
        fit_ood(np.zeros((10, 3)))
    with pytest.raises(ValueError):
        fit_ood(np.random.default_rng(0).normal(size=(100, 3)), quantile=0.5)
    with pytest.raises(ValueError):
        OodMonitor((0.0,), (1.0,), 1.0, "bogus")
    with pytest.raises(ValueError):
        m.distance(np.zeros(2))


def test_gross_shift_flagged_far_more_often(model):
    nominal = generate_missions([PRESETS[IN_DISTRIBUTION_TEST_ENV]], 4, 200, seed=11)
    dusk = generate_missions([PRESETS[GROSS_SHIFT_ENV]], 4, 200, seed=11)
    rate = lambda trs: np.mean([model.ood.detect(x) for t in trs for x in t.features])
    r_nom, r_dusk = rate(nominal), rate(dusk)
    assert r_dusk >= 5 * r_nom
    assert r_dusk > 0.9


def test_far_vectors_flagged(model):
    assert model.ood.detect(np.zeros(16))
    x = np.array(model.ood.mean)
    x[3] += 10 * model.ood.std[3]
    assert model.ood.detect(x)
