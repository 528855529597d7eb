import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import ParameterGrid

from fastons import (
    FastOnlineNewtonStep,
    HyperbolicBreakdown,
    OnlineGradientDescent,
    OnlineNewtonStep,
    SlidingWindowTransformer,
    check_series,
    lagged_windows,
)
from fastons._engine import Engine


@pytest.mark.parametrize("cls", [OnlineGradientDescent, OnlineNewtonStep, FastOnlineNewtonStep])
def test_params_roundtrip(cls):
    est = cls(dim=5, step_size=0.2)
    params = est.get_params()
    assert params["dim"] == 5 and params["step_size"] == 0.2
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(dim=7)
    assert est.dim == 7


@pytest.mark.parametrize("cls", [OnlineGradientDescent, OnlineNewtonStep, FastOnlineNewtonStep])
def test_not_fitted(cls):
    with pytest.raises(NotFittedError):
        cls().predict([1.0, 2.0])


def test_fast_equals_regular(ar_stream):
    a = FastOnlineNewtonStep(dim=8, step_size=1.0).fit(ar_stream)
    b = OnlineNewtonStep(dim=8, step_size=1.0).fit(ar_stream)
    np.testing.assert_allclose(a.coef_, b.coef_, atol=1e-10)
    np.testing.assert_allclose(a.running_mse_, b.running_mse_, rtol=1e-9)
    assert a.n_steps_ == len(ar_stream) - 1


def test_partial_fit_equals_fit(ar_stream):
    whole = FastOnlineNewtonStep(dim=6, step_size=1.0).fit(ar_stream)
    part = FastOnlineNewtonStep(dim=6, step_size=1.0)
    for chunk in np.array_split(ar_stream, 7):
        part.partial_fit(chunk)
    np.testing.assert_array_equal(part.coef_, whole.coef_)
    np.testing.assert_array_equal(part.errors_, whole.errors_)


def test_fit_resets(ar_stream):
    est = OnlineNewtonStep(dim=4, step_size=1.0)
    first = est.fit(ar_stream[:300]).coef_.copy()
    est.fit(ar_stream[:300])
    np.testing.assert_array_equal(est.coef_, first)


def test_predict_is_one_step_ahead(ar_stream):
    est = OnlineNewtonStep(dim=4, step_size=1.0).fit(ar_stream[:1000])
    new = ar_stream[1000:1100]
    pred = est.predict(new)
    # replay with a learner that cannot move: same context, frozen weights
    context = np.concatenate([ar_stream[996:1000], new])
    manual = [est.coef_ @ context[t + 3: t - 1 if t else None: -1] for t in range(len(new))]
    np.testing.assert_allclose(pred, manual, atol=1e-14)
    assert pred[0] == pytest.approx(est.forecast())
    assert est.predict([]).shape == (0,)


def test_predict_does_not_update(ar_stream):
    est = FastOnlineNewtonStep(dim=4, step_size=1.0).fit(ar_stream[:500])
    coef = est.coef_.copy()
    est.predict(ar_stream[500:600])
    np.testing.assert_array_equal(est.coef_, coef)


def test_score_is_r2(ar_stream):
    est = FastOnlineNewtonStep(dim=8, step_size=1.0).fit(ar_stream[:3000])
    assert 0.0 < est.score(ar_stream[3000:]) <= 1.0


def test_fast_exposes_eta(ar_stream):
    est = FastOnlineNewtonStep(dim=4, step_size=1.0).fit(ar_stream[:100])
    assert est.eta_ >= 1.0
    assert est.n_breakdowns_ == 0


def test_breakdown_policies(ar_stream, monkeypatch):
    orig = Engine.__init__

    def strict(self, *args, **kwargs):
        orig(self, *args, **kwargs)
        self.tol = 10.0

    monkeypatch.setattr(Engine, "__init__", strict)
    est = FastOnlineNewtonStep(dim=4, step_size=1.0).fit(ar_stream[:60])
    ref = OnlineNewtonStep(dim=4, step_size=1.0).fit(ar_stream[:60])
    assert est.n_breakdowns_ > 0
    np.testing.assert_allclose(est.coef_, ref.coef_, atol=1e-12)
    with pytest.raises(HyperbolicBreakdown):
        FastOnlineNewtonStep(dim=4, step_size=1.0, on_breakdown="raise").fit(ar_stream[:60])


def test_ogd_defaults_to_first_order_rate():
    assert OnlineGradientDescent().step_size == 0.1


@pytest.mark.parametrize("bad", [[[1.0, 2.0], [3.0, 4.0]], [1.0, np.nan], [1.0, np.inf], "abc"])
def test_check_series_rejects(bad):
    with pytest.raises(ValueError):
        check_series(bad)


def test_check_series_accepts_column():
    np.testing.assert_array_equal(check_series([[1.0], [2.0]]), [1.0, 2.0])


def test_invalid_hyperparameters_raise_on_fit():
    with pytest.raises(ValueError):
        OnlineNewtonStep(dim=0).fit([1.0, 2.0])
    with pytest.raises(ValueError):
        FastOnlineNewtonStep(precision="float16").fit([1.0, 2.0])


def test_lagged_windows_and_transformer():
    np.testing.assert_array_equal(
        lagged_windows([1.0, 2.0, 3.0], 2, history=[9.0]), [[1.0, 9.0], [2.0, 1.0], [3.0, 2.0]]
    )
    X = SlidingWindowTransformer(dim=3).fit_transform(np.arange(1.0, 5.0))
    assert X.shape == (4, 3)
    np.testing.assert_array_equal(X[-1], [4.0, 3.0, 2.0])
    with pytest.raises(ValueError):
        SlidingWindowTransformer(dim=0).fit([1.0])


def test_grid_search_style_usage(ar_stream):
    scores = {}
    template = FastOnlineNewtonStep()
    for params in ParameterGrid({"dim": [2, 8], "step_size": [0.5, 1.0]}):
        est = clone(template).set_params(**params).fit(ar_stream[:1000])
        scores[tuple(sorted(params.items()))] = est.running_mse_[-1]
    assert len(scores) == 4 and all(np.isfinite(v) for v in scores.values())
    best = dict(min(scores, key=scores.get))
    again = clone(template).set_params(**best).fit(ar_stream[:1000])
    assert again.running_mse_[-1] == scores[tuple(sorted(best.items()))]
