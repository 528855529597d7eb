import logging

import numpy as np
import pytest

from conftest import direct_ons
from fastons._engine import Engine, resolve_dtype
from fastons.core import HyperParams, push
from fastons.exceptions import HyperbolicBreakdown
from fastons.predictors import fast_ons_init, fast_ons_step, ogd_init, ogd_step, ons_init, ons_step

REFERENCE = {
    "ogd": (ogd_init, ogd_step),
    "ons": (ons_init, ons_step),
    "fast-ons": (fast_ons_init, fast_ons_step),
}


def reference_run(algorithm, params, samples):
    init, step = REFERENCE[algorithm]
    state = init(params)
    state = type(state)(**{**state.__dict__, "window": push(state.window, samples[0])})
    preds, errors = [], []
    for s in samples[1:]:
        state, out = step(state, params, s)
        preds.append(out.prediction)
        errors.append(out.error)
    return state, np.array(preds), np.array(errors)


@pytest.mark.parametrize("algorithm", ["ogd", "ons", "fast-ons"])
def test_kernel_matches_reference(algorithm, ar_stream):
    params = HyperParams(dim=7, step_size=0.5 if algorithm != "ogd" else 50.0)
    samples = ar_stream[:600]
    state, preds, errors = reference_run(algorithm, params, samples)
    eng = Engine(algorithm, params)
    p, e, _ = eng.consume(samples)
    np.testing.assert_allclose(p, preds, atol=1e-12)
    np.testing.assert_allclose(e, errors, atol=1e-12)
    np.testing.assert_allclose(eng.w, state.w, atol=1e-12)
    np.testing.assert_array_equal(eng.window, state.window.values)
    if algorithm == "fast-ons":
        assert eng.sqrt_eta[0] == pytest.approx(state.sqrt_eta, rel=1e-12)
    if algorithm == "ons":
        np.testing.assert_allclose(eng.a_inv, state.a_inv, atol=1e-12)


@pytest.mark.parametrize("algorithm", ["ogd", "ons", "fast-ons"])
def test_chunked_equals_whole(algorithm, ar_stream):
    params = HyperParams(dim=5, step_size=1.0)
    samples = ar_stream[:500]
    whole = Engine(algorithm, params)
    p_all, e_all, _ = whole.consume(samples)
    chunked = Engine(algorithm, params)
    parts = [chunked.consume(c) for c in np.split(samples, [1, 2, 7, 100, 101, 333])]
    p = np.concatenate([x[0] for x in parts])
    e = np.concatenate([x[1] for x in parts])
    np.testing.assert_array_equal(p, p_all)
    np.testing.assert_array_equal(e, e_all)
    np.testing.assert_array_equal(chunked.w, whole.w)


def test_fast_engine_matches_direct_oracle(ar_stream):
    samples = ar_stream[:800]
    expected = direct_ons(samples, 6, 1.0)
    eng = Engine("fast-ons", HyperParams(dim=6, step_size=1.0))
    _, errors, _ = eng.consume(samples)
    np.testing.assert_allclose(errors, [o[2] for o in expected], atol=1e-9)
    np.testing.assert_allclose(eng.w, expected[-1][0], atol=1e-9)


def test_breakdown_rebuild_keeps_trajectory(ar_stream, caplog):
    params = HyperParams(dim=4, step_size=1.0)
    samples = ar_stream[:120]
    regular = Engine("ons", params)
    _, e_r, _ = regular.consume(samples)
    # an absurd tolerance makes every hyperbolic rotation break down
    fast = Engine("fast-ons", params, tol=10.0)
    with caplog.at_level(logging.WARNING, logger="fastons._engine"):
        _, e_f, _ = fast.consume(samples[:50])
        _, e_f2, _ = fast.consume(samples[50:])
    assert fast.breakdowns > 50
    np.testing.assert_allclose(np.concatenate([e_f, e_f2]), e_r, atol=1e-12)
    np.testing.assert_allclose(fast.w, regular.w, atol=1e-12)
    assert "breakdown" in caplog.text


def test_breakdown_raise(ar_stream):
    eng = Engine("fast-ons", HyperParams(dim=4, step_size=1.0), tol=10.0)
    with pytest.raises(HyperbolicBreakdown) as info:
        eng.consume(ar_stream[:50], on_breakdown="raise")
    assert info.value.step is not None


def test_breakdown_without_history_raises(ar_stream):
    eng = Engine("fast-ons", HyperParams(dim=4, step_size=1.0), keep_history=False, tol=10.0)
    with pytest.raises(HyperbolicBreakdown):
        eng.consume(ar_stream[:50])


def test_engine_validation():
    with pytest.raises(ValueError):
        Engine("rls", HyperParams(dim=2))
    with pytest.raises(ValueError):
        Engine("ons", HyperParams(dim=2)).consume([1.0], on_breakdown="ignore")
    with pytest.raises(ValueError):
        resolve_dtype("float16")


def test_empty_and_single_sample():
    eng = Engine("fast-ons", HyperParams(dim=3))
    p, e, _ = eng.consume([])
    assert p.size == 0
    p, e, _ = eng.consume([0.5])
    assert p.size == 0
    np.testing.assert_array_equal(eng.window, [0.5, 0.0, 0.0])
    p, e, _ = eng.consume([0.25])
    assert p.size == 1 and e[0] == 0.25


def test_float32_engine_close_to_float64(ar_stream):
    params = HyperParams(dim=8, step_size=1.0)
    e64 = Engine("fast-ons", params).consume(ar_stream[:2000])[1]
    e32 = Engine("fast-ons", params, precision="float32").consume(ar_stream[:2000])[1]
    assert np.abs(e64 - e32).max() < 1e-2
