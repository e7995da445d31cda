import math

import numpy as np
import pytest

import forte


def test_normalize_raw():
    assert forte.normalize_raw(1024) == 0.0
    assert forte.normalize_raw(0) == -1.0
    assert forte.normalize_raw(2047) == 0.9990234375


def test_zero_window_hits_the_floor():
    cfg = forte.PipelineConfig()
    psd = forte.compute_psd(np.zeros(cfg.fft_window), cfg)
    assert len(psd) == cfg.fft_window // 2 + 1
    assert forte.psd_feature(np.asarray(psd), cfg) == -120.0


def test_psd_matches_numpy_periodogram():
    cfg = forte.PipelineConfig()
    rng = np.random.default_rng(0)
    x = rng.normal(0.0, 0.05, cfg.fft_window)
    w = np.asarray(forte.hann_window(cfg.fft_window))
    want = np.abs(np.fft.rfft(w * x)) ** 2 / (cfg.sample_rate_hz * np.sum(w * w))
    got = np.asarray(forte.compute_psd(x, cfg))
    np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-20)


def test_quiescent_trace_is_silent():
    tr = forte.simulate("Q", seed=1, duration_s=10.0)
    assert tr["channels"].shape == (20000, 6)
    res = forte.replay(tr["t"], tr["channels"], tr["slip_gt"])
    assert not res["eta"].any()
    assert res["events"] == []
    assert res["report"]["precision"] == 1.0


def test_lift_scenario_is_detected():
    tr = forte.simulate("A", seed=0)
    assert tr["slip_gt"].any()
    res = forte.replay(tr["t"], tr["channels"], tr["slip_gt"])
    rep = res["report"]
    assert rep["detected_events"] >= 1
    assert rep["false_alarms"] == 0
    assert max(rep["latency_ms"]) <= 100.0


def test_replay_without_ground_truth():
    tr = forte.simulate("A", seed=2, duration_s=3.0)
    res = forte.replay(tr["t"], tr["channels"])
    assert res["report"] is None
    assert len(res["t"]) == len(res["eta"])


def test_bad_shapes_are_rejected():
    with pytest.raises(ValueError):
        forte.replay(np.zeros(10), np.zeros((10, 5)))


def test_metrics_abstention():
    rep = forte.metrics([False, False], [False, False])
    assert rep["precision"] == 1.0
    rep = forte.metrics([True, False, True], [True, True, False])
    assert rep["precision"] == 0.5
    assert rep["recall"] == 0.5


def test_force_model_round_trip(tmp_path):
    model = forte.train_force("B", trials=6, seed=1)
    assert model.dim == 24
    assert model.num_support_vectors > 0
    path = str(tmp_path / "model.json")
    model.save(path)
    back = forte.ForceModel.load(path)
    x = np.full(24, 0.1)
    assert back.predict(x) == model.predict(x)
    assert model.predict(x) >= 0.0
    with pytest.raises(ValueError):
        model.predict(np.zeros(6))


def test_grasp_outcomes():
    names = dict(forte.objects())
    assert names["jam_jar"] == "slippery"
    assert forte.grasp("grape", "onoff", 0)["outcome"] == "CRUSHED"
    r = forte.grasp("jam_jar", "forte", 0)
    assert r["outcome"] == "SUCCESS"
    assert r["increments"] >= 1


def test_missing_trace_file():
    with pytest.raises(forte.DataError):
        forte.read_trace("/nonexistent/trace.csv")
