import json
import math
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from radial_qec.decoder import BpConfig, OsdConfig, WindowConfig
from radial_qec.harness import (
    THREADS_ENV, BenchmarkConfig, BenchmarkResult, InvalidConfig, confidence_interval, iteration_sweep,
    likelihood_interval, parse_csv, per_cycle_rate, read_csv, rescale_multi_patch, run_benchmark,
    wilson_interval, worker_count, write_csv,
)
from radial_qec.noise import NoiseModel


def test_per_cycle_rate_examples():
    assert per_cycle_rate(0.19, 2) == pytest.approx(0.1, rel=1e-12)
    assert per_cycle_rate(0.0, 15) == 0.0
    sat = per_cycle_rate(1.0, 15)
    assert sat == 1.0 and sat.saturated
    assert not per_cycle_rate(0.5, 3).saturated
    # tiny rates keep full precision
    assert per_cycle_rate(1.5e-9, 15) == pytest.approx(1e-10, rel=1e-9)
    with pytest.raises(ValueError):
        per_cycle_rate(0.1, 0)
    with pytest.raises(ValueError):
        per_cycle_rate(1.1, 2)


@given(st.floats(0, 0.999), st.integers(1, 50))
def test_per_cycle_rate_inverts_compounding(p, cycles):
    q = per_cycle_rate(p, cycles)
    assert 1 - (1 - q) ** cycles == pytest.approx(p, abs=1e-12)


def test_rescale_multi_patch():
    assert rescale_multi_patch(0.271, 8, 24) == pytest.approx(0.1, rel=1e-3)
    assert rescale_multi_patch(1.0, 8, 24) == 1.0
    with pytest.raises(ValueError):
        rescale_multi_patch(0.1, 0, 3)


def test_intervals_bracket_estimate():
    lo, hi = wilson_interval(10, 1000)
    assert lo < 0.01 < hi
    z, n, q = 1.959963984540054, 1000, 0.01
    centre = (q + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(q * (1 - q) / n + z * z / (4 * n * n))
    assert lo == pytest.approx(centre - half, rel=1e-9) and hi == pytest.approx(centre + half, rel=1e-9)
    llo, lhi = likelihood_interval(10, 1000)
    assert llo < lo and lhi > hi
    k, n = 10, 1000
    ll = lambda q: k * math.log(q) + (n - k) * math.log1p(-q)  # noqa: E731
    for edge in (llo, lhi):
        assert ll(k / n) - ll(edge) == pytest.approx(math.log(1000), abs=1e-6)


def test_intervals_at_extremes():
    assert wilson_interval(0, 100)[0] == 0.0
    assert likelihood_interval(0, 100)[0] == 0.0
    assert likelihood_interval(100, 100)[1] == 1.0
    ci = confidence_interval(0, 1000)
    assert 0 < ci.likelihood[1] < 0.01
    with pytest.raises(ValueError):
        wilson_interval(5, 0)
    with pytest.raises(ValueError):
        likelihood_interval(11, 10)


def _small(**kw):
    base = BenchmarkConfig(preset="toy_2_3", p=5e-3, cycles=3, shots=600, batch_size=200, seed=3,
                           bp=BpConfig(max_iter=50))
    return replace(base, **kw)


@pytest.mark.parametrize("bad", [dict(shots=0), dict(p=0.6), dict(cycles=0), dict(basis="Y"),
                                 dict(batch_size=0), dict(preset=None)])
def test_config_validation(bad):
    with pytest.raises(InvalidConfig):
        _small(**bad)


def test_config_json_round_trip(tmp_path):
    cfg = _small(osd=OsdConfig.parse("cs4"), window=WindowConfig(2, 1),
                 noise=NoiseModel(1e-3, 2e-3, 3e-3, 4e-3))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_json()))
    assert BenchmarkConfig.load(path) == cfg
    assert BenchmarkConfig.from_json({"preset": "toy_2_3", "osd": "cs2"}).osd == OsdConfig(2, "cs")


@pytest.mark.parametrize("obj", [{"version": 99}, {"bp": {"max_iter": 0}}, {"unknown": 1}])
def test_config_rejects_bad_json(obj):
    with pytest.raises(InvalidConfig):
        BenchmarkConfig.from_json(obj)


def test_zero_noise_gives_zero_failures():
    res = run_benchmark(_small(p=0.0), workers=1)
    assert res.shots == 600 and res.failures == 0 and res.complete
    assert res.decoder_stats["bp_iterations"] == 0


def test_results_do_not_depend_on_worker_count(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    cfg = _small(p=1e-2)
    one = run_benchmark(cfg, workers=1)
    two = run_benchmark(cfg, workers=2)
    assert one.failures == two.failures > 0
    assert one.observable_failures == two.observable_failures
    assert one.decoder_stats == two.decoder_stats


def test_progress_callback_sees_every_batch():
    seen = []
    run_benchmark(_small(), workers=1, progress=lambda r: seen.append(r.shots))
    assert seen == [200, 400, 600]


def test_worker_count_cap(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "2")
    assert worker_count(8) == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(InvalidConfig):
        worker_count(4)
    monkeypatch.delenv(THREADS_ENV)
    assert worker_count(3) == 3


def test_csv_round_trip(tmp_path):
    cfg = _small()
    results = [BenchmarkResult(cfg, 1000, 7, [4, 3]), BenchmarkResult(replace(cfg, p=0.1 / 3), 500, 0, [0, 0])]
    path = tmp_path / "out.csv"
    text = write_csv(results, path)
    rows = read_csv(path)
    assert parse_csv(text) == rows
    for res, row in zip(results, rows):
        assert row == res.row()


def test_result_json_is_serialisable():
    res = BenchmarkResult(_small(), 100, 100, [100])
    obj = json.loads(json.dumps(res.to_json()))
    assert obj["saturated"] is True and obj["wer_per_cycle"] == 1.0


def test_iteration_sweep_rows(tmp_path):
    results, text = iteration_sweep(_small(p=1e-2, shots=200), [1, 20], workers=1, path=tmp_path / "s.csv")
    rows = parse_csv(text)
    assert [r["max_iter"] for r in rows] == [1, 20]
    assert all(r.config.osd == OsdConfig() for r in results)
    assert (tmp_path / "s.csv").read_text() == text
