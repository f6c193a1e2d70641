import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radial_qec import gf2
from radial_qec.circuits import memory_experiment
from radial_qec.decoder import (
    BpConfig, OsdConfig, UnsatisfiableSyndrome, WindowConfig, WindowDecoder, bp_min_sum,
    bposd_decode, evaluate_shot, osd, overlapping_window_decode,
)
from radial_qec.noise import NoiseModel, apply_noise, build_dem, sample
from radial_qec.quantum import preset


def _repetition(n):
    H = np.zeros((n - 1, n), dtype=np.uint8)
    for i in range(n - 1):
        H[i, i] = H[i, i + 1] = 1
    return H


def _syn(H, e):
    return (np.asarray(H, dtype=np.int64) @ np.asarray(e, dtype=np.int64)) % 2


def test_config_validation():
    with pytest.raises(ValueError):
        BpConfig(max_iter=0)
    with pytest.raises(ValueError):
        BpConfig(scaling=0.0)
    with pytest.raises(ValueError):
        BpConfig(schedule="serial")
    with pytest.raises(ValueError):
        OsdConfig(order=-1)
    with pytest.raises(ValueError):
        WindowConfig(2, 3)


@pytest.mark.parametrize("text,order,strategy", [("osd0", 0, "osd0"), ("cs4", 4, "cs"), ("OSD_CS7", 7, "cs"),
                                                  ("osd-cs2", 2, "cs")])
def test_osd_parse(text, order, strategy):
    cfg = OsdConfig.parse(text)
    assert (cfg.order, cfg.strategy) == (order, strategy)
    with pytest.raises(ValueError):
        OsdConfig.parse("lsd3")


def test_osd_spans():
    assert OsdConfig().spans() == (0, 0)
    assert OsdConfig.parse("cs4").spans() == (4, 8)
    assert OsdConfig(4, "cs", single_span=-1, pair_span=3).spans() == (-1, 3)


def test_zero_syndrome_needs_no_iterations():
    H = _repetition(7)
    res = bp_min_sum(H, np.full(7, 0.05), np.zeros(6, np.uint8))
    assert res.converged and res.iterations == 0
    assert not res.hard.any()


@pytest.mark.parametrize("pos", range(7))
def test_repetition_single_error(pos):
    H = _repetition(7)
    e = np.zeros(7, np.uint8)
    e[pos] = 1
    res = bp_min_sum(H, np.full(7, 0.05), _syn(H, e))
    assert res.converged
    assert np.array_equal(res.hard, e.astype(bool))
    assert res.llrs[pos] < 0 < np.delete(res.llrs, pos).min()


def test_singleton_ml_dominance():
    H = np.array([[1, 1]], dtype=np.uint8)
    out = bposd_decode(H, [0.1, 0.001], [1])
    assert out.tolist() == [True, False]
    out = bposd_decode(H, [0.001, 0.1], [1])
    assert out.tolist() == [False, True]


def _in_rowspace(M, v):
    dense = M.to_dense()
    return gf2.rank(np.vstack([dense, v[None, :]])) == gf2.rank(dense)


@pytest.mark.parametrize("method", ["osd0", "cs4"])
def test_toy_weight_one_errors_are_corrected(method):
    code = preset("toy_2_3")
    H = code.H_Z.to_dense()
    for q in range(code.n):
        e = np.zeros(code.n, np.uint8)
        e[q] = 1
        dec = bposd_decode(H, np.full(code.n, 0.01), _syn(H, e), osd_config=OsdConfig.parse(method))
        assert np.array_equal(_syn(H, dec), _syn(H, e))
        assert _in_rowspace(code.H_X, (dec ^ e.astype(bool)).astype(np.uint8))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), method=st.sampled_from(["osd0", "cs2", "cs4"]))
def test_osd_always_satisfies_reachable_syndromes(seed, method):
    rng = np.random.default_rng(seed)
    H = (rng.random((12, 20)) < 0.25).astype(np.uint8)
    e = (rng.random(20) < 0.2).astype(np.uint8)
    s = _syn(H, e)
    llrs = rng.normal(size=20)
    out = osd(H, llrs, s, OsdConfig.parse(method), priors=rng.uniform(0.01, 0.2, size=20))
    assert np.array_equal(_syn(H, out), s)
    out = bposd_decode(H, np.full(20, 0.05), s, BpConfig(max_iter=3), OsdConfig.parse(method))
    assert np.array_equal(_syn(H, out), s)


def test_osd_rejects_unreachable_syndrome():
    H = np.array([[1, 1], [1, 1]], dtype=np.uint8)
    with pytest.raises(UnsatisfiableSyndrome):
        osd(H, [0.0, 0.0], [1, 0])
    with pytest.raises(UnsatisfiableSyndrome):
        bposd_decode(H, [0.1, 0.1], [1, 0])


def test_combination_sweep_never_worse_than_osd0():
    rng = np.random.default_rng(4)
    H = (rng.random((15, 30)) < 0.2).astype(np.uint8)
    priors = rng.uniform(0.01, 0.15, size=30)
    w = np.log1p(-priors) - np.log(priors)
    for _ in range(30):
        e = (rng.random(30) < 0.15).astype(np.uint8)
        s = _syn(H, e)
        llrs = rng.normal(size=30) + w
        c0 = w @ osd(H, llrs, s, OsdConfig(), priors)
        c4 = w @ osd(H, llrs, s, OsdConfig.parse("cs4"), priors)
        assert c4 <= c0 + 1e-9


def test_batch_matches_single_shot_decoding():
    code = preset("qr_90_8_10")
    H = code.H_Z.to_dense()
    rng = np.random.default_rng(9)
    errs = (rng.random((40, code.n)) < 0.03).astype(np.uint8)
    syn = _syn(H, errs.T).T
    batch = bposd_decode(H, np.full(code.n, 0.03), syn)
    for row, s in zip(batch, syn):
        assert np.array_equal(row, bposd_decode(H, np.full(code.n, 0.03), s))
        assert np.array_equal(_syn(H, row), s)


@pytest.fixture(scope="module")
def toy_memory():
    circ = apply_noise(memory_experiment(preset("toy_2_3"), "Z", 5), NoiseModel.uniform(8e-3))
    dem = build_dem(circ)
    zmask = np.array([s == "Z" for s in circ.detector_sectors])
    dets, obs = sample(circ, 400, seed=21)
    return dem.sector("Z"), dets[:, zmask], obs


@pytest.mark.parametrize("osd_name", ["osd0", "cs4"])
def test_full_window_equals_monolithic(toy_memory, osd_name):
    dem, syn, _ = toy_memory
    R = dem.rounds
    cfg = OsdConfig.parse(osd_name)
    win = overlapping_window_decode(dem, syn, WindowConfig(R, R), osd_config=cfg)
    mono = bposd_decode(dem.check_matrix(), dem.probs, syn, osd_config=cfg)
    assert np.array_equal(win, mono)


@pytest.mark.parametrize("w,c", [(1, 1), (2, 1), (3, 1), (3, 2)])
def test_window_corrections_reproduce_syndrome(toy_memory, w, c):
    dem, syn, obs = toy_memory
    decoder = WindowDecoder(dem, WindowConfig(w, c))
    corr = decoder.decode(syn)
    H = dem.check_matrix()
    assert np.array_equal((H @ corr.T.astype(np.uint8)).T % 2, syn.astype(np.uint8))
    pred = decoder.predict_observables(syn)
    fails = evaluate_shot(dem, corr, obs)
    assert np.array_equal(fails, pred ^ obs)
    assert decoder.last_stats["bp_runs"] > 0


def test_window_decoder_is_deterministic(toy_memory):
    dem, syn, _ = toy_memory
    a = WindowDecoder(dem).predict_observables(syn)
    b = WindowDecoder(dem).predict_observables(syn)
    assert np.array_equal(a, b)


def test_window_decoder_rejects_wrong_width(toy_memory):
    dem, syn, _ = toy_memory
    with pytest.raises(ValueError):
        WindowDecoder(dem).decode(syn[:, :-1])


def test_evaluate_shot():
    code_dem = build_dem(apply_noise(memory_experiment(preset("toy_2_3"), "Z", 2), NoiseModel.uniform(1e-3)))
    corr = np.zeros(code_dem.n_mechanisms, bool)
    flips = [j for j in range(code_dem.n_mechanisms) if len(code_dem.obs(j))][:1]
    corr[flips] = True
    actual = np.zeros(code_dem.n_observables, bool)
    out = evaluate_shot(code_dem, corr, actual)
    assert out.tolist() == [o in code_dem.obs(flips[0]) for o in range(code_dem.n_observables)]


def test_agrees_with_reference_bposd():
    ldpc = pytest.importorskip("ldpc")
    code = preset("qr_90_8_10")
    H = code.H_Z.to_dense()
    rng = np.random.default_rng(13)
    errs = (rng.random((200, code.n)) < 0.02).astype(np.uint8)
    syn = _syn(H, errs.T).T
    ref = ldpc.BpOsdDecoder(H, error_rate=0.02, bp_method="minimum_sum", ms_scaling_factor=1.0,
                            schedule="parallel", max_iter=100, osd_method="osd0")
    ours = bposd_decode(H, np.full(code.n, 0.02), syn, BpConfig(100, 1.0))
    agree = sum(np.array_equal(ref.decode(s), o) for s, o in zip(syn, ours.astype(np.uint8)))
    assert agree >= 0.95 * len(syn)
