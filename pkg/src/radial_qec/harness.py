"""Monte Carlo memory benchmarks: code -> circuit -> noise -> DEM -> sampling ->
windowed decoding, plus the statistics used to report word error rates."""

from __future__ import annotations

import csv
import io
import json
import math
import multiprocessing as mp
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy import optimize, stats

from .circuits import memory_experiment
from .classical import AMatrix
from .decoder import BpConfig, OsdConfig, WindowConfig, WindowDecoder
from .noise import (BATCH_SHOTS, NoiseModel, apply_noise, batch_seed, build_dem, compile_circuit,
                    sample_batch)
from .quantum import RadialCssCode, lifted_product, preset

CONFIG_VERSION = 1
THREADS_ENV = "RADIAL_QEC_THREADS"
CSV_COLUMNS = ["p", "cycles", "shots", "failures", "wer", "wer_per_cycle",
               "wilson_lo", "wilson_hi", "lik_lo", "lik_hi", "seed"]


class InvalidConfig(ValueError):
    pass


# ---------------------------------------------------------------------------
# Statistics


class PerCycleRate(float):
    """A per-cycle rate that remembers whether the total rate was saturated."""

    saturated: bool

    def __new__(cls, value: float, saturated: bool = False):
        obj = super().__new__(cls, value)
        obj.saturated = saturated
        return obj


def per_cycle_rate(p_total: float, cycles: int) -> PerCycleRate:
    """``1 - (1 - P)^(1/cycles)``; ``P = 1`` returns 1 flagged as saturated."""
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if not 0 <= p_total <= 1:
        raise ValueError("total rate must lie in [0, 1]")
    if p_total >= 1:
        return PerCycleRate(1.0, True)
    return PerCycleRate(-math.expm1(math.log1p(-p_total) / cycles))


def rescale_multi_patch(p_single: float, k: int, rounds: int) -> float:
    """Word error rate of ``k`` independent patches per cycle, from a single
    patch's rate over ``rounds`` cycles: ``1 - (1 - P)^(k / rounds)``."""
    if not 0 <= p_single <= 1 or k < 1 or rounds < 1:
        raise ValueError("need 0 <= P <= 1, k >= 1, rounds >= 1")
    if p_single >= 1:
        return 1.0
    return -math.expm1(math.log1p(-p_single) * k / rounds)


def wilson_interval(failures: int, shots: int, confidence: float = 0.95) -> tuple[float, float]:
    _check_counts(failures, shots)
    ci = stats.binomtest(failures, shots).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def likelihood_interval(failures: int, shots: int, factor: float = 1000.0) -> tuple[float, float]:
    """Rates whose binomial likelihood is within ``factor`` of the maximum."""
    _check_counts(failures, shots)
    k, n = failures, shots
    cut = math.log(factor)

    def drop(q: float) -> float:
        # log L(q_hat) - log L(q) - log(factor); negative inside the interval
        q_hat = k / n
        ll = lambda x: (k * math.log(x) if k else 0.0) + ((n - k) * math.log1p(-x) if n - k else 0.0)  # noqa: E731
        return ll(q_hat) - ll(q) - cut

    q_hat = k / n
    lo = 0.0 if k == 0 else optimize.brentq(drop, 1e-300, q_hat, xtol=1e-15, rtol=1e-12)
    hi = 1.0 if k == n else optimize.brentq(drop, q_hat, 1 - 1e-16, xtol=1e-15, rtol=1e-12)
    return lo, hi


@dataclass(frozen=True)
class ConfidenceIntervals:
    wilson: tuple[float, float]
    likelihood: tuple[float, float]


def confidence_interval(failures: int, shots: int) -> ConfidenceIntervals:
    """Wilson 95 % interval and the likelihood-ratio-1000 interval."""
    return ConfidenceIntervals(wilson_interval(failures, shots), likelihood_interval(failures, shots))


def _check_counts(failures: int, shots: int) -> None:
    if shots < 1 or not 0 <= failures <= shots:
        raise ValueError(f"need 0 <= failures <= shots and shots >= 1, got {failures}/{shots}")


# ---------------------------------------------------------------------------
# Configuration and results


@dataclass(frozen=True)
class BenchmarkConfig:
    """One memory experiment.  The code comes from ``preset`` or from the two
    A-matrix JSON files ``a1_file`` / ``a2_file``; ``noise`` overrides the
    equal-rate model built from ``p``."""

    preset: str | None = "qr_90_8_10"
    a1_file: str | None = None
    a2_file: str | None = None
    p: float = 2e-3
    cycles: int = 15
    shots: int = 10_000
    basis: str = "Z"
    window: WindowConfig = WindowConfig()
    bp: BpConfig = BpConfig()
    osd: OsdConfig = OsdConfig()
    seed: int = 0
    batch_size: int = BATCH_SHOTS
    noise: NoiseModel | None = None

    def __post_init__(self):
        if self.shots < 1:
            raise InvalidConfig("shots must be >= 1")
        if not 0 <= self.p < 0.5:
            raise InvalidConfig("p must lie in [0, 0.5)")
        if self.cycles < 1:
            raise InvalidConfig("cycles must be >= 1")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if self.basis not in ("X", "Z"):
            raise InvalidConfig("basis must be X or Z")
        if (self.preset is None) == (self.a1_file is None or self.a2_file is None):
            raise InvalidConfig("give either a preset or both A-matrix files")

    @property
    def noise_model(self) -> NoiseModel:
        return self.noise if self.noise is not None else NoiseModel.uniform(self.p)

    def code(self) -> RadialCssCode:
        if self.preset is not None:
            return preset(self.preset)
        return lifted_product(AMatrix.load(self.a1_file), AMatrix.load(self.a2_file))

    def to_json(self) -> dict:
        out = {"version": CONFIG_VERSION}
        for key, value in asdict(self).items():
            out[key] = value
        out["osd"] = {"order": self.osd.order, "strategy": self.osd.strategy,
                      "single_span": self.osd.single_span, "pair_span": self.osd.pair_span}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "BenchmarkConfig":
        obj = dict(obj)
        version = obj.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise InvalidConfig(f"unsupported config version {version}")
        try:
            for key, typ in (("window", WindowConfig), ("bp", BpConfig), ("osd", OsdConfig), ("noise", NoiseModel)):
                if isinstance(obj.get(key), dict):
                    obj[key] = typ(**obj[key])
            if isinstance(obj.get("osd"), str):
                obj["osd"] = OsdConfig.parse(obj["osd"])
            return cls(**obj)
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "BenchmarkConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    shots: int
    failures: int
    observable_failures: list[int]
    wall_seconds: float = 0.0
    complete: bool = True
    decoder_stats: dict = field(default_factory=dict)

    @property
    def wer(self) -> float:
        return self.failures / self.shots if self.shots else 0.0

    @property
    def wer_per_cycle(self) -> PerCycleRate:
        return per_cycle_rate(self.wer, self.config.cycles)

    @property
    def intervals(self) -> ConfidenceIntervals:
        if not self.shots:
            return ConfidenceIntervals((0.0, 1.0), (0.0, 1.0))
        return confidence_interval(self.failures, self.shots)

    def row(self) -> dict:
        ci = self.intervals
        return {"p": self.config.p, "cycles": self.config.cycles, "shots": self.shots,
                "failures": self.failures, "wer": self.wer, "wer_per_cycle": float(self.wer_per_cycle),
                "wilson_lo": ci.wilson[0], "wilson_hi": ci.wilson[1],
                "lik_lo": ci.likelihood[0], "lik_hi": ci.likelihood[1], "seed": self.config.seed}

    def to_json(self) -> dict:
        out = self.row()
        out.update({"observable_failures": list(self.observable_failures), "saturated": self.wer_per_cycle.saturated,
                    "wall_seconds": self.wall_seconds, "complete": self.complete,
                    "decoder_stats": self.decoder_stats, "config": self.config.to_json()})
        return out


def write_csv(results: Iterable[BenchmarkResult], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in res.row().items()})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path: str | Path) -> list[dict]:
    return parse_csv(Path(path).read_text())


def parse_csv(text: str) -> list[dict]:
    """Rows of a result CSV with numeric columns parsed back exactly."""
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        rows.append({k: int(v) if k in ("max_iter", "cycles", "shots", "failures", "seed") else float(v)
                     for k, v in raw.items()})
    return rows


# ---------------------------------------------------------------------------
# Driver


@dataclass
class _Prepared:
    compiled: object
    detectors: np.ndarray
    decoder: WindowDecoder


def prepare(config: BenchmarkConfig) -> _Prepared:
    """Build the code, noisy circuit, sector DEM and window decoder once."""
    circuit = apply_noise(memory_experiment(config.code(), config.basis, config.cycles), config.noise_model)
    dem = build_dem(circuit).sector(config.basis)
    full_sectors = np.asarray(circuit.detector_sectors)
    detectors = np.flatnonzero(full_sectors == config.basis)
    decoder = WindowDecoder(dem, config.window, config.bp, config.osd)
    return _Prepared(compile_circuit(circuit), detectors, decoder)


def _run_batch(prep: _Prepared, config: BenchmarkConfig, batch: int) -> tuple[int, np.ndarray, np.ndarray]:
    start = batch * config.batch_size
    shots = min(config.batch_size, config.shots - start)
    dets, obs = sample_batch(prep.compiled, shots, batch_seed(config.seed, batch))
    pred = prep.decoder.predict_observables(dets[:, prep.detectors])
    wrong = pred ^ obs
    s = prep.decoder.last_stats
    return shots, wrong.sum(axis=0), np.array([wrong.any(axis=1).sum(), s["bp_runs"], s["bp_failures"],
                                               s["bp_iterations"]])


_worker: tuple[_Prepared, BenchmarkConfig] | None = None


def _init_worker(prep, config):
    global _worker
    _worker = (prep, config)


def _worker_batch(batch: int):
    prep, config = _worker
    return batch, _run_batch(prep, config, batch)


def worker_count(requested: int | None = None) -> int:
    """Worker processes to use: ``requested`` (or the CPU count), capped by
    the ``RADIAL_QEC_THREADS`` environment variable."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError as exc:
            raise InvalidConfig(f"{THREADS_ENV} must be an integer, got {cap!r}") from exc
    return max(1, n)


def run_benchmark(config: BenchmarkConfig, workers: int | None = None,
                  progress: Callable[[BenchmarkResult], None] | None = None) -> BenchmarkResult:
    """Sample and decode ``config.shots`` shots; word failure = any observable
    mispredicted.  Batches are seeded from ``(config.seed, batch index)`` so the
    result does not depend on ``workers``.  On ``KeyboardInterrupt`` the batches
    finished so far are returned with ``complete = False``."""
    t0 = time.perf_counter()
    prep = prepare(config)
    n_batches = math.ceil(config.shots / config.batch_size)
    n_obs = len(prep.compiled.obs_ptr) - 1
    result = BenchmarkResult(config, 0, 0, [0] * n_obs)
    totals = np.zeros(4, dtype=np.int64)
    obs_fail = np.zeros(n_obs, dtype=np.int64)

    def absorb(payload):
        shots, per_obs, counts = payload
        totals[:] += counts
        obs_fail[:] += per_obs
        result.shots += shots
        result.failures = int(totals[0])
        result.observable_failures = [int(x) for x in obs_fail]
        result.decoder_stats = {"bp_runs": int(totals[1]), "bp_failures": int(totals[2]),
                                "bp_iterations": int(totals[3])}
        result.wall_seconds = time.perf_counter() - t0
        if progress is not None:
            progress(result)

    n_workers = min(worker_count(workers), n_batches)
    try:
        if n_workers == 1:
            for b in range(n_batches):
                absorb(_run_batch(prep, config, b))
        else:
            ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
            with ProcessPoolExecutor(n_workers, mp_context=ctx, initializer=_init_worker,
                                     initargs=(prep, config)) as pool:
                for _, payload in pool.map(_worker_batch, range(n_batches)):
                    absorb(payload)
    except KeyboardInterrupt:
        result.complete = False
    result.wall_seconds = time.perf_counter() - t0
    return result


def iteration_sweep(config: BenchmarkConfig, iterations: Iterable[int], workers: int | None = None,
                    path: str | Path | None = None) -> tuple[list[BenchmarkResult], str]:
    """One OSD-0 benchmark per BP iteration cap, all on the same seed; returns
    the results and their CSV (with a leading ``max_iter`` column)."""
    results = []
    for it in iterations:
        cfg = replace(config, bp=replace(config.bp, max_iter=int(it)), osd=OsdConfig())
        results.append(run_benchmark(cfg, workers))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["max_iter"] + CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        row = {k: repr(v) if isinstance(v, float) else v for k, v in res.row().items()}
        writer.writerow({"max_iter": res.config.bp.max_iter, **row})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return results, text
