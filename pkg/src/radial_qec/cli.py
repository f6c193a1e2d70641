"""Command-line interface: ``radial-qec <subcommand> ...``.

Exit codes: 0 success, 2 invalid configuration, 3 analysis budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import gf2
from .analysis import BudgetExceeded, confinement_profile, estimate_distance
from .circuits import Circuit, memory_experiment
from .classical import AMatrix, SamplingBudgetExceeded, classical_code, random_a_matrix
from .decoder import BpConfig, OsdConfig, UnsatisfiableSyndrome, WindowConfig, WindowDecoder
from .harness import BenchmarkConfig, InvalidConfig, iteration_sweep, run_benchmark, write_csv
from .noise import DetectorErrorModel, NoiseModel, apply_noise, build_dem, read_bits, sample, write_bits
from .quantum import PRESETS, ConstructionError, lifted_product, preset

EXIT_INVALID = 2
EXIT_BUDGET = 3


def _code(args):
    if args.preset:
        return preset(args.preset)
    if not (args.a1 and args.a2):
        raise InvalidConfig("give --preset or both --a1 and --a2")
    return lifted_product(AMatrix.load(args.a1), AMatrix.load(args.a2))


def _add_code_args(p):
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--a1", help="A-matrix JSON of the first classical code")
    p.add_argument("--a2", help="A-matrix JSON of the second classical code")


def _emit(obj, path):
    text = json.dumps(obj, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# construct


def cmd_construct_classical(args):
    if args.random:
        r, s = args.random
        A = random_a_matrix(r, s, args.seed, max_attempts=args.max_attempts)
        if args.a_file:
            A.save(args.a_file)
    else:
        if not args.a_file:
            raise InvalidConfig("give --a-file or --random R S")
        A = AMatrix.load(args.a_file)
    code = classical_code(A)
    report = {"A": A.to_json(), "n": code.n, "k": code.k, "valid": code.report.valid,
              "failed_checks": code.report.failures()}
    if args.emit_pcm:
        gf2.save_matrix(code.H, args.emit_pcm)
    _emit(report, None)
    return 0 if code.report.valid else EXIT_INVALID


def cmd_construct_quantum(args):
    code = _code(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, H in (("hx", code.H_X), ("hz", code.H_Z)):
        gf2.save_matrix(H, out / f"{name}.alist")
        gf2.save_matrix(H, out / f"{name}.json")
    with open(out / "coordinates.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "kind", "c", "u", "v"])
        for q, coord in enumerate(code.qubit_coords):
            writer.writerow([q, coord.kind, coord.c, coord.u, coord.v])
    logicals = {"x": [v.support() for v in code.logical_x],
                "z": [v.support() for v in code.logical_z]}
    (out / "logicals.json").write_text(json.dumps(logicals) + "\n")
    n, k, d = code.parameters()
    _emit({"n": n, "k": k, "d_upper": d, "r": code.r, "s": code.s,
           "A1": code.A1.to_json(), "A2": code.A2.to_json()}, None)
    return 0


# ---------------------------------------------------------------------------
# analyze


def cmd_distance(args):
    est = estimate_distance(_code(args), args.sector, args.trials, np.random.default_rng(args.seed))
    _emit(est.to_json(), args.out)
    return 0


def cmd_confinement(args):
    prof = confinement_profile(_code(args), args.sector, args.wmax, memory_limit=args.memory_limit)
    _emit(prof.to_json(), args.out)
    if args.csv:
        Path(args.csv).write_text(prof.to_csv())
    return 0


# ---------------------------------------------------------------------------
# circuits, DEMs, sampling, decoding


def _noise(args) -> NoiseModel | None:
    if args.p is None:
        return None
    return NoiseModel(*(args.p if v is None else v for v in (args.p_idle, args.p_cx, args.p_reset, args.p_meas)))


def _add_noise_args(p):
    p.add_argument("--p", type=float, help="physical error rate for every channel")
    for name in ("p-idle", "p-cx", "p-reset", "p-meas"):
        p.add_argument(f"--{name}", type=float, help="override one channel's rate (needs --p)")


def cmd_circuit(args):
    circ = memory_experiment(_code(args), args.basis.upper(), args.cycles)
    model = _noise(args)
    if model is not None:
        circ = apply_noise(circ, model)
    circ.save(args.out)
    print(f"{args.out}: {circ.n_qubits} qubits, {circ.gate_timesteps} gate timesteps, "
          f"{circ.n_detectors} detectors, {circ.n_observables} observables")
    return 0


def cmd_dem(args):
    circ = Circuit.load(args.circuit)
    model = _noise(args)
    if model is not None:
        circ = apply_noise(circ.without_noise(), model)
    dem = build_dem(circ)
    if args.sector:
        dem = dem.sector(args.sector.upper())
    dem.save(args.out)
    print(f"{args.out}: {dem.n_mechanisms} mechanisms, {dem.n_detectors} detectors, {dem.rounds} rounds")
    return 0


def cmd_simulate(args):
    circ = Circuit.load(args.circuit)
    dets, obs = sample(circ, args.shots, args.seed)
    if args.sector:
        dets = dets[:, np.asarray(circ.detector_sectors) == args.sector.upper()]
    write_bits(args.out, dets)
    if args.obs_out:
        write_bits(args.obs_out, obs)
    print(f"{args.out}: {dets.shape[0]} shots x {dets.shape[1]} detectors")
    return 0


def cmd_decode(args):
    dem = DetectorErrorModel.load(args.dem)
    syn = read_bits(args.shots)
    if syn.shape[1] != dem.n_detectors:
        raise InvalidConfig(f"shot table has {syn.shape[1]} detectors, DEM has {dem.n_detectors}")
    decoder = WindowDecoder(dem, WindowConfig(args.window, args.commit), BpConfig(args.max_iter, args.scaling),
                            OsdConfig.parse(args.osd))
    pred = decoder.predict_observables(syn)
    actual = read_bits(args.obs) if args.obs else None
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["shot", "predicted"] + (["actual", "failed"] if actual is not None else []))
        for i, row in enumerate(pred):
            bits = "".join("1" if b else "0" for b in row)
            if actual is None:
                writer.writerow([i, bits])
            else:
                writer.writerow([i, bits, "".join("1" if b else "0" for b in actual[i]),
                                 int((row != actual[i]).any())])
    summary = {"shots": len(pred), **decoder.last_stats}
    if actual is not None:
        summary["failures"] = int((pred != actual).any(axis=1).sum())
    print(json.dumps(summary))
    return 0


# ---------------------------------------------------------------------------
# benchmarks


def _bench_config(args) -> BenchmarkConfig:
    base = BenchmarkConfig.load(args.config).to_json() if args.config else BenchmarkConfig().to_json()
    flags = {"preset": args.preset, "a1_file": args.a1, "a2_file": args.a2, "p": args.p,
             "cycles": args.cycles, "shots": args.shots, "seed": args.seed,
             "basis": args.basis.upper() if args.basis else None}
    for key, value in flags.items():
        if value is not None:
            base[key] = value
    if args.a1 or args.a2:
        base["preset"] = args.preset
    cfg = BenchmarkConfig.from_json(base)
    try:
        if args.window is not None or args.commit is not None:
            cfg = replace(cfg, window=WindowConfig(args.window or cfg.window.w, args.commit or cfg.window.c))
        if args.max_iter is not None:
            cfg = replace(cfg, bp=replace(cfg.bp, max_iter=args.max_iter))
        if args.scaling is not None:
            cfg = replace(cfg, bp=replace(cfg.bp, scaling=args.scaling))
        if args.osd is not None:
            cfg = replace(cfg, osd=OsdConfig.parse(args.osd))
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from exc
    return cfg


def _add_bench_args(p):
    p.add_argument("--config", help="JSON benchmark config; flags override its values")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--a1")
    p.add_argument("--a2")
    p.add_argument("--p", type=float)
    p.add_argument("--cycles", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--basis", choices=["z", "x", "Z", "X"])
    p.add_argument("--window", type=int)
    p.add_argument("--commit", type=int)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--scaling", type=float, help="min-sum normalisation factor in (0, 1]")
    p.add_argument("--osd")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--json", help="JSON output path")


def cmd_bench(args):
    res = run_benchmark(_bench_config(args), args.workers)
    if args.out:
        write_csv([res], args.out)
    _emit(res.to_json(), args.json)
    return 0 if res.complete else 130


def cmd_sweep(args):
    iters = [int(x) for x in args.iters.split(",") if x]
    if not iters or min(iters) < 1:
        raise InvalidConfig("--iters needs positive integers")
    results, text = iteration_sweep(_bench_config(args), iters, args.workers, args.out)
    if args.json:
        _emit([r.to_json() for r in results], args.json)
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radial-qec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    construct = sub.add_parser("construct", help="build classical or quantum radial codes")
    csub = construct.add_subparsers(dest="kind", required=True)
    p = csub.add_parser("classical", help="validate an A matrix and emit its parity-check matrix")
    p.add_argument("--a-file", help="A-matrix JSON (written when --random is used)")
    p.add_argument("--random", nargs=2, type=int, metavar=("R", "S"), help="sample a valid A matrix")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-attempts", type=int, default=100_000)
    p.add_argument("--emit-pcm", help="write H as .alist or .json")
    p.set_defaults(func=cmd_construct_classical)
    p = csub.add_parser("quantum", help="lifted product of two classical codes")
    _add_code_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_construct_quantum)

    analyze = sub.add_parser("analyze", help="distance and confinement analysis")
    asub = analyze.add_subparsers(dest="analysis", required=True)
    p = asub.add_parser("distance", help="randomised minimum-weight logical search")
    _add_code_args(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sector", choices=["x", "z"], default="x")
    p.add_argument("--out")
    p.set_defaults(func=cmd_distance)
    p = asub.add_parser("confinement", help="syndrome weights of irreducible errors")
    _add_code_args(p)
    p.add_argument("--wmax", type=int, default=3)
    p.add_argument("--sector", choices=["x", "z"], default="x")
    p.add_argument("--memory-limit", type=int, default=200_000_000, help="maximum enumerated entries")
    p.add_argument("--out", help="JSON output path")
    p.add_argument("--csv", help="CSV output path")
    p.set_defaults(func=cmd_confinement)

    p = sub.add_parser("circuit", help="memory-experiment circuit in the text format")
    _add_code_args(p)
    p.add_argument("--cycles", type=int, default=15)
    p.add_argument("--basis", choices=["z", "x", "Z", "X"], default="z")
    _add_noise_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_circuit)

    p = sub.add_parser("dem", help="detector error model of a noisy circuit")
    p.add_argument("--circuit", required=True)
    _add_noise_args(p)
    p.add_argument("--sector", choices=["z", "x", "Z", "X"], help="keep one detector sector")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dem)

    p = sub.add_parser("simulate", help="sample detector and observable flips")
    p.add_argument("--circuit", required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sector", choices=["z", "x", "Z", "X"], help="keep one detector sector")
    p.add_argument("--out", required=True, help="detector bit table")
    p.add_argument("--obs-out", help="observable bit table")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decode", help="overlapping-window BP+OSD decoding of a shot table")
    p.add_argument("--dem", required=True)
    p.add_argument("--shots", required=True, help="detector bit table")
    p.add_argument("--obs", help="actual observable bit table, to count failures")
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--commit", type=int, default=1)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--scaling", type=float, default=0.625)
    p.add_argument("--osd", default="osd0")
    p.add_argument("--seed", type=int, default=0, help="recorded only; decoding is deterministic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("bench", help="end-to-end memory benchmark")
    _add_bench_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep-iters", help="benchmark over BP iteration caps (OSD-0)")
    _add_bench_args(p)
    p.add_argument("--iters", default="10,100,1000")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceeded, SamplingBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvalidConfig, ConstructionError, UnsatisfiableSyndrome, ValueError, KeyError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
