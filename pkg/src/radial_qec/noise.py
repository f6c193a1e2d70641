"""Circuit-level noise, Pauli-frame sampling and detector error models."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba as nb
import numpy as np
from scipy import sparse

from .circuits import MEASURES, NOISE, Circuit, Op, moment_kind

# ---------------------------------------------------------------------------
# Noise model


@dataclass(frozen=True)
class NoiseModel:
    p_idle: float = 0.0
    p_cx: float = 0.0
    p_reset: float = 0.0
    p_meas: float = 0.0

    def __post_init__(self):
        for name in ("p_idle", "p_cx", "p_reset", "p_meas"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name}={value} outside [0, 1)")

    @classmethod
    def uniform(cls, p: float) -> "NoiseModel":
        return cls(p, p, p, p)


def apply_noise(circuit: Circuit, model: NoiseModel) -> Circuit:
    """Insert the four noise channels around the gates of a noiseless circuit.

    Idle depolarisation applies to qubits that are live (reset and not yet
    measured) but untouched in a gate timestep.  Zero-probability channels are
    omitted.
    """
    live: set[int] = set()
    moments: list[list[Op]] = []
    for moment in circuit.without_noise().moments:
        kind = moment_kind(moment)
        out: list[Op] = []
        if kind == "measure":
            if model.p_meas > 0:
                for op in moment:
                    flip = "X_ERROR" if op.name == "M" else "Z_ERROR"
                    out.append(Op(flip, op.targets, model.p_meas))
            out.extend(moment)
            for op in moment:
                live.difference_update(op.targets)
        elif kind == "reset":
            out.extend(moment)
            for op in moment:
                live.update(op.targets)
                if model.p_reset > 0:
                    flip = "X_ERROR" if op.name == "R" else "Z_ERROR"
                    out.append(Op(flip, op.targets, model.p_reset))
        else:
            out.extend(moment)
            touched: set[int] = set()
            for op in moment:
                touched.update(op.targets)
                if op.name == "CX" and model.p_cx > 0:
                    out.append(Op("DEPOLARIZE2", op.targets, model.p_cx))
            idle = tuple(sorted(live - touched))
            if idle and model.p_idle > 0:
                out.append(Op("DEPOLARIZE1", idle, model.p_idle))
        moments.append(out)
    return Circuit(circuit.n_qubits, moments, list(circuit.detectors), list(circuit.detector_rounds),
                   list(circuit.detector_sectors), list(circuit.observables))


# ---------------------------------------------------------------------------
# Pauli-frame sampler

_CODES = {"R": 0, "RX": 1, "M": 2, "MX": 3, "CX": 4, "DEPOLARIZE1": 5, "DEPOLARIZE2": 6,
          "X_ERROR": 7, "Z_ERROR": 8}


@dataclass(frozen=True)
class CompiledCircuit:
    codes: np.ndarray
    args: np.ndarray
    tptr: np.ndarray
    targets: np.ndarray
    mptr: np.ndarray
    det_ptr: np.ndarray
    det_idx: np.ndarray
    obs_ptr: np.ndarray
    obs_idx: np.ndarray
    n_qubits: int
    n_measurements: int


def _csr(records) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(records) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(r) for r in records])
    idx = np.fromiter((m for r in records for m in r), dtype=np.int64, count=int(ptr[-1]))
    return ptr, idx


def compile_circuit(circuit: Circuit) -> CompiledCircuit:
    codes, args, tptr, targets, mptr = [], [], [0], [], []
    mcount = 0
    for op in circuit.ops():
        codes.append(_CODES[op.name])
        args.append(op.arg or 0.0)
        targets.extend(op.targets)
        tptr.append(len(targets))
        mptr.append(mcount)
        if op.name in MEASURES:
            mcount += len(op.targets)
    det_ptr, det_idx = _csr(circuit.detectors)
    obs_ptr, obs_idx = _csr(circuit.observables)
    return CompiledCircuit(
        np.array(codes, np.int64), np.array(args, np.float64), np.array(tptr, np.int64),
        np.array(targets, np.int64), np.array(mptr, np.int64), det_ptr, det_idx, obs_ptr, obs_idx,
        circuit.n_qubits, mcount,
    )


@nb.njit(cache=True)
def _flip(frame, q, shot):
    frame[q, shot >> 6] ^= np.uint64(1) << np.uint64(shot & 63)


@nb.njit(cache=True)
def _random_words(frame, q, nw):
    for w in range(nw):
        frame[q, w] = np.uint64(np.random.randint(0, 1 << 32)) << np.uint64(32) | np.uint64(
            np.random.randint(0, 1 << 32))


@nb.njit(cache=True)
def _apply_pauli(xf, zf, q, pauli, shot):
    if pauli & 1:
        _flip(xf, q, shot)
    if pauli & 2:
        _flip(zf, q, shot)


@nb.njit(cache=True)
def _run_frames(codes, args, tptr, targets, mptr, n_qubits, n_meas, shots, seed, noise_scale,
                forced, gauge):
    """Propagate Pauli frames for ``shots`` shots; returns packed measurement flips.

    ``forced`` rows are ``(instruction, target slot, pauli, shot)`` and are applied
    right after the instruction, in addition to sampled noise.
    """
    np.random.seed(seed)
    nw = (shots + 63) >> 6
    xf = np.zeros((n_qubits, nw), dtype=np.uint64)
    zf = np.zeros((n_qubits, nw), dtype=np.uint64)
    meas = np.zeros((max(n_meas, 1), nw), dtype=np.uint64)
    fpos = 0
    for i in range(codes.shape[0]):
        code = codes[i]
        t0 = tptr[i]
        t1 = tptr[i + 1]
        if code == 0:
            for j in range(t0, t1):
                xf[targets[j], :] = 0
                if gauge:
                    _random_words(zf, targets[j], nw)
                else:
                    zf[targets[j], :] = 0
        elif code == 1:
            for j in range(t0, t1):
                zf[targets[j], :] = 0
                if gauge:
                    _random_words(xf, targets[j], nw)
                else:
                    xf[targets[j], :] = 0
        elif code == 2 or code == 3:
            m = mptr[i]
            for j in range(t0, t1):
                q = targets[j]
                if code == 2:
                    meas[m, :] = xf[q, :]
                    if gauge:
                        _random_words(zf, q, nw)
                else:
                    meas[m, :] = zf[q, :]
                    if gauge:
                        _random_words(xf, q, nw)
                m += 1
        elif code == 4:
            for j in range(t0, t1, 2):
                c = targets[j]
                t = targets[j + 1]
                for w in range(nw):
                    xf[t, w] ^= xf[c, w]
                    zf[c, w] ^= zf[t, w]
        else:
            p = args[i] * noise_scale
            width = 2 if code == 6 else 1
            slots = (t1 - t0) // width
            if p > 0.0:
                total = slots * shots
                logq = math.log1p(-p) if p < 1.0 else -np.inf
                pos = -1
                while True:
                    u = np.random.random()
                    if p >= 1.0:
                        pos += 1
                    else:
                        pos += 1 + int(math.floor(math.log(1.0 - u) / logq))
                    if pos >= total:
                        break
                    slot = pos // shots
                    shot = pos - slot * shots
                    base = t0 + slot * width
                    if code == 5:
                        _apply_pauli(xf, zf, targets[base], np.random.randint(1, 4), shot)
                    elif code == 6:
                        v = np.random.randint(1, 16)
                        _apply_pauli(xf, zf, targets[base], v & 3, shot)
                        _apply_pauli(xf, zf, targets[base + 1], v >> 2, shot)
                    elif code == 7:
                        _flip(xf, targets[base], shot)
                    else:
                        _flip(zf, targets[base], shot)
        while fpos < forced.shape[0] and forced[fpos, 0] == i:
            slot = forced[fpos, 1]
            pauli = forced[fpos, 2]
            shot = forced[fpos, 3]
            if code == 6 or code == 4:
                base = t0 + 2 * slot
                _apply_pauli(xf, zf, targets[base], pauli & 3, shot)
                _apply_pauli(xf, zf, targets[base + 1], pauli >> 2, shot)
            else:
                _apply_pauli(xf, zf, targets[t0 + slot], pauli, shot)
            fpos += 1
    return meas


@nb.njit(cache=True)
def _records(meas, ptr, idx):
    n = ptr.shape[0] - 1
    out = np.zeros((n, meas.shape[1]), dtype=np.uint64)
    for d in range(n):
        for k in range(ptr[d], ptr[d + 1]):
            for w in range(meas.shape[1]):
                out[d, w] ^= meas[idx[k], w]
    return out


def _unpack_shots(words: np.ndarray, shots: int) -> np.ndarray:
    """(records, words) packed over shots -> (shots, records) bool."""
    if words.shape[0] == 0:
        return np.zeros((shots, 0), dtype=bool)
    as_bytes = words.astype("<u8").view(np.uint8).reshape(words.shape[0], -1)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :shots]
    return bits.T.astype(bool)


def batch_seed(master: int, batch: int) -> int:
    return int(np.random.SeedSequence([int(master), int(batch)]).generate_state(1)[0] & 0x7FFFFFFF)


def sample_batch(compiled: CompiledCircuit, shots: int, seed: int, noise_scale: float = 1.0,
                 forced: np.ndarray | None = None, gauge: bool = True):
    if forced is None:
        forced = np.zeros((0, 4), dtype=np.int64)
    else:
        forced = np.asarray(forced, dtype=np.int64).reshape(-1, 4)
        forced = forced[np.argsort(forced[:, 0], kind="stable")]
    meas = _run_frames(compiled.codes, compiled.args, compiled.tptr, compiled.targets, compiled.mptr,
                       compiled.n_qubits, compiled.n_measurements, shots, seed, noise_scale, forced, gauge)
    dets = _records(meas, compiled.det_ptr, compiled.det_idx)
    obs = _records(meas, compiled.obs_ptr, compiled.obs_idx)
    return _unpack_shots(dets, shots), _unpack_shots(obs, shots)


BATCH_SHOTS = 10_000


def sample(circuit: Circuit | CompiledCircuit, shots: int, seed: int = 0,
           batch_size: int = BATCH_SHOTS) -> tuple[np.ndarray, np.ndarray]:
    """Detector and observable flips, ``(shots, n)`` bool arrays.

    Batch ``b`` always covers shots ``[b * batch_size, (b+1) * batch_size)`` and
    uses a seed derived from ``(seed, b)``, so any partition of batches across
    workers reproduces the same tables.
    """
    compiled = circuit if isinstance(circuit, CompiledCircuit) else compile_circuit(circuit)
    dets, obs = [], []
    for b, start in enumerate(range(0, shots, batch_size)):
        d, o = sample_batch(compiled, min(batch_size, shots - start), batch_seed(seed, b))
        dets.append(d)
        obs.append(o)
    nd = len(compiled.det_ptr) - 1
    no = len(compiled.obs_ptr) - 1
    if not dets:
        return np.zeros((0, nd), bool), np.zeros((0, no), bool)
    return np.vstack(dets), np.vstack(obs)


def noise_locations(circuit: Circuit):
    """Yield ``(instruction index, slot, n_outcomes)`` for every noise channel target."""
    for i, op in enumerate(circuit.ops()):
        if op.name in NOISE:
            width = 2 if op.name == "DEPOLARIZE2" else 1
            n_out = {"DEPOLARIZE1": 3, "DEPOLARIZE2": 15}.get(op.name, 1)
            for slot in range(len(op.targets) // width):
                yield i, slot, n_out


def channel_paulis(name: str) -> list[int]:
    """Non-identity Pauli codes of a channel (bit 0 = X, bit 1 = Z; pairs packed in 4 bits)."""
    return {"DEPOLARIZE1": [1, 2, 3], "DEPOLARIZE2": list(range(1, 16)),
            "X_ERROR": [1], "Z_ERROR": [2]}[name]


# ---------------------------------------------------------------------------
# Bit-table IO


def write_bits(path: str | Path, table: np.ndarray) -> None:
    """Shot-major packed bits after an 8-byte header ``(shots, width)`` of uint32."""
    table = np.asarray(table, dtype=bool)
    shots, width = table.shape
    with open(path, "wb") as fh:
        fh.write(np.array([shots, width], dtype="<u4").tobytes())
        fh.write(np.packbits(table, axis=1, bitorder="little").tobytes())


def read_bits(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    shots, width = np.frombuffer(raw[:8], dtype="<u4")
    row = (int(width) + 7) // 8
    body = np.frombuffer(raw[8:], dtype=np.uint8)
    if body.size != shots * row:
        raise ValueError(f"{path}: expected {shots * row} payload bytes, found {body.size}")
    bits = np.unpackbits(body.reshape(int(shots), row), axis=1, bitorder="little")[:, :width]
    return bits.astype(bool)


# ---------------------------------------------------------------------------
# Detector error model


@dataclass
class DetectorErrorModel:
    probs: np.ndarray
    det_ptr: np.ndarray
    det_idx: np.ndarray
    obs_ptr: np.ndarray
    obs_idx: np.ndarray
    n_detectors: int
    n_observables: int
    detector_round: np.ndarray
    detector_sector: list[str] = field(default_factory=list)

    @property
    def n_mechanisms(self) -> int:
        return len(self.probs)

    @property
    def rounds(self) -> int:
        return int(self.detector_round.max()) + 1 if self.n_detectors else 0

    @property
    def round_starts(self) -> np.ndarray:
        """First detector index of each round, plus a final sentinel."""
        return np.searchsorted(self.detector_round, np.arange(self.rounds + 1))

    @property
    def detectors_per_round(self) -> int:
        sizes = np.diff(self.round_starts)
        return int(sizes[1] if len(sizes) > 1 else sizes[0]) if len(sizes) else 0

    def dets(self, j: int) -> np.ndarray:
        return self.det_idx[self.det_ptr[j]:self.det_ptr[j + 1]]

    def obs(self, j: int) -> np.ndarray:
        return self.obs_idx[self.obs_ptr[j]:self.obs_ptr[j + 1]]

    def mechanisms(self):
        for j in range(self.n_mechanisms):
            yield float(self.probs[j]), self.dets(j).tolist(), self.obs(j).tolist()

    def check_matrix(self) -> sparse.csc_matrix:
        data = np.ones(len(self.det_idx), dtype=np.uint8)
        return sparse.csc_matrix((data, self.det_idx, self.det_ptr), shape=(self.n_detectors, self.n_mechanisms))

    def observable_matrix(self) -> sparse.csc_matrix:
        data = np.ones(len(self.obs_idx), dtype=np.uint8)
        return sparse.csc_matrix((data, self.obs_idx, self.obs_ptr), shape=(self.n_observables, self.n_mechanisms))

    def first_detector(self) -> np.ndarray:
        """First detector of each mechanism, ``n_detectors`` when it has none."""
        out = np.full(self.n_mechanisms, self.n_detectors, dtype=np.int64)
        has = np.diff(self.det_ptr) > 0
        out[has] = self.det_idx[self.det_ptr[:-1][has]]
        return out

    def last_detector(self) -> np.ndarray:
        out = np.full(self.n_mechanisms, -1, dtype=np.int64)
        has = np.diff(self.det_ptr) > 0
        out[has] = self.det_idx[self.det_ptr[1:][has] - 1]
        return out

    def round_span(self) -> np.ndarray:
        """Number of consecutive rounds touched by each mechanism (0 if none)."""
        first, last = self.first_detector(), self.last_detector()
        has = last >= 0
        span = np.zeros(self.n_mechanisms, dtype=np.int64)
        span[has] = self.detector_round[last[has]] - self.detector_round[first[has]] + 1
        return span

    def to_json(self) -> dict:
        return {
            "n_detectors": self.n_detectors,
            "n_observables": self.n_observables,
            "detectors_per_round": self.detectors_per_round,
            "rounds": self.rounds,
            "detector_rounds": self.detector_round.tolist(),
            "detector_sectors": list(self.detector_sector),
            "mechanisms": [{"p": p, "dets": d, "obs": o} for p, d, o in self.mechanisms()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DetectorErrorModel":
        mechs = obj["mechanisms"]
        det_ptr, det_idx = _csr([m["dets"] for m in mechs])
        obs_ptr, obs_idx = _csr([m["obs"] for m in mechs])
        n_det = int(obj["n_detectors"])
        if "detector_rounds" in obj:
            rounds = np.array(obj["detector_rounds"], dtype=np.int64)
        else:
            rounds = np.arange(n_det, dtype=np.int64) // max(int(obj["detectors_per_round"]), 1)
        return cls(np.array([m["p"] for m in mechs], dtype=np.float64), det_ptr, det_idx, obs_ptr, obs_idx,
                   n_det, int(obj["n_observables"]), rounds, list(obj.get("detector_sectors", [])))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path: str | Path) -> "DetectorErrorModel":
        return cls.from_json(json.loads(Path(path).read_text()))

    def restrict(self, detectors) -> "DetectorErrorModel":
        """Keep only the given detectors (ascending), re-merging mechanisms whose
        signatures coincide after projection and dropping empty ones."""
        detectors = np.asarray(detectors, dtype=np.int64)
        remap = np.full(self.n_detectors, -1, dtype=np.int64)
        remap[detectors] = np.arange(len(detectors))
        merged: dict[tuple, float] = {}
        for p, dets, obs in self.mechanisms():
            nd = tuple(int(remap[d]) for d in dets if remap[d] >= 0)
            key = (nd, tuple(obs))
            if not nd and not obs:
                continue
            merged[key] = merged.get(key, 1.0) * (1.0 - 2.0 * p)
        sectors = [self.detector_sector[d] for d in detectors] if self.detector_sector else []
        return _assemble(merged, len(detectors), self.n_observables, self.detector_round[detectors], sectors)

    def sector(self, basis: str) -> "DetectorErrorModel":
        keep = [i for i, s in enumerate(self.detector_sector) if s == basis.upper()]
        return self.restrict(keep)


def _assemble(merged: dict[tuple, float], n_det: int, n_obs: int, det_round, sectors) -> DetectorErrorModel:
    """Build a DEM from ``{(dets, obs): prod(1 - 2 p)}``, sorted by first detector."""
    keys = sorted(merged, key=lambda k: (k[0][0] if k[0] else n_det, k[0], k[1]))
    probs = np.array([(1.0 - merged[k]) / 2.0 for k in keys], dtype=np.float64)
    det_ptr, det_idx = _csr([k[0] for k in keys])
    obs_ptr, obs_idx = _csr([k[1] for k in keys])
    return DetectorErrorModel(probs, det_ptr, det_idx, obs_ptr, obs_idx, n_det, n_obs,
                              np.asarray(det_round, dtype=np.int64), list(sectors))


def merge_probabilities(p1: float, p2: float) -> float:
    """Probability that exactly one of two independent mechanisms fires."""
    return p1 * (1 - p2) + p2 * (1 - p1)


def build_dem(circuit: Circuit) -> DetectorErrorModel:
    """Detector error model by backward propagation of detector sensitivities.

    Walking the circuit in reverse, each qubit carries the set of detectors and
    observables that an X or Z error on it would flip at that point; every noise
    channel outcome reads its signature off these sets.
    """
    nd, no = circuit.n_detectors, circuit.n_observables
    nbits = nd + no
    nw = max((nbits + 63) // 64, 1)
    nm = circuit.n_measurements
    # sensitivity of each measurement outcome
    meas_sig = np.zeros((max(nm, 1), nw), dtype=np.uint64)
    for bit, rec in enumerate(list(circuit.detectors) + list(circuit.observables)):
        for m in rec:
            meas_sig[m, bit >> 6] ^= np.uint64(1) << np.uint64(bit & 63)
    sx = np.zeros((circuit.n_qubits, nw), dtype=np.uint64)
    sz = np.zeros((circuit.n_qubits, nw), dtype=np.uint64)
    merged: dict[bytes, float] = {}

    def record(sigs: np.ndarray, p: float) -> None:
        keep = sigs.any(axis=1)
        factor = 1.0 - 2.0 * p
        for row in sigs[keep]:
            key = row.tobytes()
            merged[key] = merged.get(key, 1.0) * factor

    ops = list(circuit.ops())
    mcount = nm
    for op in reversed(ops):
        t = np.asarray(op.targets, dtype=np.int64)
        name = op.name
        if name in ("M", "MX"):
            mcount -= len(t)
            frame = sx if name == "M" else sz
            frame[t] ^= meas_sig[mcount:mcount + len(t)]
        elif name in ("R", "RX"):
            sx[t] = 0
            sz[t] = 0
        elif name == "CX":
            c, g = t[0::2], t[1::2]
            sx[c] ^= sx[g]
            sz[g] ^= sz[c]
        elif name == "X_ERROR":
            record(sx[t], op.arg)
        elif name == "Z_ERROR":
            record(sz[t], op.arg)
        elif name == "DEPOLARIZE1":
            p = op.arg / 3
            record(sx[t], p)
            record(sz[t], p)
            record(sx[t] ^ sz[t], p)
        elif name == "DEPOLARIZE2":
            a, b = t[0::2], t[1::2]
            pa = [np.zeros_like(sx[a]), sx[a], sz[a], sx[a] ^ sz[a]]
            pb = [np.zeros_like(sx[b]), sx[b], sz[b], sx[b] ^ sz[b]]
            p = op.arg / 15
            for v in range(1, 16):
                record(pa[v & 3] ^ pb[v >> 2], p)

    by_support: dict[tuple, float] = {}
    for key, prod in merged.items():
        words = np.frombuffer(key, dtype=np.uint64)
        bits = np.flatnonzero(np.unpackbits(words.view(np.uint8), bitorder="little")[:nbits])
        dets = tuple(int(b) for b in bits if b < nd)
        obs = tuple(int(b) - nd for b in bits if b >= nd)
        by_support[(dets, obs)] = prod
    rounds = np.asarray(circuit.detector_rounds, dtype=np.int64)
    return _assemble(by_support, nd, no, rounds, circuit.detector_sectors)


# ---------------------------------------------------------------------------
# Windows


@dataclass(frozen=True)
class Window:
    s_w: tuple[int, int]
    s_c: tuple[int, int]
    w_inds: np.ndarray
    c_inds: np.ndarray
    final: bool


def decoding_rounds(dem: DetectorErrorModel, c: int) -> int:
    return -(-dem.rounds // c)


def window_indices(dem: DetectorErrorModel, round_index: int, w: int, c: int) -> Window:
    """Rows and columns of decoding round ``round_index`` for a ``(w, c)`` window.

    Detector rows span rounds ``[k c, k c + w)`` clipped to the last round;
    window columns are all mechanisms touching those rows; committed columns are
    the mechanisms whose first detector falls in the commit rounds, or in the
    whole window for the final decoding round.
    """
    if not 1 <= c <= w:
        raise ValueError(f"need 1 <= c <= w, got w={w}, c={c}")
    n_dec = decoding_rounds(dem, c)
    if not 0 <= round_index < n_dec:
        raise ValueError(f"round {round_index} outside [0, {n_dec})")
    starts = dem.round_starts
    R = dem.rounds
    lo = round_index * c
    final = round_index == n_dec - 1
    s_w = (int(starts[lo]), int(starts[min(lo + w, R)]))
    s_c = (int(starts[lo]), int(starts[min(lo + c, R)]))
    first = dem.first_detector()
    w_inds = np.flatnonzero(_touches_rows(dem, s_w))
    commit_hi = s_w[1] if final else s_c[1]
    c_mask = (first >= s_c[0]) & (first < commit_hi)
    c_inds = np.flatnonzero(c_mask)
    return Window(s_w, s_c, w_inds, c_inds, final)


def _touches_rows(dem: DetectorErrorModel, rows: tuple[int, int]) -> np.ndarray:
    owner = np.repeat(np.arange(dem.n_mechanisms), np.diff(dem.det_ptr))
    inside = (dem.det_idx >= rows[0]) & (dem.det_idx < rows[1])
    out = np.zeros(dem.n_mechanisms, dtype=bool)
    out[owner[inside]] = True
    return out
