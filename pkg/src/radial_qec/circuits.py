"""Syndrome-extraction schedules and memory-experiment circuits.

A circuit is a list of moments.  Reset and measurement moments are
instantaneous boundaries; every other moment is one timestep of CX gates.
Qubits ``0 .. n-1`` are data, then one ancilla per Z stabiliser, then one
ancilla per X stabiliser.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quantum import RadialCssCode

GATES = {"R", "RX", "M", "MX", "CX"}
NOISE = {"DEPOLARIZE1", "DEPOLARIZE2", "X_ERROR", "Z_ERROR"}
RESETS = {"R", "RX"}
MEASURES = {"M", "MX"}


class CollisionError(ValueError):
    def __init__(self, timestep: int, qubit: int):
        super().__init__(f"qubit {qubit} used twice in timestep {timestep}")
        self.timestep = timestep
        self.qubit = qubit


class IdleAncillaError(ValueError):
    pass


@dataclass(frozen=True)
class Op:
    name: str
    targets: tuple[int, ...]
    arg: float | None = None

    def __post_init__(self):
        if self.name not in GATES | NOISE:
            raise ValueError(f"unknown operation {self.name!r}")
        if self.name in ("CX", "DEPOLARIZE2") and len(self.targets) % 2:
            raise ValueError(f"{self.name} needs target pairs")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        t = self.targets
        return list(zip(t[::2], t[1::2]))

    def to_text(self) -> str:
        head = self.name if self.arg is None else f"{self.name}({self.arg!r})"
        return " ".join([head, *map(str, self.targets)])


@dataclass
class Circuit:
    n_qubits: int
    moments: list[list[Op]] = field(default_factory=list)
    detectors: list[tuple[int, ...]] = field(default_factory=list)
    detector_rounds: list[int] = field(default_factory=list)
    detector_sectors: list[str] = field(default_factory=list)
    observables: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def n_measurements(self) -> int:
        return sum(len(op.targets) for m in self.moments for op in m if op.name in MEASURES)

    @property
    def n_detectors(self) -> int:
        return len(self.detectors)

    @property
    def n_observables(self) -> int:
        return len(self.observables)

    @property
    def rounds(self) -> int:
        return max(self.detector_rounds, default=-1) + 1

    @property
    def gate_timesteps(self) -> int:
        return sum(1 for m in self.moments if moment_kind(m) == "gate")

    def ops(self):
        for m in self.moments:
            yield from m

    def validate(self) -> None:
        """Raise on qubit collisions or dangling measurement references."""
        for t, moment in enumerate(self.moments):
            used: set[int] = set()
            for op in moment:
                if op.name in NOISE:
                    continue
                for q in op.targets:
                    if q in used:
                        raise CollisionError(t, q)
                    if not 0 <= q < self.n_qubits:
                        raise ValueError(f"qubit {q} out of range")
                    used.add(q)
        nm = self.n_measurements
        for rec in self.detectors + self.observables:
            if any(not 0 <= m < nm for m in rec):
                raise ValueError("record references a missing measurement")

    def to_text(self) -> str:
        lines = []
        for i, moment in enumerate(self.moments):
            if i:
                lines.append("TICK")
            lines.extend(op.to_text() for op in moment)
        sectors = self.detector_sectors or ["Z"] * len(self.detectors)
        for rec, rnd, sec in zip(self.detectors, self.detector_rounds, sectors):
            lines.append(" ".join([f"DETECTOR({rnd},{sec})", *map(str, rec)]))
        for k, rec in enumerate(self.observables):
            lines.append(" ".join(["OBSERVABLE", str(k), *map(str, rec)]))
        return f"QUBITS {self.n_qubits}\n" + "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        head = re.compile(r"^([A-Z_0-9]+)(?:\(([^)]*)\))?$")
        circ = cls(0, [[]])
        obs: dict[int, tuple[int, ...]] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            words = line.split()
            match = head.match(words[0])
            if not match:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}")
            name, arg = match.group(1), match.group(2)
            nums = [int(x) for x in words[1:]]
            if name == "QUBITS":
                circ.n_qubits = nums[0]
            elif name == "TICK":
                circ.moments.append([])
            elif name == "DETECTOR":
                rnd, _, sec = (arg or "0").partition(",")
                circ.detectors.append(tuple(nums))
                circ.detector_rounds.append(int(rnd))
                circ.detector_sectors.append(sec.strip() or "Z")
            elif name == "OBSERVABLE":
                obs[nums[0]] = tuple(nums[1:])
            else:
                circ.moments[-1].append(Op(name, tuple(nums), float(arg) if arg else None))
        circ.observables = [obs[k] for k in sorted(obs)]
        return circ

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Circuit":
        return cls.from_text(Path(path).read_text())

    def without_noise(self) -> "Circuit":
        moments = [[op for op in m if op.name not in NOISE] for m in self.moments]
        return Circuit(self.n_qubits, moments, list(self.detectors), list(self.detector_rounds),
                       list(self.detector_sectors), list(self.observables))


def moment_kind(moment: list[Op]) -> str:
    names = {op.name for op in moment if op.name not in NOISE}
    if names and names <= RESETS:
        return "reset"
    if names and names <= MEASURES:
        return "measure"
    return "gate"


# ---------------------------------------------------------------------------
# Schedule


@dataclass(frozen=True)
class ScheduleAssignment:
    """Per ancilla, the ordered ``(timestep offset, data qubit)`` interactions."""

    r: int
    z_ancillas: tuple[tuple[tuple[int, int], ...], ...]
    x_ancillas: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def period(self) -> int:
        return 2 * self.r


def _unique(code: RadialCssCode, support, kind: str, c: int, u: int | None = None) -> int:
    hits = [q for q in support if (co := code.qubit_coord(q)).kind == kind and co.c == c
            and (u is None or co.u == u)]
    if len(hits) != 1:
        raise ValueError(f"expected one {kind}-code qubit at c={c}, u={u}, found {hits}")
    return hits[0]


def schedule(code: RadialCssCode) -> ScheduleAssignment:
    r = code.r
    z_list, x_list = [], []
    for row in range(code.H_Z.rows):
        z, u, _ = code.stab_coord(row)
        sup = code.H_Z.row(row).support()
        seq = [(t, _unique(code, sup, "Z", z, (u + t) % r)) for t in range(r)]
        seq += [(t, _unique(code, sup, "X", (z + t) % r, u)) for t in range(r, 2 * r)]
        z_list.append(tuple(seq))
    for row in range(code.H_X.rows):
        x, u, _ = code.stab_coord(row)
        sup = code.H_X.row(row).support()
        seq = [(t, _unique(code, sup, "Z", (x + t) % r, u)) for t in range(r, 2 * r)]
        seq += [(t, _unique(code, sup, "X", x, (u + t) % r)) for t in range(2 * r, 3 * r)]
        x_list.append(tuple(seq))
    return ScheduleAssignment(r, tuple(z_list), tuple(x_list))


def _layers(code: RadialCssCode, sched: ScheduleAssignment, n_z_rounds: int, n_x_rounds: int):
    """CX layers with Z round ``k`` at offset ``2rk`` and X round ``k`` at ``2rk``
    (its own local offsets already start at ``r``)."""
    n, half, r = code.n, code.half, code.r
    total = max(2 * r * (n_z_rounds - 1) + 2 * r if n_z_rounds else 0,
                2 * r * (n_x_rounds - 1) + 3 * r if n_x_rounds else 0)
    layers: list[list[tuple[int, int]]] = [[] for _ in range(total)]
    for k in range(n_z_rounds):
        for j, seq in enumerate(sched.z_ancillas):
            for t, q in seq:
                layers[2 * r * k + t].append((q, n + j))
    for k in range(n_x_rounds):
        for j, seq in enumerate(sched.x_ancillas):
            for t, q in seq:
                layers[2 * r * k + t].append((n + half + j, q))
    return layers


def check_layers(layers, offset: int = 0) -> None:
    for t, layer in enumerate(layers):
        seen: set[int] = set()
        for pair in layer:
            for q in pair:
                if q in seen:
                    raise CollisionError(offset + t, q)
                seen.add(q)


def syndrome_cycle(code: RadialCssCode) -> tuple[Circuit, ScheduleAssignment]:
    """One Z round and one X round, offset by half a period, as a standalone fragment."""
    sched = schedule(code)
    n, half = code.n, code.half
    layers = _layers(code, sched, 1, 1)
    check_layers(layers)
    r = code.r
    z_anc = tuple(range(n, n + half))
    x_anc = tuple(range(n + half, n + 2 * half))
    moments: list[list[Op]] = [[Op("R", z_anc)]]
    for t, layer in enumerate(layers):
        if t == r:
            moments.append([Op("RX", x_anc)])
        moments.append([Op("CX", tuple(q for pair in layer for q in pair))])
        if t == 2 * r - 1:
            moments.append([Op("M", z_anc)])
    moments.append([Op("MX", x_anc)])
    circ = Circuit(n + 2 * half, moments)
    circ.validate()
    check_ancillas_busy(circ, set(z_anc) | set(x_anc))
    return circ, sched


def check_ancillas_busy(circ: Circuit, ancillas: set[int]) -> None:
    """Every ancilla must act in each gate timestep between its reset and measurement."""
    live: set[int] = set()
    for t, moment in enumerate(circ.moments):
        kind = moment_kind(moment)
        touched = {q for op in moment if op.name not in NOISE for q in op.targets}
        if kind == "reset":
            live |= touched & ancillas
        elif kind == "measure":
            live -= touched
        else:
            idle = live - touched
            if idle:
                raise IdleAncillaError(f"ancillas {sorted(idle)[:5]} idle at moment {t}")


def memory_experiment(code: RadialCssCode, basis: str = "Z", cycles: int = 15) -> Circuit:
    """Repeated syndrome cycles between transversal preparation and readout.

    Detector round ``t`` holds the Z-sector then X-sector detectors produced by
    the ``t``-th measurement of each stabiliser type; the final data-readout
    comparisons are appended to the last round.
    """
    basis = basis.upper()
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be Z or X, got {basis!r}")
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    n, half, r = code.n, code.half, code.r
    sched = schedule(code)
    layers = _layers(code, sched, cycles, cycles)
    check_layers(layers)
    z_anc = tuple(range(n, n + half))
    x_anc = tuple(range(n + half, n + 2 * half))
    data = tuple(range(n))

    moments: list[list[Op]] = []
    z_meas: list[np.ndarray] = []
    x_meas: list[np.ndarray] = []
    mcount = 0

    def measure(name, qubits):
        nonlocal mcount
        moments.append([Op(name, qubits)])
        idx = np.arange(mcount, mcount + len(qubits))
        mcount += len(qubits)
        return idx

    moments.append([Op("R" if basis == "Z" else "RX", data + z_anc)])
    for t, layer in enumerate(layers):
        if t % (2 * r) == r and t // (2 * r) < cycles:
            moments.append([Op("RX", x_anc)])
        moments.append([Op("CX", tuple(q for pair in layer for q in pair))])
        if t % (2 * r) == 2 * r - 1 and t // (2 * r) < cycles:
            z_meas.append(measure("M", z_anc))
            if t // (2 * r) < cycles - 1:
                moments.append([Op("R", z_anc)])
        if t % (2 * r) == r - 1 and t >= 2 * r:
            x_meas.append(measure("MX", x_anc))
    data_meas = measure("M" if basis == "Z" else "MX", data)

    circ = Circuit(n + 2 * half, moments)
    same = z_meas if basis == "Z" else x_meas
    same_checks = code.H_Z if basis == "Z" else code.H_X
    for k in range(cycles):
        for sector, meas in (("Z", z_meas), ("X", x_meas)):
            if k == 0:
                # only the basis-matched stabilisers are deterministic on the initial product state
                if meas is same:
                    circ.detectors += [(int(m),) for m in meas[0]]
                    circ.detector_rounds += [0] * half
                    circ.detector_sectors += [sector] * half
                continue
            if k == 1 and sector == "Z" and basis == "X":
                # the first Z round runs before any X round has started, so its
                # outcomes are not a clean stabiliser measurement to compare against
                continue
            circ.detectors += [(int(a), int(b)) for a, b in zip(meas[k - 1], meas[k])]
            circ.detector_rounds += [k] * half
            circ.detector_sectors += [sector] * half
    for j in range(same_checks.rows):
        rec = [int(data_meas[q]) for q in same_checks.row(j).support()]
        circ.detectors.append(tuple(sorted([int(same[-1][j]), *rec])))
        circ.detector_rounds.append(cycles - 1)
        circ.detector_sectors.append(basis)
    logicals = code.logical_z if basis == "Z" else code.logical_x
    circ.observables = [tuple(int(data_meas[q]) for q in lg.support()) for lg in logicals]
    circ.validate()
    check_ancillas_busy(circ, set(z_anc) | set(x_anc))
    return circ
