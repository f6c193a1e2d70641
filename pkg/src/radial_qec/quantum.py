"""Quantum radial codes from the lifted product of two classical radial codes.

Qubit columns are ordered Z-code qubits first (code ``z``, ring, spoke), then
X-code qubits in the same order.  X stabiliser rows are indexed by
``(x, u, v)`` and Z stabiliser rows by ``(z, u, v)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np

from . import gf2
from .classical import AMatrix, validate
from .gf2 import BinaryMatrix, BinaryVector


class QubitCoordinate(NamedTuple):
    kind: Literal["Z", "X"]
    c: int
    u: int
    v: int


class StabiliserCoordinate(NamedTuple):
    c: int
    u: int
    v: int


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RadialCssCode:
    A1: AMatrix
    A2: AMatrix
    H_X: BinaryMatrix
    H_Z: BinaryMatrix
    logical_x: tuple[BinaryVector, ...] = field(default=())
    logical_z: tuple[BinaryVector, ...] = field(default=())

    @property
    def r(self) -> int:
        return self.A1.r

    @property
    def s(self) -> int:
        return self.A1.s

    @property
    def n(self) -> int:
        return 2 * self.r * self.r * self.s

    @property
    def k(self) -> int:
        return self.n - gf2.rank(self.H_X) - gf2.rank(self.H_Z)

    @property
    def d_upper(self) -> int:
        return 2 * self.s

    @property
    def half(self) -> int:
        return self.r * self.r * self.s

    def qubit_index(self, kind: str, c: int, u: int, v: int) -> int:
        base = 0 if kind == "Z" else self.half
        return base + (c * self.r + u) * self.s + v % self.s

    def qubit_coord(self, q: int) -> QubitCoordinate:
        kind = "Z" if q < self.half else "X"
        q %= self.half
        rs = self.r * self.s
        return QubitCoordinate(kind, q // rs, (q % rs) // self.s, q % self.s)

    @property
    def qubit_coords(self) -> list[QubitCoordinate]:
        return [self.qubit_coord(q) for q in range(self.n)]

    def stab_index(self, c: int, u: int, v: int) -> int:
        return (c * self.r + u) * self.s + v % self.s

    def stab_coord(self, i: int) -> StabiliserCoordinate:
        rs = self.r * self.s
        return StabiliserCoordinate(i // rs, (i % rs) // self.s, i % self.s)

    @property
    def x_stab_coords(self) -> list[StabiliserCoordinate]:
        return [self.stab_coord(i) for i in range(self.H_X.rows)]

    @property
    def z_stab_coords(self) -> list[StabiliserCoordinate]:
        return [self.stab_coord(i) for i in range(self.H_Z.rows)]

    def parameters(self) -> tuple[int, int, int]:
        return self.n, self.k, self.d_upper


def conjugate_transpose(A: AMatrix) -> AMatrix:
    a = A.array()
    return AMatrix(A.r, A.s, tuple(map(tuple, (-a.T) % A.s)))


def _check_matrices(A1: AMatrix, A2: AMatrix) -> tuple[np.ndarray, np.ndarray]:
    r, s = A1.r, A1.s
    a1, a2 = A1.array(), A2.array()
    half = r * r * s
    hx = np.zeros((half, 2 * half), dtype=np.uint8)
    hz = np.zeros((half, 2 * half), dtype=np.uint8)

    def col(kind_offset, c, u, v):
        return kind_offset + (c * r + u) * s + v % s

    for c in range(r):
        for u in range(r):
            for v in range(s):
                row = (c * r + u) * s + v
                for other in range(r):
                    # X stabiliser (x=c): ring-u qubit of every Z code, then its H2 check
                    hx[row, col(0, other, u, v + a1[c, other])] = 1
                    hx[row, col(half, c, other, v + a2[u, other])] = 1
                    # Z stabiliser (z=c): its H2* check, then ring-u qubit of every X code
                    hz[row, col(0, c, other, v - a2[other, u])] = 1
                    hz[row, col(half, other, u, v - a1[other, c])] = 1
    return hx, hz


def type1_support(code_offset: int, c: int, u: int, r: int, s: int) -> list[int]:
    start = code_offset + (c * r + u) * s
    return list(range(start, start + 2 * s))


def type2_support(code_offset: int, c: int, u: int, r: int, s: int) -> list[int]:
    out = []
    for cc in (c, c + 1):
        start = code_offset + (cc * r + u) * s
        out += range(start, start + s)
    return out


def logical_basis(code: RadialCssCode) -> tuple[list[BinaryVector], list[BinaryVector]]:
    """Canonical weight-2s logical X and Z operators.

    Type 1 covers two adjacent rings of one code of the opposite sector; type 2
    covers one ring across two adjacent codes of the same sector.
    """
    r, s, n, half = code.r, code.s, code.n, code.half
    lx, lz = [], []
    for c in range(r - 1):
        for u in range(r - 1):
            lx.append(BinaryVector.from_support(n, type1_support(0, c, u, r, s)))
            lz.append(BinaryVector.from_support(n, type1_support(half, c, u, r, s)))
    for c in range(r - 1):
        for u in range(r - 1):
            lx.append(BinaryVector.from_support(n, type2_support(half, c, u, r, s)))
            lz.append(BinaryVector.from_support(n, type2_support(0, c, u, r, s)))

    expected = 2 * (r - 1) ** 2
    for ops, same, other, label in ((lx, code.H_X, code.H_Z, "X"), (lz, code.H_Z, code.H_X, "Z")):
        if not ops:
            continue
        mat = BinaryMatrix.from_rows(ops)
        if not gf2.matmul(other, mat.T).is_zero():
            raise ConstructionError(f"logical {label} operators fail to commute with checks")
        if gf2.rank(same.vstack(mat)) - gf2.rank(same) != expected:
            raise ConstructionError(f"logical {label} operators are not independent modulo stabilisers")
    return lx, lz


def lifted_product(A1: AMatrix, A2: AMatrix, strict: bool = True) -> RadialCssCode:
    """Build the quantum radial code for the exponent pair ``(A1, A2)``.

    With ``strict`` every classical validity check must pass; otherwise only the
    encoded-qubit count ``2 (r - 1)^2`` is enforced.
    """
    if (A1.r, A1.s) != (A2.r, A2.s):
        raise ConstructionError(f"(r, s) mismatch: {(A1.r, A1.s)} vs {(A2.r, A2.s)}")
    if strict:
        for name, A in (("A1", A1), ("A2", A2)):
            report = validate(A)
            if not report.valid:
                raise ConstructionError(f"{name} invalid: {', '.join(report.failures())}")
    hx, hz = _check_matrices(A1, A2)
    code = RadialCssCode(A1, A2, BinaryMatrix.from_dense(hx), BinaryMatrix.from_dense(hz))
    if code.k != 2 * (code.r - 1) ** 2:
        raise ConstructionError(f"k={code.k}, expected {2 * (code.r - 1) ** 2}")
    lx, lz = logical_basis(code)
    return RadialCssCode(A1, A2, code.H_X, code.H_Z, tuple(lx), tuple(lz))


PRESETS: dict[str, tuple[list[list[int]], list[list[int]], int]] = {
    "toy_2_3": ([[0, 0], [1, 0]], [[0, 0], [1, 0]], 3),
    "qr_90_8_10": (
        [[3, 2, 1], [4, 1, 4], [1, 2, 3]],
        [[3, 3, 0], [1, 0, 1], [4, 2, 0]],
        5,
    ),
    "qr_352_18_20": (
        [[10, 10, 1, 6], [4, 7, 5, 2], [8, 10, 6, 9], [1, 6, 0, 6]],
        [[9, 5, 8, 3], [5, 4, 1, 0], [0, 4, 6, 10], [2, 8, 4, 2]],
        11,
    ),
}

_preset_cache: dict[str, RadialCssCode] = {}


def preset(name: str) -> RadialCssCode:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    if name not in _preset_cache:
        a1, a2, s = PRESETS[name]
        # the small worked example has a zero row in A, so only the k check applies
        strict = name != "toy_2_3"
        _preset_cache[name] = lifted_product(AMatrix.from_list(a1, s), AMatrix.from_list(a2, s), strict=strict)
    return _preset_cache[name]


@dataclass(frozen=True)
class WeightReductionSteps:
    step1: BinaryVector
    step2: BinaryVector
    step3: BinaryVector
    step4: BinaryVector
    logicals: tuple[BinaryVector, BinaryVector]


def weight_reduction_fixture() -> WeightReductionSteps:
    """Reduce a weight-12 logical of the toy code to weight 4 with four X checks."""
    code = preset("toy_2_3")
    rows = lambda x: [code.stab_index(x, 0, 0), code.stab_index(x, 1, 0)]  # noqa: E731
    step1 = code.H_X.row(rows(0)[0]) + code.H_X.row(rows(0)[1])
    step2 = code.H_X.row(rows(1)[0]) + code.H_X.row(rows(1)[1])
    step3 = step1 + step2
    x1, x2 = code.logical_x[0], code.logical_x[1]
    return WeightReductionSteps(step1, step2, step3, step3 + x1 + x2, (x1, x2))
