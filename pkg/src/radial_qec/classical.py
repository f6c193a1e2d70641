"""Classical radial codes: quasi-cyclic codes defined by an r x r exponent matrix.

Block ``(i, j)`` of the parity-check matrix is the ``s x s`` identity with each
row shifted right by ``a[i][j]`` places.  Bits and checks sit on ``r`` rings
of ``s`` spokes; linear index ``i`` maps to ring ``i // s`` and spoke ``i % s``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import gf2
from .gf2 import BinaryMatrix, BinaryVector


class RadialCoordinate(NamedTuple):
    u: int
    v: int

    @classmethod
    def from_index(cls, i: int, s: int) -> "RadialCoordinate":
        return cls(i // s, i % s)

    def index(self, s: int) -> int:
        return self.u * s + self.v


@dataclass(frozen=True)
class AMatrix:
    r: int
    s: int
    a: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        a = tuple(tuple(int(x) for x in row) for row in self.a)
        object.__setattr__(self, "a", a)
        if self.r < 1 or self.s < 2:
            raise ValueError(f"need r >= 1 and s >= 2, got r={self.r}, s={self.s}")
        if len(a) != self.r or any(len(row) != self.r for row in a):
            raise ValueError(f"exponent matrix must be {self.r}x{self.r}")
        if any(not 0 <= x < self.s for row in a for x in row):
            raise ValueError(f"entries must lie in [0, {self.s})")

    @classmethod
    def from_list(cls, a, s: int) -> "AMatrix":
        a = [list(row) for row in a]
        return cls(len(a), s, tuple(map(tuple, a)))

    def array(self) -> np.ndarray:
        return np.array(self.a, dtype=np.int64)

    def to_json(self) -> dict:
        return {"r": self.r, "s": self.s, "a": [list(row) for row in self.a]}

    @classmethod
    def from_json(cls, obj: dict) -> "AMatrix":
        return cls(int(obj["r"]), int(obj["s"]), tuple(map(tuple, obj["a"])))

    @classmethod
    def load(cls, path: str | Path) -> "AMatrix":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))


@dataclass(frozen=True)
class ValidityReport:
    square_condition: bool
    s_prime: bool
    r_le_s: bool
    rows_independent: bool
    dependency_count: bool

    @property
    def valid(self) -> bool:
        return all(
            (self.square_condition, self.s_prime, self.r_le_s,
             self.rows_independent, self.dependency_count)
        )

    def failures(self) -> list[str]:
        return [name for name, ok in self.__dict__.items() if not ok]


def circulant_block(s: int, a: int) -> BinaryMatrix:
    if not 0 <= a < s:
        raise ValueError(f"shift {a} outside [0, {s})")
    dense = np.zeros((s, s), dtype=np.uint8)
    dense[np.arange(s), (np.arange(s) + a) % s] = 1
    return BinaryMatrix.from_dense(dense)


def _pcm_dense(a: np.ndarray, s: int) -> np.ndarray:
    rows, cols = a.shape
    out = np.zeros((rows * s, cols * s), dtype=np.uint8)
    idx = np.arange(s)
    for i in range(rows):
        for j in range(cols):
            out[i * s + idx, j * s + (idx + a[i, j]) % s] = 1
    return out


def binary_pcm(A: AMatrix) -> BinaryMatrix:
    return BinaryMatrix.from_dense(_pcm_dense(A.array(), A.s))


def square_condition(A: AMatrix) -> bool:
    """True iff no two checks share two bits (Tanner-graph girth at least six)."""
    a = A.array()
    for u1, u2 in itertools.combinations(range(A.r), 2):
        for w1, w2 in itertools.combinations(range(A.r), 2):
            if (a[u1, w1] - a[u1, w2] - a[u2, w1] + a[u2, w2]) % A.s == 0:
                return False
    return True


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


def rank_mod_p(a: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over the prime field Z_p."""
    m = np.array(a, dtype=np.int64) % p
    nrows, ncols = m.shape
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, nrows) if m[i, col]), None)
        if piv is None:
            continue
        m[[rank, piv]] = m[[piv, rank]]
        m[rank] = (m[rank] * pow(int(m[rank, col]), -1, p)) % p
        for i in range(nrows):
            if i != rank and m[i, col]:
                m[i] = (m[i] - m[i, col] * m[rank]) % p
        rank += 1
        if rank == nrows:
            break
    return rank


def validate(A: AMatrix) -> ValidityReport:
    prime = is_prime(A.s)
    if prime:
        independent = rank_mod_p(A.array(), A.s) == A.r
    else:
        independent = False
    expected = A.r * A.s - (A.r - 1)
    return ValidityReport(
        square_condition=square_condition(A),
        s_prime=prime,
        r_le_s=A.r <= A.s,
        rows_independent=independent,
        dependency_count=gf2.rank(binary_pcm(A)) == expected,
    )


@dataclass(frozen=True)
class ClassicalRadialCode:
    A: AMatrix
    H: BinaryMatrix
    report: ValidityReport

    @property
    def r(self) -> int:
        return self.A.r

    @property
    def s(self) -> int:
        return self.A.s

    @property
    def n(self) -> int:
        return self.A.r * self.A.s

    @property
    def k(self) -> int:
        return self.n - gf2.rank(self.H)


def classical_code(A: AMatrix) -> ClassicalRadialCode:
    return ClassicalRadialCode(A, binary_pcm(A), validate(A))


def codeword_basis(code: ClassicalRadialCode) -> list[BinaryVector]:
    """Ring ``i`` together with ring ``r - 1``, for ``i = 0 .. r - 2``."""
    r, s = code.r, code.s
    last = range((r - 1) * s, r * s)
    return [
        BinaryVector.from_support(r * s, list(range(i * s, (i + 1) * s)) + list(last))
        for i in range(r - 1)
    ]


class SamplingBudgetExceeded(RuntimeError):
    pass


def random_a_matrix(r: int, s: int, rng: np.random.Generator | int | None = None,
                    max_attempts: int = 100_000) -> AMatrix:
    """Draw i.i.d. uniform exponents until every validity check passes."""
    if not is_prime(s):
        raise ValueError(f"s={s} is not prime")
    if r > s:
        raise ValueError(f"r={r} exceeds s={s}")
    rng = np.random.default_rng(rng)
    for _ in range(max_attempts):
        A = AMatrix(r, s, tuple(map(tuple, rng.integers(0, s, size=(r, r)))))
        if validate(A).valid:
            return A
    raise SamplingBudgetExceeded(f"no valid ({r},{s}) exponent matrix in {max_attempts} draws")


def tanner_girth_at_least_six(H: BinaryMatrix) -> bool:
    dense = H.to_dense().astype(np.int64)
    overlap = dense @ dense.T
    np.fill_diagonal(overlap, 0)
    return bool((overlap <= 1).all())


def tanner_connected(H: BinaryMatrix) -> bool:
    from scipy.sparse import bmat, csr_matrix
    from scipy.sparse.csgraph import connected_components

    h = csr_matrix(H.to_dense())
    adj = bmat([[None, h], [h.T, None]])
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1
