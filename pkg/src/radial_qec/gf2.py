"""Bit-packed linear algebra over GF(2).

Matrices are stored row-major with 64 columns per ``uint64`` word; bit ``j`` of
a row lives in word ``j >> 6`` at position ``j & 63``.  Elimination works on
whole words, so a row XOR costs ``ceil(cols / 64)`` operations.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

WORD = 64


def _nwords(nbits: int) -> int:
    return (nbits + WORD - 1) // WORD


def pack_bits(dense: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into little-endian ``uint64`` words."""
    dense = np.asarray(dense, dtype=np.uint8) & 1
    nbits = dense.shape[-1]
    pad = _nwords(nbits) * WORD - nbits
    if pad:
        dense = np.concatenate(
            [dense, np.zeros(dense.shape[:-1] + (pad,), dtype=np.uint8)], axis=-1
        )
    as_bytes = np.packbits(dense, axis=-1, bitorder="little")
    return np.ascontiguousarray(as_bytes).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, nbits: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    as_bytes = words.view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, count=nbits, bitorder="little")


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).astype(np.int64)


class BinaryVector:
    """Immutable packed bit vector."""

    __slots__ = ("_len", "_words")

    def __init__(self, length: int, words: np.ndarray):
        words = np.array(words, dtype=np.uint64).reshape(_nwords(length))
        words.flags.writeable = False
        self._len = int(length)
        self._words = words

    @classmethod
    def from_dense(cls, bits: Iterable[int]) -> "BinaryVector":
        bits = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
        return cls(bits.shape[0], pack_bits(bits))

    @classmethod
    def from_support(cls, length: int, support: Iterable[int]) -> "BinaryVector":
        dense = np.zeros(length, dtype=np.uint8)
        dense[list(support)] = 1
        return cls.from_dense(dense)

    @classmethod
    def zeros(cls, length: int) -> "BinaryVector":
        return cls(length, np.zeros(_nwords(length), dtype=np.uint64))

    def __len__(self) -> int:
        return self._len

    @property
    def words(self) -> np.ndarray:
        return self._words

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self._len:
            raise IndexError(j)
        return int((self._words[j >> 6] >> np.uint64(j & 63)) & np.uint64(1))

    def to_dense(self) -> np.ndarray:
        return unpack_bits(self._words, self._len)

    def support(self) -> list[int]:
        return np.flatnonzero(self.to_dense()).tolist()

    @property
    def weight(self) -> int:
        return int(_popcount(self._words).sum())

    def __add__(self, other: "BinaryVector") -> "BinaryVector":
        if len(other) != self._len:
            raise ValueError("length mismatch")
        return BinaryVector(self._len, self._words ^ other._words)

    __xor__ = __add__

    def dot(self, other: "BinaryVector") -> int:
        return int(_popcount(self._words & other._words).sum() & 1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryVector):
            return NotImplemented
        return self._len == other._len and bool(np.array_equal(self._words, other._words))

    def __hash__(self) -> int:
        return hash((self._len, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"BinaryVector({''.join(map(str, self.to_dense()))})"


class BinaryMatrix:
    """Immutable dense bit matrix with packed rows."""

    __slots__ = ("rows", "cols", "_words")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        words = np.array(words, dtype=np.uint64).reshape(rows, _nwords(cols))
        words.flags.writeable = False
        self.rows = int(rows)
        self.cols = int(cols)
        self._words = words

    @classmethod
    def from_dense(cls, dense) -> "BinaryMatrix":
        dense = np.atleast_2d(np.asarray(dense, dtype=np.uint8))
        return cls(dense.shape[0], dense.shape[1], pack_bits(dense))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinaryMatrix":
        return cls(rows, cols, np.zeros((rows, _nwords(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_rows(cls, vectors: Sequence[BinaryVector], cols: int | None = None) -> "BinaryMatrix":
        if not vectors:
            if cols is None:
                raise ValueError("cols required for an empty row list")
            return cls.zeros(0, cols)
        cols = len(vectors[0]) if cols is None else cols
        return cls(len(vectors), cols, np.stack([v.words for v in vectors]))

    @classmethod
    def from_row_support(cls, rows: int, cols: int, support: Sequence[Sequence[int]]) -> "BinaryMatrix":
        dense = np.zeros((rows, cols), dtype=np.uint8)
        for i, row in enumerate(support):
            dense[i, list(row)] = 1
        return cls.from_dense(dense)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def words(self) -> np.ndarray:
        return self._words

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return int((self._words[i, j >> 6] >> np.uint64(j & 63)) & np.uint64(1))

    def row(self, i: int) -> BinaryVector:
        return BinaryVector(self.cols, self._words[i])

    def to_dense(self) -> np.ndarray:
        if self.rows == 0:
            return np.zeros((0, self.cols), dtype=np.uint8)
        return unpack_bits(self._words, self.cols)

    def row_support(self) -> list[list[int]]:
        dense = self.to_dense()
        return [np.flatnonzero(r).tolist() for r in dense]

    def row_weights(self) -> np.ndarray:
        return _popcount(self._words).sum(axis=1) if self.rows else np.zeros(0, dtype=int)

    def col_weights(self) -> np.ndarray:
        return self.to_dense().sum(axis=0)

    @property
    def T(self) -> "BinaryMatrix":
        return BinaryMatrix.from_dense(self.to_dense().T)

    def transpose(self) -> "BinaryMatrix":
        return self.T

    def vstack(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if other.cols != self.cols:
            raise ValueError("column mismatch")
        return BinaryMatrix(self.rows + other.rows, self.cols, np.vstack([self._words, other._words]))

    def hstack(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if other.rows != self.rows:
            raise ValueError("row mismatch")
        return BinaryMatrix.from_dense(np.hstack([self.to_dense(), other.to_dense()]))

    def is_zero(self) -> bool:
        return not self._words.any()

    def to_sparse(self):
        """Column-compressed scipy view for decoder inputs."""
        from scipy.sparse import csc_matrix

        return csc_matrix(self.to_dense())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._words, other._words))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"BinaryMatrix({self.rows}x{self.cols})"

    def __matmul__(self, other):
        if isinstance(other, BinaryMatrix):
            return matmul(self, other)
        if isinstance(other, BinaryVector):
            return matvec(self, other)
        return NotImplemented


def as_matrix(m) -> BinaryMatrix:
    return m if isinstance(m, BinaryMatrix) else BinaryMatrix.from_dense(m)


def as_vector(v) -> BinaryVector:
    return v if isinstance(v, BinaryVector) else BinaryVector.from_dense(np.asarray(v))


def _eliminate(words: np.ndarray, ncols: int, pivot_limit: int | None = None) -> list[int]:
    """Reduce packed ``words`` in place to RREF; returns pivot columns.

    Pivots are taken left to right, choosing the lowest-index available row.
    Only the first ``pivot_limit`` columns are pivot candidates.
    """
    nrows = words.shape[0]
    limit = ncols if pivot_limit is None else pivot_limit
    pivots: list[int] = []
    prow = 0
    for col in range(limit):
        if prow == nrows:
            break
        w, b = col >> 6, np.uint64(1) << np.uint64(col & 63)
        hits = np.flatnonzero(words[prow:, w] & b)
        if hits.size == 0:
            continue
        r = prow + int(hits[0])
        if r != prow:
            words[[prow, r]] = words[[r, prow]]
        others = np.flatnonzero(words[:, w] & b)
        others = others[others != prow]
        if others.size:
            words[others] ^= words[prow]
        pivots.append(col)
        prow += 1
    return pivots


def rank(m) -> int:
    m = as_matrix(m)
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(_eliminate(m.words.copy(), m.cols))


def rref(m) -> tuple[BinaryMatrix, list[int], BinaryMatrix]:
    """Reduced row echelon form ``R = transform @ M`` with its pivot columns."""
    m = as_matrix(m)
    aug = np.hstack([m.to_dense(), np.eye(m.rows, dtype=np.uint8)])
    words = pack_bits(aug) if m.rows else np.zeros((0, _nwords(m.cols + m.rows)), np.uint64)
    pivots = _eliminate(words, aug.shape[1], pivot_limit=m.cols)
    dense = unpack_bits(words, aug.shape[1]) if m.rows else aug
    r = BinaryMatrix.from_dense(dense[:, : m.cols]) if m.rows else BinaryMatrix.zeros(0, m.cols)
    t = BinaryMatrix.from_dense(dense[:, m.cols:]) if m.rows else BinaryMatrix.zeros(0, 0)
    return r, pivots, t


def nullspace_basis(m) -> list[BinaryVector]:
    """Basis of ``{v : M v = 0}``, one vector per non-pivot column."""
    m = as_matrix(m)
    n = m.cols
    if m.rows == 0:
        return [BinaryVector.from_support(n, [j]) for j in range(n)]
    words = m.words.copy()
    pivots = _eliminate(words, n)
    dense = unpack_bits(words[: len(pivots)], n) if pivots else np.zeros((0, n), np.uint8)
    pivot_set = set(pivots)
    basis = []
    for f in range(n):
        if f in pivot_set:
            continue
        v = np.zeros(n, dtype=np.uint8)
        v[f] = 1
        for i, p in enumerate(pivots):
            v[p] = dense[i, f]
        basis.append(BinaryVector.from_dense(v))
    return basis


def matmul(a, b) -> BinaryMatrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.cols != b.rows:
        raise ValueError(f"inner dimensions disagree: {a.shape} @ {b.shape}")
    prod = (a.to_dense().astype(np.int64) @ b.to_dense().astype(np.int64)) & 1
    return BinaryMatrix.from_dense(prod.astype(np.uint8).reshape(a.rows, b.cols))


def matvec(m, v) -> BinaryVector:
    m, v = as_matrix(m), as_vector(v)
    if m.cols != len(v):
        raise ValueError(f"dimension mismatch: {m.shape} @ {len(v)}")
    if m.rows == 0:
        return BinaryVector.zeros(0)
    parity = _popcount(m.words & v.words[None, :]).sum(axis=1) & 1
    return BinaryVector.from_dense(parity.astype(np.uint8))


def in_rowspace(m, v) -> bool:
    m, v = as_matrix(m), as_vector(v)
    if len(v) != m.cols:
        raise ValueError("vector length must equal column count")
    if v.weight == 0:
        return True
    stacked = BinaryMatrix(m.rows + 1, m.cols, np.vstack([m.words, v.words[None, :]]))
    return rank(stacked) == rank(m)


# ---------------------------------------------------------------------------
# Serialization


def to_alist(m) -> str:
    m = as_matrix(m)
    lines = [f"{m.rows} {m.cols}"]
    lines += [" ".join(map(str, row)) for row in m.row_support()]
    return "\n".join(lines) + "\n"


def from_alist(text: str) -> BinaryMatrix:
    lines = text.splitlines()
    rows, cols = map(int, lines[0].split())
    support = [list(map(int, line.split())) for line in lines[1 : rows + 1]]
    support += [[] for _ in range(rows - len(support))]
    return BinaryMatrix.from_row_support(rows, cols, support)


def to_json(m) -> dict:
    m = as_matrix(m)
    return {"rows": m.rows, "cols": m.cols, "row_support": m.row_support()}


def from_json(obj: dict) -> BinaryMatrix:
    return BinaryMatrix.from_row_support(obj["rows"], obj["cols"], obj["row_support"])


def save_matrix(m, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(to_json(m)))
    else:
        path.write_text(to_alist(m))


def load_matrix(path: str | Path) -> BinaryMatrix:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return from_json(json.loads(text))
    return from_alist(text)
