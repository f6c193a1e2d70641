"""Distance estimation and confinement profiles of quantum radial codes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Literal

import numba as nb
import numpy as np

from . import gf2
from .classical import random_a_matrix
from .gf2 import BinaryMatrix, BinaryVector, pack_bits, unpack_bits
from .quantum import RadialCssCode, lifted_product

Sector = Literal["x", "z"]


class BudgetExceeded(RuntimeError):
    pass


class NoLogicalFound(RuntimeError):
    pass


def _sector_matrices(code: RadialCssCode, sector: str):
    """(checks the errors must commute with, same-type checks, opposite logicals)."""
    sector = sector.lower()
    if sector == "x":
        return code.H_Z, code.H_X, code.logical_z
    if sector == "z":
        return code.H_X, code.H_Z, code.logical_x
    raise ValueError(f"sector must be 'x' or 'z', got {sector!r}")


# ---------------------------------------------------------------------------
# Randomised information-set search


@nb.njit(cache=True)
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@nb.njit(cache=True)
def _weight(v):
    w = 0
    for i in range(v.shape[0]):
        w += _popcount64(v[i])
    return w


@nb.njit(cache=True)
def _nontrivial(v, tests, classical):
    if classical:
        for i in range(v.shape[0]):
            if v[i] != 0:
                return True
        return False
    for t in range(tests.shape[0]):
        acc = np.uint64(0)
        for i in range(v.shape[0]):
            acc ^= tests[t, i] & v[i]
        if _popcount64(acc) & 1:
            return True
    return False


@nb.njit(cache=True)
def _search_trials(gen, tests, perms, classical, cap, do_pairs):
    """For every permutation row-reduce the permuted generators and inspect
    single rows plus pairwise sums.  Returns per-trial minimum weights and up to
    ``cap`` witnesses of that weight in original coordinates."""
    ntrials, n = perms.shape
    k = gen.shape[0]
    nw = (n + 63) // 64
    best = np.full(ntrials, 1 << 30, dtype=np.int64)
    found = np.zeros((ntrials, cap, nw), dtype=np.uint64)
    nfound = np.zeros(ntrials, dtype=np.int64)
    mat = np.zeros((k, nw), dtype=np.uint64)
    cand = np.zeros(nw, dtype=np.uint64)
    tperm = np.zeros((tests.shape[0], nw), dtype=np.uint64)
    orig = np.zeros(nw, dtype=np.uint64)
    for t in range(ntrials):
        perm = perms[t]
        mat[:, :] = 0
        for j in range(n):
            src = perm[j]
            for i in range(k):
                if gen[i, src]:
                    mat[i, j >> 6] |= np.uint64(1) << np.uint64(j & 63)
        tperm[:, :] = 0
        if not classical:
            for j in range(n):
                src = perm[j]
                for i in range(tests.shape[0]):
                    if (tests[i, src >> 6] >> np.uint64(src & 63)) & np.uint64(1):
                        tperm[i, j >> 6] |= np.uint64(1) << np.uint64(j & 63)
        # reduced row echelon form, leftmost pivots
        prow = 0
        for col in range(n):
            if prow == k:
                break
            w = col >> 6
            b = np.uint64(1) << np.uint64(col & 63)
            piv = -1
            for i in range(prow, k):
                if mat[i, w] & b:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != prow:
                for x in range(nw):
                    tmp = mat[piv, x]
                    mat[piv, x] = mat[prow, x]
                    mat[prow, x] = tmp
            for i in range(k):
                if i != prow and (mat[i, w] & b):
                    for x in range(nw):
                        mat[i, x] ^= mat[prow, x]
            prow += 1
        npairs = prow * (prow - 1) // 2 if do_pairs else 0
        for c in range(prow + npairs):
            if c < prow:
                for x in range(nw):
                    cand[x] = mat[c, x]
            else:
                # unrank pair index
                p = c - prow
                a = 0
                while p >= prow - 1 - a:
                    p -= prow - 1 - a
                    a += 1
                bb = a + 1 + p
                for x in range(nw):
                    cand[x] = mat[a, x] ^ mat[bb, x]
            wt = _weight(cand)
            if wt == 0 or wt > best[t]:
                continue
            if not _nontrivial(cand, tperm, classical):
                continue
            orig[:] = 0
            for j in range(n):
                if (cand[j >> 6] >> np.uint64(j & 63)) & np.uint64(1):
                    src = perm[j]
                    orig[src >> 6] |= np.uint64(1) << np.uint64(src & 63)
            if wt < best[t]:
                best[t] = wt
                nfound[t] = 0
            dup = False
            for f in range(min(nfound[t], cap)):
                same = True
                for x in range(nw):
                    if found[t, f, x] != orig[x]:
                        same = False
                        break
                if same:
                    dup = True
                    break
            if not dup and nfound[t] < cap:
                for x in range(nw):
                    found[t, nfound[t], x] = orig[x]
                nfound[t] += 1
    return best, found, nfound


@dataclass
class DistanceEstimate:
    d_est: int
    hits: int
    trials: int
    distinct: int
    mean_hits: float
    p_fail_bound: float
    witness: BinaryVector
    sector: str = "x"

    def to_json(self) -> dict:
        return {
            "sector": self.sector,
            "d_est": self.d_est,
            "trials": self.trials,
            "hits": self.hits,
            "distinct_min_weight": self.distinct,
            "mean_hits": self.mean_hits,
            "p_fail_bound": self.p_fail_bound,
            "witness": self.witness.support(),
        }


def min_weight_search(generators: BinaryMatrix, tests: BinaryMatrix | None, trials: int,
                      rng=None, pairs: bool = True, chunk: int = 4096, witness_cap: int = 64):
    """Search the row space of ``generators`` for low-weight vectors that have odd
    overlap with some row of ``tests`` (any nonzero vector when ``tests`` is None).

    Returns ``(d, witnesses, hits)`` where ``witnesses`` maps each distinct
    minimum-weight vector (packed bytes) to the number of trials that found it.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    gen = generators.to_dense().astype(np.uint8)
    n = generators.cols
    classical = tests is None
    tw = np.zeros((1, (n + 63) // 64), np.uint64) if classical else np.ascontiguousarray(tests.words)
    best = 1 << 30
    counts: dict[bytes, int] = {}
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        perms = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (m, 1)), axis=1)
        tbest, found, nfound = _search_trials(gen, tw, perms, classical, witness_cap, pairs)
        cmin = int(tbest.min())
        if cmin < best:
            best, counts, hits = cmin, {}, 0
        if cmin == best:
            for t in np.flatnonzero(tbest == best):
                hits += 1
                for f in range(int(nfound[t])):
                    key = found[t, f].tobytes()
                    counts[key] = counts.get(key, 0) + 1
        done += m
    if best >= 1 << 30:
        raise NoLogicalFound("no nontrivial vector found; the code may encode nothing")
    return best, counts, hits


def estimate_distance(code: RadialCssCode, sector: Sector = "x", trials: int = 1000,
                      rng=None, pairs: bool = True) -> DistanceEstimate:
    commute_with, _, opposite_logicals = _sector_matrices(code, sector)
    if not opposite_logicals:
        raise NoLogicalFound("code has no logical operators")
    kernel = BinaryMatrix.from_rows(gf2.nullspace_basis(commute_with), cols=code.n)
    tests = BinaryMatrix.from_rows(list(opposite_logicals))
    d, counts, hits = min_weight_search(kernel, tests, trials, rng, pairs=pairs)
    mean_hits = sum(counts.values()) / len(counts)
    first = min(counts)
    witness = BinaryVector(code.n, np.frombuffer(first, dtype=np.uint64))
    return DistanceEstimate(
        d_est=d, hits=hits, trials=trials, distinct=len(counts), mean_hits=mean_hits,
        p_fail_bound=math.exp(-mean_hits), witness=witness, sector=sector,
    )


# ---------------------------------------------------------------------------
# Confinement


@nb.njit(cache=True)
def _combination_keys(colkeys, w):
    n, nw = colkeys.shape
    total = 1
    for i in range(w):
        total = total * (n - i) // (i + 1)
    out = np.zeros((total, nw), dtype=np.uint64)
    idx = np.arange(w)
    acc = np.zeros((w + 1, nw), dtype=np.uint64)
    # prefix XORs so each step only recomputes the changed tail
    for i in range(w):
        for x in range(nw):
            acc[i + 1, x] = acc[i, x] ^ colkeys[idx[i], x]
    pos = 0
    while True:
        for x in range(nw):
            out[pos, x] = acc[w, x]
        pos += 1
        i = w - 1
        while i >= 0 and idx[i] == n - w + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, w):
            idx[j] = idx[j - 1] + 1
        for j in range(i, w):
            for x in range(nw):
                acc[j + 1, x] = acc[j, x] ^ colkeys[idx[j], x]
    return out


@dataclass
class ConfinementProfile:
    sector: str
    min_syndrome: list[int] = field(default_factory=list)
    avg_syndrome: list[float] = field(default_factory=list)
    irreducible_count: list[int] = field(default_factory=list)

    @property
    def w_max(self) -> int:
        return len(self.min_syndrome)

    def to_json(self) -> dict:
        return {
            "sector": self.sector,
            "min_syndrome": self.min_syndrome,
            "avg_syndrome": self.avg_syndrome,
            "irreducible_count": self.irreducible_count,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["w", "min_syndrome", "avg_syndrome", "irreducible_count"])
        for w in range(self.w_max):
            writer.writerow([w + 1, self.min_syndrome[w], repr(self.avg_syndrome[w]), self.irreducible_count[w]])
        return buf.getvalue()


def _as_rows(keys: np.ndarray) -> np.ndarray:
    keys = np.ascontiguousarray(keys)
    return keys.view(np.dtype((np.void, keys.dtype.itemsize * keys.shape[1]))).ravel()


def confinement_profile(code: RadialCssCode, sector: Sector = "x", w_max: int = 3,
                        memory_limit: int = 200_000_000) -> ConfinementProfile:
    """Minimum and mean syndrome weight of irreducible errors of each weight.

    An error is irreducible when no strictly lighter error shares both its
    syndrome and its logical class, i.e. it is lightest in its stabiliser coset.
    """
    checks, _, opposite_logicals = _sector_matrices(code, sector)
    n = code.n
    syn = checks.to_dense().T.astype(np.uint8)
    cls = BinaryMatrix.from_rows(list(opposite_logicals)).to_dense().T.astype(np.uint8)
    nsyn = syn.shape[1]
    colkeys = pack_bits(np.hstack([syn, cls]))
    syn_mask = pack_bits(np.concatenate([np.ones(nsyn, np.uint8), np.zeros(cls.shape[1], np.uint8)]))

    total = 1
    for w in range(1, w_max + 1):
        total += math.comb(n, w)
        if total > memory_limit:
            raise BudgetExceeded(f"enumeration through weight {w} needs {total} entries (limit {memory_limit})")

    seen = np.unique(_as_rows(np.zeros((1, colkeys.shape[1]), np.uint64)))
    profile = ConfinementProfile(sector=sector)
    for w in range(1, w_max + 1):
        keys = _combination_keys(colkeys, w)
        rows = _as_rows(keys)
        pos = np.searchsorted(seen, rows)
        pos[pos == seen.size] = 0
        reducible = seen[pos] == rows
        irr = keys[~reducible]
        weights = np.bitwise_count(irr & syn_mask[None, :]).sum(axis=1)
        if weights.size:
            profile.min_syndrome.append(int(weights.min()))
            profile.avg_syndrome.append(float(weights.mean()))
        else:
            profile.min_syndrome.append(0)
            profile.avg_syndrome.append(0.0)
        profile.irreducible_count.append(int(weights.size))
        seen = np.union1d(seen, rows)
    return profile


# ---------------------------------------------------------------------------
# Average distance over random instances


@dataclass
class AverageDistance:
    r: int
    s: int
    distances: list[int]
    distinct_inputs: bool

    @property
    def mean(self) -> float:
        return float(np.mean(self.distances))

    @property
    def stderr(self) -> float:
        if len(self.distances) < 2:
            return 0.0
        return float(np.std(self.distances, ddof=1) / math.sqrt(len(self.distances)))

    @property
    def stderr_defined(self) -> bool:
        return len(self.distances) >= 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "s", "instance", "d_est"])
        for i, d in enumerate(self.distances):
            writer.writerow([self.r, self.s, i, d])
        return buf.getvalue()


def average_distance_experiment(r: int, s: int, count: int, trials: int, rng=None,
                                distinct_inputs: bool = True) -> AverageDistance:
    rng = np.random.default_rng(rng)
    distances = []
    for _ in range(count):
        A1 = random_a_matrix(r, s, rng)
        A2 = random_a_matrix(r, s, rng) if distinct_inputs else A1
        try:
            code = lifted_product(A1, A2)
        except ValueError:
            # rare instances with extra linear dependencies are rejected and redrawn
            continue
        dx = estimate_distance(code, "x", trials, rng).d_est
        dz = estimate_distance(code, "z", trials, rng).d_est
        distances.append(min(dx, dz))
    return AverageDistance(r, s, distances, distinct_inputs)
