"""Min-sum belief propagation with ordered-statistics post-processing, and the
overlapping-window driver for multi-round detector error models."""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy import sparse

from . import gf2
from .noise import DetectorErrorModel, decoding_rounds, window_indices

PERF_PRIOR = 1e-12
LLR_CLIP = 50.0


@dataclass(frozen=True)
class BpConfig:
    max_iter: int = 1000
    scaling: float = 0.625
    schedule: str = "parallel"

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.scaling <= 1:
            raise ValueError("scaling must lie in (0, 1]")
        if self.schedule != "parallel":
            raise ValueError("only the parallel schedule is supported")


@dataclass(frozen=True)
class OsdConfig:
    """Ordered-statistics reprocessing.

    ``order = 0`` is plain OSD-0.  For combination sweep of order ``lam`` the
    default sweep tries every single flip among the first ``lam`` free columns
    (in reliability order) and every pair among the first ``2 lam``.  Setting
    ``single_span`` and ``pair_span`` overrides those spans; ``single_span = -1``
    means all free columns.
    """

    order: int = 0
    strategy: str = "osd0"
    single_span: int | None = None
    pair_span: int | None = None

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.strategy not in ("osd0", "cs"):
            raise ValueError(f"unknown OSD strategy {self.strategy!r}")
        if self.order == 0 and self.strategy != "osd0":
            object.__setattr__(self, "strategy", "osd0")

    @classmethod
    def parse(cls, text: str) -> "OsdConfig":
        """``osd0``, ``cs4``, ``osd_cs4`` style names."""
        t = text.lower().replace("osd", "").replace("_", "").replace("-", "")
        if t in ("", "0"):
            return cls()
        if t.startswith("cs"):
            return cls(int(t[2:] or 0), "cs")
        raise ValueError(f"cannot parse OSD method {text!r}")

    def spans(self) -> tuple[int, int]:
        if self.strategy == "osd0":
            return 0, 0
        single = self.order if self.single_span is None else self.single_span
        pair = 2 * self.order if self.pair_span is None else self.pair_span
        return single, pair


@dataclass(frozen=True)
class WindowConfig:
    w: int = 3
    c: int = 1

    def __post_init__(self):
        if not 1 <= self.c <= self.w:
            raise ValueError(f"need 1 <= c <= w, got w={self.w}, c={self.c}")


# ---------------------------------------------------------------------------
# Kernels


LANES = 16

# One parallel-schedule min-sum iteration over LANES independent shots.  Each
# lane lives in its own scalar local so that LLVM's SLP vectoriser can pack the
# lanes into SIMD registers; the per-lane statements below are expanded from the
# templates by ``_expand``.  Loads and stores are kept in separate statements so
# all lanes load before any lane stores.
_ITERATION = """
def _iteration(row_ptr, edge_col, col_ptr, col_edge, llr0, alpha, ssign, sbit, v2c, c2v, hard, ok):
    m = row_ptr.shape[0] - 1
    n = col_ptr.shape[0] - 1
    big = np.float32(3.0e38)
    clip = np.float32(LLR_CLIP)
    for i in range(m):
        srow = ssign[i]
        s{l} = srow[{l}]; a{l} = big; b{l} = big
        for e in range(row_ptr[i], row_ptr[i + 1]):
            vrow = v2c[e]
            v = vrow[{l}]; a = abs(v); s{l} = -s{l} if v < 0 else s{l}; t = a if a > a{l} else a{l}; b{l} = t if t < b{l} else b{l}; a{l} = a if a < a{l} else a{l}
        for e in range(row_ptr[i], row_ptr[i + 1]):
            vrow = v2c[e]
            crow = c2v[e]
            v{l} = vrow[{l}]
            crow[{l}] = (-s{l} if v{l} < 0 else s{l}) * alpha * (b{l} if abs(v{l}) == a{l} else a{l})
    for j in range(n):
        x = llr0[j]
        t{l} = x
        for k in range(col_ptr[j], col_ptr[j + 1]):
            crow = c2v[col_edge[k]]
            t{l} += crow[{l}]
        hrow = hard[j]
        hrow[{l}] = 1 if t{l} < 0 else 0
        for k in range(col_ptr[j], col_ptr[j + 1]):
            e = col_edge[k]
            crow = c2v[e]
            vrow = v2c[e]
            v{l} = t{l} - crow[{l}]
            vrow[{l}] = min(max(v{l}, -clip), clip)
    q{l} = 1
    for i in range(m):
        brow = sbit[i]
        p{l} = brow[{l}]
        for e in range(row_ptr[i], row_ptr[i + 1]):
            hrow = hard[edge_col[e]]
            p{l} ^= hrow[{l}]
        q{l} = 0 if p{l} else q{l}
    ok[{l}] = q{l}
"""


def _expand(template: str, lanes: int) -> str:
    out = []
    for line in template.splitlines():
        if "{l}" in line:
            out.extend(line.format(l=l) for l in range(lanes))
        else:
            out.append(line)
    return "\n".join(out)


_namespace = {"np": np, "LLR_CLIP": LLR_CLIP}
exec(compile(_expand(_ITERATION, LANES), "<bp-iteration>", "exec"), _namespace)
_iteration = nb.njit(_namespace["_iteration"])


@nb.njit
def _bp_pool(row_ptr, edge_col, col_ptr, col_edge, llr0, prior, syn, max_iter, alpha,
             colbits, rank, n_single, n_pair, do_osd, hard_out, post_out, info):
    """Decode every row of ``syn`` with parallel-schedule normalised min-sum,
    running ``LANES`` shots side by side in float32.  A lane is refilled with the
    next pending shot as soon as its shot converges or exhausts ``max_iter``;
    unconverged shots go to OSD when ``do_osd`` is set.

    ``info[p] = (iterations, flag)`` with flag 0 converged, 1 OSD, 2 syndrome
    outside the column space, 3 unconverged without OSD.  ``post_out`` receives
    the final soft values when it has rows.
    """
    L = LANES
    m = row_ptr.shape[0] - 1
    n = col_ptr.shape[0] - 1
    n_edges = edge_col.shape[0]
    shots = syn.shape[0]
    one = np.float32(1.0)
    v2c = np.empty((n_edges, L), dtype=np.float32)
    c2v = np.zeros((n_edges, L), dtype=np.float32)
    hard = np.zeros((n, L), dtype=np.uint8)
    ssign = np.ones((m, L), dtype=np.float32)
    sbit = np.zeros((m, L), dtype=np.uint8)
    ok = np.zeros(L, dtype=np.uint8)
    lane_shot = np.full(L, -1, dtype=np.int64)
    lane_it = np.zeros(L, dtype=np.int64)
    pbuf = np.empty(n, dtype=np.float32)
    hbuf = np.empty(n, dtype=np.uint8)
    for e in range(n_edges):
        for l in range(L):
            v2c[e, l] = llr0[edge_col[e]]
    nxt = 0
    while True:
        live = 0
        for l in range(L):
            while lane_shot[l] < 0 and nxt < shots:
                p = nxt
                nxt += 1
                nonzero = False
                for i in range(m):
                    if syn[p, i]:
                        nonzero = True
                        break
                if not nonzero:
                    for j in range(n):
                        hard_out[p, j] = 0
                    if post_out.shape[0]:
                        for j in range(n):
                            post_out[p, j] = llr0[j]
                    info[p, 0] = 0
                    info[p, 1] = 0
                    continue
                lane_shot[l] = p
                lane_it[l] = 0
                for i in range(m):
                    sbit[i, l] = syn[p, i]
                    ssign[i, l] = -one if syn[p, i] else one
                for e in range(n_edges):
                    v2c[e, l] = llr0[edge_col[e]]
            if lane_shot[l] >= 0:
                live += 1
        if live == 0:
            break
        _iteration(row_ptr, edge_col, col_ptr, col_edge, llr0, alpha, ssign, sbit, v2c, c2v, hard, ok)
        for l in range(L):
            p = lane_shot[l]
            if p < 0:
                continue
            lane_it[l] += 1
            if not ok[l] and lane_it[l] < max_iter:
                continue
            info[p, 0] = lane_it[l]
            for j in range(n):
                t = llr0[j]
                for k in range(col_ptr[j], col_ptr[j + 1]):
                    t += c2v[col_edge[k], l]
                pbuf[j] = t
            if post_out.shape[0]:
                for j in range(n):
                    post_out[p, j] = pbuf[j]
            if ok[l]:
                for j in range(n):
                    hard_out[p, j] = hard[j, l]
                info[p, 1] = 0
            elif do_osd:
                if _osd(colbits, pbuf, prior, syn[p], rank, n_single, n_pair, hbuf):
                    info[p, 1] = 1
                else:
                    info[p, 1] = 2
                for j in range(n):
                    hard_out[p, j] = hbuf[j]
            else:
                for j in range(n):
                    hard_out[p, j] = hard[j, l]
                info[p, 1] = 3
            lane_shot[l] = -1
            for i in range(m):
                sbit[i, l] = 0
                ssign[i, l] = one
            for e in range(n_edges):
                v2c[e, l] = llr0[edge_col[e]]


@nb.njit(cache=True)
def _reduce(vec, nb_, bvec, bpiv, bcomb, comb):
    """Reduce ``vec`` (in place) against the echelon basis; accumulate ``comb``."""
    for b in range(nb_):
        p = bpiv[b]
        if (vec[p >> 6] >> np.uint64(p & 63)) & np.uint64(1):
            for x in range(vec.shape[0]):
                vec[x] ^= bvec[b, x]
            for x in range(comb.shape[0]):
                comb[x] ^= bcomb[b, x]


@nb.njit(cache=True)
def _is_zero(vec):
    for x in range(vec.shape[0]):
        if vec[x] != 0:
            return False
    return True


@nb.njit(cache=True)
def _comb_cost(comb, sel, nb_, llr0):
    cost = 0.0
    for i in range(nb_):
        if (comb[i >> 6] >> np.uint64(i & 63)) & np.uint64(1):
            cost += llr0[sel[i]]
    return cost


@nb.njit(cache=True)
def _osd(colbits, post, llr0, syn, rank, n_single, n_pair, hard):
    """Ordered-statistics decoding.  ``colbits`` holds each column packed over
    rows.  Writes the correction into ``hard``; returns False when the syndrome
    is outside the column space."""
    n, mw = colbits.shape
    m_rows = syn.shape[0]
    rw = (max(rank, 1) + 63) >> 6
    order = np.argsort(post, kind="mergesort")
    bvec = np.zeros((max(rank, 1), mw), dtype=np.uint64)
    bcomb = np.zeros((max(rank, 1), rw), dtype=np.uint64)
    bpiv = np.zeros(max(rank, 1), dtype=np.int64)
    sel = np.zeros(max(rank, 1), dtype=np.int64)
    is_sel = np.zeros(n, dtype=np.bool_)
    vec = np.zeros(mw, dtype=np.uint64)
    comb = np.zeros(rw, dtype=np.uint64)
    nb_ = 0
    for idx in range(n):
        if nb_ == rank:
            break
        j = order[idx]
        for x in range(mw):
            vec[x] = colbits[j, x]
        comb[:] = 0
        _reduce(vec, nb_, bvec, bpiv, bcomb, comb)
        if _is_zero(vec):
            continue
        piv = -1
        for x in range(mw):
            if vec[x] != 0:
                w = vec[x]
                b = 0
                while not ((w >> np.uint64(b)) & np.uint64(1)):
                    b += 1
                piv = x * 64 + b
                break
        comb[nb_ >> 6] ^= np.uint64(1) << np.uint64(nb_ & 63)
        for x in range(mw):
            bvec[nb_, x] = vec[x]
        for x in range(rw):
            bcomb[nb_, x] = comb[x]
        bpiv[nb_] = piv
        sel[nb_] = j
        is_sel[j] = True
        nb_ += 1
    # particular solution
    svec = np.zeros(mw, dtype=np.uint64)
    for i in range(m_rows):
        if syn[i]:
            svec[i >> 6] |= np.uint64(1) << np.uint64(i & 63)
    base = np.zeros(rw, dtype=np.uint64)
    _reduce(svec, nb_, bvec, bpiv, bcomb, base)
    if not _is_zero(svec):
        return False
    best = base.copy()
    best_cost = _comb_cost(base, sel, nb_, llr0)
    best_f1 = -1
    best_f2 = -1
    span = max(n_single, n_pair)
    if span != 0:
        free = np.empty(n, dtype=np.int64)
        nfree = 0
        for idx in range(n):
            j = order[idx]
            if not is_sel[j]:
                free[nfree] = j
                nfree += 1
        if n_single < 0 or n_single > nfree:
            n_single = nfree
        if n_pair > nfree:
            n_pair = nfree
        span = max(n_single, n_pair)
        fsol = np.zeros((span, rw), dtype=np.uint64)
        for f in range(span):
            for x in range(mw):
                vec[x] = colbits[free[f], x]
            _reduce(vec, nb_, bvec, bpiv, bcomb, fsol[f])
        cand = np.zeros(rw, dtype=np.uint64)
        for f in range(n_single):
            for x in range(rw):
                cand[x] = base[x] ^ fsol[f, x]
            cost = _comb_cost(cand, sel, nb_, llr0) + llr0[free[f]]
            if cost < best_cost:
                best_cost = cost
                best[:] = cand
                best_f1 = free[f]
                best_f2 = -1
        for f in range(n_pair):
            for g in range(f + 1, n_pair):
                for x in range(rw):
                    cand[x] = base[x] ^ fsol[f, x] ^ fsol[g, x]
                cost = _comb_cost(cand, sel, nb_, llr0) + llr0[free[f]] + llr0[free[g]]
                if cost < best_cost:
                    best_cost = cost
                    best[:] = cand
                    best_f1 = free[f]
                    best_f2 = free[g]
    for j in range(n):
        hard[j] = 0
    for i in range(nb_):
        if (best[i >> 6] >> np.uint64(i & 63)) & np.uint64(1):
            hard[sel[i]] = 1
    if best_f1 >= 0:
        hard[best_f1] ^= 1
    if best_f2 >= 0:
        hard[best_f2] ^= 1
    return True


# ---------------------------------------------------------------------------
# Single-matrix decoding


def _as_csr(H) -> sparse.csr_matrix:
    if isinstance(H, gf2.BinaryMatrix):
        H = H.to_dense()
    return sparse.csr_matrix(H, dtype=np.uint8)


@dataclass
class _Graph:
    row_ptr: np.ndarray
    edge_col: np.ndarray
    col_ptr: np.ndarray
    col_edge: np.ndarray
    colbits: np.ndarray
    rank: int

    @classmethod
    def build(cls, H) -> "_Graph":
        csr = _as_csr(H)
        csr.sum_duplicates()
        csr.sort_indices()
        m, n = csr.shape
        row_ptr = csr.indptr.astype(np.int64)
        edge_col = csr.indices.astype(np.int64)
        order = np.argsort(edge_col, kind="stable")
        col_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(edge_col, minlength=n), out=col_ptr[1:])
        dense = csr.toarray().astype(np.uint8)
        colbits = gf2.pack_bits(dense.T) if n else np.zeros((0, 1), np.uint64)
        return cls(row_ptr, edge_col, col_ptr, order.astype(np.int64), colbits, gf2.rank(dense) if m and n else 0)


def _llr(priors: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(priors, dtype=np.float64), 1e-300, 0.5)
    return np.log1p(-p) - np.log(p)


@dataclass
class BpResult:
    hard: np.ndarray
    llrs: np.ndarray
    converged: bool
    iterations: int


def _pool(g: "_Graph", llr0, syn, bp: BpConfig, osd_config: "OsdConfig | None", want_post: bool):
    syn = np.ascontiguousarray(np.atleast_2d(np.asarray(syn, dtype=np.uint8)))
    if syn.shape[1] != g.row_ptr.shape[0] - 1:
        raise ValueError("syndrome length does not match check count")
    n = len(llr0)
    hard = np.zeros((syn.shape[0], n), dtype=np.uint8)
    post = np.zeros((syn.shape[0] if want_post else 0, n), dtype=np.float32)
    info = np.zeros((syn.shape[0], 2), dtype=np.int64)
    single, pair = osd_config.spans() if osd_config is not None else (0, 0)
    _bp_pool(g.row_ptr, g.edge_col, g.col_ptr, g.col_edge, llr0.astype(np.float32), llr0, syn,
             bp.max_iter, np.float32(bp.scaling), g.colbits, g.rank, single, pair,
             osd_config is not None, hard, post, info)
    return hard, post, info


def bp_min_sum(H, priors, syndrome, config: BpConfig = BpConfig()) -> BpResult:
    g = _Graph.build(H)
    hard, post, info = _pool(g, _llr(priors), syndrome, config, None, True)
    return BpResult(hard[0].astype(bool), post[0].astype(np.float64), bool(info[0, 1] == 0), int(info[0, 0]))


class UnsatisfiableSyndrome(ValueError):
    pass


def osd(H, llrs, syndrome, config: OsdConfig = OsdConfig(), priors=None) -> np.ndarray:
    """Ordered-statistics decoding from soft values ``llrs`` (lower = more likely
    flipped).  Candidates are ranked by prior likelihood (``priors`` if given,
    otherwise the soft values themselves)."""
    g = _Graph.build(H)
    syn = np.asarray(syndrome, dtype=np.uint8)
    llrs = np.asarray(llrs, dtype=np.float64)
    weights = _llr(priors) if priors is not None else np.abs(llrs)
    hard = np.zeros(len(llrs), dtype=np.uint8)
    single, pair = config.spans()
    if not _osd(g.colbits, llrs, weights, syn, g.rank, single, pair, hard):
        raise UnsatisfiableSyndrome("syndrome is not in the column space of the check matrix")
    return hard.astype(bool)


def bposd_decode(H, priors, syndrome, bp: BpConfig = BpConfig(), osd_config: OsdConfig = OsdConfig()):
    """BP followed by OSD on non-convergence.  ``syndrome`` may be one vector or
    a (shots, checks) array."""
    g = _Graph.build(H)
    hard, _, info = _pool(g, _llr(priors), syndrome, bp, osd_config, False)
    if (info[:, 1] == 2).any():
        raise UnsatisfiableSyndrome("syndrome is not in the column space of the check matrix")
    out = hard.astype(bool)
    return out[0] if np.ndim(syndrome) == 1 else out


# ---------------------------------------------------------------------------
# Overlapping windows


@nb.njit(cache=True)
def _decode_batch(syn_all, det_ptr, det_idx, obs_ptr, obs_idx, n_obs,
                  win_rows, col_off, cols, llr_flat, commit_flat,
                  rp_off, row_ptr_flat, edge_off, edge_col_flat, cp_off, col_ptr_flat, col_edge_flat,
                  colbits_flat, ranks, max_iter, alpha, n_single, n_pair, want_corr):
    """Window-major decoding of a batch: every shot's window ``k`` is decoded
    before any shot moves on to window ``k + 1``."""
    shots = syn_all.shape[0]
    n_win = win_rows.shape[0]
    n_mech = det_ptr.shape[0] - 1
    syn = syn_all.copy()
    pred = np.zeros((shots, n_obs), dtype=np.uint8)
    corr_out = np.zeros((shots if want_corr else 0, n_mech), dtype=np.uint8)
    status = np.zeros(shots, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)
    no_post = np.zeros((0, 1), dtype=np.float32)
    for k in range(n_win):
        r0 = win_rows[k, 0]
        r1 = win_rows[k, 1]
        c0 = col_off[k]
        c1 = col_off[k + 1]
        nk = c1 - c0
        e0 = edge_off[k]
        e1 = edge_off[k + 1]
        local = np.ascontiguousarray(syn[:, r0:r1])
        hard = np.zeros((shots, nk), dtype=np.uint8)
        info = np.zeros((shots, 2), dtype=np.int64)
        llr = llr_flat[c0:c1]
        _bp_pool(row_ptr_flat[rp_off[k]:rp_off[k + 1]], edge_col_flat[e0:e1],
                 col_ptr_flat[cp_off[k]:cp_off[k + 1]], col_edge_flat[e0:e1],
                 llr.astype(np.float32), llr, local, max_iter, alpha, colbits_flat[c0:c1], ranks[k],
                 n_single, n_pair, True, hard, no_post, info)
        for s in range(shots):
            if info[s, 0] > 0:
                stats[0] += 1
                stats[2] += info[s, 0]
            if info[s, 1] != 0:
                stats[1] += 1
            if info[s, 1] == 2:
                status[s] |= 1
            for j in range(nk):
                if hard[s, j] and commit_flat[c0 + j]:
                    g = cols[c0 + j]
                    for q in range(det_ptr[g], det_ptr[g + 1]):
                        syn[s, det_idx[q]] ^= 1
                    for q in range(obs_ptr[g], obs_ptr[g + 1]):
                        pred[s, obs_idx[q]] ^= 1
                    if want_corr:
                        corr_out[s, g] = 1
    for s in range(shots):
        for i in range(syn.shape[1]):
            if syn[s, i]:
                status[s] |= 2
                break
    return pred, corr_out, status, stats


class WindowDecoder:
    """Precomputed overlapping-window BP+OSD decoder for one detector error model.

    Window structure and priors do not depend on the syndrome, so every window's
    Tanner graph, packed columns and rank are built once.
    """

    def __init__(self, dem: DetectorErrorModel, window: WindowConfig = WindowConfig(),
                 bp: BpConfig = BpConfig(), osd_config: OsdConfig = OsdConfig(),
                 perf_prior: float = PERF_PRIOR):
        self.dem, self.window, self.bp, self.osd = dem, window, bp, osd_config
        self.perf_prior = perf_prior
        H = dem.check_matrix().tocsc()
        committed = np.zeros(dem.n_mechanisms, dtype=bool)
        rows, cols, llrs, commits, ranks = [], [], [], [], []
        rptrs, ecols, cptrs, cedges, bits = [], [], [], [], []
        n_dec = decoding_rounds(dem, window.c) if dem.rounds else 0
        self.windows = []
        for k in range(n_dec):
            win = window_indices(dem, k, window.w, window.c)
            self.windows.append(win)
            r0, r1 = win.s_w
            sub = H[r0:r1][:, win.w_inds]
            priors = dem.probs[win.w_inds].copy()
            priors[committed[win.w_inds]] = perf_prior
            commit = np.zeros(len(win.w_inds), dtype=np.uint8)
            commit[np.isin(win.w_inds, win.c_inds)] = 1
            committed[win.c_inds] = True
            g = _Graph.build(sub)
            rows.append((r0, r1))
            cols.append(win.w_inds)
            llrs.append(_llr(priors))
            commits.append(commit)
            ranks.append(g.rank)
            rptrs.append(g.row_ptr)
            ecols.append(g.edge_col)
            cptrs.append(g.col_ptr)
            cedges.append(g.col_edge)
            bits.append(g.colbits)
        mw = max((b.shape[1] for b in bits), default=1)
        bits = [np.pad(b, ((0, 0), (0, mw - b.shape[1]))) for b in bits]

        def flat(parts, dtype):
            return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype)

        def offsets(parts):
            out = np.zeros(len(parts) + 1, dtype=np.int64)
            out[1:] = np.cumsum([len(p) for p in parts])
            return out

        self._args = (
            dem.det_ptr, dem.det_idx, dem.obs_ptr, dem.obs_idx, dem.n_observables,
            np.array(rows, dtype=np.int64).reshape(-1, 2), offsets(cols), flat(cols, np.int64),
            flat(llrs, np.float64), flat(commits, np.uint8),
            offsets(rptrs), flat(rptrs, np.int64), offsets(ecols), flat(ecols, np.int64),
            offsets(cptrs), flat(cptrs, np.int64), flat(cedges, np.int64),
            np.vstack(bits) if bits else np.zeros((0, 1), np.uint64), np.array(ranks, dtype=np.int64),
        )

    def _run(self, syndromes, want_corr):
        syn = np.atleast_2d(np.asarray(syndromes, dtype=np.uint8))
        if syn.shape[1] != self.dem.n_detectors:
            raise ValueError(f"syndrome width {syn.shape[1]} != {self.dem.n_detectors} detectors")
        single, pair = self.osd.spans()
        pred, corr, status, stats = _decode_batch(np.ascontiguousarray(syn), *self._args, self.bp.max_iter,
                                           np.float32(self.bp.scaling), single, pair, want_corr)
        if (status & 1).any():
            raise UnsatisfiableSyndrome("a window syndrome lies outside its column space")
        self.last_stats = {"bp_runs": int(stats[0]), "bp_failures": int(stats[1]), "bp_iterations": int(stats[2])}
        return pred.astype(bool), corr.astype(bool), status

    def predict_observables(self, syndromes) -> np.ndarray:
        return self._run(syndromes, False)[0]

    def decode(self, syndromes) -> np.ndarray:
        """Total committed correction over mechanisms, one row per shot."""
        return self._run(syndromes, True)[1]


def overlapping_window_decode(dem: DetectorErrorModel, syndrome, window: WindowConfig = WindowConfig(),
                              bp: BpConfig = BpConfig(), osd_config: OsdConfig = OsdConfig()) -> np.ndarray:
    syn = np.asarray(syndrome)
    out = WindowDecoder(dem, window, bp, osd_config).decode(syn)
    return out[0] if syn.ndim == 1 else out


def evaluate_shot(dem: DetectorErrorModel, correction, actual_observables) -> np.ndarray:
    """Per-observable failure bits: predicted XOR actual."""
    corr = np.asarray(correction, dtype=np.uint8)
    predicted = (dem.observable_matrix() @ corr.T).T % 2
    return predicted.astype(bool) ^ np.asarray(actual_observables, dtype=bool)
