"""Exact ensemble averages by Wick (Isserlis) contraction.

This is an oracle for the closed forms in :mod:`exact_moments` that uses no
U(N) Racah algebra at all.  The two Gaussian ensembles enter only through
their defining-space covariances

    E[V_ab V_cd] = vh2 * delta_ad delta_bc      (H = sum V_ab A^dagger_a A_b)
    E[V_alpha V*_beta] = vo2 * delta_alpha,beta (O = sum V_alpha A_alpha)

so ``E tr(O^dagger H^Q O H^P)`` is a sum over pair partitions of the H
factors (the O^dagger-O pairing is forced).  Each partition is a cyclic
trace of configuration operators summed over the pair labels.

Every configuration operator is a *signed partial permutation* (at most one
nonzero, +-1, per column), and so is any product of them.  A ring is
evaluated by looping over the labels of all pairs but one, composing the
partial permutations between the remaining pair's two slots, and reading
the last label sum off a precomputed four-index count tensor.  All
arithmetic is on integers, so the result is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
import scipy.sparse as sp

from .combinatorics import binomial
from .errors import CostGuardError
from .exact_moments import MOMENT_ORDERS, REMOVAL, BivariateMoments, ModelParams, check_mode
from .fock_space import EmbeddingTable, build_basis, hamiltonian_table, transition_table

__all__ = ["CostGuardError", "WICK_DIM_CAP", "wick_oracle", "wick_moments", "WickSystem"]

WICK_DIM_CAP = 70

# bound on tuples x columns held at once by the label loop
_CHUNK_ELEMENTS = 2_000_000


@dataclass
class _Maps:
    """A stack of weighted partial permutations, one per label.

    ``rows[l, c]`` is the row hit by column ``c`` of map ``l`` (or -1) and
    ``w[l, c]`` its integer weight.
    """

    rows: np.ndarray
    w: np.ndarray
    n_rows: int

    @property
    def n_cols(self) -> int:
        return self.rows.shape[1]

    @property
    def n_labels(self) -> int:
        return self.rows.shape[0]

    def take(self, labels) -> "_Maps":
        return _Maps(self.rows[labels], self.w[labels], self.n_rows)

    def transposed(self) -> "_Maps":
        """Adjoint of each map (real weights, so just the transpose)."""
        L, nc = self.rows.shape
        rows = np.full((L, self.n_rows), -1, dtype=np.int64)
        w = np.zeros((L, self.n_rows), dtype=np.int64)
        lab, col = np.nonzero(self.rows >= 0)
        r = self.rows[lab, col]
        rows[lab, r] = col
        w[lab, r] = self.w[lab, col]
        return _Maps(rows, w, nc)


def _maps_from_table(table: EmbeddingTable) -> _Maps:
    rows = np.full((table.n_labels, table.n_cols), -1, dtype=np.int64)
    w = np.zeros((table.n_labels, table.n_cols), dtype=np.int64)
    rows[table.labels, table.cols] = table.rows
    w[table.labels, table.cols] = table.signs
    return _Maps(rows, w, table.n_rows)


def _identity(d: int, T: int) -> _Maps:
    return _Maps(np.broadcast_to(np.arange(d), (T, d)).copy(), np.ones((T, d), dtype=np.int64), d)


def _compose(a: _Maps, b: _Maps) -> _Maps:
    """Matrix product a @ b, tuple by tuple (b acts first)."""
    valid = b.rows >= 0
    idx = np.where(valid, b.rows, 0)
    rows = np.take_along_axis(a.rows, idx, axis=1)
    w = np.take_along_axis(a.w, idx, axis=1) * b.w
    ok = valid & (rows >= 0)
    return _Maps(np.where(ok, rows, -1), np.where(ok, w, 0), a.n_rows)


def _diag_of_pair(first: _Maps, middle: np.ndarray | None, second: _Maps) -> np.ndarray:
    """Diagonal of sum_l first_l @ diag(middle) @ second_l.

    Only valid when that sum is diagonal, which holds when ``second_l``
    followed by ``first_l`` returns every column to itself.
    """
    valid = second.rows >= 0
    mid_idx = np.where(valid, second.rows, 0)
    w = second.w.copy()
    if middle is not None:
        w = w * middle[mid_idx]
    back = np.take_along_axis(first.rows, mid_idx, axis=1)
    w = w * np.take_along_axis(first.w, mid_idx, axis=1)
    cols = np.arange(second.n_cols)
    ok = valid & (back >= 0)
    if np.any(ok & (back != cols)):
        raise AssertionError("pair contraction is not diagonal")
    return np.where(ok, w, 0).sum(axis=0)


class _PairTensor:
    """Sparse K[p, q, r, s] = sum_l first_l[p, q] * second_l[r, s].

    Stored as sorted flat keys ``((p*nq + q)*nr + r)*ns + s`` with values.
    """

    def __init__(self, first: _Maps, second: _Maps):
        def indicator(mp: _Maps) -> sp.csr_matrix:
            lab, col = np.nonzero(mp.rows >= 0)
            flat = mp.rows[lab, col] * mp.n_cols + col
            return sp.csr_matrix(
                (mp.w[lab, col], (lab, flat)), shape=(mp.n_labels, mp.n_rows * mp.n_cols), dtype=np.int64
            )

        K = (indicator(first).T @ indicator(second)).tocoo()
        width = second.n_rows * second.n_cols
        keys = K.row.astype(np.int64) * width + K.col
        order = np.argsort(keys)
        self.keys = keys[order]
        self.vals = K.data[order].astype(np.int64)

    def lookup(self, idx: np.ndarray) -> np.ndarray:
        if self.keys.size == 0:
            return np.zeros(idx.shape, dtype=np.int64)
        pos = np.searchsorted(self.keys, idx)
        pos = np.minimum(pos, self.keys.size - 1)
        return np.where(self.keys[pos] == idx, self.vals[pos], 0)


@dataclass(eq=False)
class _Slot:
    pair: int
    maps: _Maps  # stack indexed by the pair's label


def _ring_trace(slots: list[_Slot]) -> int:
    """Sum over all pair labels of tr(slot_0 @ slot_1 @ ...).

    Pairs whose two slots are adjacent (up to diagonal factors) collapse to
    a diagonal first; ``left[i]`` is the diagonal sitting just left of slot
    ``i``.  What remains is contracted by label loops.
    """
    slots = list(slots)
    left: list[np.ndarray | None] = [None] * len(slots)
    changed = True
    while changed and slots:
        changed = False
        n = len(slots)
        for i in range(n):
            j = (i + 1) % n
            if n > 1 and slots[i].pair == slots[j].pair and i != j:
                # slots[i] is leftmost in the product whatever its role
                d = _diag_of_pair(slots[i].maps, left[j], slots[j].maps)
                # d acts on the column space of slots[j]; merge with left[i]
                if left[i] is not None:
                    d = d * left[i]
                keep = [s for t, s in enumerate(slots) if t not in (i, j)]
                keep_left = [lft for t, lft in enumerate(left) if t not in (i, j)]
                if keep:
                    # the diagonal now sits left of the slot that followed j
                    nxt = (j + 1) % n
                    pos = next(t for t, sl in enumerate(keep) if sl is slots[nxt])
                    keep_left[pos] = d if keep_left[pos] is None else keep_left[pos] * d
                    slots, left = keep, keep_left
                else:
                    return int(d.sum())
                changed = True
                break
    if not slots:
        raise AssertionError("empty ring")

    pair_ids = sorted({s.pair for s in slots})
    counts = {p: next(s.maps.n_labels for s in slots if s.pair == p) for p in pair_ids}
    q = max(pair_ids, key=lambda p: counts[p])
    others = [p for p in pair_ids if p != q]
    n = len(slots)
    x, y = [i for i, s in enumerate(slots) if s.pair == q]
    F, G = slots[x].maps, slots[y].maps
    K = _PairTensor(F, G)
    da, db = F.n_rows, F.n_cols
    dc, de = G.n_rows, G.n_cols

    if others:
        grids = np.array(list(product(*[range(counts[p]) for p in others])), dtype=np.int64)
    else:
        grids = np.zeros((1, 0), dtype=np.int64)
    col_of = {p: c for c, p in enumerate(others)}

    def segment(start: int, stop: int, labels: np.ndarray, d_out: int) -> _Maps:
        """Product slot_start @ ... @ slot_{stop-1} (cyclic), with diagonals."""
        T = labels.shape[0]
        acc = None
        i = start
        while i != stop:
            s = slots[i]
            mp = s.maps.take(labels[:, col_of[s.pair]])
            if left[i] is not None:
                dl = left[i]
                mp = _Maps(mp.rows, np.where(mp.rows >= 0, mp.w * dl[np.where(mp.rows >= 0, mp.rows, 0)], 0), mp.n_rows)
            acc = mp if acc is None else _compose(acc, mp)
            i = (i + 1) % n
        if acc is None:
            return _identity(d_out, T)
        return acc

    total = 0
    per_tuple = max(dc * da, 1)
    chunk = max(1, _CHUNK_ELEMENTS // per_tuple)
    for start in range(0, grids.shape[0], chunk):
        labels = grids[start : start + chunk]
        Y = segment((x + 1) % n, y, labels, db)  # maps c -> b
        X = segment((y + 1) % n, x, labels, de)  # maps a -> e
        # diagonals sitting directly left of F and G
        wY = Y.w
        if left[y] is not None:
            # left[y] multiplies on the left of G, i.e. on Y's columns (space c)
            wY = wY * left[y][None, :]
        wX = X.w
        if left[x] is not None:
            wX = wX * left[x][None, :]
        # only columns that survive both segments contribute
        yt, yr = np.nonzero((Y.rows >= 0) & (wY != 0))
        xt, xp = np.nonzero((X.rows >= 0) & (wX != 0))
        T = labels.shape[0]
        nX = np.bincount(xt, minlength=T)
        startX = np.cumsum(nX) - nX
        rep = nX[yt]
        if rep.sum() == 0:
            continue
        yi = np.repeat(np.arange(yt.size), rep)
        offs = np.arange(yi.size) - np.repeat(np.cumsum(rep) - rep, rep)
        xi = startX[yt[yi]] + offs
        t, r, pp = yt[yi], yr[yi], xp[xi]
        idx = ((pp * db + Y.rows[t, r]) * dc + r) * de + X.rows[t, pp]
        vals = K.lookup(idx) * wY[t, r] * wX[t, pp]
        total += int(vals.sum())
    return total


def _perfect_matchings(items: list[int]):
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        b = items[i]
        rest = items[1:i] + items[i + 1 :]
        for tail in _perfect_matchings(rest):
            yield [(a, b)] + tail


class WickSystem:
    """Configuration-operator stacks for one (N, m, k, k0, mode).

    ``order`` permutes the single-particle ordering used for fermionic signs;
    results must not depend on it.
    """

    def __init__(self, params: ModelParams, mode: str = REMOVAL, order=None, dim_cap: int = WICK_DIM_CAP):
        check_mode(params, mode)
        self.params = params
        self.mode = mode
        N, m, k, k0 = params.N, params.m, params.k, params.k0
        mf = params.final_m(mode)
        dims = {"C(N,m)": binomial(N, m), "C(N,m_f)": binomial(N, mf), "C(N,k)": binomial(N, k)}
        for name, value in dims.items():
            if value > dim_cap:
                raise CostGuardError(f"wick oracle cost guard: {name} = {value} exceeds {dim_cap}")
        self.d_i = binomial(N, m)
        bk = build_basis(N, k)
        bi = build_basis(N, m)
        bf = build_basis(N, mf)
        bk0 = build_basis(N, k0)
        Hi = _maps_from_table(hamiltonian_table(bk, bi, order))
        Hf = _maps_from_table(hamiltonian_table(bk, bf, order))
        D = len(bk)
        lab = np.arange(D * D)
        swap = (lab % D) * D + lab // D
        # second slot of an H pair carries A^dagger_b A_a for label (a, b)
        self.H = {"i": (Hi, Hi.take(swap)), "f": (Hf, Hf.take(swap))}
        # O maps i -> f; O^dagger = its transpose
        self.O = _maps_from_table(transition_table(bk0, bi, bf, order))
        self.Odag = self.O.transposed()

    def trace_count(self, P: int, Q: int) -> int:
        """Integer c with E tr(O^dagger H_f^Q O H_i^P) = c * vo2 * vh2^((P+Q)/2)."""
        if P < 0 or Q < 0:
            raise ValueError("P, Q must be nonnegative")
        if (P + Q) % 2:
            return 0
        spaces = ["f"] * Q + ["i"] * P
        # ring: O^dagger, H_f x Q, O, H_i x P ; H slot j sits at ring position
        positions = list(range(1, Q + 1)) + list(range(Q + 2, Q + 2 + P))
        total = 0
        for matching in _perfect_matchings(list(range(P + Q))):
            ring: list[_Slot | None] = [None] * (P + Q + 2)
            ring[0] = _Slot(0, self.Odag)
            ring[Q + 1] = _Slot(0, self.O)
            for pid, (a, b) in enumerate(matching, start=1):
                ring[positions[a]] = _Slot(pid, self.H[spaces[a]][0])
                ring[positions[b]] = _Slot(pid, self.H[spaces[b]][1])
            total += _ring_trace(ring)
        return total


def wick_oracle(params: ModelParams, P: int, Q: int, mode: str = REMOVAL, order=None, system: WickSystem | None = None) -> Fraction:
    """Exact M_PQ coefficient (units vo2 * vh2^((P+Q)/2)) by Wick contraction."""
    if P + Q > 4:
        raise ValueError("the oracle is limited to P + Q <= 4")
    sysm = system or WickSystem(params, mode, order)
    return Fraction(sysm.trace_count(P, Q), sysm.d_i)


def wick_moments(params: ModelParams, mode: str = REMOVAL, order=None) -> BivariateMoments:
    """All even moments up to fourth order, M22 included in full."""
    sysm = WickSystem(params, mode, order)
    vals = {(P, Q): float(wick_oracle(params, P, Q, mode, system=sysm)) for P, Q in MOMENT_ORDERS}
    return BivariateMoments(
        m00=vals[0, 0], m20=vals[2, 0], m02=vals[0, 2], m11=vals[1, 1],
        m40=vals[4, 0], m04=vals[0, 4], m31=vals[3, 1], m13=vals[1, 3], m22=vals[2, 2],
        mode=mode, provenance="wick", vh2=params.vh2, vo2=params.vo2,
    )
