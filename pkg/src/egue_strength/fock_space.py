"""Spinless-fermion Fock spaces on bitmasks and the k-body embeddings.

Single-particle state ``i`` is bit ``i`` of an integer mask.  A k-particle
configuration operator is

    A^dagger_config = c^dagger_{i1} c^dagger_{i2} ... c^dagger_{ik},  i1 < ... < ik

so that ``A^dagger_config |0> = |config>`` with sign +1, and ``A_config`` is its
adjoint.  The sign of a single ``c_i`` or ``c^dagger_i`` is (-1) to the number of
occupied modes below ``i``.  "Below" follows ``order`` (a rank per mode) when
given; any ordering yields the same ensemble averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

__all__ = [
    "MAX_MODES",
    "FockBasis",
    "ManyBodyOperator",
    "build_basis",
    "annihilate_config",
    "create_config",
    "EmbeddingTable",
    "hamiltonian_table",
    "transition_table",
    "build_hamiltonian",
    "build_transition",
]

MAX_MODES = 63


def _below_masks(N: int, order=None) -> list[int]:
    if order is None:
        return [(1 << i) - 1 for i in range(N)]
    order = list(order)
    if sorted(order) != list(range(N)):
        raise ValueError(f"order must be a permutation of range({N})")
    below = []
    for i in range(N):
        below.append(sum(1 << j for j in range(N) if order[j] < order[i]))
    return below


def _sorted_modes(config: int, order=None) -> list[int]:
    modes = [i for i in range(config.bit_length()) if config >> i & 1]
    if order is not None:
        modes.sort(key=lambda i: order[i])
    return modes


@dataclass(frozen=True)
class FockBasis:
    """All m-fermion occupation masks over N modes, in increasing numeric order."""

    N: int
    m: int
    states: np.ndarray
    index: dict = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(int(s) for s in self.states)


def build_basis(N: int, m: int) -> FockBasis:
    if not (0 <= m <= N <= MAX_MODES):
        raise ValueError(f"need 0 <= m <= N <= {MAX_MODES}, got N={N}, m={m}")
    masks = sorted(sum(1 << i for i in occ) for occ in combinations(range(N), m))
    states = np.array(masks, dtype=np.int64)
    return FockBasis(N, m, states, {s: i for i, s in enumerate(masks)})


def annihilate_config(state: int, config: int, order=None, below=None):
    """Apply ``A_config`` to ``|state>``.

    Returns ``(result_mask, sign)`` or ``None`` if ``config`` is not contained
    in ``state``.
    """
    if state & config != config:
        return None
    if below is None:
        below = _below_masks(len(order) if order is not None else max(state.bit_length(), 1), order)
    sign = 1
    cur = state
    # A_config = c_{ik} ... c_{i1}: the lowest mode acts first
    for i in _sorted_modes(config, order):
        if (cur & below[i]).bit_count() & 1:
            sign = -sign
        cur ^= 1 << i
    return cur, sign


def create_config(state: int, config: int, order=None, below=None):
    """Apply ``A^dagger_config`` to ``|state>``; ``None`` on Pauli blocking."""
    if state & config:
        return None
    if below is None:
        below = _below_masks(len(order) if order is not None else max((state | config).bit_length(), 1), order)
    sign = 1
    cur = state
    for i in reversed(_sorted_modes(config, order)):
        if (cur & below[i]).bit_count() & 1:
            sign = -sign
        cur |= 1 << i
    return cur, sign


@dataclass(frozen=True)
class ManyBodyOperator:
    rows_basis: FockBasis
    cols_basis: FockBasis
    matrix: np.ndarray


@dataclass(frozen=True)
class EmbeddingTable:
    """Nonzero pattern of a family of configuration operators.

    Entry ``n`` says: the operator with label ``labels[n]`` maps column state
    ``cols[n]`` to row state ``rows[n]`` with ``signs[n]``.  For Hamiltonian
    tables the label is ``a * D + b`` for ``A^dagger_a A_b`` with D = C(N, k).
    """

    rows: np.ndarray
    cols: np.ndarray
    labels: np.ndarray
    signs: np.ndarray
    n_rows: int
    n_cols: int
    n_labels: int

    def dense(self, coeffs) -> np.ndarray:
        """Sum_label coeffs[label] * operator[label], as a dense matrix."""
        coeffs = np.asarray(coeffs).reshape(-1)
        w = coeffs[self.labels] * self.signs
        flat = self.rows * self.n_cols + self.cols
        size = self.n_rows * self.n_cols
        if np.iscomplexobj(w):
            out = np.bincount(flat, weights=w.real, minlength=size) + 1j * np.bincount(
                flat, weights=w.imag, minlength=size
            )
        else:
            out = np.bincount(flat, weights=w, minlength=size)
        return out.reshape(self.n_rows, self.n_cols)


def hamiltonian_table(basis_k: FockBasis, basis_m: FockBasis, order=None) -> EmbeddingTable:
    """Pattern of every ``A^dagger_a(k) A_b(k)`` inside the m-particle space."""
    N = basis_k.N
    if basis_m.N != N:
        raise ValueError("bases must share N")
    below = _below_masks(N, order)
    kconf = [int(s) for s in basis_k.states]
    D = len(kconf)
    rows, cols, labels, signs = [], [], [], []
    for v_idx, v in enumerate(basis_m):
        for b_idx, b in enumerate(kconf):
            removed = annihilate_config(v, b, order, below)
            if removed is None:
                continue
            w, s1 = removed
            for a_idx, a in enumerate(kconf):
                added = create_config(w, a, order, below)
                if added is None:
                    continue
                u, s2 = added
                rows.append(basis_m.index[u])
                cols.append(v_idx)
                labels.append(a_idx * D + b_idx)
                signs.append(s1 * s2)
    d = len(basis_m)
    return EmbeddingTable(
        np.array(rows, dtype=np.int64),
        np.array(cols, dtype=np.int64),
        np.array(labels, dtype=np.int64),
        np.array(signs, dtype=np.int64),
        d,
        d,
        D * D,
    )


def transition_table(basis_k0: FockBasis, basis_m: FockBasis, basis_mf: FockBasis, order=None) -> EmbeddingTable:
    """Pattern of ``A_alpha(k0)`` (removal) or ``A^dagger_alpha(k0)`` (addition).

    The direction follows from the particle numbers of ``basis_m`` (columns)
    and ``basis_mf`` (rows).
    """
    N, k0 = basis_k0.N, basis_k0.m
    if not (basis_m.N == basis_mf.N == N):
        raise ValueError("bases must share N")
    if basis_mf.m == basis_m.m - k0:
        act = annihilate_config
    elif basis_mf.m == basis_m.m + k0:
        act = create_config
    else:
        raise ValueError(f"final space must hold m -/+ k0 particles, got m={basis_m.m}, mf={basis_mf.m}, k0={k0}")
    below = _below_masks(N, order)
    rows, cols, labels, signs = [], [], [], []
    for v_idx, v in enumerate(basis_m):
        for alpha_idx, alpha in enumerate(basis_k0):
            res = act(v, alpha, order, below)
            if res is None:
                continue
            u, s = res
            rows.append(basis_mf.index[u])
            cols.append(v_idx)
            labels.append(alpha_idx)
            signs.append(s)
    return EmbeddingTable(
        np.array(rows, dtype=np.int64),
        np.array(cols, dtype=np.int64),
        np.array(labels, dtype=np.int64),
        np.array(signs, dtype=np.int64),
        len(basis_mf),
        len(basis_m),
        len(basis_k0),
    )


def build_hamiltonian(V, basis_k: FockBasis, basis_m: FockBasis, order=None, atol: float = 1e-12) -> ManyBodyOperator:
    """Embed the k-particle matrix V as H = sum_ij V_ij A^dagger_i(k) A_j(k)."""
    V = np.asarray(V)
    D = len(basis_k)
    if V.shape != (D, D):
        raise ValueError(f"V must be {D}x{D} for C({basis_k.N},{basis_k.m}), got {V.shape}")
    scale = max(np.abs(V).max(initial=0.0), 1.0)
    if np.abs(V - V.conj().T).max(initial=0.0) > atol * scale:
        raise ValueError("V is not Hermitian")
    table = hamiltonian_table(basis_k, basis_m, order)
    return ManyBodyOperator(basis_m, basis_m, table.dense(V))


def build_transition(Valpha, basis_k0: FockBasis, basis_m: FockBasis, basis_mf: FockBasis, order=None) -> ManyBodyOperator:
    """O = sum_alpha V_alpha A_alpha(k0) (or A^dagger_alpha for addition)."""
    Valpha = np.asarray(Valpha).reshape(-1)
    if Valpha.shape[0] != len(basis_k0):
        raise ValueError(f"need {len(basis_k0)} coefficients, got {Valpha.shape[0]}")
    table = transition_table(basis_k0, basis_m, basis_mf, order)
    return ManyBodyOperator(basis_mf, basis_m, table.dense(Valpha))

