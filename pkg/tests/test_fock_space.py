import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egue_strength.combinatorics import binomial
from egue_strength.fock_space import (
    annihilate_config,
    build_basis,
    build_hamiltonian,
    build_transition,
    create_config,
    hamiltonian_table,
    transition_table,
)


def slater_sign_oracle(state_modes, removed):
    """Sign of removing ``removed`` modes from an ordered product state.

    Works with explicit mode lists: A_config = c_{ik}...c_{i1} brings each
    removed mode to the front before deleting it.
    """
    modes = list(state_modes)
    sign = 1
    for i in sorted(removed):
        pos = modes.index(i)
        sign *= (-1) ** pos
        modes.pop(pos)
    return modes, sign


def test_basis_examples():
    b = build_basis(4, 2)
    assert [int(s) for s in b.states] == [0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]
    assert [int(s) for s in build_basis(7, 0).states] == [0]
    assert len(build_basis(6, 3)) == 20


@given(st.integers(0, 12), st.data())
def test_basis_invariants(N, data):
    m = data.draw(st.integers(0, N))
    b = build_basis(N, m)
    s = [int(x) for x in b.states]
    assert len(s) == binomial(N, m)
    assert s == sorted(set(s))
    assert all(x.bit_count() == m for x in s)
    assert all(b.index[x] == i for i, x in enumerate(s))


def test_basis_domain():
    with pytest.raises(ValueError):
        build_basis(64, 2)
    with pytest.raises(ValueError):
        build_basis(4, 5)


def test_annihilate_examples():
    assert annihilate_config(0b1, 0b1) == (0, 1)
    assert annihilate_config(0b11, 0b10) == (0b01, -1)
    assert annihilate_config(0b101, 0b010) is None


def test_create_blocked():
    assert create_config(0b11, 0b01) is None


@settings(max_examples=100)
@given(st.integers(1, 10), st.data())
def test_annihilate_matches_explicit_ordering(N, data):
    m = data.draw(st.integers(1, N))
    occ = sorted(data.draw(st.sets(st.integers(0, N - 1), min_size=m, max_size=m)))
    sub = data.draw(st.sets(st.sampled_from(occ), min_size=1))
    state = sum(1 << i for i in occ)
    config = sum(1 << i for i in sub)
    modes, sign = slater_sign_oracle(occ, sub)
    assert annihilate_config(state, config) == (sum(1 << i for i in modes), sign)


@settings(max_examples=100)
@given(st.integers(1, 10), st.data())
def test_create_inverts_annihilate(N, data):
    occ = data.draw(st.sets(st.integers(0, N - 1), min_size=1))
    sub = data.draw(st.sets(st.sampled_from(sorted(occ)), min_size=1))
    state = sum(1 << i for i in occ)
    config = sum(1 << i for i in sub)
    rest, s1 = annihilate_config(state, config)
    back, s2 = create_config(rest, config)
    assert back == state and s1 == s2


def _config_matrices(N, m, k):
    """Separately built A_config (m -> m-k) and A^dagger_config (m-k -> m)."""
    bm, bl, bk = build_basis(N, m), build_basis(N, m - k), build_basis(N, k)
    lower = {}
    for c in bk:
        A = np.zeros((len(bl), len(bm)))
        for j, v in enumerate(bm):
            r = annihilate_config(v, c)
            if r:
                A[bl.index[r[0]], j] = r[1]
        lower[c] = A
    return bm, bk, lower


@pytest.mark.parametrize("N,m,k", [(5, 3, 2), (6, 3, 1), (6, 4, 2), (7, 3, 3)])
def test_composition_consistency(N, m, k):
    bm, bk, A = _config_matrices(N, m, k)
    # A^dagger_c A_c is the projector onto states containing c
    for c in bk:
        P = A[c].T @ A[c]
        expect = np.diag([1.0 if (v & c) == c else 0.0 for v in bm])
        assert np.array_equal(P, expect)
    # table entries equal the explicit product A^dagger_a A_b
    table = hamiltonian_table(bk, bm)
    D = len(bk)
    confs = list(bk)
    for a_idx, b_idx in itertools.product(range(D), repeat=2):
        coeffs = np.zeros(D * D)
        coeffs[a_idx * D + b_idx] = 1.0
        assert np.array_equal(table.dense(coeffs), A[confs[a_idx]].T @ A[confs[b_idx]])


def test_m_equals_k_embedding_is_identity():
    rng = np.random.default_rng(0)
    bk = build_basis(5, 2)
    G = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
    V = G + G.conj().T
    H = build_hamiltonian(V, bk, bk)
    assert np.allclose(H.matrix, V, atol=0, rtol=0)


def test_one_body_diagonal():
    eps = np.array([0.3, -1.1, 2.0, 0.7, 5.0])
    b1, b3 = build_basis(5, 1), build_basis(5, 3)
    H = build_hamiltonian(np.diag(eps), b1, b3).matrix
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0
    for i, v in enumerate(b3):
        assert H[i, i] == pytest.approx(sum(eps[j] for j in range(5) if v >> j & 1))


def test_hamiltonian_trace_identity():
    rng = np.random.default_rng(1)
    N, m, k = 6, 3, 2
    bk, bm = build_basis(N, k), build_basis(N, m)
    G = rng.normal(size=(15, 15)) + 1j * rng.normal(size=(15, 15))
    V = (G + G.conj().T) / 2
    H = build_hamiltonian(V, bk, bm).matrix
    brute = sum(V[i, i] for i, c in enumerate(bk) for v in bm if (v & c) == c)
    assert np.trace(H) == pytest.approx(brute, rel=1e-13)
    assert np.trace(H) / binomial(N, m) == pytest.approx(np.trace(V) * binomial(m, k) / binomial(N, k), rel=1e-13)
    assert np.abs(H - H.conj().T).max() <= 1e-12 * np.abs(H).max()


def test_hamiltonian_input_checks():
    bk, bm = build_basis(4, 1), build_basis(4, 2)
    with pytest.raises(ValueError):
        build_hamiltonian(np.zeros((3, 3)), bk, bm)
    V = np.zeros((4, 4))
    V[0, 1] = 1.0
    with pytest.raises(ValueError):
        build_hamiltonian(V, bk, bm)


def test_transition_shapes():
    b1, b2, b1f = build_basis(4, 1), build_basis(4, 2), build_basis(4, 1)
    O = build_transition(np.ones(4), b1, b2, b1f).matrix
    assert O.shape == (4, 6)
    assert all(np.count_nonzero(O[:, j]) == 2 for j in range(6))
    with pytest.raises(ValueError):
        build_transition(np.ones(3), b1, b2, b1f)
    with pytest.raises(ValueError):
        transition_table(b1, b2, build_basis(4, 4))


def test_full_removal_maps_to_vacuum():
    N, m = 5, 3
    bm, bvac = build_basis(N, m), build_basis(N, 0)
    Va = np.arange(1, 11) * (1 + 0.5j)
    O = build_transition(Va, bm, bm, bvac).matrix
    assert O.shape == (1, 10)
    assert np.allclose(np.abs(O[0]), np.abs(Va))


def test_addition_is_adjoint_of_removal():
    bk0, b2, b3 = build_basis(6, 1), build_basis(6, 2), build_basis(6, 3)
    Va = np.linspace(1, 2, 6)
    rem = build_transition(Va, bk0, b3, b2).matrix
    add = build_transition(Va, bk0, b2, b3).matrix
    assert np.array_equal(add, rem.T)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.data())
def test_transition_norm_identity(N, data):
    m = data.draw(st.integers(1, N))
    k0 = data.draw(st.integers(1, m))
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    bk0, bm, bf = build_basis(N, k0), build_basis(N, m), build_basis(N, m - k0)
    Va = rng.normal(size=len(bk0)) + 1j * rng.normal(size=len(bk0))
    O = build_transition(Va, bk0, bm, bf).matrix
    lhs = np.trace(O.conj().T @ O).real / binomial(N, m)
    rhs = np.sum(np.abs(Va) ** 2) * binomial(m, k0) / binomial(N, k0)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_order_permutation_changes_signs_only():
    order = [2, 0, 3, 1, 4]
    bk, bm = build_basis(5, 2), build_basis(5, 3)
    plain = hamiltonian_table(bk, bm)
    perm = hamiltonian_table(bk, bm, order)
    assert np.array_equal(plain.rows, perm.rows) and np.array_equal(plain.labels, perm.labels)
    assert not np.array_equal(plain.signs, perm.signs)
    with pytest.raises(ValueError):
        hamiltonian_table(bk, bm, [0, 0, 1, 2, 3])
