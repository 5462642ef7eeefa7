import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macrotransport.fock import (
    StateEnsemble,
    check_state,
    concentrations,
    diagonal_weights,
    enumerate_basis,
    hop_neighbors,
    mott_state,
    projector_weight,
    random_state,
    read_state_csv,
    region_number,
    write_state_csv,
)


def test_small_sectors():
    b = enumerate_basis(2, 3)
    assert [tuple(c) for c in b.configs] == [(3, 0), (2, 1), (1, 2), (0, 3)]
    assert enumerate_basis(5, 3).dim == 35
    vac = enumerate_basis(3, 0)
    assert vac.dim == 1 and tuple(vac.configs[0]) == (0, 0, 0)


def test_dimension_cap():
    with pytest.raises(ValueError, match="cap"):
        enumerate_basis(20, 10)


@given(L=st.integers(1, 6), N=st.integers(0, 6))
def test_basis_is_complete_and_ordered(L, N):
    b = enumerate_basis(L, N)
    assert b.dim == math.comb(N + L - 1, N)
    assert (b.configs.sum(axis=1) == N).all()
    rows = [tuple(c) for c in b.configs]
    assert rows == sorted(rows, reverse=True)
    for k in range(b.dim):
        assert b.index_of(b.config_of(k)) == k


def test_lookup_rejects_foreign_configs():
    b = enumerate_basis(3, 2)
    assert b.lookup([[1, 1, 1], [0, 0, 2], [-1, 3, 0]]).tolist() == [-1, b.dim - 1, -1]
    with pytest.raises(KeyError):
        b.index_of((2, 1, 0))


def test_hop_neighbors_examples():
    b = enumerate_basis(2, 2)
    assert hop_neighbors(b, (2, 0)) == [((1, 1), 0, 1, pytest.approx(math.sqrt(2)))]
    got = sorted(hop_neighbors(b, (1, 1)))
    assert [g[0] for g in got] == [(0, 2), (2, 0)]
    assert all(g[3] == pytest.approx(math.sqrt(2)) for g in got)
    assert hop_neighbors(enumerate_basis(3, 0), (0, 0, 0)) == []


def test_region_number():
    assert region_number((3, 0, 1), {0, 2}) == 4
    assert region_number((3, 0, 1), {0, 1, 2}) == 4
    assert region_number((3, 0, 1), set()) == 0


def test_projector_examples():
    b = enumerate_basis(3, 3)
    psi = mott_state(b, (3, 0, 0))
    assert projector_weight(psi, b, {0}, ">=", 3) == 1.0
    assert projector_weight(psi, b, {1, 2}, ">=", 1) == 0.0
    b2 = enumerate_basis(2, 3)
    uni = np.full(4, 0.5, dtype=complex)
    assert projector_weight(uni, b2, {1}, "<=", 1) == pytest.approx(0.5)


def test_concentration_examples():
    b = enumerate_basis(3, 2)
    np.testing.assert_allclose(concentrations(mott_state(b, (2, 0, 0)), b), [1, 0, 0])
    b2 = enumerate_basis(2, 2)
    np.testing.assert_allclose(concentrations(mott_state(b2, (1, 1)), b2), [0.5, 0.5])


@given(seed=st.integers(0, 10_000), L=st.integers(2, 4), N=st.integers(1, 4))
def test_concentrations_match_dense_number_operator(seed, L, N):
    b = enumerate_basis(L, N)
    psi = random_state(b, np.random.default_rng(seed))
    for i in range(L):
        n_i = np.diag(b.configs[:, i].astype(float))
        assert concentrations(psi, b)[i] == pytest.approx(np.vdot(psi, n_i @ psi).real / N, abs=1e-12)
    assert concentrations(psi, b).sum() == pytest.approx(1.0)


def test_state_forms_agree(rng):
    b = enumerate_basis(3, 2)
    vecs = np.column_stack([random_state(b, rng) for _ in range(3)])
    w = np.array([0.2, 0.5, 0.3])
    ens = StateEnsemble(w, vecs)
    rho = ens.to_density()
    check_state(ens)
    check_state(rho)
    np.testing.assert_allclose(diagonal_weights(ens), diagonal_weights(rho), atol=1e-14)


def test_check_state_rejects_bad_input():
    with pytest.raises(ValueError):
        check_state(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        check_state(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        check_state(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        StateEnsemble(np.array([0.7, 0.7]), np.eye(2))


def test_random_state_support(rng):
    b = enumerate_basis(3, 3)
    psi = random_state(b, rng, support=[0, 4])
    assert np.count_nonzero(psi) == 2
    assert np.linalg.norm(psi) == pytest.approx(1.0)


def test_state_csv_roundtrip(tmp_path, rng):
    b = enumerate_basis(3, 2)
    psi = random_state(b, rng)
    write_state_csv(tmp_path / "psi.csv", psi)
    np.testing.assert_array_equal(read_state_csv(tmp_path / "psi.csv", b.dim), psi)
