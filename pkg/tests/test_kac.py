from fractions import Fraction
from math import comb

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given
from hypothesis import strategies as st

from macrotransport.kac import (
    binomial_identity_suite,
    biorthogonality_exact,
    corner_amplitude,
    corner_phase_expected,
    corner_sum_exact,
    integer_spectrum_residual,
    kac_eigenvectors,
    kac_matrix,
    kac_spectrum,
    kac_system,
    lemma2_limit_spectrum,
    lemma2_matrix,
    right_eigenvector_exact,
)


def test_spectrum_examples():
    np.testing.assert_allclose(kac_spectrum(3), [3, 1, -1, -3], atol=1e-13)
    np.testing.assert_allclose(kac_spectrum(4), [4, 2, 0, -2, -4], atol=1e-13)
    assert kac_spectrum(7).sum() == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("M", [1, 5, 12, 25])
def test_spectrum_residual_and_similarity(M):
    assert integer_spectrum_residual(M) <= 1e-10
    assert kac_system(M).similarity_residual() <= 1e-10
    # independent: eigenvalues of the nonsymmetric matrix itself
    ev = np.sort(np.linalg.eigvals(kac_matrix(M)).real)[::-1]
    np.testing.assert_allclose(ev, M - 2 * np.arange(M + 1), atol=1e-8)


@given(M=st.integers(1, 14), k=st.integers(0, 14), z=st.fractions(-3, 3))
def test_right_vectors_generating_function(M, k, z):
    if k > M:
        return
    v = right_eigenvector_exact(M, k)
    assert sum(c * z**m for m, c in enumerate(v)) == (1 + z) ** (M - k) * (1 - z) ** k


@pytest.mark.parametrize("M", [3, 6, 10])
def test_k0_vector_is_binomial_row(M):
    assert right_eigenvector_exact(M, 0) == [comb(M, m) for m in range(M + 1)]


@pytest.mark.parametrize("M", [2, 5, 9])
def test_eigen_equations_exact(M):
    R, Lf = kac_eigenvectors(M, exact=True)
    Gt = [[int(x) for x in row] for row in kac_matrix(M)]
    for k in range(M + 1):
        lam = M - 2 * k
        Gv = [sum(Gt[i][j] * R[k][j] for j in range(M + 1)) for i in range(M + 1)]
        assert Gv == [lam * R[k][i] for i in range(M + 1)]
        uG = [sum(Lf[k][i] * Gt[i][j] for i in range(M + 1)) for j in range(M + 1)]
        assert uG == [lam * Lf[k][j] for j in range(M + 1)]


@pytest.mark.parametrize("M", range(1, 21))
def test_biorthogonality(M):
    assert biorthogonality_exact(M)
    R, Lf = kac_eigenvectors(M)
    np.testing.assert_allclose(Lf @ R.T, np.eye(M + 1), atol=1e-10)


@pytest.mark.parametrize("M", [3, 4, 5, 6, 7, 9, 11])
def test_corner_amplitude_against_expm(M):
    U = la.expm(-0.5j * np.pi * kac_matrix(M))
    assert corner_amplitude(M) == pytest.approx(U[1, M - 1], abs=1e-9)
    assert abs(corner_amplitude(M)) == pytest.approx(1.0, abs=1e-12)


def test_corner_phases():
    # frozen from scipy.linalg.expm: M=3 gives +i, M=5 gives -i
    assert corner_amplitude(3) == pytest.approx(1j, abs=1e-12)
    assert corner_amplitude(5) == pytest.approx(-1j, abs=1e-12)
    for M in range(3, 16, 2):
        assert corner_amplitude(M) == pytest.approx(corner_phase_expected(M), abs=1e-12)
    with pytest.raises(ValueError):
        corner_phase_expected(4)


@pytest.mark.parametrize("M", range(2, 20))
def test_corner_sum_is_one(M):
    assert corner_sum_exact(M) == Fraction(1)


def test_binomial_identities():
    assert sum(comb(5, k) for k in range(5)) == 31
    assert sum(k * comb(5, k) for k in range(5)) == 75
    assert sum(k * (k - 1) * comb(5, k) for k in range(5)) == 140
    assert all(binomial_identity_suite(M) for M in range(2, 31))


def test_lemma2_matrix_layout():
    A = lemma2_matrix(4, 2, 1.0, 10.0)
    assert A[0, 0] == pytest.approx(10.0 * 4 * (4 - 4 + 1))
    assert A[1, 0] == pytest.approx(4 * np.sqrt(1 * 4))
    np.testing.assert_allclose(A, A.T)
    with pytest.raises(ValueError):
        lemma2_matrix(4, 0, 1.0, 1.0)


def test_lemma2_limit_M4_k4():
    rows = lemma2_limit_spectrum(4, 4, 1.0, [1e3, 1e4, 1e5, 1e6])
    last = rows[-1]
    assert last["target"] == pytest.approx(8.0)
    assert abs(last["upper"] - 8.0) <= 1e-3 and abs(last["lower"] + 8.0) <= 1e-3
    assert last["overlap_plus"] >= 1 - 1e-4 and last["overlap_minus"] >= 1 - 1e-4
    errs = [r["pair_error"] for r in rows]
    assert errs == sorted(errs, reverse=True)
    # off-pair eigenvalues sit at their diagonal levels up to O(1/U) corrections
    assert rows[-1]["off_pair_max"] < rows[0]["off_pair_max"]


@pytest.mark.parametrize("M, k", [(3, 1), (5, 3), (6, 2)])
def test_lemma2_limit_general(M, k):
    for hop in (False, True):
        last = lemma2_limit_spectrum(M, k, 1.0, [1e6], hopping_only=hop)[0]
        assert last["pair_error"] <= 1e-3 * last["target"]
        assert min(last["overlap_plus"], last["overlap_minus"]) >= 1 - 1e-4
