"""Sylvester-Kac matrices and the two-site transfer spectra.

The symmetric ladder G (off-diagonals sqrt(m(M-m+1))) is similar to the
Sylvester-Kac matrix Gt (off-diagonals M-m+1 below, m+1 above) through
P = diag(gamma) with gamma_m = sqrt(C(M, m)). Eigenvalues are M - 2k.

Eigenvectors are built from exact integer binomial sums; floats only appear
when a caller asks for them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from scipy.linalg import eigh_tridiagonal


def ladder_matrix(M: int) -> np.ndarray:
    """Symmetric (M+1)x(M+1) ladder with G[m, m+1] = sqrt((m+1)(M-m))."""
    m = np.arange(M)
    off = np.sqrt((m + 1.0) * (M - m))
    return np.diag(off, 1) + np.diag(off, -1)


def kac_matrix(M: int) -> np.ndarray:
    """Sylvester-Kac matrix: Gt[m, m-1] = M - m + 1, Gt[m, m+1] = m + 1."""
    m = np.arange(M, dtype=float)
    return np.diag(m + 1, 1) + np.diag(M - m, -1)


def kac_scaling(M: int) -> np.ndarray:
    """gamma_m with gamma_0 = 1 and gamma_m / gamma_{m+1} = sqrt((m+1)/(M-m))."""
    return np.sqrt([float(comb(M, m)) for m in range(M + 1)])


@dataclass(frozen=True)
class KacSystem:
    M: int
    G: np.ndarray
    Gt: np.ndarray
    gamma: np.ndarray

    def similarity_residual(self) -> float:
        P = np.diag(self.gamma)
        Pinv = np.diag(1.0 / self.gamma)
        return float(np.abs(P @ self.G @ Pinv - self.Gt).max())


def kac_system(M: int) -> KacSystem:
    if M < 1:
        raise ValueError("M must be at least 1")
    return KacSystem(M, ladder_matrix(M), kac_matrix(M), kac_scaling(M))


def kac_spectrum(M: int) -> np.ndarray:
    """Eigenvalues in descending order, from the symmetric similar matrix.

    The symmetric tridiagonal solver returns real, ordered eigenvalues
    without going through a nonsymmetric eigensolve.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    m = np.arange(M)
    off = np.sqrt((m + 1.0) * (M - m))
    return eigh_tridiagonal(np.zeros(M + 1), off, eigvals_only=True)[::-1]


def right_eigenvector_exact(M: int, k: int) -> list[int]:
    """Coefficients of (1+z)^(M-k) (1-z)^k, i.e. v^r_k with v^r_k0 = 1."""
    return [
        sum((-1) ** (m - i) * comb(k, m - i) * comb(M - k, i) for i in range(max(0, m - k), min(m, M - k) + 1))
        for m in range(M + 1)
    ]


def left_eigenvector_exact(M: int, k: int) -> list[Fraction]:
    """v^l_k normalized against v^r_k with v^r_k0 = 1."""
    scale = Fraction(1, 2**M)
    return [
        scale * sum((-1) ** (k - i) * comb(m, k - i) * comb(M - m, i) for i in range(max(0, k - m), min(k, M - m) + 1))
        for m in range(M + 1)
    ]


def kac_eigenvectors(M: int, exact: bool = False):
    """Right and left eigenvectors of the Kac matrix as rows indexed by k.

    Row k belongs to eigenvalue M - 2k. With ``exact`` the entries are ints
    (right) and Fractions (left) in object arrays.
    """
    R = [right_eigenvector_exact(M, k) for k in range(M + 1)]
    Lf = [left_eigenvector_exact(M, k) for k in range(M + 1)]
    if exact:
        return np.array(R, dtype=object), np.array(Lf, dtype=object)
    return np.array(R, dtype=float), np.array([[float(x) for x in row] for row in Lf])


def biorthogonality_exact(M: int) -> bool:
    R, Lf = kac_eigenvectors(M, exact=True)
    gram = Lf.dot(R.T)
    return all(gram[i, j] == (1 if i == j else 0) for i in range(M + 1) for j in range(M + 1))


_PHASE = {0: (1, 0), 1: (0, -1), 2: (-1, 0), 3: (0, 1)}  # (-i)^n for n mod 4


def corner_amplitude(M: int) -> complex:
    """[exp(-i pi Gt / 2)]_{1, M-1} from the spectral decomposition, summed exactly."""
    if M < 2:
        raise ValueError("M must be at least 2")
    re = im = Fraction(0)
    for k in range(M + 1):
        vr = right_eigenvector_exact(M, k)[1]
        vl = left_eigenvector_exact(M, k)[M - 1]
        a, b = _PHASE[(M - 2 * k) % 4]
        re += a * vr * vl
        im += b * vr * vl
    return complex(float(re), float(im))


def corner_phase_expected(M: int) -> complex:
    """(-1)^Mbar i for odd M = 2 Mbar - 1.

    exp(-i pi lambda_k / 2) = i (-1)^(Mbar + k) with lambda_k = 2 Mbar - 1 - 2k,
    and the remaining real sum equals +1.
    """
    if M % 2 == 0:
        raise ValueError("closed-form phase is derived for odd M only")
    Mbar = (M + 1) // 2
    return complex(0, (-1) ** Mbar)


def binomial_identity_suite(M: int) -> bool:
    """The three truncated binomial moment identities, in exact integers."""
    if M < 2:
        raise ValueError("M must be at least 2")
    ks = range(M)
    s0 = sum(comb(M, k) for k in ks)
    s1 = sum(k * comb(M, k) for k in ks)
    s2 = sum(k * (k - 1) * comb(M, k) for k in ks)
    return (
        s0 == 2**M - 1
        and s1 == M * 2 ** (M - 1) - M
        and s2 == M * (M - 1) * 2 ** (M - 2) - M * (M - 1)
    )


def corner_sum_exact(M: int) -> Fraction:
    """2^-M [M + sum_k (M-2k)^2 C(M-1,k) / (M-k)], equal to 1 for every M >= 2."""
    tot = Fraction(M) + sum(Fraction((M - 2 * k) ** 2 * comb(M - 1, k), M - k) for k in range(M))
    return tot / 2**M


# -- two-site finite-U ladder ---------------------------------------------------


def lemma2_matrix(M: int, k: int, J: float, U: float, scale: float | None = None) -> np.ndarray:
    """Amplitude matrix on |M-m, m>... indexed by m = n_1, m = 0..M.

    Couplings JM sqrt(m(M-m+1)) (``scale`` replaces the factor JM, e.g. J for
    the hopping-only variant) and diagonal U (M-m)(M+m-2k+1).
    """
    if not 1 <= k <= M:
        raise ValueError(f"k must lie in 1..{M}")
    s = J * M if scale is None else scale
    m = np.arange(M + 1, dtype=float)
    off = s * np.sqrt((m[1:]) * (M - m[1:] + 1))
    return np.diag(U * (M - m) * (M + m - 2 * k + 1)) + np.diag(off, 1) + np.diag(off, -1)


def lemma2_limit_spectrum(M: int, k: int, J: float, U_list, hopping_only: bool = False) -> list[dict]:
    """Shifted eigenvalues and pair overlaps for increasing U.

    For each U: the two eigenvalues closest to the degenerate diagonal
    level U(M-k)(M-k+1), shifted by it; the largest off-pair shifted value;
    and the overlaps of the matching eigenvectors with (e_{k-1} +- e_k)/sqrt(2).
    """
    s = J if hopping_only else J * M
    target = s * np.sqrt(k * (M - k + 1))
    level = lambda m: (M - m) * (M + m - 2 * k + 1)  # noqa: E731
    rows = []
    for U in U_list:
        evals, evecs = np.linalg.eigh(lemma2_matrix(M, k, J, U, scale=s))
        shifted = evals - U * (M - k) * (M - k + 1)
        pair = np.argsort(np.abs(shifted))[:2]
        hi, lo = pair[np.argmax(shifted[pair])], pair[np.argmin(shifted[pair])]
        plus = np.zeros(M + 1)
        minus = np.zeros(M + 1)
        plus[[k - 1, k]] = 1 / np.sqrt(2)
        minus[k - 1], minus[k] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        others = [i for i in range(M + 1) if i not in pair]
        # off-pair eigenvalues matched to their diagonal levels by eigenvector weight
        off = 0.0
        for i in others:
            m = int(np.argmax(np.abs(evecs[:, i])))
            off = max(off, abs(evals[i] - U * level(m)))
        rows.append({
            "U": float(U),
            "upper": float(shifted[hi]),
            "lower": float(shifted[lo]),
            "target": float(target),
            "pair_error": float(max(abs(shifted[hi] - target), abs(shifted[lo] + target))),
            "off_pair_max": float(off),
            "overlap_plus": float(abs(plus @ evecs[:, hi]) ** 2),
            "overlap_minus": float(abs(minus @ evecs[:, lo]) ** 2),
        })
    return rows


def integer_spectrum_residual(M: int) -> float:
    """max |lambda - round(lambda)| with the right parity, from kac_spectrum."""
    ev = kac_spectrum(M)
    expected = M - 2 * np.arange(M + 1)
    return float(np.abs(ev - expected).max())


__all__ = [
    "KacSystem",
    "binomial_identity_suite",
    "biorthogonality_exact",
    "corner_amplitude",
    "corner_phase_expected",
    "corner_sum_exact",
    "integer_spectrum_residual",
    "kac_eigenvectors",
    "kac_matrix",
    "kac_scaling",
    "kac_spectrum",
    "kac_system",
    "ladder_matrix",
    "lemma2_limit_spectrum",
    "lemma2_matrix",
]
