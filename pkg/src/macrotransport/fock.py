"""Fixed-particle-number bosonic Fock sector.

Configurations are occupation vectors ``(n_0, ..., n_{L-1})`` with a fixed sum.
They are stored as rows of an integer array in descending lexicographic order,
so ``(N, 0, ..., 0)`` has index 0 and ``(0, ..., 0, N)`` is last.

States come in three forms, all accepted by the functions below:

* a 1-D complex amplitude vector (pure state),
* a 2-D density matrix,
* a :class:`StateEnsemble` of weighted pure states.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

PURE_DIM_CAP = 200_000
DENSITY_DIM_CAP = 2_000
NORM_TOL = 1e-10


@lru_cache(maxsize=None)
def _configs(sites: int, total: int) -> np.ndarray:
    if sites == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total, -1, -1):
        rest = _configs(sites - 1, total - first)
        head = np.full((len(rest), 1), first, dtype=np.int64)
        blocks.append(np.hstack([head, rest]))
    out = np.vstack(blocks)
    out.setflags(write=False)
    return out


class FockBasis:
    """All occupation vectors on ``n_sites`` sites holding ``total`` bosons."""

    def __init__(self, n_sites: int, total: int, configs: np.ndarray):
        self.n_sites = n_sites
        self.total = total
        self.configs = configs
        self._base = total + 1
        if n_sites * np.log2(self._base) < 62:
            weights = self._base ** np.arange(n_sites - 1, -1, -1, dtype=np.int64)
            self._weights = weights
            # keys decrease along the basis; store negated for searchsorted
            self._neg_keys = -(configs @ weights)
            self._dict = None
        else:
            self._weights = None
            self._dict = {tuple(c): k for k, c in enumerate(configs.tolist())}

    @property
    def dim(self) -> int:
        return len(self.configs)

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"FockBasis(n_sites={self.n_sites}, total={self.total}, dim={self.dim})"

    def lookup(self, configs) -> np.ndarray:
        """Indices of the given configuration rows; -1 for rows not in the basis."""
        configs = np.atleast_2d(np.asarray(configs, dtype=np.int64))
        valid = (configs >= 0).all(axis=1) & (configs.sum(axis=1) == self.total)
        if self._dict is not None:
            return np.array(
                [self._dict.get(tuple(c), -1) if ok else -1 for c, ok in zip(configs.tolist(), valid)],
                dtype=np.int64,
            )
        neg = -(configs @ self._weights)
        pos = np.searchsorted(self._neg_keys, neg)
        pos = np.minimum(pos, self.dim - 1)
        found = valid & (self._neg_keys[pos] == neg)
        return np.where(found, pos, -1)

    def index_of(self, config) -> int:
        k = int(self.lookup(config)[0])
        if k < 0:
            raise KeyError(f"{tuple(config)} is not in the sector N={self.total}, L={self.n_sites}")
        return k

    def config_of(self, index: int) -> tuple[int, ...]:
        return tuple(int(n) for n in self.configs[index])


def enumerate_basis(sites: int, total: int, max_dim: int = PURE_DIM_CAP) -> FockBasis:
    if sites < 1:
        raise ValueError("need at least one site")
    if total < 0:
        raise ValueError("boson number must be nonnegative")
    dim = comb(total + sites - 1, total)
    if dim > max_dim:
        raise ValueError(f"sector dimension {dim} exceeds cap {max_dim}")
    return FockBasis(sites, total, _configs(sites, total))


def hop_neighbors(basis: FockBasis, c) -> list[tuple[tuple[int, ...], int, int, float]]:
    """Configurations reached by moving one boson from site i to site j != i.

    Each entry is ``(c', i, j, sqrt(n_i (n_j + 1)))``.
    """
    c = np.asarray(c, dtype=np.int64)
    out = []
    for i in np.flatnonzero(c > 0):
        for j in range(basis.n_sites):
            if j == i:
                continue
            new = c.copy()
            new[i] -= 1
            new[j] += 1
            out.append((tuple(int(v) for v in new), int(i), int(j), float(np.sqrt(c[i] * (c[j] + 1)))))
    return out


def region_number(c, X) -> int:
    c = np.asarray(c)
    return int(sum(int(c[i]) for i in X))


@dataclass(frozen=True)
class StateEnsemble:
    """Mixed state as a convex combination of pure states (columns of ``vectors``)."""

    weights: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > NORM_TOL:
            raise ValueError("ensemble weights must be a probability vector")
        if self.vectors.ndim != 2 or self.vectors.shape[1] != len(w):
            raise ValueError("vectors must be (dim, n_members)")

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def members(self):
        return zip(self.weights, self.vectors.T)

    def to_density(self) -> np.ndarray:
        v = self.vectors
        return (v * self.weights) @ v.conj().T


def state_dim(state) -> int:
    if isinstance(state, StateEnsemble):
        return state.dim
    return np.asarray(state).shape[0]


def check_state(state, tol: float = NORM_TOL) -> None:
    """Raise ``ValueError`` unless ``state`` is a normalized physical state."""
    if isinstance(state, StateEnsemble):
        norms = np.linalg.norm(state.vectors, axis=0)
        if np.any(np.abs(norms - 1.0) > tol):
            raise ValueError("ensemble member not normalized")
        return
    state = np.asarray(state)
    if state.ndim == 1:
        if abs(np.vdot(state, state).real - 1.0) > tol:
            raise ValueError("pure state not normalized")
    elif state.ndim == 2:
        if np.abs(state - state.conj().T).max() > tol:
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(state).real - 1.0) > tol:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(state).min() < -tol:
            raise ValueError("density matrix not positive semidefinite")
    else:
        raise ValueError("state must be a vector, a matrix or a StateEnsemble")


def diagonal_weights(state) -> np.ndarray:
    """Configuration probabilities p_N = <N|rho|N>."""
    if isinstance(state, StateEnsemble):
        return (np.abs(state.vectors) ** 2) @ state.weights
    state = np.asarray(state)
    if state.ndim == 1:
        return np.abs(state) ** 2
    return np.real(np.diag(state)).copy()


def mott_state(basis: FockBasis, config) -> np.ndarray:
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index_of(config)] = 1.0
    return psi


def random_state(basis: FockBasis, rng: np.random.Generator, support=None) -> np.ndarray:
    """Haar-like random pure state, optionally restricted to basis indices ``support``."""
    psi = np.zeros(basis.dim, dtype=complex)
    idx = np.arange(basis.dim) if support is None else np.asarray(support)
    psi[idx] = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
    return psi / np.linalg.norm(psi)


def projector_weight(state, basis: FockBasis, X, predicate: str, N0: int) -> float:
    """Weight of the configurations with n_X <= N0 (``"<="``) or n_X >= N0 (``">="``)."""
    nX = basis.configs[:, sorted(X)].sum(axis=1) if len(X) else np.zeros(basis.dim, dtype=np.int64)
    if predicate == "<=":
        mask = nX <= N0
    elif predicate == ">=":
        mask = nX >= N0
    else:
        raise ValueError(f"predicate must be '<=' or '>=', got {predicate!r}")
    p = diagonal_weights(state)
    return float(min(1.0, max(0.0, p[mask].sum())))


def concentrations(state, basis: FockBasis) -> np.ndarray:
    """x_i = <n_i> / N."""
    if basis.total == 0:
        raise ValueError("concentrations undefined for the empty sector")
    return diagonal_weights(state) @ basis.configs / basis.total


def write_state_csv(path, state) -> None:
    """Dump a pure state as ``index,re,im`` rows (nonzero amplitudes only)."""
    psi = np.asarray(state)
    with open(path, "w") as fh:
        fh.write("index,re,im\n")
        for k in np.flatnonzero(psi):
            fh.write(f"{k},{float(psi[k].real)!r},{float(psi[k].imag)!r}\n")


def read_state_csv(path, dim: int) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    psi = np.zeros(dim, dtype=complex)
    psi[data[:, 0].astype(int)] = data[:, 1] + 1j * data[:, 2]
    return psi
