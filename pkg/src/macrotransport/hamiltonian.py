"""Number-conserving long-range Bose-Hubbard Hamiltonians on a Fock sector.

A model is

    H_t = sum_{i != j} J_ij(t) b_i^+ b_j
        + sum_{<i,j>} T_ij(t) b_i^+ (n_i + n_j) b_j      (1-D nearest neighbours only)
        + E(n; t)                                          (any diagonal function)

All terms keep the total boson number fixed, so ``materialize`` never leaves
the basis it was given.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .fock import FockBasis
from .lattice import LatticeGeometry, build_lattice

DECAY_RTOL = 1e-12


class DecayViolation(ValueError):
    """Hopping amplitudes exceed the declared power-law envelope."""


# -- hopping and tunnelling --------------------------------------------------


@dataclass(frozen=True)
class HoppingSpec:
    """Symmetric hopping table, constant or a function of time.

    ``J`` and ``alpha`` certify |J_ij(t)| <= J / |i - j|^alpha; leave ``J`` as
    ``None`` when no certificate is claimed. ``alpha = inf`` certifies a
    nearest-neighbour table.
    """

    amplitudes: np.ndarray | Callable[[float], np.ndarray]
    J: float | None = None
    alpha: float = np.inf

    def at(self, t: float = 0.0) -> np.ndarray:
        a = self.amplitudes(t) if callable(self.amplitudes) else self.amplitudes
        a = np.asarray(a, dtype=float)
        if np.abs(a - a.T).max(initial=0.0) > 0.0:
            raise ValueError("hopping amplitudes must be symmetric")
        return a


@dataclass(frozen=True)
class TunnelingSpec:
    """Interaction-induced tunnelling T_ij b_i^+ (n_i + n_j) b_j on a 1-D chain."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float)
        L = a.shape[0]
        i, j = np.nonzero(a)
        if np.any(np.abs(i - j) != 1):
            raise ValueError("tunnelling is restricted to nearest neighbours of a chain")
        if np.abs(a - a.T).max(initial=0.0) > 0.0 or a.shape != (L, L):
            raise ValueError("tunnelling amplitudes must be a symmetric square table")

    def at(self, t: float = 0.0) -> np.ndarray:
        return np.asarray(self.amplitudes, dtype=float)


def power_law_hopping(g: LatticeGeometry, J: float, alpha: float) -> HoppingSpec:
    """J_ij = J / |i - j|^alpha for every pair of distinct sites."""
    d = g.distance_matrix()
    with np.errstate(divide="ignore"):
        amp = np.where(d > 0, J / d**alpha, 0.0)
    return HoppingSpec(amp, J=J, alpha=alpha)


def nearest_neighbor_hopping(g: LatticeGeometry, J: float, alpha: float = np.inf) -> HoppingSpec:
    """Unit-distance hopping; it satisfies the power-law envelope for every alpha."""
    d2 = g.squared_distances()
    amp = np.where(d2 == 1, float(J), 0.0)
    return HoppingSpec(amp, J=abs(J), alpha=alpha)


def pair_hopping(n_sites: int, a: int, b: int, J: float) -> np.ndarray:
    amp = np.zeros((n_sites, n_sites))
    amp[a, b] = amp[b, a] = J
    return amp


# -- diagonal interactions ---------------------------------------------------


class Interaction:
    """Diagonal energy E(n; t) evaluated on rows of occupation numbers."""

    def energies(self, configs: np.ndarray, t: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def __add__(self, other: "Interaction") -> "Interaction":
        return SumInteraction((self, other))


@dataclass(frozen=True)
class SumInteraction(Interaction):
    terms: tuple

    def energies(self, configs, t=0.0):
        out = np.zeros(len(configs))
        for term in self.terms:
            out = out + term.energies(configs, t)
        return out


@dataclass(frozen=True)
class BoseHubbard(Interaction):
    """(U/2) sum_i n_i (n_i - 1) - mu sum_i n_i; U and mu may be per-site arrays."""

    U: float | np.ndarray = 0.0
    mu: float | np.ndarray = 0.0

    def energies(self, configs, t=0.0):
        n = np.asarray(configs, dtype=float)
        return (0.5 * n * (n - 1)) @ np.broadcast_to(self.U, n.shape[1]) - n @ np.broadcast_to(
            self.mu, n.shape[1]
        )


@dataclass(frozen=True)
class SiteQuadratic(Interaction):
    """quad * n_s^2 + lin * n_s on a single site ``s``."""

    site: int
    quad: float
    lin: float

    def energies(self, configs, t=0.0):
        n = np.asarray(configs, dtype=float)[:, self.site]
        return self.quad * n**2 + self.lin * n


@dataclass(frozen=True)
class DiagonalTable(Interaction):
    """Energies listed per configuration; configurations absent from the table get 0."""

    table: dict

    def energies(self, configs, t=0.0):
        return np.array([float(self.table.get(tuple(int(v) for v in c), 0.0)) for c in configs])


@dataclass(frozen=True)
class TimeDependent(Interaction):
    """Wrap ``f(configs, t)`` as an interaction."""

    func: Callable[[np.ndarray, float], np.ndarray]

    def energies(self, configs, t=0.0):
        return np.asarray(self.func(configs, t), dtype=float)


# -- model -------------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianModel:
    basis: FockBasis
    hopping: HoppingSpec
    interaction: Interaction | None = None
    tunneling: TunnelingSpec | None = None
    geometry: LatticeGeometry | None = None

    def __post_init__(self):
        if self.geometry is None:
            object.__setattr__(self, "geometry", build_lattice(1, [self.basis.n_sites]))
        if self.geometry.n_sites != self.basis.n_sites:
            raise ValueError("geometry and basis disagree on the number of sites")

    @property
    def has_tunneling(self) -> bool:
        return self.tunneling is not None and bool(np.any(self.tunneling.at() != 0))


@dataclass(frozen=True)
class HopEntries:
    """Off-diagonal matrix elements H[row, col] that move one boson src -> dst."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    dst: np.ndarray
    src: np.ndarray
    hop_values: np.ndarray = field(repr=False)


def _pair_table(basis: FockBasis, src: int, dst: int):
    cache = basis.__dict__.setdefault("_hop_cache", {})
    key = (src, dst)
    if key not in cache:
        cfg = basis.configs
        frm = np.flatnonzero(cfg[:, src] > 0)
        moved = cfg[frm].copy()
        moved[:, src] -= 1
        moved[:, dst] += 1
        to = basis.lookup(moved)
        if np.any(to < 0):
            raise RuntimeError("hop left the fixed-N sector")
        n_src = cfg[frm, src].astype(float)
        n_dst = cfg[frm, dst].astype(float)
        cache[key] = (frm, to, n_src, n_dst)
    return cache[key]


def hop_entries(model: HamiltonianModel, t: float = 0.0) -> HopEntries:
    J = model.hopping.at(t)
    T = model.tunneling.at(t) if model.tunneling is not None else None
    rows, cols, vals, dsts, srcs, hops = [], [], [], [], [], []
    L = model.basis.n_sites
    for dst in range(L):
        for src in range(L):
            if dst == src:
                continue
            j = J[dst, src]
            tt = 0.0 if T is None else T[dst, src]
            if j == 0.0 and tt == 0.0:
                continue
            frm, to, n_src, n_dst = _pair_table(model.basis, src, dst)
            root = np.sqrt(n_src * (n_dst + 1.0))
            hop = j * root
            val = hop + tt * root * (n_src + n_dst - 1.0) if tt else hop
            rows.append(to)
            cols.append(frm)
            vals.append(val)
            hops.append(hop)
            dsts.append(np.full(len(frm), dst))
            srcs.append(np.full(len(frm), src))
    if not rows:
        z = np.zeros(0, dtype=np.int64)
        return HopEntries(z, z, np.zeros(0), z, z, np.zeros(0))
    return HopEntries(*(np.concatenate(a) for a in (rows, cols, vals, dsts, srcs, hops)))


def diagonal(model: HamiltonianModel, t: float = 0.0) -> np.ndarray:
    if model.interaction is None:
        return np.zeros(model.basis.dim)
    return model.interaction.energies(model.basis.configs, t)


def materialize(model: HamiltonianModel, t: float = 0.0, check_decay: bool = True) -> sp.csr_matrix:
    """Sparse Hermitian matrix of the model at time ``t``."""
    if check_decay and not verify_hopping_decay(model, [t]):
        raise DecayViolation(f"hopping exceeds J/|i-j|^alpha at t={t}")
    e = hop_entries(model, t)
    dim = model.basis.dim
    off = sp.coo_matrix((e.values, (e.rows, e.cols)), shape=(dim, dim))
    H = (off + sp.diags(diagonal(model, t))).tocsr()
    H.sum_duplicates()
    H.sort_indices()
    return H


def verify_hopping_decay(model: HamiltonianModel, times: Sequence[float]) -> bool:
    """|J_ij(t)| <= J / |i - j|^alpha at every sampled time (True without a certificate)."""
    J, alpha = model.hopping.J, model.hopping.alpha
    if J is None:
        return True
    d = model.geometry.distance_matrix()
    off = ~np.eye(len(d), dtype=bool)
    with np.errstate(over="ignore"):
        envelope = J / d[off] ** alpha * (1 + DECAY_RTOL)
    for t in times:
        if np.any(np.abs(model.hopping.at(t))[off] > envelope):
            return False
    return True


# -- special-purpose two-site models -------------------------------------------


def pair_model(
    basis: FockBasis,
    a: int,
    b: int,
    J: float,
    tunneling: float = 0.0,
    interaction: Interaction | None = None,
) -> HamiltonianModel:
    """Hopping (and optionally tunnelling) between sites ``a`` and ``b`` only."""
    L = basis.n_sites
    if abs(a - b) != 1 and tunneling:
        raise ValueError("tunnelling needs neighbouring sites")
    hop = HoppingSpec(pair_hopping(L, a, b, J), J=abs(J) if abs(a - b) == 1 else None)
    tun = TunnelingSpec(pair_hopping(L, a, b, tunneling)) if tunneling else None
    return HamiltonianModel(basis, hop, interaction, tun)


def build_lemma_hamiltonian(lemma: int, M: int, k: int | None = None, J: float = 1.0, U: float | None = None):
    """Two-site transfer Hamiltonians with M bosons.

    lemma 1: hopping + tunnelling;            |M-1,1> <-> |1,M-1> in pi/(2JM)
    lemma 2: lemma 1 + -U n_2^2 + U(2M-2k+1) n_2;  |k,M-k> <-> |k-1,M-k+1>
    lemma 3: hopping only;                    |M-1,1> <-> |1,M-1> in pi/(2J)
    lemma 4: lemma 3 + the lemma 2 diagonal
    """
    if lemma not in (1, 2, 3, 4):
        raise ValueError(f"unknown lemma {lemma}")
    if M < 3:
        raise ValueError("transfer lemmas need M >= 3")
    from .fock import enumerate_basis

    basis = enumerate_basis(2, M)
    interaction = None
    if lemma in (2, 4):
        if U is None:
            raise ValueError("lemmas 2 and 4 need a finite U standing in for U -> infinity")
        if k is None or not 1 <= k <= M:
            raise ValueError(f"k must lie in 1..{M}")
        interaction = SiteQuadratic(1, -U, U * (2 * M - 2 * k + 1))
    tunneling = J if lemma in (1, 2) else 0.0
    return pair_model(basis, 0, 1, J, tunneling, interaction)


def build_theorem3_stage(stage: int, k: int, J: float, U: float, L: int, basis: FockBasis | None = None):
    """Stage 1, 2 or 3 of the tunnelling-assisted transfer across bond (k, k+1).

    ``k`` counts sites from 1 as in the chain labels 1..L; the chain holds L bosons.
    Stage 1 puts the resonance term on site k, stage 3 on site k+1, stage 2 has none.
    """
    if stage not in (1, 2, 3):
        raise ValueError(f"stage must be 1, 2 or 3, got {stage}")
    if L < 3 or not 1 <= k <= L - 1:
        raise ValueError(f"need L >= 3 and 1 <= k <= L-1, got L={L}, k={k}")
    from .fock import enumerate_basis

    basis = basis or enumerate_basis(L, L)
    a, b = k - 1, k
    interaction = None
    if stage == 1:
        interaction = SiteQuadratic(a, -U, U * (2 * L - 1))
    elif stage == 3:
        interaction = SiteQuadratic(b, -U, U * (2 * L - 1))
    return pair_model(basis, a, b, J, J, interaction)
