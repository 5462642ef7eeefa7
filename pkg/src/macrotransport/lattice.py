"""Hypercubic lattices, region distances, distance shells and power-law costs."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

MAX_SITES = 4096

# Radii up to which shells of the infinite lattice Z^D are counted directly.
# Beyond them the shell ratio |shell| / l^(D-1) approaches the sphere surface
# (2*pi for D=2, 4*pi for D=3), well below the maxima reached at l = 1, 2.
_SHELL_SCAN_RADIUS = {1: 64, 2: 64, 3: 32}


class ShellConstantWarning(RuntimeWarning):
    """Shell constant was computed on the finite lattice only (D > 3)."""


@dataclass(frozen=True)
class LatticeGeometry:
    """Sites of a D-dimensional box with open boundaries.

    ``sites`` is an (n_sites, D) integer array in row-major order.
    """

    dimension: int
    extents: tuple[int, ...]
    sites: np.ndarray
    index: dict = field(repr=False, compare=False)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def site_index(self, coord) -> int:
        return self.index[tuple(int(c) for c in coord)]

    def distance_matrix(self) -> np.ndarray:
        diff = self.sites[:, None, :] - self.sites[None, :, :]
        return np.sqrt((diff.astype(float) ** 2).sum(axis=-1))

    def squared_distances(self) -> np.ndarray:
        diff = self.sites[:, None, :] - self.sites[None, :, :]
        return (diff**2).sum(axis=-1)

    def diameter(self) -> float:
        return float(np.sqrt(sum((e - 1) ** 2 for e in self.extents)))

    def region(self, sites) -> frozenset[int]:
        """Validate a collection of site indices and return it as a region."""
        reg = frozenset(int(s) for s in sites)
        bad = [s for s in reg if not 0 <= s < self.n_sites]
        if bad:
            raise ValueError(f"site indices out of range: {sorted(bad)}")
        return reg

    def complement(self, region) -> frozenset[int]:
        return frozenset(range(self.n_sites)) - self.region(region)


def build_lattice(dimension: int, extents, max_sites: int = MAX_SITES) -> LatticeGeometry:
    """All integer points of the box prod_k [0, extents[k]), row-major indexed."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    extents = tuple(int(e) for e in extents)
    if len(extents) != dimension:
        raise ValueError(f"expected {dimension} extents, got {len(extents)}")
    if any(e < 1 for e in extents):
        raise ValueError("empty lattice: every extent must be >= 1")
    n = int(np.prod(extents))
    if n > max_sites:
        raise ValueError(f"lattice has {n} sites, cap is {max_sites}")
    sites = np.array(list(itertools.product(*(range(e) for e in extents))), dtype=np.int64)
    sites = sites.reshape(n, dimension)
    index = {tuple(int(c) for c in s): k for k, s in enumerate(sites)}
    return LatticeGeometry(dimension, extents, sites, index)


def set_distance(g: LatticeGeometry, X, Y) -> float:
    """Minimum Euclidean distance between two disjoint, nonempty regions."""
    X, Y = g.region(X), g.region(Y)
    if not X or not Y:
        raise ValueError("regions must be nonempty")
    if X & Y:
        raise ValueError("regions must be disjoint")
    a = g.sites[sorted(X)]
    b = g.sites[sorted(Y)]
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    return float(np.sqrt(d2.min()))


def shell(g: LatticeGeometry, i: int, ell: int) -> set[int]:
    """Sites j with ell <= |i - j| < ell + 1."""
    if not 0 <= i < g.n_sites:
        raise IndexError(f"site {i} out of range")
    if ell < 0:
        raise ValueError("shell index must be nonnegative")
    d2 = ((g.sites - g.sites[i]) ** 2).sum(axis=1)
    mask = (d2 >= ell * ell) & (d2 < (ell + 1) ** 2)
    return set(np.flatnonzero(mask).tolist())


def _isqrt(d2: np.ndarray) -> np.ndarray:
    """Elementwise floor(sqrt(d2)) for nonnegative integers, exact."""
    r = np.floor(np.sqrt(d2)).astype(np.int64)
    r[(r + 1) ** 2 <= d2] += 1
    r[r**2 > d2] -= 1
    return r


def _shell_counts_infinite(dimension: int, radius: int) -> np.ndarray:
    """|i[l+1] \\ i[l]| on Z^D for l = 0..radius, by direct enumeration."""
    axis = np.arange(-(radius + 1), radius + 2, dtype=np.int64) ** 2
    d2 = axis
    for _ in range(dimension - 1):
        d2 = (d2[..., None] + axis).astype(np.int64)
    labels = _isqrt(d2.ravel())
    return np.bincount(labels[labels <= radius], minlength=radius + 1)


def _shell_ratio_max(counts: np.ndarray, dimension: int) -> float:
    ells = np.maximum(np.arange(len(counts)), 1).astype(float)
    return float((counts / ells ** (dimension - 1)).max())


def shell_constant(g: LatticeGeometry) -> float:
    """Smallest gamma with |i[l+1] \\ i[l]| <= gamma * max(l, 1)^(D-1).

    For D <= 3 the counts are taken on the infinite lattice Z^D, so the value
    does not depend on the box size (D=1 gives 2, D=2 gives 8, D=3 gives 26).
    Higher dimensions fall back to the finite lattice and emit a
    :class:`ShellConstantWarning`.
    """
    D = g.dimension
    diam = int(np.ceil(g.diameter()))
    if D in _SHELL_SCAN_RADIUS:
        radius = max(_SHELL_SCAN_RADIUS[D], diam)
        return _shell_ratio_max(_shell_counts_infinite(D, radius), D)
    warnings.warn(
        f"no infinite-lattice cap for D={D}; shell constant taken over the finite lattice",
        ShellConstantWarning,
        stacklevel=2,
    )
    ell = _isqrt(g.squared_distances())
    best = 0.0
    for i in range(g.n_sites):
        counts = np.bincount(ell[i])
        best = max(best, _shell_ratio_max(counts, D))
    return best


def hypercubic_shell_constant(dimension: int) -> float:
    """Shell constant of the infinite lattice Z^D (D <= 3)."""
    if dimension not in _SHELL_SCAN_RADIUS:
        raise ValueError(f"no infinite-lattice shell constant for D={dimension}; pass gamma explicitly")
    return _shell_ratio_max(_shell_counts_infinite(dimension, _SHELL_SCAN_RADIUS[dimension]), dimension)


@dataclass(frozen=True)
class CostMatrix:
    """Dense cost table c_ij = |i - j|^exponent."""

    entries: np.ndarray
    exponent: float

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def cost_matrix(g: LatticeGeometry, alpha_eps: float) -> CostMatrix:
    if not 0.0 < alpha_eps <= 1.0:
        raise ValueError(f"cost exponent must lie in (0, 1], got {alpha_eps}")
    return CostMatrix(g.distance_matrix() ** alpha_eps, float(alpha_eps))


def verify_triangle(c, tol: float = 1e-12) -> bool:
    """Symmetry, zero diagonal and c_ij + c_jk >= c_ik for every triple."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        return False
    if np.any(c < -tol):
        return False
    if not np.allclose(c, c.T, rtol=0.0, atol=tol):
        return False
    if np.any(np.abs(np.diag(c)) > tol):
        return False
    n = len(c)
    # one intermediate site j at a time keeps memory at O(n^2)
    for j in range(n):
        via = c[:, j][:, None] + c[j, :][None, :]
        if np.any(c > via + tol):
            return False
    return True
