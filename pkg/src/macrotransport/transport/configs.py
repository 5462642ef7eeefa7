"""Shortest-path costs and Wasserstein distances on configuration space.

Two configurations are neighbours when one boson moves from site i to site
j != i; that move costs |i - j|^alpha_eps. The configuration cost is the
cheapest sequence of such moves.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from ..fock import FockBasis
from ..lattice import LatticeGeometry
from .network_simplex import solve_transport

HOP_GRAPH_CAP = 200_000


class HopGraphTooLarge(ValueError):
    """The hop graph exceeds the node cap; ``lower_bound`` holds an analytic bound."""

    def __init__(self, message: str, lower_bound: float):
        super().__init__(message)
        self.lower_bound = lower_bound
        self.bound_only = True


def hop_graph(basis: FockBasis, g: LatticeGeometry, alpha_eps: float) -> sp.csr_matrix:
    """Weighted adjacency of the configuration hop graph (all site pairs i != j)."""
    from ..hamiltonian import _pair_table

    w = g.distance_matrix() ** alpha_eps
    rows, cols, vals = [], [], []
    L = basis.n_sites
    for src in range(L):
        for dst in range(L):
            if src == dst:
                continue
            frm, to, _, _ = _pair_table(basis, src, dst)
            rows.append(frm)
            cols.append(to)
            vals.append(np.full(len(frm), w[src, dst]))
    dim = basis.dim
    if not rows:
        return sp.csr_matrix((dim, dim))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def _transfer_lower_bound(a, b, g, alpha_eps, X=None, Y=None) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if X is not None and Y is not None:
        from ..lattice import set_distance

        Xc = np.setdiff1d(np.arange(len(a)), sorted(X))
        moved = max(0, int(b[sorted(Y)].sum() - a[Xc].sum()))
        return moved * set_distance(g, X, Y) ** alpha_eps
    # every displaced boson travels at least one lattice spacing
    return float(np.clip(b - a, 0, None).sum())


def config_cost_table(basis: FockBasis, g: LatticeGeometry, alpha_eps: float, sources=None, cap: int = HOP_GRAPH_CAP):
    """Shortest-path costs from ``sources`` (basis indices; all if None) to every configuration."""
    if basis.dim > cap:
        raise HopGraphTooLarge(f"hop graph has {basis.dim} nodes, cap is {cap}", np.nan)
    G = hop_graph(basis, g, alpha_eps)
    return dijkstra(G, directed=True, indices=sources)


def config_cost(a, b, basis: FockBasis, g: LatticeGeometry, alpha_eps: float, X=None, Y=None, cap: int = HOP_GRAPH_CAP) -> float:
    """Cheapest hop sequence turning configuration ``a`` into ``b``.

    Above the node cap a :class:`HopGraphTooLarge` is raised whose
    ``lower_bound`` is the analytic transfer bound (bosons forced from X into
    Y times d_XY^alpha_eps when the regions are given).
    """
    if basis.dim > cap:
        raise HopGraphTooLarge(
            f"hop graph has {basis.dim} nodes, cap is {cap}",
            _transfer_lower_bound(a, b, g, alpha_eps, X, Y),
        )
    ia, ib = basis.index_of(a), basis.index_of(b)
    if ia == ib:
        return 0.0
    dist = config_cost_table(basis, g, alpha_eps, sources=[ia], cap=cap)
    return float(dist[0, ib])


def wasserstein_configs(p, q, costs: np.ndarray) -> float:
    """W(p, q) for distributions over configurations and a dense cost table."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must share the configuration index set")
    if abs(p.sum() - 1.0) > 1e-10 or abs(q.sum() - 1.0) > 1e-10:
        raise ValueError("distributions must be normalized")
    sp_, sq = np.flatnonzero(p > 0), np.flatnonzero(q > 0)
    res = solve_transport(p[sp_], q[sq], np.asarray(costs)[np.ix_(sp_, sq)])
    return res.cost


def wasserstein_configs_from_basis(p, q, basis: FockBasis, g: LatticeGeometry, alpha_eps: float, support_tol: float = 0.0) -> float:
    """W(p, q) with shortest-path costs computed only between the two supports."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    sp_, sq = np.flatnonzero(p > support_tol), np.flatnonzero(q > support_tol)
    pp, qq = p[sp_] / p[sp_].sum(), q[sq] / q[sq].sum()
    table = config_cost_table(basis, g, alpha_eps, sources=sp_)[:, sq]
    return solve_transport(pp, qq, table).cost
