"""Transportation-problem network simplex on a complete bipartite graph.

Solves  min sum_ij C_ij P_ij  s.t.  P 1 = a,  P^T 1 = b,  P >= 0
and returns node potentials (u, v) with u_i + v_j <= C_ij, tight on the basis.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


class SimplexError(RuntimeError):
    pass


@dataclass
class SimplexResult:
    plan: np.ndarray
    u: np.ndarray
    v: np.ndarray
    cost: float
    iterations: int


def _northwest_corner(a: np.ndarray, b: np.ndarray):
    """Staircase basis with exactly m + n - 1 cells (a spanning tree)."""
    m, n = len(a), len(b)
    ra, rb = a.copy(), b.copy()
    cells, flows = [], []
    i = j = 0
    while i < m and j < n:
        f = min(ra[i], rb[j])
        cells.append((i, j))
        flows.append(f)
        ra[i] -= f
        rb[j] -= f
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return cells, flows


class _Tree:
    """Basis cells as a spanning tree on m row nodes and n column nodes."""

    def __init__(self, m: int, n: int, cells, flows):
        self.m, self.n = m, n
        self.flow = dict(zip(cells, flows))
        self.adj = [set() for _ in range(m + n)]
        for i, j in cells:
            self.adj[i].add(m + j)
            self.adj[m + j].add(i)

    def potentials(self, C: np.ndarray):
        m = self.m
        pot = np.full(m + self.n, np.nan)
        pot[0] = 0.0
        queue = deque([0])
        while queue:
            node = queue.popleft()
            for nb in self.adj[node]:
                if np.isnan(pot[nb]):
                    i, j = (node, nb - m) if node < m else (nb, node - m)
                    pot[nb] = C[i, j] - pot[node]
                    queue.append(nb)
        if np.isnan(pot).any():
            raise SimplexError("basis is not a spanning tree")
        return pot[:m], pot[m:]

    def path(self, start: int, goal: int) -> list[int]:
        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for nb in self.adj[node]:
                if nb not in parent:
                    parent[nb] = node
                    queue.append(nb)
        out = [goal]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return out[::-1]

    def cell(self, x: int, y: int) -> tuple[int, int]:
        return (x, y - self.m) if x < self.m else (y, x - self.m)

    def pivot(self, p: int, q: int) -> float:
        m = self.m
        nodes = self.path(p, m + q)
        edges = [self.cell(nodes[k], nodes[k + 1]) for k in range(len(nodes) - 1)]
        minus = edges[0::2]
        plus = edges[1::2]
        theta = min(self.flow[e] for e in minus)
        leave = min((e for e in minus if self.flow[e] == theta), key=lambda e: (e[0], e[1]))
        for e in minus:
            self.flow[e] -= theta
        for e in plus:
            self.flow[e] += theta
        del self.flow[leave]
        self.adj[leave[0]].discard(m + leave[1])
        self.adj[m + leave[1]].discard(leave[0])
        self.flow[(p, q)] = theta
        self.adj[p].add(m + q)
        self.adj[m + q].add(p)
        return theta


def solve_transport(a, b, C, rtol: float = 1e-13, max_iter: int | None = None) -> SimplexResult:
    """Optimal plan for supplies ``a`` (rows) and demands ``b`` (columns).

    ``a`` and ``b`` must be nonnegative with equal sums; ``b`` is rescaled by at
    most the sum mismatch so the staircase start is exactly balanced.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    m, n = len(a), len(b)
    if C.shape != (m, n):
        raise ValueError(f"cost shape {C.shape} does not match ({m}, {n})")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("masses must be nonnegative")
    sa, sb = a.sum(), b.sum()
    if abs(sa - sb) > 1e-9 * max(1.0, sa):
        raise ValueError(f"unbalanced problem: {sa} vs {sb}")
    b = b * (sa / sb) if sb > 0 else b
    tree = _Tree(m, n, *_northwest_corner(a, b))
    tol = rtol * max(1.0, np.abs(C).max(initial=0.0))
    max_iter = max_iter or 50 * (m + n) * max(m, n) + 1000
    bland_after = max_iter // 2
    it = 0
    while True:
        u, v = tree.potentials(C)
        reduced = C - u[:, None] - v[None, :]
        if it < bland_after:
            k = int(np.argmin(reduced))
            if reduced.flat[k] >= -tol:
                break
        else:
            # Bland's rule: first improving cell; cannot cycle
            neg = np.flatnonzero(reduced.ravel() < -tol)
            if not len(neg):
                break
            k = int(neg[0])
        p, q = divmod(k, n)
        tree.pivot(p, q)
        it += 1
        if it > max_iter:
            raise SimplexError(f"no convergence after {max_iter} pivots")
    plan = np.zeros((m, n))
    for (i, j), f in tree.flow.items():
        plan[i, j] = f
    return SimplexResult(plan, u, v, float((plan * C).sum()), it)
