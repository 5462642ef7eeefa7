"""L1-Wasserstein distance: primal plan, Kantorovich-Rubinstein dual, duality gap.

Couplings follow the convention ``coupling[i, j]`` = mass sent from x_j to
y_i, so row sums give ``y`` and column sums give ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .network_simplex import solve_transport

MASS_TOL = 1e-10
GAP_RTOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    coupling: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def marginal_error(self) -> float:
        return float(
            max(
                np.abs(self.coupling.sum(axis=1) - self.y).max(),
                np.abs(self.coupling.sum(axis=0) - self.x).max(),
            )
        )


def _validate(x, y, c):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    if x.shape != y.shape or c.shape != (len(x), len(x)):
        raise ValueError("marginals and cost matrix have inconsistent shapes")
    if np.any(x < -MASS_TOL) or np.any(y < -MASS_TOL):
        raise ValueError("marginals must be nonnegative")
    if abs(x.sum() - 1.0) > MASS_TOL or abs(y.sum() - 1.0) > MASS_TOL:
        raise ValueError(f"marginals must sum to 1 (got {x.sum()!r}, {y.sum()!r})")
    return np.clip(x, 0, None), np.clip(y, 0, None), c


def c_transform(phi_support: np.ndarray, support: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Largest extension phi_k = min_s (phi_s + c_ks) over the support points.

    With a metric ``c`` the result satisfies |phi_i - phi_j| <= c_ij everywhere.
    """
    return (phi_support[None, :] + c[:, support]).min(axis=1)


def lipschitz_violation(phi: np.ndarray, c) -> float:
    """max_ij (|phi_i - phi_j| - c_ij), <= 0 for a feasible potential."""
    c = np.asarray(c, dtype=float)
    return float((np.abs(phi[:, None] - phi[None, :]) - c).max())


def _primal_unnormalized(x, y, c):
    """Network-simplex solve for arbitrary equal-mass marginals."""
    sx = np.flatnonzero(x > 0)
    sy = np.flatnonzero(y > 0)
    res = solve_transport(x[sx], y[sy], c[np.ix_(sx, sy)])
    coupling = np.zeros((len(x), len(x)))
    coupling[np.ix_(sy, sx)] = res.plan.T
    # u_i + v_j <= c_ij; phi = min_j (c_kj - v_j) is the matching 1-Lipschitz potential
    phi = (c[:, sy] - res.v[None, :]).min(axis=1)
    return res.cost, coupling, phi


def wasserstein_primal(x, y, c, return_potential: bool = False):
    """Optimal transport value and one optimal coupling.

    With ``return_potential`` also returns the potential read off the simplex
    basis, which certifies optimality through
    ``sum(coupling * c) == phi @ (x - y)``.
    """
    x, y, c = _validate(x, y, c)
    value, coupling, phi = _primal_unnormalized(x, y, c)
    plan = TransportPlan(coupling, x, y)
    if return_potential:
        return value, plan, phi
    return value, plan


def wasserstein_dual(x, y, c, tol: float = 1e-10):
    """max phi^T (x - y) over |phi_i - phi_j| <= c_ij, solved as a linear program.

    The LP runs on the union of the supports; its solution is then extended to
    every point by a c-transform, which also removes any residual
    infeasibility left by the LP solver.
    """
    x, y, c = _validate(x, y, c)
    diff = x - y
    S = np.flatnonzero((x > 0) | (y > 0))
    k = len(S)
    if k <= 1 or not np.any(diff[S]):
        return 0.0, np.zeros(len(x))
    cs = c[np.ix_(S, S)]
    ii, jj = np.nonzero(~np.eye(k, dtype=bool))
    A = np.zeros((len(ii), k))
    A[np.arange(len(ii)), ii] = 1.0
    A[np.arange(len(ii)), jj] = -1.0
    bounds = [(0.0, 0.0)] + [(None, None)] * (k - 1)
    res = linprog(
        -diff[S],
        A_ub=A,
        b_ub=cs[ii, jj],
        bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol},
    )
    if res.status != 0:
        raise RuntimeError(f"dual LP failed: {res.message}")
    phi = c_transform(res.x, S, c)
    return float(phi @ diff), phi


def duality_gap(x, y, c) -> float:
    primal, _ = wasserstein_primal(x, y, c)
    dual, _ = wasserstein_dual(x, y, c)
    return abs(primal - dual)


def region_transfer_lower_bound(x0, x_tau, X, Y, c) -> float:
    """mu_measured * min_{i in Y, j in X} c_ij with mu_measured = x_Y(tau) - x_{X^c}(0) >= 0.

    For the power-law cost the minimum equals d_XY^alpha_eps.
    """
    X, Y = sorted(X), sorted(Y)
    if set(X) & set(Y):
        raise ValueError("regions must be disjoint")
    x0 = np.asarray(x0, dtype=float)
    Xc = np.setdiff1d(np.arange(len(x0)), X)
    mu = float(np.asarray(x_tau)[Y].sum() - x0[Xc].sum())
    if mu <= 0:
        return 0.0
    c = np.asarray(c, dtype=float)
    return mu * float(c[np.ix_(Y, X)].min())
