"""Seeded random instances and the property sweeps run over them."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..bounds import (
    BoundParams,
    BoundReport,
    theorem2_check,
    unified_speed_limit_check,
    velocity_ceiling_check,
    velocity_upper_bound,
)
from ..evolve import Stage, evolve, site_flows, velocity_term
from ..fock import StateEnsemble, enumerate_basis, random_state
from ..hamiltonian import BoseHubbard, HamiltonianModel, HoppingSpec, TunnelingSpec
from ..lattice import LatticeGeometry, build_lattice, cost_matrix
from ..protocols import ProtocolSchedule


def parallel_map(func, items, threads: int = 1):
    """Ordered map; results do not depend on the worker count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def random_hopping(rng: np.random.Generator, g: LatticeGeometry, J: float, alpha: float) -> np.ndarray:
    """Symmetric J_ij with |J_ij| drawn uniformly in [0, J / |i-j|^alpha] and random signs."""
    L = g.n_sites
    d = g.distance_matrix()
    mag = rng.uniform(0.0, 1.0, (L, L))
    sign = rng.choice([-1.0, 1.0], (L, L))
    A = np.triu(mag * sign, 1)
    A = A + A.T
    with np.errstate(divide="ignore"):
        env = np.where(d > 0, J / np.where(d > 0, d, 1.0) ** alpha, 0.0)
    return A * env


def random_protocol(
    seed: int,
    lattice: LatticeGeometry,
    N: int,
    alpha: float,
    stage_count: int,
    horizon: float,
    J: float = 1.0,
    U_max: float = 1.0,
    tunneling: bool = False,
    initial_support=None,
) -> ProtocolSchedule:
    """Piecewise-constant long-range Bose-Hubbard schedule with a random initial state.

    The total time is drawn in [0.05, 1] * horizon and split into
    ``stage_count`` Dirichlet-distributed pieces. ``initial_support`` (a
    boolean mask or index list over the basis) restricts the initial state.
    """
    rng = np.random.default_rng(seed)
    basis = enumerate_basis(lattice.n_sites, N)
    L = lattice.n_sites
    total = horizon * rng.uniform(0.05, 1.0)
    durations = total * rng.dirichlet(np.ones(stage_count))
    stages = []
    for s in range(stage_count):
        hop = HoppingSpec(random_hopping(rng, lattice, J, alpha), J=J, alpha=alpha)
        inter = BoseHubbard(U=rng.uniform(-U_max, U_max, L), mu=rng.uniform(-U_max, U_max, L))
        tun = None
        if tunneling:
            T = np.zeros((L, L))
            d = lattice.distance_matrix()
            nn = np.isclose(d, 1.0)
            T[nn] = rng.uniform(-J, J, nn.sum())
            tun = TunnelingSpec(np.triu(T, 1) + np.triu(T, 1).T)
        model = HamiltonianModel(basis, hop, inter, tun, lattice)
        stages.append(Stage(model, float(max(durations[s], 1e-9)), f"random stage {s}"))
    support = None
    if initial_support is not None:
        support = np.asarray(initial_support)
        if support.dtype == bool:
            support = np.flatnonzero(support)
    psi = random_state(basis, rng, support)
    return ProtocolSchedule(
        f"random_{seed}", basis, stages, None, None, sum(s.duration for s in stages),
        {"seed": seed, "N": N, "alpha": alpha, "J": J, "U_max": U_max, "tunneling": tunneling},
        initial_vector=psi,
    )


# -- sweeps ---------------------------------------------------------------------------


def speed_limit_sweep(seeds, L: int = 5, N: int = 3, alpha: float = 2.5, horizon: float = 10.0,
                      stage_count: int = 3, samples_per_stage: int = 33, threads: int = 1) -> list[BoundReport]:
    """Unified speed limit on random staged protocols over a 1-D chain."""
    g = build_lattice(1, [L])
    c = cost_matrix(g, BoundParams(1.0, alpha).alpha_eps)

    def one(seed):
        sched = random_protocol(seed, g, N, alpha, stage_count, horizon)
        traj = evolve(sched.initial_state(), sched.stages, samples_per_stage=samples_per_stage, cost=c)
        rep = unified_speed_limit_check(traj, c)
        rep.details["seed"] = seed
        return rep

    return parallel_map(one, seeds, threads)


def _theorem2_instance(seed: int):
    """Lattice, regions and sector sizes for one probability-bound sweep member (dim <= 2000)."""
    rng = np.random.default_rng(10_000 + seed)
    shape = [(5,), (6,), (7,), (8,), (10,), (2, 3), (3, 3), (4, 4)][seed % 8]
    g = build_lattice(len(shape), list(shape))
    L = g.n_sites
    D = g.dimension
    N = int(rng.integers(2, 5))
    while math.comb(L + N - 1, N) > 2000:
        N -= 1
    # X: the sites nearest the origin, Y: the farthest ones, disjoint
    dist0 = np.sqrt(g.squared_distances()[0])
    order = np.argsort(dist0, kind="stable")
    nx = max(1, L // 3)
    X = sorted(order[:nx].tolist())
    Y = sorted(order[-max(1, L // 4):].tolist())
    N0 = int(rng.integers(0, N))
    dN0 = int(rng.integers(1, N - N0 + 1))
    alpha = float(rng.uniform(D + 0.2, D + 2.5))
    return g, X, Y, N, N0, dN0, alpha


def theorem2_sweep(seeds, horizon: float = 2.0, stage_count: int = 3, samples_per_stage: int = 17,
                   threads: int = 1) -> list[BoundReport]:
    """Probability bound on random tunnelling-free protocols whose initial support has n_{X^c} <= N0."""

    def one(seed):
        g, X, Y, N, N0, dN0, alpha = _theorem2_instance(seed)
        basis = enumerate_basis(g.n_sites, N)
        Xc = sorted(g.complement(X))
        support = basis.configs[:, Xc].sum(axis=1) <= N0
        sched = random_protocol(seed, g, N, alpha, stage_count, horizon, initial_support=support)
        traj = evolve(sched.initial_state(), sched.stages, samples_per_stage=samples_per_stage,
                      record_probabilities=True)
        p = BoundParams(1.0, alpha, g.dimension)
        rep = theorem2_check(traj, g, X, Y, N0, dN0, p)
        rep.details.update({"seed": seed, "N": N, "N0": N0, "dN0": dN0, "dim": basis.dim})
        return rep

    return parallel_map(one, seeds, threads)


def velocity_sweep(n_samples: int = 500, seed: int = 0) -> tuple[BoundReport, list[float]]:
    """Phi_t against its class ceiling over random models and random states.

    Half of the draws are pure states, a quarter density matrices, a quarter
    two-member ensembles. Returns the aggregate report and every ratio Phi / ceiling.
    """
    rng = np.random.default_rng(seed)
    shapes = [(4,), (5,), (6,), (2, 2), (2, 3), (3, 3)]
    ratios = []
    worst = None
    for k in range(n_samples):
        shape = shapes[rng.integers(len(shapes))]
        g = build_lattice(len(shape), list(shape))
        D = g.dimension
        N = int(rng.integers(1, 4))
        basis = enumerate_basis(g.n_sites, N)
        alpha = float(rng.uniform(D + 0.05, D + 4.0))
        J = float(rng.uniform(0.2, 3.0))
        p = BoundParams(J, alpha, D)
        amps = random_hopping(rng, g, J, alpha)
        if rng.random() < 0.3:
            # saturate the envelope on every bond
            d = g.distance_matrix()
            amps = np.where(d > 0, np.where(amps >= 0, 1.0, -1.0) * J / np.where(d > 0, d, 1) ** alpha, 0.0)
        model = HamiltonianModel(basis, HoppingSpec(amps, J=J, alpha=alpha), None, None, g)
        kind = k % 4
        if kind in (0, 1):
            state = random_state(basis, rng)
        elif kind == 2:
            vecs = np.column_stack([random_state(basis, rng) for _ in range(3)])
            w = rng.dirichlet(np.ones(3))
            state = (vecs * w) @ vecs.conj().T
        else:
            vecs = np.column_stack([random_state(basis, rng) for _ in range(2)])
            state = StateEnsemble(rng.dirichlet(np.ones(2)), vecs)
        phi = float(velocity_term(site_flows(state, model), cost_matrix(g, p.alpha_eps)))
        ceiling = velocity_upper_bound(p)
        ratios.append(phi / ceiling)
        rep = velocity_ceiling_check([phi], p)
        if worst is None or rep.margin < worst.margin:
            worst = rep
    worst.details["samples"] = n_samples
    worst.details["max_ratio"] = max(ratios)
    return worst, ratios


def kr_duality_sweep(n: int = 200, seed: int = 0) -> list[dict]:
    """Primal and dual values on random metric instances from random lattices."""
    from ..transport import wasserstein_dual, wasserstein_primal

    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        D = int(rng.integers(1, 4))
        ext = [int(rng.integers(2, 5)) for _ in range(D)] if D > 1 else [int(rng.integers(3, 13))]
        g = build_lattice(D, ext)
        m = int(rng.integers(3, min(12, g.n_sites) + 1))
        pts = rng.choice(g.n_sites, m, replace=False)
        ae = [0.3, 0.7, 1.0][k % 3]
        c = cost_matrix(g, ae).entries[np.ix_(pts, pts)]
        x = rng.dirichlet(np.ones(m))
        y = rng.dirichlet(np.ones(m))
        if k % 5 == 0:
            # sparse marginals stress degenerate bases
            x[rng.random(m) < 0.4] = 0
            y[rng.random(m) < 0.4] = 0
            x = x / x.sum() if x.sum() > 0 else np.eye(m)[0]
            y = y / y.sum() if y.sum() > 0 else np.eye(m)[-1]
        primal, _ = wasserstein_primal(x, y, c)
        dual, _ = wasserstein_dual(x, y, c)
        out.append({"primal": primal, "dual": dual, "gap": abs(primal - dual), "alpha_eps": ae, "points": m})
    return out


def markov_sweep(n: int = 50, seed: int = 0, grid: int = 10_001) -> list[dict]:
    """Closed-form optimal mu' against a grid search on the log-prefactor slope.

    The slope 1/t - 1/(mu - t) + 1/(1 - x - t) is scanned on a grid for its
    sign change, and the bracket is then closed with Brent's method.
    """
    from scipy.optimize import brentq

    from ..bounds import kappa1, markov_corollary, min_time_bound, optimal_mu_prime

    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        mu = float(rng.uniform(0.05, 1.0))
        x = float(rng.uniform(0.0, 1.0 - mu))
        slope = lambda t: 1 / t - 1 / (mu - t) + 1 / (1 - x - t)  # noqa: E731
        ts = np.linspace(0, mu, grid)[1:-1]
        sg = np.sign([slope(t) for t in ts])
        i = int(np.flatnonzero(np.diff(sg) < 0)[0])
        root = brentq(slope, ts[i], ts[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
        opt = optimal_mu_prime(mu, x)
        p = BoundParams(1.0, 3.0, mu=mu)
        d = float(rng.integers(1, 50))
        cor = markov_corollary(mu, None, x, kappa1(p), d, p.alpha_eps)
        thm1 = min_time_bound(p, d)
        out.append({"mu": mu, "x_Xc0": x, "closed_form": opt, "grid": root,
                    "diff": abs(opt - root), "corollary": cor, "theorem1": thm1})
    return out
