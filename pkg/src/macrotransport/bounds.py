"""Closed-form speed-limit constants and checks against simulated trajectories.

Every check returns a :class:`BoundReport` carrying the bound, the measured
value, the signed margin and the numerical uncertainty budget. A check only
fails when the measured value is on the wrong side of the bound by more than
that budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .lattice import LatticeGeometry, cost_matrix, hypercubic_shell_constant, set_distance

HYPOTHESIS_TOL = 1e-12
PROBABILITY_TOL = 1e-9
SOLVER_TOL = 1e-9
QUAD_RTOL = 1e-7

# Bernoulli numbers B_2, B_4, ..., B_20
_BERNOULLI = [
    1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66,
    -691 / 2730, 7 / 6, -3617 / 510, 43867 / 798, -174611 / 330,
]


def riemann_zeta(s: float) -> float:
    """zeta(s) for real s > 1: partial sum plus an Euler-Maclaurin tail.

    The cut K grows with how close s is to 1 so that the first neglected
    correction stays below ~1e-16 relative.
    """
    s = float(s)
    if not s > 1.0:
        raise ValueError(f"zeta(s) diverges for s <= 1 (got s={s})")
    K = 20 if s > 1.5 else 40
    n = np.arange(1, K, dtype=float)
    head = math.fsum(n ** -s)
    tail = K ** (1.0 - s) / (s - 1.0) + 0.5 * K ** -s
    # rising factorial s (s+1) ... (s+2j-2) times K^(-s-2j+1)
    rising = s
    fact = 2.0
    power = K ** (-s - 1.0)
    for j, b in enumerate(_BERNOULLI, start=1):
        tail += b / fact * rising * power
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
        power /= K * K
    return head + tail


@dataclass(frozen=True)
class BoundParams:
    """Hamiltonian-class parameters for the speed-limit constants.

    ``eps`` defaults to alpha - D - 1 when alpha > D + 1 and to (alpha - D)/2
    otherwise. ``gamma`` defaults to the shell constant of the D-dimensional
    hypercubic lattice.
    """

    J: float
    alpha: float
    D: int = 1
    eps: float | None = None
    gamma: float | None = None
    mu: float = 1.0

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError("J must be positive")
        if not self.alpha > self.D:
            raise ValueError(f"need alpha > D, got alpha={self.alpha}, D={self.D}")
        if self.eps is None:
            eps = self.alpha - self.D - 1 if self.alpha > self.D + 1 else (self.alpha - self.D) / 2
            object.__setattr__(self, "eps", float(eps))
        if not 0 < self.eps < self.alpha - self.D:
            raise ValueError(f"eps must lie in (0, alpha - D) = (0, {self.alpha - self.D}), got {self.eps}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", hypercubic_shell_constant(self.D))
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.mu <= 1:
            raise ValueError("mu must lie in (0, 1]")

    @property
    def alpha_eps(self) -> float:
        return min(1.0, self.alpha - self.D - self.eps)

    @property
    def zeta_argument(self) -> float:
        return self.alpha - self.alpha_eps - self.D + 1

    def with_mu(self, mu: float) -> "BoundParams":
        return BoundParams(self.J, self.alpha, self.D, self.eps, self.gamma, mu)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["alpha_eps"] = self.alpha_eps
        return d


def kappa2(p: BoundParams) -> float:
    return p.J * p.gamma * riemann_zeta(p.zeta_argument)


def kappa1(p: BoundParams) -> float:
    return p.mu / kappa2(p)


def velocity_upper_bound(p: BoundParams) -> float:
    """Ceiling on the cost-weighted flow speed Phi_t for the whole class."""
    return kappa2(p)


def min_time_bound(p: BoundParams, d_XY: float) -> float:
    if d_XY < 1:
        raise ValueError("regions on a unit lattice are at least distance 1 apart")
    return kappa1(p) * d_XY ** p.alpha_eps


def probability_bound(p: BoundParams, N: int, dN0: int, tau: float, d_XY: float, clamp: bool = False) -> float:
    """Upper bound on the probability that n_Y reaches N0 + dN0 by time tau."""
    if dN0 < 1:
        raise ValueError("dN0 must be at least 1")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    val = kappa2(p) * N * tau / (dN0 * d_XY ** p.alpha_eps)
    return min(1.0, val) if clamp else val


def _check_markov(mu, mu_p, x_Xc0):
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    if not 0 <= x_Xc0 or x_Xc0 + mu > 1 + 1e-15:
        raise ValueError("need x_Xc(0) >= 0 and x_Xc(0) + mu <= 1")
    if mu_p is not None and not 0 < mu_p < mu:
        raise ValueError("need 0 < mu' < mu")


def markov_prefactor(mu: float, mu_p: float, x_Xc0: float) -> float:
    """mu'(mu - mu') / (mu (1 - x_Xc(0) - mu')), never above 1."""
    _check_markov(mu, mu_p, x_Xc0)
    return mu_p * (mu - mu_p) / (mu * (1.0 - x_Xc0 - mu_p))


def optimal_mu_prime(mu: float, x_Xc0: float) -> float:
    """Maximizer of the Markov prefactor over mu' in (0, mu)."""
    _check_markov(mu, None, x_Xc0)
    a = 1.0 - x_Xc0
    # a - sqrt(a (a - mu)) written without cancellation
    return a * mu / (a + math.sqrt(a * (a - mu)))


def markov_corollary(mu: float, mu_p: float | None, x_Xc0: float, kappa1_value: float, d: float, alpha_eps: float) -> float:
    """Time bound from the probability bound plus Markov's inequality.

    ``mu_p=None`` uses the optimal mu'.
    """
    if mu_p is None:
        mu_p = optimal_mu_prime(mu, x_Xc0)
    return markov_prefactor(mu, mu_p, x_Xc0) * kappa1_value * d ** alpha_eps


# -- reports -----------------------------------------------------------------------


@dataclass
class BoundReport:
    bound_name: str
    bound_value: float
    measured: float
    margin: float
    uncertainty: float
    status: str
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "out_of_scope")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.status == "pass"
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (frozenset, set)):
        return sorted(_jsonable(v) for v in obj)
    return obj


def _status(margin: float, uncertainty: float) -> str:
    return "pass" if margin >= -uncertainty else "fail"


# -- quadrature ----------------------------------------------------------------------


def _trapezoid_by_stage(traj) -> float:
    total = 0.0
    for s in np.unique(traj.stage_index):
        m = traj.stage_index == s
        total += trapezoid(traj.velocity[m], traj.times[m])
    return float(total)


def integrate_velocity(traj, cost, rtol: float = QUAD_RTOL, max_samples: int = 2 ** 14):
    """Integral of Phi_t over the trajectory with a doubling error estimate.

    Stages are re-sampled with (n - 1) * 2 + 1 points until two successive
    trapezoid sums agree to ``rtol``. Returns (integral, uncertainty,
    samples_per_stage); the uncertainty is the last change, which bounds
    the error for the O(h^2) convergence seen with finitely many kinks.
    """
    from .evolve import evolve

    n = len(traj.times) // max(1, len(traj.stages))
    if traj.velocity is None:
        traj = evolve(traj.initial, traj.stages, samples_per_stage=n, cost=cost)
    prev = _trapezoid_by_stage(traj)
    delta = math.inf
    while True:
        n = 2 * (n - 1) + 1
        if n > max_samples:
            return prev, abs(delta), (n - 1) // 2 + 1
        refined = evolve(traj.initial, traj.stages, samples_per_stage=n, cost=cost)
        cur = _trapezoid_by_stage(refined)
        delta = cur - prev
        if abs(delta) <= rtol * max(abs(cur), 1e-300):
            return cur, abs(delta), n
        prev = cur


def unified_speed_limit_check(traj, c, rtol: float = QUAD_RTOL) -> BoundReport:
    """tau >= W(x_0, x_tau) / <Phi_t>_tau, checked in the equivalent form int Phi dt >= W."""
    from .transport import wasserstein_primal

    cost = np.asarray(c, dtype=float)
    x0 = traj.concentrations[0]
    xt = traj.concentrations[-1]
    W, _ = wasserstein_primal(x0 / x0.sum(), xt / xt.sum(), cost)
    tau = traj.duration
    integral, quad_err, n = integrate_velocity(traj, cost, rtol=rtol)
    unc = quad_err + SOLVER_TOL * max(1.0, W)
    if integral <= 0:
        bound = 0.0 if W <= unc else math.inf
        status = "pass" if W <= unc else "fail"
        return BoundReport("unified_speed_limit", bound, tau, tau - bound, unc, status,
                           details={"wasserstein": W, "velocity_integral": integral})
    mean_phi = integral / tau
    bound = W / mean_phi
    return BoundReport(
        "unified_speed_limit",
        bound_value=bound,
        measured=tau,
        margin=integral - W,
        uncertainty=unc,
        status=_status(integral - W, unc),
        details={
            "wasserstein": W,
            "velocity_integral": integral,
            "mean_velocity": mean_phi,
            "quadrature_error": quad_err,
            "relative_quadrature_error": quad_err / integral,
            "samples_per_stage": n,
        },
    )


# -- Hamiltonian-class checks -----------------------------------------------------------


def hopping_within_class(traj, p: BoundParams, g: LatticeGeometry | None = None) -> bool:
    """All stage hopping matrices obey |J_ij| <= J / |i - j|^alpha at the stage start times."""
    t0 = 0.0
    for stage in traj.stages:
        geom = g or stage.model.geometry
        d = geom.distance_matrix()
        off = ~np.eye(len(d), dtype=bool)
        amp = np.abs(stage.model.hopping.at(t0))
        if np.any(amp[off] > p.J / d[off] ** p.alpha * (1 + 1e-12)):
            return False
        t0 += stage.duration
    return True


def _out_of_scope(name, p, reason):
    return BoundReport(name, math.nan, math.nan, math.nan, 0.0, "out_of_scope", p.as_dict(), {"reason": reason})


def theorem1_check(traj, g: LatticeGeometry, X, Y, p: BoundParams) -> BoundReport:
    """Completion time against the macroscopic-transfer bound.

    The transported fraction is the measured one, mu = x_Y(tau) - x_{X^c}(0),
    capped by ``p.mu``. A trajectory with tunnelling terms or hopping outside
    the power-law envelope is reported out of scope.
    """
    name = "theorem1_min_time"
    if traj.has_tunneling:
        return _out_of_scope(name, p, "interaction-induced tunnelling present")
    if not hopping_within_class(traj, p, g):
        return _out_of_scope(name, p, "hopping exceeds J/|i-j|^alpha")
    X, Y = sorted(X), sorted(Y)
    Xc = sorted(g.complement(X))
    x0, xt = traj.concentrations[0], traj.concentrations[-1]
    mu_meas = float(xt[Y].sum() - x0[Xc].sum())
    tau = traj.duration
    d = set_distance(g, X, Y)
    if mu_meas <= 0:
        return BoundReport(name, 0.0, tau, tau, 0.0, "pass", p.as_dict(),
                           {"mu_measured": mu_meas, "d_XY": d, "note": "no net transfer"})
    q = p.with_mu(min(p.mu, mu_meas))
    bound = min_time_bound(q, d)
    unc = 1e-12 * max(1.0, bound)
    W, _ = _wasserstein(x0, xt, cost_matrix(g, q.alpha_eps))
    return BoundReport(
        name, bound, tau, tau - bound, unc, _status(tau - bound, unc), q.as_dict(),
        {
            "mu_measured": mu_meas,
            "d_XY": d,
            "ratio": tau / bound,
            "kappa1": kappa1(q),
            "wasserstein": W,
            "transfer_lower_bound": q.mu * d ** q.alpha_eps,
        },
    )


def _wasserstein(x, y, c):
    from .transport import wasserstein_primal

    return wasserstein_primal(x / x.sum(), y / y.sum(), c)


def theorem2_check(traj, g: LatticeGeometry, X, Y, N0: int, dN0: int, p: BoundParams) -> BoundReport:
    """Probability of at least N0 + dN0 bosons in Y at every sample time.

    Needs a trajectory recorded with ``record_probabilities=True``. The
    initial state must satisfy P(n_{X^c} <= N0) = 1 to within 1e-12;
    otherwise the report is out of scope.
    """
    name = "theorem2_probability"
    if traj.probabilities is None:
        raise ValueError("trajectory lacks configuration probabilities")
    if traj.has_tunneling:
        return _out_of_scope(name, p, "interaction-induced tunnelling present")
    if not hopping_within_class(traj, p, g):
        return _out_of_scope(name, p, "hopping exceeds J/|i-j|^alpha")
    basis = traj.stages[0].model.basis
    X, Y = sorted(X), sorted(Y)
    Xc = sorted(g.complement(X))
    configs = basis.configs
    hyp = traj.probabilities[0][configs[:, Xc].sum(axis=1) <= N0].sum()
    if abs(1.0 - hyp) > HYPOTHESIS_TOL:
        return _out_of_scope(name, p, f"initial P(n_Xc <= N0) = {hyp!r} deviates from 1")
    hit = configs[:, Y].sum(axis=1) >= N0 + dN0
    measured = traj.probabilities[:, hit].sum(axis=1)
    d = set_distance(g, X, Y)
    bounds = np.array([probability_bound(p, basis.total, dN0, t, d) for t in traj.times])
    slack = bounds - measured
    k = int(np.argmin(slack))
    pos = bounds > 0
    ratio = float((measured[pos] / bounds[pos]).max()) if pos.any() else 0.0
    return BoundReport(
        name, float(bounds[k]), float(measured[k]), float(slack[k]), PROBABILITY_TOL,
        _status(float(slack[k]), PROBABILITY_TOL), p.as_dict(),
        {"time_of_min_slack": float(traj.times[k]), "max_probability": float(measured.max()),
         "max_ratio": ratio, "d_XY": d, "kappa2": kappa2(p), "samples": len(measured)},
    )


def velocity_ceiling_check(velocities, p: BoundParams) -> BoundReport:
    v = np.asarray(velocities, dtype=float)
    bound = velocity_upper_bound(p)
    worst = float(v.max())
    unc = 1e-12 * bound
    return BoundReport("velocity_ceiling", bound, worst, bound - worst, unc,
                       _status(bound - worst, unc), p.as_dict(), {"samples": int(v.size)})


def current_cauchy_schwarz_violation(state, model, t: float = 0.0) -> float:
    """max over hops of |phi_NN'| - |J_ij| (n_i p_N + n'_j p_N'); <= 0 when the pointwise bound holds."""
    from .evolve import config_currents
    from .fock import diagonal_weights
    from .hamiltonian import hop_entries

    e = hop_entries(model, t)
    if not len(e.rows):
        return 0.0
    cur = config_currents(state, model, t)
    p = diagonal_weights(state)
    cfg = model.basis.configs
    # entry (row=N after the hop, col=N' before): boson moved src -> dst
    n_src = cfg[e.cols, e.src]
    n_dst_after = cfg[e.rows, e.dst]
    J = model.hopping.at(t)[e.dst, e.src]
    ceiling = np.abs(J) * (n_src * p[e.cols] + n_dst_after * p[e.rows])
    phi = np.asarray(cur[e.rows, e.cols]).ravel()
    return float((np.abs(phi) - ceiling).max())


def theorem2_current_chain(traj, costs: np.ndarray) -> BoundReport:
    """(1/2) int sum c_NN' |phi_NN'| dt >= W(p_0, p_tau) over configuration space.

    Needs ``record_states=True`` (pure states or density matrices).
    """
    from .evolve import config_currents
    from .transport import wasserstein_configs

    if traj.states is None:
        raise ValueError("trajectory lacks recorded states")
    if traj.has_tunneling:
        raise ValueError("configuration currents need a tunnelling-free trajectory")
    speeds = np.empty(len(traj.times))
    t0 = 0.0
    offsets = {}
    for s, stage in enumerate(traj.stages):
        offsets[s] = t0
        t0 += stage.duration
    for k, (s, state) in enumerate(zip(traj.stage_index, traj.states)):
        stage = traj.stages[s]
        cur = config_currents(state, stage.model, offsets[s]).tocoo()
        speeds[k] = 0.5 * np.sum(costs[cur.row, cur.col] * np.abs(cur.data))
    integral = 0.0
    for s in np.unique(traj.stage_index):
        m = traj.stage_index == s
        integral += trapezoid(speeds[m], traj.times[m])
    p0 = np.real(np.abs(traj.states[0]) ** 2) if np.ndim(traj.states[0]) == 1 else np.real(np.diag(traj.states[0]))
    pt = np.real(np.abs(traj.states[-1]) ** 2) if np.ndim(traj.states[-1]) == 1 else np.real(np.diag(traj.states[-1]))
    W = wasserstein_configs(p0 / p0.sum(), pt / pt.sum(), costs)
    unc = SOLVER_TOL * max(1.0, W)
    return BoundReport("theorem2_current_chain", W, integral, integral - W, unc, _status(integral - W, unc),
                       details={"note": "trapezoid without refinement"})
