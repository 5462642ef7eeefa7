import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macrotransport.bounds import (
    BoundParams,
    BoundReport,
    current_cauchy_schwarz_violation,
    kappa1,
    kappa2,
    markov_corollary,
    markov_prefactor,
    min_time_bound,
    optimal_mu_prime,
    probability_bound,
    riemann_zeta,
    theorem1_check,
    theorem2_check,
    theorem2_current_chain,
    unified_speed_limit_check,
    velocity_ceiling_check,
    velocity_upper_bound,
)
from macrotransport.evolve import Stage, evolve, site_flows, velocity_term
from macrotransport.fock import enumerate_basis, mott_state, random_state
from macrotransport.hamiltonian import HamiltonianModel, HoppingSpec, build_lemma_hamiltonian, power_law_hopping
from macrotransport.lattice import build_lattice, cost_matrix
from macrotransport.transport import config_cost_table


# -- zeta --------------------------------------------------------------------------


def test_zeta_classical_values():
    assert riemann_zeta(2) == pytest.approx(math.pi**2 / 6, rel=1e-15)
    assert riemann_zeta(4) == pytest.approx(math.pi**4 / 90, rel=1e-15)
    with pytest.raises(ValueError):
        riemann_zeta(1.0)


@pytest.mark.parametrize("s", [1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0])
def test_zeta_against_mpmath(s):
    assert abs(riemann_zeta(s) - float(mpmath.zeta(s))) <= 1e-10


@pytest.mark.parametrize("s", [1.1, 1.5, 3.0])
def test_zeta_within_integral_tail_bracket(s):
    # sum_{n<K} n^-s + K^(1-s)/(s-1) <= zeta(s) <= that + K^-s
    K = 2000
    head = math.fsum(n**-s for n in range(1, K))
    lo = head + K ** (1 - s) / (s - 1)
    assert lo <= riemann_zeta(s) <= lo + K**-s


@given(a=st.floats(1.01, 8.0), b=st.floats(1.01, 8.0))
def test_zeta_is_decreasing(a, b):
    if a < b:
        assert riemann_zeta(a) >= riemann_zeta(b)


# -- constants -----------------------------------------------------------------------


def test_kappa_examples():
    p = BoundParams(1.0, 3.0, 1, eps=1.0, gamma=2.0)
    assert kappa2(p) == pytest.approx(math.pi**2 / 3, rel=1e-14)
    assert kappa1(p) == pytest.approx(3 / math.pi**2, rel=1e-14)
    assert kappa1(p) * kappa2(p) == pytest.approx(1.0)
    assert kappa1(BoundParams(2.0, 3.0, 1, eps=1.0, gamma=2.0)) == pytest.approx(kappa1(p) / 2)
    assert kappa1(p.with_mu(1e-9)) == pytest.approx(1e-9 * kappa1(p))


def test_default_eps_and_gamma():
    p = BoundParams(1.0, 3.0)
    assert p.eps == 1.0 and p.alpha_eps == 1.0 and p.gamma == 2.0
    q = BoundParams(1.0, 1.5)
    assert q.eps == 0.25 and q.alpha_eps == 0.25
    assert BoundParams(1.0, 4.0, 2).gamma == 8.0


def test_short_range_regime_exponent():
    p = BoundParams(1.0, 1.5, 1, eps=0.25)
    assert p.alpha_eps == 0.25 and p.zeta_argument == pytest.approx(1.25)
    d = 7.0
    assert min_time_bound(p, d) == pytest.approx(1.0 / (2 * riemann_zeta(1.25)) * d**0.25)
    assert min_time_bound(p, 1.0) == pytest.approx(kappa1(p))


@given(eps1=st.floats(0.05, 0.9), eps2=st.floats(0.05, 0.9))
def test_kappa2_grows_as_zeta_argument_approaches_one(eps1, eps2):
    # alpha - D = 1 keeps alpha_eps = 1 - eps and the zeta argument 1 + eps
    lo, hi = sorted([eps1, eps2])
    assert kappa2(BoundParams(1.0, 2.0, 1, eps=lo)) >= kappa2(BoundParams(1.0, 2.0, 1, eps=hi)) - 1e-12


def test_param_validation():
    for args in [(0.0, 3.0), (1.0, 1.0), (1.0, 3.0, 1, 2.5), (1.0, 3.0, 1, None, -1.0), (1.0, 3.0, 1, None, None, 0.0)]:
        with pytest.raises(ValueError):
            BoundParams(*args)
    with pytest.raises(ValueError):
        min_time_bound(BoundParams(1.0, 3.0), 0.5)


def test_velocity_bound_large_alpha_limit():
    p = BoundParams(1.0, 60.0, 1, eps=58.0)
    assert velocity_upper_bound(p) == pytest.approx(p.J * p.gamma, rel=1e-12)


def test_probability_bound():
    p = BoundParams(1.0, 3.0)
    assert probability_bound(p, 4, 2, 0.0, 3.0) == 0.0
    # macroscopic form with mu = dN0 / N
    N, dN0, tau, d = 10, 4, 0.3, 5.0
    mu = dN0 / N
    assert probability_bound(p, N, dN0, tau, d) == pytest.approx(kappa2(p) / mu * tau / d**p.alpha_eps)
    assert probability_bound(p, N, dN0, 100.0, d, clamp=True) == 1.0
    with pytest.raises(ValueError):
        probability_bound(p, N, 0, tau, d)


# -- Markov corollary --------------------------------------------------------------------


def test_markov_endpoints_and_ceiling():
    assert markov_prefactor(0.8, 1e-12, 0.1) == pytest.approx(0.0, abs=1e-11)
    assert markov_prefactor(0.8, 0.8 - 1e-12, 0.1) == pytest.approx(0.0, abs=1e-11)
    with pytest.raises(ValueError):
        markov_prefactor(0.8, 0.9, 0.1)


def test_markov_optimum_on_boundary():
    # x_Xc(0) + mu = 1 pushes the maximizer to mu' = mu, where the prefactor tends to 1
    assert optimal_mu_prime(1.0, 0.0) == 1.0
    assert markov_prefactor(1.0, 1 - 1e-9, 0.0) == pytest.approx(1.0)


@given(mu=st.floats(0.01, 0.99), frac=st.floats(0.0, 0.999), t=st.floats(0.001, 0.999))
def test_markov_prefactor_at_most_one_and_optimal(mu, frac, t):
    x = frac * (1 - mu)
    opt = optimal_mu_prime(mu, x)
    assert 0 < opt < mu
    best = markov_prefactor(mu, opt, x)
    assert best <= 1.0 + 1e-15
    assert markov_prefactor(mu, t * mu, x) <= best + 1e-12


def test_markov_optimizer_matches_fine_grid():
    # frozen from a 10^6-point grid search on the prefactor itself
    mu, x = 0.7, 0.1
    grid = np.linspace(0, mu, 1_000_001)[1:-1]
    vals = grid * (mu - grid) / (mu * (1 - x - grid))
    assert optimal_mu_prime(mu, x) == pytest.approx(grid[np.argmax(vals)], abs=1e-6)


def test_markov_corollary_below_theorem1():
    p = BoundParams(1.0, 3.0, mu=0.6)
    for d in (1.0, 4.0, 9.0):
        assert markov_corollary(0.6, None, 0.2, kappa1(p), d, p.alpha_eps) <= min_time_bound(p, d)


# -- velocity and current bounds ------------------------------------------------------------


@given(seed=st.integers(0, 10_000), alpha=st.floats(1.2, 5.0))
def test_velocity_never_exceeds_ceiling(seed, alpha):
    rng = np.random.default_rng(seed)
    g = build_lattice(1, [5])
    b = enumerate_basis(5, 2)
    p = BoundParams(1.0, alpha)
    model = HamiltonianModel(b, power_law_hopping(g, 1.0, alpha), None, None, g)
    phi = velocity_term(site_flows(random_state(b, rng), model), cost_matrix(g, p.alpha_eps))
    assert phi <= velocity_upper_bound(p)
    assert velocity_ceiling_check([phi], p).status == "pass"


@given(seed=st.integers(0, 10_000))
def test_pair_flow_cauchy_schwarz(seed):
    # |phi_ij| <= |J_ij| (x_i + x_j) for every pair
    rng = np.random.default_rng(seed)
    g = build_lattice(1, [4])
    b = enumerate_basis(4, 3)
    model = HamiltonianModel(b, power_law_hopping(g, 1.0, 2.0), None, None, g)
    psi = random_state(b, rng)
    f = site_flows(psi, model)
    x = np.abs(psi) ** 2 @ b.configs / 3
    J = model.hopping.at()
    assert (np.abs(f) <= np.abs(J) * (x[:, None] + x[None, :]) + 1e-14).all()


@given(seed=st.integers(0, 10_000))
def test_configuration_current_cauchy_schwarz(seed):
    rng = np.random.default_rng(seed)
    g = build_lattice(1, [4])
    b = enumerate_basis(4, 2)
    model = HamiltonianModel(b, power_law_hopping(g, 1.0, 2.0), None, None, g)
    assert current_cauchy_schwarz_violation(random_state(b, rng), model) <= 1e-14


def test_velocity_ceiling_flags_violation():
    p = BoundParams(1.0, 3.0)
    rep = velocity_ceiling_check([0.1, 2 * velocity_upper_bound(p)], p)
    assert rep.status == "fail" and not rep.passed


# -- trajectory-level checks ---------------------------------------------------------------


def _random_run(seed, L=5, N=2, alpha=2.5, t=1.5, support=None, states=False):
    rng = np.random.default_rng(seed)
    g = build_lattice(1, [L])
    b = enumerate_basis(L, N)
    amp = power_law_hopping(g, 1.0, alpha).amplitudes * rng.uniform(-1, 1, (L, L))
    amp = np.triu(amp, 1) + np.triu(amp, 1).T
    model = HamiltonianModel(b, HoppingSpec(amp, J=1.0, alpha=alpha), None, None, g)
    psi = random_state(b, rng, support)
    c = cost_matrix(g, BoundParams(1.0, alpha).alpha_eps)
    traj = evolve(psi, [Stage(model, t / 2), Stage(model, t / 2)], samples_per_stage=65, cost=c,
                  record_probabilities=True, record_states=states)
    return g, b, c, traj


def test_unified_speed_limit_on_zero_hamiltonian():
    g = build_lattice(1, [3])
    b = enumerate_basis(3, 1)
    model = HamiltonianModel(b, HoppingSpec(np.zeros((3, 3))))
    c = cost_matrix(g, 1.0)
    traj = evolve(mott_state(b, (1, 0, 0)), [Stage(model, 1.0)], samples_per_stage=5, cost=c)
    rep = unified_speed_limit_check(traj, c)
    assert rep.status == "pass" and rep.details["wasserstein"] == 0.0


@given(seed=st.integers(0, 10_000))
def test_unified_speed_limit_holds(seed):
    g, b, c, traj = _random_run(seed)
    rep = unified_speed_limit_check(traj, c)
    assert rep.status == "pass"
    assert rep.details["relative_quadrature_error"] <= 1e-6
    assert rep.uncertainty > 0


def test_single_particle_hop_is_near_tight():
    # one particle hopping across one bond: W = 1 and int Phi dt = 1 when flows keep one sign
    g = build_lattice(1, [2])
    b = enumerate_basis(2, 1)
    model = HamiltonianModel(b, HoppingSpec(np.array([[0, 1.0], [1.0, 0]]), J=1.0, alpha=3.0))
    c = cost_matrix(g, 1.0)
    traj = evolve(mott_state(b, (1, 0)), [Stage(model, math.pi / 2)], samples_per_stage=33, cost=c)
    rep = unified_speed_limit_check(traj, c)
    assert rep.status == "pass"
    assert rep.bound_value == pytest.approx(rep.measured, rel=1e-6)


def test_theorem1_lemma1_is_out_of_scope():
    model = build_lemma_hamiltonian(1, 4)
    traj = evolve(mott_state(model.basis, (3, 1)), [Stage(model, math.pi / 8)], samples_per_stage=9)
    rep = theorem1_check(traj, build_lattice(1, [2]), [0], [1], BoundParams(1.0, 3.0))
    assert rep.status == "out_of_scope" and rep.passed


def test_theorem1_no_transfer():
    g, b, c, traj = _random_run(3, support=[0])
    rep = theorem1_check(traj, g, [0], [4], BoundParams(1.0, 2.5))
    assert rep.status == "pass"


@given(seed=st.integers(0, 10_000))
def test_theorem2_holds_when_hypothesis_holds(seed):
    L, N = 5, 2
    b = enumerate_basis(L, N)
    Xc = [2, 3, 4]
    support = np.flatnonzero(b.configs[:, Xc].sum(axis=1) <= 0)
    g, b, c, traj = _random_run(seed, support=support)
    rep = theorem2_check(traj, g, [0, 1], [4], 0, 1, BoundParams(1.0, 2.5))
    assert rep.status == "pass"
    assert rep.details["max_ratio"] <= 1.0


def test_theorem2_out_of_scope_without_hypothesis():
    g, b, c, traj = _random_run(1)
    rep = theorem2_check(traj, g, [0, 1], [4], 0, 1, BoundParams(1.0, 2.5))
    assert rep.status == "out_of_scope"


@pytest.mark.parametrize("seed", range(4))
def test_configuration_space_chain(seed):
    g, b, c, traj = _random_run(seed, L=4, N=2, states=True)
    costs = config_cost_table(b, g, BoundParams(1.0, 2.5).alpha_eps)
    rep = theorem2_current_chain(traj, costs)
    assert rep.status == "pass"
    assert rep.measured >= rep.bound_value


def test_report_serialization():
    rep = BoundReport("x", 1.0, 0.5, 0.5, 1e-9, "pass", {"J": 1.0}, {"arr": np.arange(2), "nan": math.nan})
    d = rep.to_dict()
    assert d["pass"] is True and d["details"]["arr"] == [0, 1] and d["details"]["nan"] == "nan"
    assert rep.to_json() == BoundReport(**{k: getattr(rep, k) for k in rep.__dataclass_fields__}).to_json()
