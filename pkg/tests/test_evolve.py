import math

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given
from hypothesis import strategies as st

from macrotransport.evolve import (
    EvolutionError,
    Stage,
    StagePropagator,
    config_currents,
    evolve,
    final_state,
    fidelity,
    lanczos_expm_multiply,
    site_flows,
    velocity_term,
)
from macrotransport.fock import StateEnsemble, concentrations, enumerate_basis, mott_state, random_state
from macrotransport.hamiltonian import (
    BoseHubbard,
    HamiltonianModel,
    HoppingSpec,
    build_lemma_hamiltonian,
    materialize,
    power_law_hopping,
)
from macrotransport.lattice import build_lattice, cost_matrix


def _random_model(rng, L=4, N=3, alpha=2.0):
    g = build_lattice(1, [L])
    b = enumerate_basis(L, N)
    amp = power_law_hopping(g, 1.0, alpha).amplitudes * rng.uniform(-1, 1, (L, L))
    amp = np.triu(amp, 1) + np.triu(amp, 1).T
    return HamiltonianModel(b, HoppingSpec(amp, J=1.0, alpha=alpha), BoseHubbard(rng.normal(size=L), 0.3), None, g)


def test_zero_hamiltonian_is_identity(rng):
    b = enumerate_basis(3, 2)
    psi = random_state(b, rng)
    model = HamiltonianModel(b, HoppingSpec(np.zeros((3, 3))))
    np.testing.assert_allclose(final_state(psi, [Stage(model, 1.0)]), psi, atol=1e-14)


def test_single_particle_rabi():
    b = enumerate_basis(2, 1)
    J = 0.9
    model = HamiltonianModel(b, HoppingSpec(np.array([[0, J], [J, 0]])))
    psi = final_state(mott_state(b, (1, 0)), [Stage(model, math.pi / (2 * J))])
    assert fidelity(psi, b.index_of((0, 1))) == pytest.approx(1.0, abs=1e-14)


def test_lemma3_transfer():
    M = 5
    model = build_lemma_hamiltonian(3, M, J=1.0)
    b = model.basis
    psi = final_state(mott_state(b, (M - 1, 1)), [Stage(model, math.pi / 2)])
    assert fidelity(psi, b.index_of((1, M - 1))) >= 1 - 1e-10


@given(seed=st.integers(0, 10_000), t=st.floats(0.01, 5.0))
def test_propagator_matches_expm(seed, t):
    rng = np.random.default_rng(seed)
    model = _random_model(rng)
    H = materialize(model)
    psi = random_state(model.basis, rng)
    ref = la.expm(-1j * t * H.toarray()) @ psi
    np.testing.assert_allclose(StagePropagator(H).apply(psi, t), ref, atol=1e-11)
    np.testing.assert_allclose(lanczos_expm_multiply(H, psi, t), ref, atol=1e-9)


def test_krylov_path_for_large_sectors(rng):
    model = _random_model(rng, L=8, N=4)  # dim 330 -> force Krylov
    H = materialize(model)
    psi = random_state(model.basis, rng)
    dense = StagePropagator(H)
    kry = StagePropagator(H, dense_dim=10)
    assert dense.dense and not kry.dense
    ts = np.linspace(0, 2.0, 5)
    np.testing.assert_allclose(kry.apply_many(psi, ts), dense.apply_many(psi, ts), atol=1e-9)


@given(seed=st.integers(0, 10_000))
def test_flows_are_antisymmetric_and_match_time_derivative(seed):
    rng = np.random.default_rng(seed)
    model = _random_model(rng)
    b = model.basis
    psi = random_state(b, rng)
    phi = site_flows(psi, model)
    np.testing.assert_allclose(phi, -phi.T, atol=1e-14)
    prop = StagePropagator(materialize(model))
    h = 1e-5
    dx = (concentrations(prop.apply(psi, h), b) - concentrations(prop.apply(psi, -h), b)) / (2 * h)
    np.testing.assert_allclose(phi.sum(axis=1), dx, atol=1e-6)


def test_flows_vanish_for_real_and_mott_states(rng):
    model = _random_model(rng)
    b = model.basis
    real = np.abs(random_state(b, rng)).astype(complex)
    real /= np.linalg.norm(real)
    assert np.abs(site_flows(real, model)).max() == 0.0
    assert np.abs(site_flows(mott_state(b, (1, 1, 1, 0)), model)).max() == 0.0


def test_flow_state_forms_agree(rng):
    model = _random_model(rng)
    vecs = np.column_stack([random_state(model.basis, rng) for _ in range(3)])
    ens = StateEnsemble(np.array([0.5, 0.3, 0.2]), vecs)
    np.testing.assert_allclose(site_flows(ens, model), site_flows(ens.to_density(), model), atol=1e-13)


def test_velocity_term_examples():
    c = np.array([[0, 2.0], [2.0, 0]])
    assert velocity_term(np.zeros((2, 2)), c) == 0.0
    f = np.array([[0, 0.3], [-0.3, 0]])
    assert velocity_term(f, c) == pytest.approx(0.6)


@given(seed=st.integers(0, 10_000))
def test_config_currents_reproduce_probability_derivative(seed):
    rng = np.random.default_rng(seed)
    model = _random_model(rng, L=3, N=2)
    psi = random_state(model.basis, rng)
    cur = config_currents(psi, model)
    np.testing.assert_allclose(cur.toarray(), -cur.toarray().T, atol=1e-14)
    prop = StagePropagator(materialize(model))
    h = 1e-5
    dp = (np.abs(prop.apply(psi, h)) ** 2 - np.abs(prop.apply(psi, -h)) ** 2) / (2 * h)
    np.testing.assert_allclose(np.asarray(cur.sum(axis=1)).ravel(), dp, atol=1e-6)


def test_config_currents_zero_for_diagonal_state(rng):
    model = _random_model(rng, L=3, N=2)
    rho = np.diag(rng.dirichlet(np.ones(model.basis.dim))).astype(complex)
    assert abs(config_currents(rho, model)).max() == 0.0
    with pytest.raises(ValueError):
        config_currents(rho, build_lemma_hamiltonian(1, 3))


def test_trajectory_layout(rng):
    model = _random_model(rng)
    psi = random_state(model.basis, rng)
    c = cost_matrix(model.geometry, 1.0)
    traj = evolve(psi, [Stage(model, 0.5), Stage(model, 0.25)], samples_per_stage=9, cost=c,
                  record_probabilities=True)
    assert traj.times.shape == (18,)
    assert traj.times[8] == traj.times[9] == pytest.approx(0.5)
    assert traj.duration == pytest.approx(0.75)
    np.testing.assert_allclose(traj.concentrations.sum(axis=1), 1.0)
    np.testing.assert_allclose(traj.probabilities.sum(axis=1), 1.0)
    assert traj.velocity.shape == (18,)


def test_density_and_pure_evolution_agree(rng):
    model = _random_model(rng)
    psi = random_state(model.basis, rng)
    a = evolve(psi, [Stage(model, 1.0)], samples_per_stage=5)
    bb = evolve(np.outer(psi, psi.conj()), [Stage(model, 1.0)], samples_per_stage=5)
    np.testing.assert_allclose(a.concentrations, bb.concentrations, atol=1e-12)
    np.testing.assert_allclose(a.flows, bb.flows, atol=1e-12)


def test_csv_output(tmp_path, rng):
    model = _random_model(rng)
    traj = evolve(random_state(model.basis, rng), [Stage(model, 0.3)], samples_per_stage=4,
                  cost=cost_matrix(model.geometry, 1.0))
    traj.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].startswith("t,x_0") and len(lines) == 5


def test_bad_inputs(rng):
    model = _random_model(rng)
    with pytest.raises(ValueError):
        evolve(np.ones(model.basis.dim), [Stage(model, 1.0)])
    with pytest.raises(ValueError):
        Stage(model, 0.0)
    with pytest.raises(ValueError):
        evolve(random_state(model.basis, rng), [])


def test_norm_abort(rng, monkeypatch):
    # a propagator that leaks norm must trigger the abort
    import importlib

    ev = importlib.import_module("macrotransport.evolve")
    orig = ev.StagePropagator.apply
    monkeypatch.setattr(ev.StagePropagator, "apply", lambda self, psi, t: 0.99 * orig(self, psi, t))
    model = _random_model(rng)
    with pytest.raises(EvolutionError, match="norm drift"):
        evolve(random_state(model.basis, rng), [Stage(model, 1.0)])
