import math

import numpy as np
import pytest

from macrotransport.bounds import BoundParams, theorem1_check
from macrotransport.evolve import Stage
from macrotransport.fock import random_state
from macrotransport.lattice import build_lattice, cost_matrix, hypercubic_shell_constant
from macrotransport.protocols import (
    ProtocolSchedule,
    execute_protocol,
    finite_U_convergence,
    lemma_schedule,
    sequential_mott_transfer,
    stage_time,
    stepwise_time_limit,
    supersonic_time,
    supersonic_transfer,
)


def test_stage_times():
    J = 1.3
    assert stage_time(3, 7, J=J) == pytest.approx(math.pi / (2 * J))
    assert stage_time(1, 5, J=J) == pytest.approx(math.pi / (2 * J * 5))
    M = 6
    assert stage_time(2, M, M, J) == pytest.approx(math.pi / (2 * J * M * math.sqrt(M)))
    assert stage_time(4, M, M, J) == pytest.approx(math.pi / (2 * J * math.sqrt(M)))
    for bad in [(1, 2), (2, 4, 0), (5, 4)]:
        with pytest.raises(ValueError):
            stage_time(*bad)


@pytest.mark.parametrize("lemma", [1, 3])
@pytest.mark.parametrize("M", range(3, 9))
def test_exact_lemmas(lemma, M):
    assert execute_protocol(lemma_schedule(lemma, M)).fidelity >= 1 - 1e-10


def test_half_duration_is_incomplete():
    res = execute_protocol(lemma_schedule(3, 5), time_fraction=0.5)
    assert res.fidelity < 0.9


def test_finite_U_lemma4():
    tab = finite_U_convergence(4, 4, 4, 1.0, [1e3, 1e4, 1e5, 1e6])
    fids = [r["fidelity"] for r in tab["rows"]]
    assert fids == sorted(fids)
    assert fids[-1] >= 0.999
    assert tab["fit"]["exponent"] > 0
    with pytest.raises(ValueError):
        finite_U_convergence(1, 4, 4, 1.0, [1e3])
    with pytest.raises(ValueError):
        finite_U_convergence(4, 4, 4, 1.0, [1e4, 1e3])


def test_U_zero_control_fails():
    sched = lemma_schedule(4, 4, 4, 1.0, 1e-12)
    assert execute_protocol(sched).fidelity < 0.9


def test_sequential_mott_time_and_fidelity():
    L, N, J = 6, 4, 1.0
    sched = sequential_mott_transfer(L, N, J, 1e5)
    assert sched.analytic_time == pytest.approx((L - 1) * (math.pi / (2 * J) + math.pi / (J * math.sqrt(N))))
    assert sched.n_stages == 3 * (L - 1)
    res = execute_protocol(sched)
    assert res.fidelity >= 0.99
    assert min(res.stage_fidelities) >= 0.99
    assert res.spectator_drift <= 1e-12


def test_sequential_mott_single_step():
    sched = sequential_mott_transfer(2, 3)
    assert sched.n_stages == 3
    assert execute_protocol(sched).fidelity >= 0.99


def test_sequential_mott_obeys_time_bound():
    res = execute_protocol(sequential_mott_transfer(5, 3))
    g = build_lattice(1, [5])
    rep = theorem1_check(res.trajectory, g, [0], [4], BoundParams(1.0, 3.0, 1, gamma=hypercubic_shell_constant(1)))
    assert rep.status == "pass"
    assert rep.details["ratio"] > 1


def test_supersonic_time():
    assert supersonic_time(4) == pytest.approx(3 * math.pi / 4)
    assert supersonic_time(10**8) == pytest.approx(math.pi / 2, rel=1e-3)
    for L in range(3, 65):
        assert supersonic_time(L) < math.pi


def test_supersonic_L4():
    sched = supersonic_transfer(4, 1.0, 1e5)
    assert sched.analytic_time == pytest.approx(3 * math.pi / 4)
    res = execute_protocol(sched)
    assert res.fidelity >= 0.99
    assert res.spectator_drift <= 1e-12
    rep = theorem1_check(res.trajectory, build_lattice(1, [4]), [0], [3], BoundParams(1.0, 3.0))
    assert rep.status == "out_of_scope"


def test_supersonic_stepwise_variant():
    L = 4
    sched = supersonic_transfer(L, 1.0, 1e5, "stepwise")
    expected = (L - 1) * sum(stage_time(2, L, j) for j in range(1, L + 1))
    assert sched.analytic_time == pytest.approx(expected)
    assert execute_protocol(sched).fidelity >= 0.99
    # per bond sum_j pi / (2 L sqrt(j (L-j+1))) ~ pi^2 / (2 L), so the full chain tends to pi^2 / 2
    big = 4000
    per_bond = sum(stage_time(2, big, j) for j in range(1, big + 1)) * big
    assert per_bond == pytest.approx(stepwise_time_limit(), rel=2e-2)
    with pytest.raises(ValueError):
        supersonic_transfer(4, variant="other")


def test_spectators_untouched_by_random_initial_state(rng):
    sched = sequential_mott_transfer(4, 3)
    psi = random_state(sched.basis, rng)
    res = execute_protocol(sched, initial=psi, samples_per_stage=6)
    # with a generic state spectators may still move through later stages, but never within a stage
    assert res.spectator_drift <= 1e-12


def test_schedule_consistency_check():
    sched = lemma_schedule(3, 4)
    with pytest.raises(ValueError, match="sum"):
        ProtocolSchedule("bad", sched.basis, sched.stages, sched.initial, sched.target, 1.0)


def test_protocol_trajectory_records_velocity():
    sched = lemma_schedule(3, 4)
    c = cost_matrix(build_lattice(1, [2]), 1.0)
    res = execute_protocol(sched, cost=c)
    assert res.trajectory.velocity is not None
    summary = res.summary()
    assert summary["protocol"] == "lemma3" and summary["fidelity"] == res.fidelity
