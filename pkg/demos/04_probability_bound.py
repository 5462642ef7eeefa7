"""
How likely is an early arrival?
===============================

Start with all bosons near a corner of a 3x3 grid, run a random power-law
hopping protocol, and track the probability that a far region already holds
at least N0 + dN0 bosons. That probability grows at most linearly in time,
with a slope set by kappa_2 N / (dN0 d^alpha_eps).
"""

import numpy as np

from macrotransport.bounds import BoundParams, probability_bound, theorem2_check
from macrotransport.evolve import evolve
from macrotransport.fock import enumerate_basis
from macrotransport.harness import random_protocol
from macrotransport.lattice import build_lattice, set_distance

g = build_lattice(2, [3, 3])
N, N0, dN0 = 3, 0, 1
X = [0, 1, 3]
Y = [8]
basis = enumerate_basis(g.n_sites, N)
Xc = sorted(g.complement(X))
support = basis.configs[:, Xc].sum(axis=1) <= N0
sched = random_protocol(11, g, N, alpha=3.5, stage_count=4, horizon=4.0, initial_support=support)
traj = evolve(sched.initial_state(), sched.stages, samples_per_stage=21, record_probabilities=True)

p = BoundParams(J=1.0, alpha=3.5, D=2)
d = set_distance(g, X, Y)
hit = basis.configs[:, Y].sum(axis=1) >= N0 + dN0
prob = traj.probabilities[:, hit].sum(axis=1)
for k in range(0, len(traj.times), 14):
    t = traj.times[k]
    print(f"t = {t:6.3f}   P = {prob[k]:.3e}   bound = {probability_bound(p, N, dN0, t, d):.3e}")

rep = theorem2_check(traj, g, X, Y, N0, dN0, p)
print(rep.status, f"max P/bound = {rep.details['max_ratio']:.2e}")
