"""
Moving a crowd across a single bond
===================================

Two sites, M bosons. With plain hopping J the state |M-1, 1> turns into
|1, M-1> after pi/(2J), independent of M. Adding the density-assisted
tunnelling term turns the two-site problem into a Sylvester-Kac ladder whose
couplings grow like M, and the same transfer finishes M times sooner.
"""

import math

import numpy as np

from macrotransport.kac import corner_amplitude, kac_spectrum
from macrotransport.protocols import execute_protocol, lemma_schedule, stage_time

# hopping only: the time does not shrink with M
for M in (3, 5, 8):
    res = execute_protocol(lemma_schedule(3, M))
    print(f"hopping     M={M}: t = {stage_time(3, M):.4f}  fidelity = {res.fidelity:.12f}")

# hopping plus tunnelling: t = pi / (2 J M)
for M in (3, 5, 8):
    res = execute_protocol(lemma_schedule(1, M))
    print(f"tunnelling  M={M}: t = {stage_time(1, M):.4f}  fidelity = {res.fidelity:.12f}")

# %%
# Why it works: the ladder has the integer spectrum M, M-2, ..., -M, so a
# quarter period returns every eigencomponent with a phase of +-1 or +-i.
# The corner element of exp(-i pi G / 2) has modulus one.

M = 7
print("spectrum", np.round(kac_spectrum(M), 12))
for M in (3, 5, 7, 9):
    amp = corner_amplitude(M)
    print(f"M={M}: corner amplitude {amp.real:+.3f}{amp.imag:+.3f}i, |.| = {abs(amp):.15f}")

# %%
# With a large on-site energy the degenerate pair |k, M-k>, |k-1, M-k+1>
# decouples from the rest and a single boson moves in pi / (2 J M sqrt(k (M-k+1))).

from macrotransport.protocols import finite_U_convergence

tab = finite_U_convergence(2, 5, 3, 1.0, [1e3, 1e4, 1e5, 1e6])
for row in tab["rows"]:
    print(f"U = {row['U']:.0e}: 1 - F = {row['infidelity']:.3e}")
print(f"1 - F ~ U^-{tab['fit']['exponent']:.3f}")
print(f"stage time {stage_time(2, 5, 3):.5f} vs pi/(2*5*sqrt(9)) = {math.pi / 30:.5f}")
