"""Coarse-grained observers and the Petz recovery map.

A fine-grained observer sees a system S together with a reservoir R; a
coarse-grained one only sees S.  The partial trace F = tr_R relates the two
pictures and the Petz map R of F (with respect to Gamma_SR) goes back.  Any
Gamma-sub-preserving operation in one picture becomes one in the other.
"""

import numpy as np

from cohrelkit import linalg as la
from cohrelkit import process as proc

gs = np.diag([1.0, np.exp(-1.0)]).astype(complex)
g_r = np.diag([1.0, np.exp(-0.5), np.exp(-2.0)]).astype(complex)
ga = np.kron(gs, g_r)
f = proc.partial_trace_channel(2, 3)
gb = la.hermitize(proc.apply(f, ga))
r = proc.petz_recovery(f, ga)
print(f"|| R(Gamma_S) - Gamma_SR || = {la.opnorm(proc.apply(r, gb) - ga):.2e}")

for seed in range(5):
    fine = proc.random_subpreserving_map(seed, ga, ga)
    coarse = proc.compose(f, proc.compose(fine, r))
    coarse2 = proc.random_subpreserving_map(100 + seed, gb, gb)
    fine2 = proc.compose(r, proc.compose(coarse2, f))
    print(f"seed {seed}: Gamma factor fine->coarse {proc.gamma_factor(coarse, gb, gb):.6f}, "
          f"coarse->fine {proc.gamma_factor(fine2, ga, ga):.6f}")
