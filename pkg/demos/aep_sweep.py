"""Per-copy smooth value of tensor powers approaching the relative-entropy difference.

For a Gibbs-to-Gibbs qubit process the smooth value of n copies exceeds n
times the limit by exactly log 1/(1 - eps^2), so the per-copy excess decays as
1/n.  For a generic qubit process the per-copy value stays inside the smooth
entropic sandwich.  Prints CSV tables (n <= 3, program dimension up to 64).
"""

from cohrelkit import cohrel as cr
from cohrelkit import verify as vf

eps = 0.1
pm, gi, go, _ = vf.aep_gibbs_instance()
print("# Gibbs-to-Gibbs family")
print(cr.aep_study(pm, gi, go, eps, 3).to_csv())

pm, gi, go = vf.aep_generic_instance()
print("# generic qubit instance")
print(cr.aep_study(pm, gi, go, eps, 3).to_csv())
