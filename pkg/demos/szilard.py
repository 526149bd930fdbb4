"""One-bit Szilard engine with an information battery.

With trivial Hamiltonians (Gamma = I on both sides) the only resource is
purity.  Letting a particle of known position expand to fill the box turns a
pure qubit into a maximally mixed one and yields one bit of work; erasing an
unknown bit costs one bit.  Both numbers come out of the semidefinite program
and agree with the closed forms.
"""

import numpy as np

from cohrelkit import cohrel as cr

g = np.eye(2, dtype=complex)
mixed = g / 2

expand = cr.special_cases("pure_input", rho_out=mixed, gamma_in=g, gamma_out=g, index=0)
erase = cr.special_cases("pure_output", sigma=mixed, gamma_in=g, gamma_out=g, index=0)

for label, case in (("expansion of a known position", expand), ("erasure of an unknown bit", erase)):
    res = cr.cohrel_nonsmooth(case.details["process"], g, g)
    work = cr.work_from_bits(res.value_bits, 300.0)
    print(f"{label:32s} program {res.value_bits:+.6f} bits   closed form {case.value_bits:+.6f} bits"
          f"   ({work:+.3e} J at 300 K)")
