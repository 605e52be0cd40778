# Polyhedral mass of a conformal perturbation of hyperbolic space, compared
# with the round-sphere flux.  Run from the repo root: python demos/mass_from_boxes.py
import numpy as np

from ahmass import builtin_family, cube_box, polyhedral_mass, sphere_mass

field = builtin_family("conformal", m=1.0, tau_prime=3.0)

# exact value of the sphere flux for this family is 32 pi m tanh^3 r
for r in (2.0, 4.0, 6.0):
    print(f"sphere r={r}: {sphere_mass(field, r):.6f}  exact {32 * np.pi * np.tanh(r) ** 3:.6f}")

# boxes [-L, L]^2 x [1/L, L] exhaust the half-space
for L in (4, 8, 16):
    mb = polyhedral_mass(field, cube_box(L))
    print(f"box L={L:>2}: flux {mb.flux_total:.6f}  quad err {mb.quad_error:.1e}")

# The face flux alone converges slowly; the corrected mass with the
# curvature and angle terms is in theorem_identity.py.
