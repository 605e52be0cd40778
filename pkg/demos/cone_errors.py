# Error integrals over the thin-cone family: one side edge (E1), one base
# edge (E2), the base face and one side face, as eps shrinks.
import numpy as np

from ahmass import QuadratureSpec
from ahmass.experiments import cone_sweep_rows

tau = 2.0
quad = QuadratureSpec(max_depth=60, atol=1e-300)
eps = 2.0 ** -np.arange(3, 8)

rows = cone_sweep_rows(6, 3.0, tau, eps, quad)
cols = ["eps", "E1", "E2", "base_face", "side_face", "E1_top"]
print(" ".join(f"{c:>11}" for c in cols))
for r in rows:
    print(" ".join(f"{r[c]:11.4e}" for c in cols))

for c in cols[1:]:
    y = np.array([r[c] for r in rows])
    print(f"{c}: fitted exponent {np.polyfit(np.log(eps), np.log(y), 1)[0]:.2f}")

# The base edges sit at horizontal distance ~ rho = eps^-s from the base
# point, so E2 picks up an extra rho^-(4 tau - 3) and decays like eps^17
# here, far faster than the eps^(2 tau - 2) the sweep's check expects.
