"""
Quadratic profiles
==================

For Psi = sum alpha_i x_i^2 the transform is a quadratic form in xi. When
one alpha equals the sum of the other two it touches zero, yet the
minimiser stays a solid ellipsoid. The profile 1 + x1^2 is of that kind
and gives a spheroid flattened along e1.
"""

import numpy as np

from ellipsolve import Profile, continuation_solve, positivity_scan, solve_equilibrium
from ellipsolve.equilibrium import p_quadratic

shifted = Profile.from_polynomial([((0, 0, 0), 1.0), ((2, 0, 0), 1.0)])
print("min Psi_hat:", f"{positivity_scan(shifted.psi_hat).min_value:.1e}")

sol = solve_equilibrium(shifted)
print("semi-axes:", sol.shape.semiaxes)
print("axis directions (columns):\n", np.round(sol.shape.rotation, 10))

axial = Profile.from_polynomial([((2, 0, 0), 1.0), ((0, 2, 0), 1.0), ((0, 0, 2), 2.0)])
res = continuation_solve(axial)
ratios = [e.semiaxes[2] / e.semiaxes[0] for e in res.continuation_trace]
print(res.classification.value, "with a3/a1 between", f"{min(ratios):.3f} and {max(ratios):.3f}")

# The flat-limit test function keeps one sign, so no flat limit is possible.
for t in np.geomspace(0.1, 10, 5):
    print(f"p({t:.3g}) = {p_quadratic(t, 1.0, 1.0):+.4f}")
