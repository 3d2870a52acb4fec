"""
Coulomb kernel: the unit ball
=============================

With the isotropic profile the kernel is 1/|x| and the minimiser is the
uniform law on the unit ball. This script recovers it numerically and
checks the potential against its closed form (3 - |x|^2)/2.
"""

import numpy as np

from ellipsolve import CandidateMeasure, Profile, energy, solve_equilibrium, verify_euler_lagrange
from ellipsolve.potential import potential

# The profile is stored as a spherical-harmonic expansion; its transform is constant.
profile = Profile.coulomb()
print("Psi_hat at the poles:", profile.hat(np.eye(3)))

# Newton on the shape matrix, started from the best multiple of the identity.
sol = solve_equilibrium(profile)
print("semi-axes:", sol.shape.semiaxes, "residual:", f"{sol.residual:.1e}")

# Inside the ball the potential is quadratic, outside it is 1/|x|.
r = np.array([0.0, 0.5, 1.0, 2.0, 4.0])
pts = np.column_stack([r, np.zeros_like(r), np.zeros_like(r)])
closed = np.where(r <= 1, (3 - r**2) / 2, 1 / np.maximum(r, 1e-300))
print("potential:", potential(profile, sol.shape, pts))
print("closed form:", closed)

# The stationarity checks: P = potential + |x|^2/2 is flat on the ball and grows outside.
rep = verify_euler_lagrange(profile, sol.shape)
print(f"plateau {rep.plateau:.6f}, spread {rep.constancy_residual:.1e}, exterior min {rep.exterior_min:.3f}")

# Energy of the law: interaction 6/5 plus confinement 3/5.
e = energy(profile, CandidateMeasure.ellipsoid(sol.shape))
print(f"energy {e.value:.10f} (interaction {e.interaction:.6f}, confinement {e.confinement:.6f})")
