"""
A quartic profile whose minimiser is flat
=========================================

The profile (sqrt(pi/2)/2)(4 + 3 x3^2 + 3 x3^4) has transform
5 - 9 xi3^2 + 4 xi3^4, which vanishes at the poles. Adding eps to the
transform gives solid ellipsoids; as eps shrinks the vertical semi-axis
collapses and the limit is a semi-ellipsoid law on a horizontal disc.
"""

import math

import numpy as np

from ellipsolve import CandidateMeasure, Profile, continuation_solve, energy, positivity_scan
from ellipsolve.equilibrium import p_quartic
from ellipsolve.potential import hessian_in_plane

k = 0.5 * math.sqrt(math.pi / 2)
profile = Profile.from_polynomial([((0, 0, 0), 4 * k), ((0, 0, 2), 3 * k), ((0, 0, 4), 3 * k)])

scan = positivity_scan(profile.psi_hat)
print(f"min Psi_hat = {scan.min_value:.1e} at {np.round(scan.argmin, 6)}")

# Continuation in eps, printing the trace as it is produced.
print(f"{'eps':>10} {'a1':>10} {'a3':>12} {'a3/a1':>10}")


def show(entry):
    a = entry.semiaxes
    print(f"{entry.eps:10.3e} {a[0]:10.6f} {a[2]:12.6e} {a[2] / a[0]:10.3e}")


res = continuation_solve(profile, callback=show)
print("classification:", res.classification.value)
print("disc semi-axes:", res.shape.semiaxes[:2], "normal:", np.round(res.shape.normal, 12))

# On the disc the in-plane Hessian of the potential is -I, as for a stationary law.
print("in-plane Hessian:\n", hessian_in_plane(profile, res.shape))
print(f"energy {energy(profile, CandidateMeasure.ellipsoid(res.shape)).value:.8f}")

# A spheroid could only be stationary where p(t) = 0, and p vanishes only at t = 0.
for t in (0.0, 1e-3, 0.1, 1.0, 10.0):
    print(f"p({t:g}) = {p_quartic(t):+.6f}")
