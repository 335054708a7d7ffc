"""
Harmonic measure by walk on spheres
===================================

In the upper half-plane the harmonic measure of an interval seen from a
point is the angle it subtends divided by pi.  That gives an exact target
for the Monte Carlo estimator.
"""

# %%
import math

from bilex import audit

zeta = 0.3 + 1.0j
x, y = zeta.real, zeta.imag
arcs = {"(-inf, x-y)": [(-math.inf, x - y)], "(x-y, x-y/2)": [(x - y, x - y / 2)]}
for label, E in arcs.items():
    est = audit.harmonic_measure_mc("halfplane", zeta, E, walks=100_000, seed=0)
    exact = audit.halfplane_harmonic_measure(zeta, E)
    print(f"{label:>14s}  walks {est.value:.5f} +- {est.stderr:.5f}   exact {exact:.5f}")

# %%
# The second interval subtends (pi/4 - atan(1/2)) / pi, about 0.1024.  The
# value 1/12 sometimes quoted for it is smaller, so it still works as a
# lower bound.
print("1/12 =", 1 / 12)

# %%
# The projection bounds for a domain whose boundary meets the circle of
# radius rho.  Here the domain is the region to the left of the bend.
import bilex

bend = bilex.bend_curve()
for zeta, rho in ((-0.5 + 0.5j, 2.0), (-2 + 1j, 1.0)):
    E = bilex.param_set_in_disk(bend, rho)
    est = audit.harmonic_measure_mc((bend, "left"), zeta, E, walks=50_000, seed=2)
    print(audit.bn_bounds_check((bend, "left"), zeta, rho, est))
