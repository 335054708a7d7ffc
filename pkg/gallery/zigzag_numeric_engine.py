"""
Curves with several corners
===========================

Polylines with more than one knot go through a Schwarz-Christoffel solver.
It is only used after it reproduces the exact sector maps.
"""

# %%
import time

import numpy as np

import bilex
from bilex import conformal

gate = conformal.promotion_gate()
for case in gate["cases"]:
    print(case["curve"], case["knots"], f"{case['max_rel_error']:.1e}")

# %%
c = bilex.zigzag_curve()
print("knots:", c.params, "L =", c.lip_upper, "l =", round(c.lip_lower, 4))

t0 = time.perf_counter()
F = bilex.build_extension(c)
print(f"built in {time.perf_counter() - t0:.2f}s")
print("prevertices:", F.upper.phi.prevertices)

# %%
# Close to the line, the upper and lower constructions meet at f(x).
x = np.linspace(-3, 3, 7)
for eps in (1e-2, 1e-4, 1e-6):
    gap = np.max(np.abs(F(x + 1j * eps) - F(x - 1j * eps)))
    print(f"eps = {eps:.0e}  jump across the line = {gap:.2e}")

# %%
# Pointwise distortion against the theorem's constants.
rng = np.random.default_rng(1)
z = rng.uniform(-4, 4, 2000) + 1j * rng.choice([-1, 1], 2000) * np.exp(rng.uniform(-4, 1, 2000))
print(bilex.lip1_check(F, z))
