"""
A right-angle bend
==================

The bend follows the negative imaginary axis and then the positive real
axis.  It has a single corner, so both conformal maps are explicit powers.
"""

# %%
import numpy as np

import bilex
from bilex import audit

c = bilex.bend_curve()
F = bilex.build_extension(c)
print(F.info["upper"])

# %%
# psi is the boundary correspondence read in arc length.  For the bend it
# is sgn(x)|x|^(3/2).
b = F.upper.reparam
x = np.array([-4.0, -1.0, 1.0, 9.0])
print("psi:", b.psi(x))

# %%
# Images of horizontal and vertical grid lines.  ``python -m bilex
# export-grid`` writes the same data as CSV for any plotting tool.
xs = np.linspace(-2, 2, 9)
for y in (-1.0, -0.25, 0.25, 1.0):
    w = F(xs + 1j * y)
    print(f"y = {y:+.2f}:", np.round(w, 3))

# %%
# A distortion audit on a coarse grid with random pairs.
rep = audit.distortion_audit(F, audit.GridSpec(-3, 3, 0.25, -3, 3, 0.25), pairs=20_000, seed=0)
for chk in rep.to_json()["checks"]:
    print(f"{chk['name']:>12s}  pass={chk['pass']}  margin={chk['margin']:.3g}")

# %%
# No extension of the bend can be a (1.1, 0.7)-bilipschitz map.  The check
# below shows where ours leaves that window.
print(audit.example2_obstruction_check(F))
