"""
Extending the simplest curves
=============================

For the real line itself the extension has a closed form, which makes it
a good first look at what the package computes.
"""

# %%
# The identity embedding is the curve f(t) = t.  Its conformal maps are the
# identity and the boundary reparametrisation psi is the identity too.
import numpy as np

import bilex

F = bilex.build_extension(bilex.identity_curve())
z = np.array([1 + 1j, -2 + 0.5j, 3 - 2j])
print("z    :", z)
print("F(z) :", F(z))

# %%
# The averaging extension of the identity halves the imaginary part, so its
# inverse doubles it: F(x + iy) = x + 2iy.  The Jacobian is diag(1, 2).
print(F.jacobian(z[:1]))

# %%
# An affine curve f(t) = 2t + 3 behaves the same way up to scaling.
G = bilex.build_extension(bilex.affine_curve())
print("G(1+i) =", G(1 + 1j))
d = bilex.F_diagnostics(G, np.array([1 + 1j]))
print("|DG| =", d.norm_DF[0], " |DG^-1| =", d.norm_DF_inv[0])

# %%
# The theorem only promises |DF| <= 2000 L and |DF^-1| <= 120 / l, so these
# examples sit far inside the bounds.
print("bounds:", G.Lp_bound, 1 / G.lp_bound)
