# %% [markdown]
# # Weierstrass data for the M_k+ and M_3 families
#
# Every surface in the package is described by two rational functions on the
# Riemann sphere: the squared Gauss map g^2 and the height differential eta.
# Both are stored in factored form (scale times a product of (z - a)^m), so
# zeros, poles and residues can be read off directly.

# %%
import math

import numpy as np

from scherk.families import (MkPlusParams, M3Params, build_weierstrass, solve_v4_v5,
                             solve_e1_cubic, end_constraint_residuals, params_to_dict)

# %% [markdown]
# ## M_2+ with one handle
#
# The marked points are 0 < v5 < v4 < ... on the real axis.  For k = 2 the
# two end constraints g^2(1) = g^2(e1) = 1 are solved exactly for v4 and v5
# once s, e1 and v1 are fixed.

# %%
s, e1, v1 = math.sqrt(2), 2.0, 2.372182693580526
v4, v5 = solve_v4_v5(s, e1, v1)
p = MkPlusParams(2, v1, v4, v5, (s,), (e1,))
d = build_weierstrass(p)
print("v4, v5 =", v4, v5)
print("g^2 =", d.gSquared)
print("end residuals:", end_constraint_residuals(d))

# %% [markdown]
# The Gauss map satisfies g^2(-z) g^2(z) = 1, the algebraic shadow of the
# reflection symmetry of the surface.

# %%
zs = np.array([0.3 + 0.4j, -1.7 + 0.2j, 2.5 - 1.1j])
print("max |g^2(-z) g^2(z) - 1| =", np.max(np.abs(d.gSquared(-zs) * d.gSquared(zs) - 1)))

# %% [markdown]
# ## M_3 with two handles
#
# Here the end condition at 1 holds automatically and the one at e1 becomes a
# cubic in e1^2.  Every admissible root yields valid data.

# %%
for v1_, v2, s1 in [(12.9, 2.26, 1.5), (6.0, 3.0, 2.0)]:
    for e in solve_e1_cubic(v1_, v2, s1):
        q = M3Params("minus_minus", v1_, v2, s1, e)
        dq = build_weierstrass(q)
        print(params_to_dict(q))
        print("   g^2(0) =", dq.gSquared(0.0), " g^2(1) =", dq.gSquared(1.0),
              " ends:", max(end_constraint_residuals(dq)))
