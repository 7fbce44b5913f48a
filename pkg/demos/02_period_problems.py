# %% [markdown]
# # Closing the periods
#
# A set of Weierstrass data gives a well-defined surface only when the real
# part of every closed-loop integral vanishes.  The M_2+ family has one free
# parameter and one handle period, so we look for a sign change.  M_3 has two
# periods and two parameters, so we use a degree (winding-number) argument.

# %%
from scherk.solvers import (FamilySpec, solve_family, sweep, sign_changes, Rect2D,
                            m3_period_map, sign_grid, winding_number)

# %% [markdown]
# ## A one-parameter sweep for M_2+
#
# The handle period as a function of v1, with e1 = 2 fixed.

# %%
spec = FamilySpec("m2plus", fixed={"e1": 2.0})
rows = sweep(spec, 25)
for v, period, _ in rows[::3]:
    print(f"v1 = {v:.6f}   period = {period:+.3e}")
print("sign changes between samples:", sign_changes(rows))

# %%
sol = solve_family(spec)
print("solved v1 =", sol.params.v1)
print("closure residual / scale =", sol.report.max_residual / sol.report.scale)

# %% [markdown]
# ## A two-parameter problem for M_3--
#
# The map (v1, v2) -> (both handle periods) winds once around zero on the
# boundary of the search box.  Quadrisection keeps the child with non-zero
# winding until Newton can polish the point.

# %%
box = {"v1": [11.0, 15.0], "v2": [2.1, 2.45]}
spec3 = FamilySpec("m3mm", fixed={"s1": 1.5}, box=box)
F = m3_period_map(spec3)
rect = Rect2D(*box["v1"], *box["v2"])
print("winding number on the box boundary:", winding_number(F, rect))
_, all_patterns = sign_grid(F, rect, 12)
print("coarse sign grid shows all four sign patterns:", all_patterns)

# %%
sol3 = solve_family(spec3)
print("v1, v2, e1 =", sol3.params.v1, sol3.params.v2, sol3.params.e1)
print("certificate:", sol3.certificate)
