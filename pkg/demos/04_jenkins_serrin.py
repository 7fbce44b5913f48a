# %% [markdown]
# # Jenkins-Serrin graphs on a truncation ladder
#
# Over the unit square the minimal surface equation is solved with boundary
# values +n and -n on alternating segments of one side.  As n grows, the
# graph approaches the one with infinite boundary data.  We watch three
# quantities along the ladder: total absolute curvature, the neck width
# between consecutive strips, and how vertical the normals become high up.

# %%
import math

from scherk.plateau import (JSProblem, check_admissible, solve_graph, total_abs_curvature,
                            neck_distance, normal_profile)

# %%
prob = JSProblem(ell=2, grid=(96, 96))
print("admissible:", check_admissible(prob).admissible)

for n in (1, 2, 4, 8):
    sol = solve_graph(prob.with_n(n))
    prof = normal_profile(sol)
    print(f"n = {n}: curvature {total_abs_curvature(sol):.3f} "
          f"(bound {math.pi * (prob.ell + 1):.3f}), neck {neck_distance(sol):.4f} "
          f"(limit {1 / prob.ell}), strip signs {prof.strip_signs}, "
          f"top half non-increasing {prof.top_half_nonincreasing()}")

# %% [markdown]
# The neck estimate carries an O(1/N) grid error.  Refining the grid moves it
# toward 1/ell.

# %%
for N in (32, 64, 128):
    sol = solve_graph(JSProblem(ell=2, n=8, grid=(N, N)))
    print(f"grid {N}: neck {neck_distance(sol):.4f}")
