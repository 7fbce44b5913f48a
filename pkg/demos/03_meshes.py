# %% [markdown]
# # From Weierstrass data to a triangle mesh
#
# The parameter domain is triangulated and each vertex is placed at
# F = Re of the integral of phi along a spanning tree.  The piece that comes
# out is bounded by planar symmetry curves, so mirror reflections and lattice
# translations rebuild the whole periodic surface.

# %%
from pathlib import Path

import numpy as np

from scherk import mesh as M
from scherk.families import build_weierstrass, conjugate
from scherk.solvers import FamilySpec, solve_family

# artifacts go to ./demo_out under the current directory
out = Path("demo_out")
out.mkdir(exist_ok=True)

# %% [markdown]
# ## A sanity check: the catenoid
#
# Every vertex should satisfy x1^2 + x2^2 = cosh^2(x3).

# %%
cat = build_weierstrass("catenoid")
m, pm = M.build_mesh(cat, 16)
print(len(m.vertices), "vertices; oracle residual", M.oracle_residual(m, "catenoid"))

# %% [markdown]
# ## M_2+: one eighth, then the fundamental piece
#
# The first quadrant of the parameter plane maps to a patch bounded by curves
# in the three coordinate mirror planes.

# %%
d = build_weierstrass(solve_family(FamilySpec("m2plus", fixed={"e1": 2.0})).params)
eighth, pm = M.build_mesh(d, 16, "eighth")
for label, rep in sorted(M.boundary_curve_report(eighth).items()):
    print(f"{label:10s} plane residual {rep['plane_residual']:.1e}")

# %% [markdown]
# The conjugate surface uses data (g, i eta) and is isometric to the
# original.  Planar symmetry curves turn into straight lines.

# %%
conj = M.integrate_surface(conjugate(d), pm)
print("max line residual on the conjugate:",
      max(r["line_residual"] for r in M.boundary_curve_report(conj).values()))

# %%
piece = M.fundamental_piece(eighth)
print("fundamental piece:", len(piece.vertices), "vertices,", piece.info["copies"], "copies,",
      "weld gap", piece.info["weld_gap"])

# %% [markdown]
# ## Tiling by the period lattice

# %%
t1, t2 = M.translation_vectors(d)
print("lattice:", np.round(t1, 6), np.round(t2, 6))
tiled = M.tile_periodic(piece, t2, t1, (2, 2))
print(M.export_obj(tiled, out / "m2plus_2x2.obj"))
