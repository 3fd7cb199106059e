"""Tour of the space and packing layers.

Builds a few finite metric spaces, checks packing validity by hand, and lets
the exact solver pick a best-weight packing.  Run with ``python3
demos/01_spaces_and_packings.py``; everything is deterministic.
"""

import numpy as np

from coarseconf import (
    Ball,
    gen_space,
    is_packing,
    max_weight_packing,
    packing_multiplicity,
)

# A path, a square grid and a binary tree.  Grids keep their coordinates and
# measure distance in the l1 metric, so the full n^2 matrix is never built.
path = gen_space({"kind": "path", "n": 12})
grid = gen_space({"kind": "grid", "d": 2, "n": 5})
tree = gen_space({"kind": "tree", "arity": 2, "depth": 4})
for sp in (path, grid, tree):
    print(f"{sp.kind:10s} n={sp.n:3d} diameter={sp.diameter:g}")

# Two balls form an (l, R, S)-packing when their l-scaled member sets are
# disjoint.  On a path, B(2, 2) and B(8, 2) are far enough apart at scale 1
# but their doubled versions collide.
balls = [Ball(2, 2.0), Ball(8, 2.0)]
ok = is_packing(path, balls, l=1.0, R=1.0, S=4.0)
clash = is_packing(path, balls, l=2.0, R=1.0, S=4.0)
print("\nscale 1:", ok.valid, "| scale 2:", clash.valid, "-", clash.reason)
assert ok.valid and not clash.valid

# Multiplicity counts how many packings a family needs.  Three overlapping
# grid balls cannot be split into fewer than two.
family = [Ball(12, 2.0), Ball(13, 2.0), Ball(24, 1.0)]
mult = packing_multiplicity(grid, family, l=1.0)
print("family multiplicity:", mult.n_colors, "coloring:", mult.coloring)

# The solver maximizes total weight over all valid sub-packings.  Candidates
# whose scaled members overlap exclude each other; the returned witness is
# itself a valid packing.
cands = [Ball(c, 1.0) for c in range(1, 11)]
weights = np.linspace(1.0, 2.0, len(cands))
sol = max_weight_packing(path, cands, weights, l=2.0, R=1.0, S=1.0)
print("\nbest packing centers:", [b.center for b in sol.balls],
      "value", round(sol.value, 3), "exact" if sol.exact else "greedy")
assert is_packing(path, sol.balls, 2.0, 1.0, 1.0).valid
print("demo ok")
