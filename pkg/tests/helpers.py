"""Brute-force oracles shared by the test modules.

Everything here is written independently of the library internals: packings
are enumerated as raw subsets, chromatic numbers by trying all colorings.
"""

import itertools

import numpy as np

from coarseconf.space import scale_ball


def brute_max_weight(space, candidates, weights, l, R, S):
    """Enumerate every subset of candidates; lex-smallest optimum."""
    idx = [i for i, b in enumerate(candidates) if R - 1e-12 <= b.radius <= S + 1e-12]
    masks = []
    for i in idx:
        m = np.zeros(space.n, dtype=bool)
        m[space.ball_members(scale_ball(space, candidates[i], l))] = True
        masks.append(m)
    best_val, best_set = 0.0, ()
    for r in range(len(idx) + 1):
        for combo in itertools.combinations(range(len(idx)), r):
            cov = np.zeros(space.n, dtype=bool)
            ok = True
            for k in combo:
                if (cov & masks[k]).any():
                    ok = False
                    break
                cov |= masks[k]
            if not ok:
                continue
            val = sum(weights[idx[k]] for k in combo)
            cand = tuple(sorted(idx[k] for k in combo))
            if val > best_val + 1e-12 or (abs(val - best_val) <= 1e-12 and cand < best_set):
                best_val, best_set = val, cand
    return best_val, list(best_set)


def brute_chromatic(conf):
    m = conf.shape[0]
    for k in range(1, m + 1):
        for assign in itertools.product(range(k), repeat=m):
            if all(assign[i] != assign[j]
                   for i in range(m) for j in range(i + 1, m) if conf[i, j]):
                return k
    return m


def dense_radius_grid(space, R, S):
    """Realized distances plus midpoints, clipped to [R, S]."""
    vals = np.unique(space.matrix.ravel())
    vals = vals[(vals <= S + 1e-12)]
    grid = set()
    for v in vals:
        grid.add(max(R, float(v)))
    arr = sorted(grid)
    for a, b in zip(arr[:-1], arr[1:]):
        grid.add((a + b) / 2.0)
    if np.isfinite(S):
        grid.add(float(S))
    return sorted(x for x in grid if R - 1e-12 <= x <= S + 1e-12)


def brute_energy(space, u, p, l, R, S):
    """Max over subsets of a dense (center, radius) universe of sum osc**p."""
    from coarseconf.space import Ball

    u = np.asarray(u, dtype=float)
    cands, weights = [], []
    for x in range(space.n):
        for r in dense_radius_grid(space, R, S):
            b = Ball(x, r)
            mem = space.ball_members(b)
            cands.append(b)
            weights.append(float(u[mem].max() - u[mem].min()) ** p)
    val, _ = brute_max_weight(space, cands, weights, l, R, S)
    return val
