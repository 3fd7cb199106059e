"""Ball packings: validity, multiplicity, optimal selection, coverings.

A collection of balls with radii in ``[R, S]`` is a valid ``(l, R, S)``-packing
when the ``l``-scaled concentric balls have pairwise disjoint member sets.
Disjointness is tested on member sets, not on radius sums, so the notion is
intrinsic to the finite space.

``max_weight_packing`` realizes packing-supremum quantities as maximum-weight
independent set problems on the conflict graph (vertices = candidate balls,
edges = scaled member sets intersect).  Exact mode is branch and bound, capped
at 40 candidates, with one exception: when every scaled member set is a
contiguous run of point indices (paths, line samples, and other chain-like
universes), the conflict graph is an interval graph and a DP solves the
problem exactly at any size.  Ties are always broken toward the
lexicographically smallest candidate index set.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .space import TOL, Ball, FiniteMetricSpace, QsProductBall, scale_ball

EXACT_CAP = 40
EXACT_COLORING_CAP = 12


class PackingError(ValueError):
    pass


def member_mask(space: FiniteMetricSpace, ball) -> np.ndarray:
    m = np.zeros(space.n, dtype=bool)
    m[space.ball_members(ball)] = True
    return m


def _scaled_masks(space, balls, l) -> List[np.ndarray]:
    return [member_mask(space, scale_ball(space, b, l)) for b in balls]


@dataclass(frozen=True)
class PackingCheck:
    valid: bool
    reason: str = ""
    offender: Optional[tuple] = None


def is_packing(space: FiniteMetricSpace, balls: Sequence, l: float, R: float, S: float) -> PackingCheck:
    """Validity of ``balls`` as an ``(l, R, S)``-packing.

    Product balls on sup-product spaces carry no radius window; only scaled
    disjointness is enforced for them.
    """
    if l < 1.0:
        raise PackingError(f"l must be >= 1, got {l}")
    for idx, b in enumerate(balls):
        if isinstance(b, QsProductBall):
            continue
        if b.radius < R - TOL or b.radius > S + TOL:
            return PackingCheck(False, f"ball {idx} radius {b.radius} outside [{R}, {S}]", (idx,))
    counts = np.zeros(space.n, dtype=np.int32)
    for b in balls:
        counts[space.ball_members(scale_ball(space, b, l))] += 1
    if counts.size and counts.max(initial=0) > 1:
        pt = int(np.argmax(counts))
        hits = [i for i, b in enumerate(balls)
                if member_mask(space, scale_ball(space, b, l))[pt]]
        return PackingCheck(False, f"scaled balls {hits[0]} and {hits[1]} share point {pt}",
                            (hits[0], hits[1]))
    return PackingCheck(True)


def conflict_matrix(space: FiniteMetricSpace, balls: Sequence, l: float) -> np.ndarray:
    """Adjacency of the conflict graph: scaled member sets intersect."""
    masks = np.vstack(_scaled_masks(space, balls, l)) if balls else np.zeros((0, space.n), bool)
    inter = masks.astype(np.int32) @ masks.astype(np.int32).T
    conf = inter > 0
    np.fill_diagonal(conf, False)
    return conf


# -- multiplicity -------------------------------------------------------------


@dataclass(frozen=True)
class Multiplicity:
    max_cover: int
    n_colors: int
    coloring: List[List[int]]


def packing_multiplicity(space: FiniteMetricSpace, balls: Sequence, l: float) -> Multiplicity:
    """Point-cover count and a chromatic split of the scaled family.

    ``max_cover`` is the largest number of scaled balls through one point; the
    coloring splits the family into ``n_colors`` valid packings (exact chromatic
    number for at most 12 balls, first-fit greedy beyond).  Balls through a
    common point form a clique, so ``max_cover <= n_colors`` always.
    """
    if not balls:
        return Multiplicity(0, 0, [])
    counts = np.zeros(space.n, dtype=np.int32)
    for b in balls:
        counts[space.ball_members(scale_ball(space, b, l))] += 1
    max_cover = int(counts.max(initial=0))
    conf = conflict_matrix(space, balls, l)
    if len(balls) <= EXACT_COLORING_CAP:
        colors = _exact_coloring(conf)
    else:
        colors = _greedy_coloring(conf)
    k = max(colors) + 1
    classes = [[i for i, c in enumerate(colors) if c == kk] for kk in range(k)]
    return Multiplicity(max_cover, k, classes)


def _greedy_coloring(conf: np.ndarray) -> List[int]:
    m = conf.shape[0]
    colors = [-1] * m
    for v in range(m):
        used = {colors[u] for u in np.flatnonzero(conf[v]) if colors[u] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return colors


def _exact_coloring(conf: np.ndarray) -> List[int]:
    m = conf.shape[0]
    if m == 0:
        return []
    nbrs = [np.flatnonzero(conf[v]) for v in range(m)]
    lower = 1
    for k in range(lower, m + 1):
        colors = [-1] * m

        def feasible(v: int, maxused: int) -> bool:
            if v == m:
                return True
            banned = {colors[u] for u in nbrs[v] if colors[u] >= 0}
            # symmetry break: allow at most one brand-new color
            for c in range(min(maxused + 1, k - 1) + 1):
                if c not in banned:
                    colors[v] = c
                    if feasible(v + 1, max(maxused, c)):
                        return True
                    colors[v] = -1
            return False

        if feasible(0, -1):
            return colors
    return list(range(m))  # pragma: no cover


# -- maximum-weight packing ---------------------------------------------------


@dataclass(frozen=True)
class PackingSolution:
    value: float
    indices: List[int]
    balls: List[Ball]
    mode: str
    exact: bool


def max_weight_packing(
    space: FiniteMetricSpace,
    candidates: Sequence[Ball],
    weights: Sequence[float],
    l: float,
    R: float,
    S: float,
    mode: str = "exact",
    exact_cap: int = EXACT_CAP,
) -> PackingSolution:
    """Best valid ``(l, R, S)``-packing among ``candidates`` by total weight.

    Candidates whose radius falls outside ``[R, S]`` can never join a valid
    packing and are skipped; zero-weight candidates never help, which makes the
    empty packing the canonical answer for all-zero weights.
    """
    if len(weights) != len(candidates):
        raise PackingError("weights must align with candidates")
    w = np.asarray(weights, dtype=float)
    if w.size and w.min(initial=0.0) < -TOL:
        raise PackingError("weights must be nonnegative")
    if mode not in ("exact", "greedy"):
        raise PackingError(f"unknown mode {mode!r}")

    keep = [i for i, b in enumerate(candidates)
            if (R - TOL <= b.radius <= S + TOL) and w[i] > TOL]
    if not keep:
        return PackingSolution(0.0, [], [], mode, exact=True)
    masks = [member_mask(space, scale_ball(space, candidates[i], l)) for i in keep]

    if mode == "greedy":
        order = sorted(range(len(keep)), key=lambda k: (-w[keep[k]], keep[k]))
        covered = np.zeros(space.n, dtype=bool)
        chosen = []
        for k in order:
            if not (covered & masks[k]).any():
                covered |= masks[k]
                chosen.append(keep[k])
        chosen.sort()
        val = float(w[chosen].sum())
        return PackingSolution(val, chosen, [candidates[i] for i in chosen], mode, exact=False)

    m = len(keep)
    interval = _interval_runs(masks)
    if interval is not None:
        val, sel = _interval_dp(w[keep], interval)
    else:
        if m > exact_cap:
            raise PackingError(
                f"exact mode supports at most {exact_cap} candidates "
                f"(got {m} admissible); use greedy or bracket mode"
            )
        val, sel = _branch_and_bound(w[keep], _conflicts_from_masks(masks))
    chosen = sorted(keep[k] for k in sel)
    return PackingSolution(float(val), chosen, [candidates[i] for i in chosen], mode, exact=True)


def _conflicts_from_masks(masks: List[np.ndarray]) -> np.ndarray:
    mm = np.vstack(masks).astype(np.int32)
    conf = (mm @ mm.T) > 0
    np.fill_diagonal(conf, False)
    return conf


def _interval_runs(masks: List[np.ndarray]) -> Optional[List[tuple]]:
    """Point-index runs (lo, hi) when every mask is one contiguous block.

    Holds on paths, line samples, and other 1-d-ordered spaces, where the
    conflict graph is an interval graph and the packing problem is solvable
    exactly at any size.  Two candidates conflict iff their runs overlap.
    """
    runs = []
    for mk in masks:
        idx = np.flatnonzero(mk)
        if idx.size == 0 or int(idx[-1]) - int(idx[0]) != idx.size - 1:
            return None
        runs.append((int(idx[0]), int(idx[-1])))
    return runs


def _interval_best(w: np.ndarray, runs: List[tuple], alive: List[int]) -> float:
    """Optimal packing weight over the ``alive`` interval candidates."""
    if not alive:
        return 0.0
    order = sorted(alive, key=lambda k: (runs[k][1], runs[k][0], k))
    his = [runs[k][1] for k in order]
    f = [0.0] * (len(order) + 1)
    for i, k in enumerate(order):
        q = bisect.bisect_left(his, runs[k][0])  # all with hi < lo_k
        f[i + 1] = max(f[i], w[k] + f[q])
    return f[-1]


def _interval_dp(w: np.ndarray, runs: List[tuple]):
    """Exact interval MWIS with the lex-smallest optimal witness.

    Scans candidates in index order, keeping one exactly when an optimal
    solution through the current prefix still exists — the same include-first
    rule the branch-and-bound path uses.
    """
    m = len(w)
    best = _interval_best(w, runs, list(range(m)))
    sel: List[int] = []
    cur = 0.0
    alive = [True] * m

    def overlaps(a: int, b: int) -> bool:
        return not (runs[a][1] < runs[b][0] or runs[b][1] < runs[a][0])

    for idx in range(m):
        if not alive[idx]:
            continue
        pool = [j for j in range(idx + 1, m) if alive[j] and not overlaps(idx, j)]
        if cur + w[idx] + _interval_best(w, runs, pool) >= best - 1e-12:
            sel.append(idx)
            cur += float(w[idx])
            for j in range(idx + 1, m):
                if alive[j] and overlaps(idx, j):
                    alive[j] = False
    return cur if sel else 0.0, sel


def _branch_and_bound(w: np.ndarray, conf: np.ndarray):
    """Exact MWIS; phase 1 finds the value, phase 2 the lex-smallest witness."""
    m = len(w)
    wl = [float(x) for x in w]
    nbr_bits = [0] * m
    nbr_list: List[List[int]] = [[] for _ in range(m)]
    for v in range(m):
        for u in np.flatnonzero(conf[v]):
            nbr_bits[v] |= 1 << int(u)
            nbr_list[v].append(int(u))
    order = sorted(range(m), key=lambda v: (-wl[v], v))
    pos_of = [0] * m
    for p, v in enumerate(order):
        pos_of[v] = p

    best = 0.0  # the empty packing is always valid

    def phase1(pos: int, allowed: int, cur: float, rem: float):
        # rem == sum of weights of allowed vertices at order positions >= pos
        nonlocal best
        if cur > best:
            best = cur
        while pos < m and not (allowed >> order[pos]) & 1:
            pos += 1
        if pos == m or cur + rem <= best + 1e-12:
            return
        v = order[pos]
        inc_allowed = allowed & ~((1 << v) | nbr_bits[v])
        inc_rem = rem - wl[v]
        for u in nbr_list[v]:
            if pos_of[u] > pos and (allowed >> u) & 1:
                inc_rem -= wl[u]
        phase1(pos + 1, inc_allowed, cur + wl[v], inc_rem)
        phase1(pos + 1, allowed & ~(1 << v), cur, rem - wl[v])

    full = (1 << m) - 1
    phase1(0, full, 0.0, sum(wl))
    target = best

    # lex-smallest witness: include-first DFS in index order, stop at first hit
    witness: List[int] = []

    def phase2(v: int, allowed: int, cur: float, rem: float, chosen: List[int]) -> bool:
        # rem == sum of weights of allowed vertices with id >= v
        if cur >= target - 1e-12:
            witness.extend(chosen)
            return True
        while v < m and not (allowed >> v) & 1:
            v += 1
        if v == m or cur + rem < target - 1e-12:
            return False
        inc_rem = rem - wl[v]
        for u in nbr_list[v]:
            if u > v and (allowed >> u) & 1:
                inc_rem -= wl[u]
        if phase2(v + 1, allowed & ~((1 << v) | nbr_bits[v]), cur + wl[v],
                  inc_rem, chosen + [v]):
            return True
        return phase2(v + 1, allowed & ~(1 << v), cur, rem - wl[v], chosen)

    phase2(0, full, 0.0, sum(wl), [])
    return target, sorted(witness)


# -- covering construction ----------------------------------------------------


@dataclass(frozen=True)
class CoveringPacking:
    balls: List[Ball]
    l: float
    R: float
    n_colors: int
    coloring: List[List[int]]
    max_cover: int


def covering_packing(space: FiniteMetricSpace, l: float, R: float) -> CoveringPacking:
    """Radius-``R`` balls covering the space, split into valid packings.

    Centers form a greedy maximal family with pairwise distance strictly above
    ``R`` (equivalently, disjoint open R/2-balls), so the doubled balls cover;
    the scaled family is then colored into ``n_colors`` many ``(l, R, R)``-
    packings.
    """
    if R <= 0:
        raise PackingError("covering radius must be positive")
    blocked = np.zeros(space.n, dtype=bool)
    centers: List[int] = []
    for x in range(space.n):
        if not blocked[x]:
            centers.append(x)
            blocked |= space.row(x) <= R + TOL
    balls = [Ball(c, float(R)) for c in centers]

    # point -> scaled covering balls through it
    incidence: List[List[int]] = [[] for _ in range(space.n)]
    counts = np.zeros(space.n, dtype=np.int32)
    for bi, b in enumerate(balls):
        pts = space.ball_members(scale_ball(space, b, l))
        counts[pts] += 1
        for p in pts:
            incidence[p].append(bi)
    max_cover = int(counts.max(initial=0))

    if len(balls) <= EXACT_COLORING_CAP:
        conf = conflict_matrix(space, balls, l)
        colors = _exact_coloring(conf)
    else:
        colors = [-1] * len(balls)
        for bi, b in enumerate(balls):
            used = set()
            for p in space.ball_members(scale_ball(space, b, l)):
                for other in incidence[p]:
                    if other != bi and colors[other] >= 0:
                        used.add(colors[other])
            c = 0
            while c in used:
                c += 1
            colors[bi] = c
    k = max(colors) + 1 if colors else 0
    classes = [[i for i, c in enumerate(colors) if c == kk] for kk in range(k)]
    return CoveringPacking(balls, l, float(R), k, classes, max_cover)


# -- report -------------------------------------------------------------------


def packing_report(space: FiniteMetricSpace, balls: Sequence[Ball], l: float,
                   R: float, S: float) -> dict:
    check = is_packing(space, balls, l, R, S)
    mult = packing_multiplicity(space, balls, l)
    return {
        "balls": [{"c": int(b.center), "r": float(b.radius)} for b in balls],
        "l": float(l),
        "R": float(R),
        "S": (None if math.isinf(S) else float(S)),
        "valid": bool(check.valid),
        "maxCover": mult.max_cover,
        "N": mult.n_colors,
        "coloring": mult.coloring,
    }
