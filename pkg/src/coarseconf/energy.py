"""Packing energies and cochain norms.

The ``p``-energy of a map ``u`` at window ``(l, R, S)`` is the supremum, over
valid ``(l, R, S)``-packings, of the sum of ``oscillation(u, B)**p`` over the
packing.  On a finite space the supremum is attained on the finite candidate
universe built by :func:`candidate_balls`: for each center it keeps, for every
realized distance ``d <= S``, the smallest admissible radius ``max(R, d)``.
Shrinking a ball's radius to that value keeps its member set and can only
shrink the scaled member set, so no packing value is lost.

Values returned by :func:`energy` are the energy itself (the sum form).
:func:`cochain_norm` returns the norm, i.e. the supremum of sums raised to
``1/p``; for a function ``u`` the identity ``cochain_norm(du)**p == energy(u)``
holds exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .packing import EXACT_CAP, PackingError, covering_packing, max_weight_packing
from .space import TOL, Ball, FiniteMetricSpace


class EnergyError(ValueError):
    pass


# -- targets -------------------------------------------------------------------


class ScalarTarget:
    """The real line; diameters are max - min."""

    def diam(self, vals: np.ndarray) -> float:
        return float(vals.max() - vals.min())

    def dist(self, a, b) -> float:
        return abs(float(a) - float(b))


class LpProductTarget:
    """``R^d`` with the l^p product metric."""

    def __init__(self, p: float):
        if p < 1:
            raise EnergyError("product exponent must be >= 1")
        self.p = float(p)

    def dist(self, a, b) -> float:
        diff = np.abs(np.asarray(a, float) - np.asarray(b, float))
        if math.isinf(self.p):
            return float(diff.max())
        return float((diff**self.p).sum() ** (1.0 / self.p))

    def diam(self, vals: np.ndarray) -> float:
        pts = np.atleast_2d(np.asarray(vals, float))
        if len(pts) < 2:
            return 0.0
        diff = np.abs(pts[:, None, :] - pts[None, :, :])
        if math.isinf(self.p):
            d = diff.max(axis=2)
        else:
            d = (diff**self.p).sum(axis=2) ** (1.0 / self.p)
        return float(d.max())


class SpaceTarget:
    """A finite metric space as target; ``u`` holds point ids."""

    def __init__(self, space: FiniteMetricSpace):
        self.space = space

    def dist(self, a, b) -> float:
        return self.space.d(int(a), int(b))

    def diam(self, vals: np.ndarray) -> float:
        ids = np.asarray(vals, dtype=int)
        best = 0.0
        for i in ids:
            best = max(best, float(self.space.row(int(i))[ids].max()))
        return best


def _infer_target(u: np.ndarray, p: float, target):
    if target is not None:
        return target
    if u.ndim == 1:
        return ScalarTarget()
    return LpProductTarget(p)


# -- oscillation and candidates --------------------------------------------------


def oscillation(space: FiniteMetricSpace, u, ball: Ball, target=None, p: float = 2.0) -> float:
    """Diameter of ``u(members(ball))`` in the target metric."""
    u = np.asarray(u)
    tgt = _infer_target(u, p, target)
    mem = space.ball_members(ball)
    if u.ndim == 1 and isinstance(tgt, ScalarTarget):
        vals = u[mem].astype(float)
        return float(vals.max() - vals.min())
    return tgt.diam(u[mem])


def candidate_balls(
    space: FiniteMetricSpace,
    R: float,
    S: float,
    radius_grid: Optional[Sequence[float]] = None,
) -> List[Ball]:
    """Admissible candidate universe, sorted by (center, radius).

    ``S = inf`` is capped at the space diameter: larger balls have the same
    member sets.  With a user grid, radii are the grid values inside [R, S].
    """
    if R < 0 or S < R - TOL:
        raise EnergyError(f"need 0 <= R <= S, got R={R}, S={S}")
    out: List[Ball] = []
    if radius_grid is not None:
        radii = sorted({float(r) for r in radius_grid if R - TOL <= r <= S + TOL})
        for x in range(space.n):
            out.extend(Ball(x, r) for r in radii)
        return out
    for x in range(space.n):
        row = space.row(x)
        realized = np.unique(row[row <= S + TOL])
        radii = sorted({float(max(R, d)) for d in realized})
        out.extend(Ball(x, r) for r in radii)
    return out


# -- energy ----------------------------------------------------------------------


@dataclass
class EnergyResult:
    p: float
    l: float
    R: float
    S: float
    lower: float
    exact: Optional[float] = None
    upper: Optional[float] = None
    witness: List[Ball] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.exact if self.exact is not None else self.lower

    def as_dict(self) -> dict:
        out = {
            "p": self.p,
            "l": self.l,
            "R": self.R,
            "S": (None if math.isinf(self.S) else self.S),
            "lower": self.lower,
            "witness": [{"c": int(b.center), "r": float(b.radius)} for b in self.witness],
        }
        out["exact"] = self.exact
        out["upper"] = self.upper
        return out


def energy(
    space: FiniteMetricSpace,
    u,
    p: float,
    l: float,
    R: float,
    S: float,
    mode: str = "exact",
    candidates: Optional[Sequence[Ball]] = None,
    target=None,
    exact_cap: int = EXACT_CAP,
) -> EnergyResult:
    """Packing ``p``-energy of ``u`` at window ``(l, R, S)``.

    ``exact`` solves the max-weight packing problem; ``greedy`` reports a
    certified lower bound; ``bracket`` reports the greedy lower bound, the
    covering upper bound, and the exact value too whenever the universe admits
    it.
    """
    if p < 1:
        raise EnergyError(f"p must be >= 1, got {p}")
    if mode not in ("exact", "greedy", "bracket"):
        raise EnergyError(f"unknown mode {mode!r}")
    u = np.asarray(u, dtype=float)
    if len(u) != space.n:
        raise EnergyError("u must assign a value to every point")
    tgt = _infer_target(u, p, target)
    cands = list(candidates) if candidates is not None else candidate_balls(space, R, S)
    weights = [oscillation(space, u, b, target=tgt) ** p for b in cands]

    result = EnergyResult(p=p, l=l, R=R, S=S, lower=0.0)
    if mode in ("greedy", "bracket"):
        sol = max_weight_packing(space, cands, weights, l, R, S, mode="greedy")
        result.lower = sol.value
        result.witness = sol.balls
    if mode in ("exact", "bracket"):
        try:
            sol = max_weight_packing(space, cands, weights, l, R, S,
                                     mode="exact", exact_cap=exact_cap)
            result.exact = sol.value
            result.lower = max(result.lower, sol.value)
            result.witness = sol.balls
        except PackingError:
            if mode == "exact":
                raise
    if mode == "bracket":
        ub, details = energy_upper_bound_covering(space, u, p, l, R, S, target=tgt)
        result.upper = ub
        result.meta.update(details)
    return result


def energy_upper_bound_covering(
    space: FiniteMetricSpace,
    u,
    p: float,
    l: float,
    R: float,
    S: float,
    target=None,
) -> Tuple[float, dict]:
    """Covering upper bound ``N'**p * sum_j osc(B_j)**p``.

    ``B_j`` is the doubled-ball covering at radius ``R``; the chain-overlap
    constant ``N'`` is counted directly as the largest number of covering balls
    meeting one admissible candidate ball.
    """
    if R <= 0:
        raise EnergyError("covering bound needs R > 0")
    if not _connected(space):
        raise EnergyError("covering bound needs a connected space")
    u = np.asarray(u, dtype=float)
    tgt = _infer_target(u, p, target)
    cov = covering_packing(space, l, R)

    incidence: List[List[int]] = [[] for _ in range(space.n)]
    for bi, b in enumerate(cov.balls):
        for pt in space.ball_members(b):
            incidence[pt].append(bi)

    nprime = 0
    for cand in candidate_balls(space, R, S):
        touching = set()
        for pt in space.ball_members(cand):
            touching.update(incidence[pt])
        nprime = max(nprime, len(touching))

    total = sum(oscillation(space, u, b, target=tgt) ** p for b in cov.balls)
    value = (nprime**p) * total
    details = {
        "covering_centers": [b.center for b in cov.balls],
        "covering_R": R,
        "n_prime": nprime,
        "covering_sum": total,
        "covering_colors": cov.n_colors,
    }
    return float(value), details


def _connected(space: FiniteMetricSpace) -> bool:
    cached = getattr(space, "_connected_cache", None)
    if cached is None:
        cached = space.is_connected()
        space._connected_cache = cached
    return cached


# -- cochains ---------------------------------------------------------------------


class CochainError(ValueError):
    pass


@dataclass
class Cochain:
    """A ``degree``-cochain of size ``size``: values on (degree+1)-tuples that
    fit inside some radius-``size`` ball."""

    degree: int
    size: float
    values: Dict[Tuple[int, ...], float]

    def __getitem__(self, simplex: Tuple[int, ...]) -> float:
        try:
            return self.values[simplex]
        except KeyError:
            raise CochainError(f"cochain has no value on simplex {simplex}") from None


def simplices(space: FiniteMetricSpace, degree: int, size: float) -> List[Tuple[int, ...]]:
    """All (degree+1)-tuples contained in a common radius-``size`` ball."""
    if degree < 0:
        raise CochainError("degree must be >= 0")
    if degree == 0:
        return [(x,) for x in range(space.n)]
    rows = space.matrix
    out = []
    for tup in itertools.product(range(space.n), repeat=degree + 1):
        if rows[list(tup)].max(axis=0).min() <= size + TOL:
            out.append(tup)
    return out


def cochain_from_function(space: FiniteMetricSpace, u, size: float) -> Cochain:
    u = np.asarray(u, dtype=float)
    return Cochain(0, float(size), {(x,): float(u[x]) for x in range(space.n)})


def coboundary(space: FiniteMetricSpace, kappa: Cochain) -> Cochain:
    """Alternating-sum coboundary; faces of a size-S simplex again have size S."""
    k = kappa.degree
    vals: Dict[Tuple[int, ...], float] = {}
    for tup in simplices(space, k + 1, kappa.size):
        acc = 0.0
        for i in range(k + 2):
            face = tup[:i] + tup[i + 1 :]
            acc += (-1) ** i * kappa[face]
        vals[tup] = acc
    return Cochain(k + 1, kappa.size, vals)


def cochain_norm(
    space: FiniteMetricSpace,
    kappa: Cochain,
    p: float,
    l: float,
    R: float,
    S: float,
    mode: str = "exact",
    exact_cap: int = EXACT_CAP,
) -> EnergyResult:
    """Packing norm: sup over packings of ``sum_j sup_{B_j} |kappa|**p``, to the 1/p.

    Packing balls have radius at most ``S``, which must not exceed the
    cochain's size bound, so every tuple drawn from one ball is a simplex.
    """
    if p < 1:
        raise EnergyError(f"p must be >= 1, got {p}")
    if S > kappa.size + TOL:
        raise CochainError(
            f"packing window S={S} exceeds the cochain size bound {kappa.size}"
        )
    cands = candidate_balls(space, R, S)
    weights = []
    for b in cands:
        mem = [int(x) for x in space.ball_members(b)]
        best = 0.0
        for tup in itertools.product(mem, repeat=kappa.degree + 1):
            best = max(best, abs(kappa[tup]))
        weights.append(best**p)

    if mode not in ("exact", "greedy"):
        raise EnergyError(f"unknown mode {mode!r}")
    sol = max_weight_packing(space, cands, weights, l, R, S, mode=mode,
                             exact_cap=exact_cap)
    root = sol.value ** (1.0 / p)
    res = EnergyResult(p=p, l=l, R=R, S=S, lower=root, witness=sol.balls)
    if sol.exact:
        res.exact = root
    return res


def curve_length(u, curve: Sequence[int], target=None, p: float = 2.0) -> float:
    """Length of ``u`` along ``curve``: sum of consecutive target distances."""
    u = np.asarray(u)
    tgt = _infer_target(u, p, target)
    total = 0.0
    for a, b in zip(curve[:-1], curve[1:]):
        total += tgt.dist(u[int(a)], u[int(b)])
    return float(total)
