"""Variational problems driven by packing energy.

Capacity and modulus are solved by the same cutting-plane loop: keep an active
set of packings, solve the restricted convex minimax (an LP for ``p = 1``, a
cone program otherwise, both via cvxpy/Clarabel), then ask the exact
max-weight-packing oracle for a violated packing.  The restricted optimum is a
certified lower bound, the oracle value at the current iterate a certified
upper bound, so every trace satisfies weak duality and the loop stops when the
relative gap drops below ``eps``.

Admissibility for the modulus (``length(u o gamma) >= 1``) is a union of
half-space conditions indexed by step-sign patterns; for every admissible ``u``
the pattern ``sign(du)`` witnesses its own linear constraint, so enumerating
patterns (modulo a global flip) solves the scalar problem exactly.  Vector
targets are handled by direction alternation on top of the same loop and yield
certified upper bounds only.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .energy import EnergyError, candidate_balls, oscillation
from .packing import EXACT_CAP, PackingError, max_weight_packing
from .space import TOL, Ball, FiniteMetricSpace

_DUAL_SLACK = 1e-7  # conservative haircut applied to inner optima


class VarProbError(ValueError):
    pass


@dataclass
class SolveTrace:
    method: str
    primal: List[float] = field(default_factory=list)
    dual: List[float] = field(default_factory=list)
    converged: bool = False
    message: str = ""

    def record(self, primal: float, dual: float) -> None:
        if self.primal:
            primal = min(primal, self.primal[-1])
            dual = max(dual, self.dual[-1])
        self.primal.append(primal)
        self.dual.append(dual)

    @property
    def n_iterations(self) -> int:
        return len(self.primal)

    @property
    def gap_abs(self) -> float:
        if not self.primal:
            return math.inf
        return self.primal[-1] - self.dual[-1]

    @property
    def gap_rel(self) -> float:
        if not self.primal:
            return math.inf
        return self.gap_abs / max(self.primal[-1], 1e-12)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "primal": self.primal,
            "dual": self.dual,
            "converged": self.converged,
            "gap_abs": self.gap_abs,
            "gap_rel": (None if math.isinf(self.gap_rel) else self.gap_rel),
            "message": self.message,
        }


# -- restricted inner problem -------------------------------------------------


def _solve_inner(
    n: int,
    p: float,
    ball_members: List[np.ndarray],
    packings: List[List[int]],
    fixed: Dict[int, float],
    box: bool,
    lin_cons: List[Tuple[List[Tuple[int, float]], float]],
) -> Tuple[np.ndarray, float]:
    """min_u max over active packings of sum osc**p, subject to the side
    constraints; returns (argmin, optimum)."""
    import cvxpy as cp

    u = cp.Variable(n)
    cons = []
    if box:
        cons += [u >= 0, u <= 1]
    for i, val in fixed.items():
        cons.append(u[i] == val)
    for coefs, rhs in lin_cons:
        expr = sum(c * u[i] for i, c in coefs)
        cons.append(expr >= rhs)

    if packings:
        t = cp.Variable()
        for pk in packings:
            terms = []
            for bi in pk:
                mem = ball_members[bi]
                osc = cp.max(u[mem]) - cp.min(u[mem])
                if p == 1.0:
                    terms.append(osc)
                else:
                    terms.append(cp.power(cp.pos(osc), p))
            cons.append(cp.sum(cp.hstack(terms)) <= t)
        objective = cp.Minimize(t)
    else:
        objective = cp.Minimize(cp.Constant(0.0))

    prob = cp.Problem(objective, cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # status is checked below
        prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise VarProbError(f"inner solve failed with status {prob.status}")
    uval = np.asarray(u.value, dtype=float).reshape(n)
    val = float(prob.value) if packings else 0.0
    return uval, max(val, 0.0)


def _project(u: np.ndarray, fixed: Dict[int, float], box: bool) -> np.ndarray:
    out = u.copy()
    if box:
        np.clip(out, 0.0, 1.0, out=out)
    for i, val in fixed.items():
        out[i] = val
    return out


def _seed_packings(
    space: FiniteMetricSpace,
    cands: List[Ball],
    l: float,
    R: float,
    S: float,
    cap: int = 8,
) -> List[List[int]]:
    """Partition the candidates into greedy unit-weight packings; seeding the
    active set with them saves one oracle round per binding packing."""
    remaining = list(range(len(cands)))
    out: List[List[int]] = []
    while remaining and len(out) < cap:
        sub = [cands[i] for i in remaining]
        sol = max_weight_packing(space, sub, [1.0] * len(sub), l, R, S, mode="greedy")
        if not sol.indices:
            break
        chosen = [remaining[i] for i in sol.indices]
        out.append(chosen)
        remaining = [i for i in remaining if i not in set(chosen)]
    return out


def _cutting_plane(
    space: FiniteMetricSpace,
    cands: List[Ball],
    p: float,
    l: float,
    R: float,
    S: float,
    fixed: Dict[int, float],
    box: bool,
    lin_cons: List[Tuple[List[Tuple[int, float]], float]],
    eps: float,
    max_iter: int,
    method: str,
    exact_cap: int = EXACT_CAP,
):
    """Shared loop for capacity/modulus; returns (u, primal, dual, trace, packing)."""
    n = space.n
    members = [space.ball_members(b) for b in cands]
    trace = SolveTrace(method=method)
    active: List[List[int]] = [list(pk) for pk in _seed_packings(space, cands, l, R, S)]
    seen = {tuple(pk) for pk in active}
    best_primal = math.inf
    best_u = None
    best_packing: List[Ball] = []
    dual = 0.0

    for _ in range(max_iter):
        if active:
            u, inner_val = _solve_inner(n, p, members, active, fixed, box, lin_cons)
        else:
            u, inner_val = _solve_inner(n, p, members, [], fixed, box, lin_cons)
        u = _project(u, fixed, box)
        dual = max(dual, inner_val - max(_DUAL_SLACK * abs(inner_val), 1e-12))

        weights = [oscillation(space, u, b) ** p for b in cands]
        sol = max_weight_packing(space, cands, weights, l, R, S,
                                 mode="exact", exact_cap=exact_cap)
        if sol.value < best_primal:
            best_primal = sol.value
            best_u = u
            best_packing = sol.balls
        trace.record(best_primal, dual)

        if trace.gap_rel <= eps or trace.gap_abs <= eps * 1e-3:
            trace.converged = True
            break
        key = tuple(sol.indices)
        if key in seen:
            trace.message = "oracle repeated a packing before the gap closed"
            break
        seen.add(key)
        active.append(list(sol.indices))
    else:
        trace.message = f"iteration cap {max_iter} reached"

    if not trace.converged:
        raise NonConvergence(trace)
    return best_u, best_primal, dual, trace, best_packing


class NonConvergence(VarProbError):
    def __init__(self, trace: SolveTrace):
        super().__init__(
            f"no convergence after {trace.n_iterations} iterations "
            f"(gap {trace.gap_abs:.3e}): {trace.message}"
        )
        self.trace = trace


# -- capacity -------------------------------------------------------------------


@dataclass
class CapacityResult:
    value: float
    lower: float
    u: np.ndarray
    trace: SolveTrace
    witness: List[Ball]
    params: dict

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "lower": self.lower,
            "u": [float(x) for x in self.u],
            "witness": [{"c": int(b.center), "r": float(b.radius)} for b in self.witness],
            "trace": self.trace.as_dict(),
            "params": self.params,
        }


def capacity(
    space: FiniteMetricSpace,
    K: Iterable[int],
    boundary: Optional[Iterable[int]] = None,
    p: float = 2.0,
    l: float = 2.0,
    R: float = 1.0,
    S: float = 1.0,
    eps: float = 1e-6,
    max_iter: int = 10_000,
    exact_cap: int = EXACT_CAP,
) -> CapacityResult:
    """Least ``p``-energy of ``u in [0,1]`` with ``u = 1`` on ``K`` and
    ``u = 0`` on the boundary set (the bounded-support condition).

    An empty boundary admits ``u == 1`` and the capacity is 0.
    """
    K = sorted({int(i) for i in K})
    bd = sorted(space.boundary if boundary is None else {int(i) for i in boundary})
    if not K:
        raise VarProbError("K must be nonempty")
    for i in K + bd:
        if not (0 <= i < space.n):
            raise VarProbError(f"point {i} outside the space")
    if set(K) & set(bd):
        raise VarProbError("K and the boundary set must be disjoint")
    params = {"K": K, "boundary": bd, "p": p, "l": l, "R": R,
              "S": (None if math.isinf(S) else S), "eps": eps}

    if not bd:
        trace = SolveTrace(method="capacity")
        trace.record(0.0, 0.0)
        trace.converged = True
        return CapacityResult(0.0, 0.0, np.ones(space.n), trace, [], params)

    fixed = {i: 1.0 for i in K}
    fixed.update({i: 0.0 for i in bd})
    cands = candidate_balls(space, R, S)
    u, primal, dual, trace, packing = _cutting_plane(
        space, cands, p, l, R, S, fixed, True, [], eps, max_iter,
        method="capacity", exact_cap=exact_cap,
    )
    return CapacityResult(primal, dual, u, trace, packing, params)


# -- modulus ----------------------------------------------------------------------


@dataclass
class ModulusResult:
    value: float
    lower: float
    u: np.ndarray
    trace: SolveTrace
    certified: bool
    target_dim: int
    params: dict
    all_traces: List[SolveTrace] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "lower": self.lower,
            "certified": self.certified,
            "targetDim": self.target_dim,
            "trace": self.trace.as_dict(),
            "params": self.params,
        }


def _sign_patterns(step_counts: List[int], cap: int):
    total = sum(step_counts)
    if total == 0:
        raise VarProbError("curves need at least two points")
    if 2 ** (total - 1) > cap:
        return None
    combos = itertools.product((1.0, -1.0), repeat=total - 1)
    out = []
    for rest in combos:
        flat = (1.0,) + rest  # global flip symmetry: first step positive
        pat, k = [], 0
        for c in step_counts:
            pat.append(flat[k : k + c])
            k += c
        out.append(pat)
    return out


def modulus(
    space: FiniteMetricSpace,
    curves: Sequence[Sequence[int]],
    p: float = 2.0,
    l: float = 2.0,
    R: float = 1.0,
    S: float = 1.0,
    target_dim: int = 1,
    eps: float = 1e-6,
    max_iter: int = 10_000,
    pattern_cap: int = 4096,
    exact_cap: int = EXACT_CAP,
) -> ModulusResult:
    """Least ``p``-energy of ``u: X -> R^d`` moving every curve by length >= 1.

    ``target_dim = 1`` is solved exactly by sign-pattern enumeration; higher
    dimensions refine the scalar solution by direction alternation and report a
    certified upper bound (``lower`` stays 0).
    """
    curves = [list(map(int, c)) for c in curves]
    if not curves:
        raise VarProbError("curve family must be nonempty")
    for c in curves:
        if len(c) < 2:
            raise VarProbError("curves need at least two points")
        for x in c:
            if not (0 <= x < space.n):
                raise VarProbError(f"curve point {x} outside the space")
    params = {"curves": curves, "p": p, "l": l, "R": R,
              "S": (None if math.isinf(S) else S), "eps": eps,
              "targetDim": target_dim}
    cands = candidate_balls(space, R, S)

    steps = [len(c) - 1 for c in curves]
    patterns = _sign_patterns(steps, pattern_cap)
    if patterns is None:
        raise VarProbError(
            f"{sum(steps)} curve steps exceed the sign-pattern budget {pattern_cap}"
        )

    best = None
    traces = []
    for pat in patterns:
        lin = []
        for c, signs in zip(curves, pat):
            coefs: Dict[int, float] = {}
            for (a, b), s in zip(zip(c[:-1], c[1:]), signs):
                coefs[b] = coefs.get(b, 0.0) + s
                coefs[a] = coefs.get(a, 0.0) - s
            lin.append((sorted(coefs.items()), 1.0))
        u, primal, dual, trace, _ = _cutting_plane(
            space, cands, p, l, R, S, {}, False, lin, eps, max_iter,
            method="modulus", exact_cap=exact_cap,
        )
        traces.append(trace)
        if best is None or primal < best[0]:
            best = (primal, dual, u, trace)
    primal, _, u, trace = best
    lower = min(t.dual[-1] for t in traces)
    result = ModulusResult(primal, lower, u, trace, True, 1, params, traces)
    if target_dim == 1:
        return result
    return _vector_modulus_refine(space, cands, curves, result, p, l, R, S,
                                  target_dim, eps, max_iter, exact_cap)


def _vector_modulus_refine(space, cands, curves, scalar, p, l, R, S, d,
                           eps, max_iter, exact_cap) -> ModulusResult:
    import cvxpy as cp

    n = space.n
    members = [space.ball_members(b) for b in cands]
    U0 = np.zeros((n, d))
    U0[:, 0] = scalar.u
    Ucur, val_cur = U0, scalar.value
    q = math.inf if p == 1 else p / (p - 1)

    for _ in range(6):
        dirs = []
        for c in curves:
            ws = []
            for a, b in zip(c[:-1], c[1:]):
                diff = Ucur[b] - Ucur[a]
                nrm = float(np.linalg.norm(diff, ord=p))
                if nrm < 1e-12:
                    w = np.zeros(d)
                    w[0] = 1.0
                else:
                    if p == 1.0:
                        w = np.sign(diff)
                    else:
                        w = np.sign(diff) * (np.abs(diff) / nrm) ** (p - 1)
                ws.append(w)
            dirs.append(ws)

        U = cp.Variable((n, d))
        cons = []
        for c, ws in zip(curves, dirs):
            expr = 0
            for (a, b), w in zip(zip(c[:-1], c[1:]), ws):
                expr = expr + w @ (U[b] - U[a])
            cons.append(expr >= 1)

        active: List[List[int]] = []
        seen = set()
        best_inner = None
        for _ in range(max_iter):
            if active:
                t = cp.Variable()
                pcons = list(cons)
                for pk in active:
                    terms = []
                    for bi in pk:
                        mem = members[bi]
                        pairs = [cp.norm(U[i] - U[j], p)
                                 for i, j in itertools.combinations(mem, 2)]
                        osc = cp.max(cp.hstack(pairs)) if pairs else cp.Constant(0.0)
                        terms.append(osc if p == 1.0 else cp.power(osc, p))
                    pcons.append(cp.sum(cp.hstack(terms)) <= t)
                prob = cp.Problem(cp.Minimize(t), pcons)
            else:
                prob = cp.Problem(cp.Minimize(cp.Constant(0.0)), cons)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                prob.solve(solver=cp.CLARABEL)
            if prob.status not in ("optimal", "optimal_inaccurate"):
                raise VarProbError(f"vector refinement failed: {prob.status}")
            Unew = np.asarray(U.value, float).reshape(n, d)
            from .energy import LpProductTarget

            tgt = LpProductTarget(p)
            weights = [oscillation(space, Unew, b, target=tgt) ** p for b in cands]
            sol = max_weight_packing(space, cands, weights, l, R, S,
                                     mode="exact", exact_cap=exact_cap)
            if best_inner is None or sol.value < best_inner[0]:
                best_inner = (sol.value, Unew)
            inner_val = float(prob.value) if active else 0.0
            if sol.value <= inner_val + eps * max(1.0, inner_val):
                break
            key = tuple(sol.indices)
            if key in seen:
                break
            seen.add(key)
            active.append(list(sol.indices))
        if best_inner[0] < val_cur - 1e-12:
            val_cur, Ucur = best_inner[0], best_inner[1]
        else:
            break

    trace = SolveTrace(method=f"modulus-dim{d}")
    trace.record(val_cur, 0.0)
    trace.converged = True
    trace.message = "vector mode certifies the upper bound only"
    params = dict(scalar.params)
    params["targetDim"] = d
    return ModulusResult(val_cur, 0.0, Ucur, trace, False, d, params,
                         scalar.all_traces + [trace])


# -- Grötzsch-type invariant ------------------------------------------------------


@dataclass
class DeltaResult:
    value: float
    arc: List[int]
    n_arcs: int
    capacity: CapacityResult

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "arc": self.arc,
            "nArcs": self.n_arcs,
            "capacity": self.capacity.as_dict(),
        }


def enumerate_arcs(
    space: FiniteMetricSpace,
    x1: int,
    x2: int,
    max_geodesics: int = 64,
    detour: float = 0.0,
    max_pool: int = 128,
) -> List[List[int]]:
    """Unit-step arcs from ``x1`` to ``x2``: all geodesics (capped), then all
    simple paths up to ``detour`` longer, deterministically ordered."""
    step = space.unit_step
    dist_to = _bfs_depths(space, x2)
    if not math.isfinite(dist_to[x1]):
        raise VarProbError(f"{x1} and {x2} are not connected in the unit-step graph")
    budget = dist_to[x1] + detour + TOL
    cap = max_geodesics if detour == 0.0 else max_pool
    pool: List[List[int]] = []
    seen = set()

    def dfs(path: List[int], used: set, length: float):
        if len(pool) >= cap:
            return
        v = path[-1]
        if v == x2:
            key = tuple(path)
            if key not in seen:
                seen.add(key)
                pool.append(list(path))
            return
        for w in space.neighbors(v):
            w = int(w)
            if w in used:
                continue
            newlen = length + step
            if newlen + dist_to[w] > budget:
                continue
            used.add(w)
            path.append(w)
            dfs(path, used, newlen)
            path.pop()
            used.remove(w)

    dfs([x1], {x1}, 0.0)
    if not pool:
        raise VarProbError("no arcs found within the detour budget")
    return pool


def _bfs_depths(space: FiniteMetricSpace, src: int) -> np.ndarray:
    step = space.unit_step
    dist = np.full(space.n, math.inf)
    dist[src] = 0.0
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for w in space.neighbors(v):
                if not math.isfinite(dist[w]):
                    dist[w] = dist[v] + step
                    nxt.append(int(w))
        frontier = nxt
    return dist


def grotzsch_delta(
    space: FiniteMetricSpace,
    x1: int,
    x2: int,
    boundary: Optional[Iterable[int]] = None,
    p: float = 2.0,
    l: float = 2.0,
    R: float = 1.0,
    S: float = 1.0,
    max_geodesics: int = 64,
    detour: float = 0.0,
    max_pool: int = 128,
    eps: float = 1e-6,
) -> DeltaResult:
    """Least capacity over a finite pool of connecting arcs.

    The pool never exhausts all continua joining the two points, so the value
    is an upper bound for the infimum over connections.
    """
    bd = set(space.boundary if boundary is None else {int(i) for i in boundary})
    if x1 in bd or x2 in bd:
        raise VarProbError("endpoints must not lie on the boundary set")
    arcs = enumerate_arcs(space, x1, x2, max_geodesics, detour, max_pool)
    # distinct images only: capacity depends on the arc through its point set
    images = []
    seen = set()
    for arc in arcs:
        key = frozenset(arc)
        if key not in seen:
            seen.add(key)
            images.append(arc)
    best: Optional[Tuple[float, List[int], CapacityResult]] = None
    for arc in images:
        res = capacity(space, sorted(set(arc)), bd, p=p, l=l, R=R, S=S, eps=eps)
        if best is None or res.value < best[0] - 1e-15:
            best = (res.value, arc, res)
    value, arc, cap_res = best
    return DeltaResult(value, arc, len(images), cap_res)


# -- parabolicity probe -------------------------------------------------------------


@dataclass
class ProbeResult:
    labels: List[float]
    values: List[float]
    lowers: List[float]
    uppers: List[float]
    nonincreasing: bool
    decay_exponent: Optional[float]
    verdict: str

    def rows(self) -> List[tuple]:
        return list(zip(self.labels, self.values, self.lowers, self.uppers))

    def as_dict(self) -> dict:
        return {
            "rows": [
                {"n": n, "value": v, "lower": lo, "upper": hi}
                for n, v, lo, hi in self.rows()
            ],
            "nonincreasing": self.nonincreasing,
            "decayExponent": self.decay_exponent,
            "verdict": self.verdict,
        }


def farthest_shell(space: FiniteMetricSpace, base: int) -> List[int]:
    row = space.row(base)
    return [int(i) for i in np.flatnonzero(row >= row.max() - TOL)]


def parabolicity_probe(
    spaces: Sequence[FiniteMetricSpace],
    p: float = 2.0,
    l: float = 2.0,
    R: float = 1.0,
    S: float = 1.0,
    labels: Optional[Sequence[float]] = None,
    eps: Optional[float] = None,
    solver_eps: float = 1e-6,
) -> ProbeResult:
    """Basepoint capacities along an exhaustion family.

    Each space contributes the capacity of its basepoint against its boundary
    set (the farthest shell from the basepoint when none is set).  The verdict
    is ``parabolic-consistent`` when the values decrease toward zero: with a
    cutoff ``eps`` that means dropping below it, without one it means a clearly
    negative fitted exponent of ``log(value)`` against ``log(log(label))``.
    """
    if labels is None:
        labels = [float(sp.n) for sp in spaces]
    if len(labels) != len(spaces):
        raise VarProbError("labels must align with spaces")
    values, lowers, uppers = [], [], []
    for sp in spaces:
        base = sp.basepoint if sp.basepoint is not None else 0
        bd = sorted(sp.boundary) if sp.boundary else farthest_shell(sp, base)
        res = capacity(sp, [base], bd, p=p, l=l, R=R, S=S, eps=solver_eps)
        values.append(res.value)
        lowers.append(res.lower)
        uppers.append(res.value)

    noninc = all(values[i + 1] <= values[i] + 1e-9 for i in range(len(values) - 1))
    exponent = None
    if len(values) >= 2 and all(v > 0 for v in values) and all(
        lbl > math.e for lbl in labels
    ):
        xs = np.log(np.log(np.asarray(labels, float)))
        ys = np.log(np.asarray(values, float))
        exponent = float(np.polyfit(xs, ys, 1)[0])

    if len(values) < 3:
        verdict = "inconclusive"
    elif eps is not None:
        verdict = ("parabolic-consistent"
                   if noninc and min(values) < eps else "not-parabolic-consistent")
    else:
        strict = all(values[i + 1] < values[i] - 1e-9 for i in range(len(values) - 1))
        verdict = ("parabolic-consistent"
                   if strict and exponent is not None and exponent <= -0.2
                   else "not-parabolic-consistent")
    return ProbeResult(list(map(float, labels)), values, lowers, uppers,
                       noninc, exponent, verdict)


# -- Sobolev-type constant -------------------------------------------------------------


@dataclass
class SobolevEstimate:
    constant: float
    u: np.ndarray
    n_evals: int
    params: dict


def _lq_norm(space, u, q, l, R, S, cands) -> float:
    w = []
    for b in cands:
        mem = space.ball_members(b)
        w.append(float(np.abs(u[mem]).max()) ** q)
    sol = max_weight_packing(space, cands, w, l, R, S, mode="exact")
    return sol.value ** (1.0 / q)


def sobolev_constant(
    space: FiniteMetricSpace,
    p: float,
    q: float,
    l: float = 2.0,
    R: float = 1.0,
    S: float = 1.0,
    budget: int = 200,
    seed: int = 0,
) -> SobolevEstimate:
    """Certified lower estimate of the best constant in
    ``lq_norm(u) <= C * energy(u)**(1/p)`` over ``u`` vanishing on the boundary.

    Random candidates plus coordinate ascent; every reported ratio is achieved
    by the returned ``u``, so the estimate never overshoots the true constant.
    """
    bd = sorted(space.boundary)
    if not bd:
        raise VarProbError("a nonempty boundary set is required for the support condition")
    free = [i for i in range(space.n) if i not in set(bd)]
    if not free:
        raise VarProbError("no free points left")
    cands = candidate_balls(space, R, S)
    rng = np.random.default_rng(seed)

    def ratio(u) -> Optional[float]:
        from .energy import energy as _energy

        e = _energy(space, u, p, l, R, S, mode="exact").exact
        nrm = _lq_norm(space, u, q, l, R, S, cands)
        if e <= TOL:
            if nrm > TOL:
                raise VarProbError("zero-energy candidate with positive norm; "
                                   "space looks degenerate or disconnected")
            return None
        return nrm / e ** (1.0 / p)

    pool = []
    for i in free:
        v = np.zeros(space.n)
        v[i] = 1.0
        pool.append(v)
    evals = 0
    best_u, best_r = None, -math.inf
    while len(pool) < max(4, budget // 8):
        v = rng.uniform(0, 1, size=space.n)
        v[bd] = 0.0
        pool.append(v)
    for v in pool:
        evals += 1
        r = ratio(v)
        if r is not None and r > best_r + 1e-12:
            best_r, best_u = r, v.copy()
    if best_u is None:
        raise VarProbError("all candidates had zero energy")

    grid = np.linspace(0.0, 1.0, 5)
    improved = True
    while improved and evals < budget:
        improved = False
        for i in free:
            if evals >= budget:
                break
            cur = best_u[i]
            for g in grid:
                if abs(g - cur) < 1e-12:
                    continue
                trial = best_u.copy()
                trial[i] = g
                evals += 1
                r = ratio(trial)
                if r is not None and r > best_r + 1e-12:
                    best_r, best_u = r, trial
                    improved = True
                if evals >= budget:
                    break
    return SobolevEstimate(best_r, best_u, evals,
                           {"p": p, "q": q, "l": l, "R": R, "S": S, "seed": seed})


# -- isoperimetric profile ----------------------------------------------------------------


@dataclass
class IsoperimetricProfile:
    volumes: List[int]
    values: List[int]
    mode: str

    def as_dict(self) -> dict:
        return {"volumes": self.volumes, "values": self.values, "mode": self.mode}


_ISO_EXACT_CAP = 24


def isoperimetric_profile(
    space: FiniteMetricSpace,
    volumes: Optional[Sequence[int]] = None,
    mode: str = "exact",
) -> IsoperimetricProfile:
    """Minimum edge boundary of a ``v``-point set in the unit-step graph.

    Exact mode enumerates subsets (allowed up to 24 points); greedy mode grows
    sets around every seed vertex and upper-bounds the profile.
    """
    n = space.n
    if volumes is None:
        volumes = list(range(1, n))
    volumes = [int(v) for v in volumes]
    for v in volumes:
        if not (1 <= v <= n - 1):
            raise VarProbError(f"volume {v} outside [1, {n - 1}]")
    adj = [0] * n
    for i in range(n):
        for j in space.neighbors(i):
            adj[i] |= 1 << int(j)

    if mode == "exact":
        if n > _ISO_EXACT_CAP:
            raise VarProbError(
                f"exact profile supports at most {_ISO_EXACT_CAP} points (got {n})"
            )
        values = []
        for v in volumes:
            best = None
            for combo in itertools.combinations(range(n), v):
                mask = 0
                for i in combo:
                    mask |= 1 << i
                cut = sum((adj[i] & ~mask).bit_count() for i in combo)
                if best is None or cut < best:
                    best = cut
            values.append(int(best))
        return IsoperimetricProfile(volumes, values, "exact")

    if mode != "greedy":
        raise VarProbError(f"unknown mode {mode!r}")
    best_by_size: Dict[int, int] = {}
    for seed in range(n):
        mask = 1 << seed
        chosen = [seed]
        cut = adj[seed].bit_count()
        best_by_size[1] = min(best_by_size.get(1, cut), cut)
        while len(chosen) < max(volumes):
            cand_best = None
            for x in range(n):
                if mask & (1 << x):
                    continue
                new_cut = cut - (adj[x] & mask).bit_count() + (adj[x] & ~mask & ~(1 << x)).bit_count()
                key = (new_cut, x)
                if cand_best is None or key < cand_best:
                    cand_best = key
            if cand_best is None:
                break
            cut, x = cand_best
            mask |= 1 << x
            chosen.append(x)
            sz = len(chosen)
            best_by_size[sz] = min(best_by_size.get(sz, cut), cut)
    values = [int(best_by_size[v]) for v in volumes]
    return IsoperimetricProfile(volumes, values, "greedy")


# -- reference functions --------------------------------------------------------------------


def cutoff_m(l: float) -> float:
    if l <= 1.0:
        raise VarProbError("the slow-growth cutoff needs l > 1")
    return max((l + 1.0) / (l - 1.0), math.e)


def cutoff_r1(l: float) -> float:
    if l <= 1.0:
        raise VarProbError("the small-scale cutoff needs l > 1")
    return min((l - 1.0) / l, l**-2.0, math.exp(-math.exp(2.0)))


def _triple_log(t):
    t = np.asarray(t, dtype=float)
    return np.log(np.abs(np.log(np.abs(np.log(t)))))


def eval_reference_function(kind: str, t, l: Optional[float] = None,
                            m: Optional[float] = None, r1: Optional[float] = None):
    """Evaluate a reference growth function with its plateau cutoff.

    ``loglog``: log log t above the cutoff ``m``, frozen at log log m below.
    ``sin-loglog``: sin(log log t) above ``m**2``, frozen at log log(m**2) below.
    ``triple-log``: log|log|log t|| below the small-scale cutoff ``r1``, frozen
    at its cutoff value above.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise VarProbError("reference functions are evaluated at positive arguments")
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if kind == "loglog":
        mm = m if m is not None else cutoff_m(l)
        out = np.where(t >= mm, np.log(np.log(np.maximum(t, mm))), math.log(math.log(mm)))
    elif kind == "sin-loglog":
        mm = m if m is not None else cutoff_m(l)
        cut = mm**2
        out = np.where(t >= cut, np.sin(np.log(np.log(np.maximum(t, cut)))),
                       math.log(math.log(cut)))
    elif kind == "triple-log":
        rr = r1 if r1 is not None else cutoff_r1(l)
        out = np.where(t <= rr, _triple_log(np.minimum(t, rr)), float(_triple_log(rr)))
    else:
        raise VarProbError(f"unknown reference function {kind!r}")
    return float(out[0]) if scalar else out


@dataclass
class R1Check:
    applicable: bool
    holds: Optional[bool]
    lhs: float
    rhs: float


def check_r1_inequality(a: float, b: float, l: float) -> R1Check:
    """Small-scale comparison ``v(a) - v(l b) <= 16 (v(a) - v(b))`` for the
    triple-log profile, under the hypotheses ``b <= r1`` and ``b/a >= l/(l-1)``."""
    if l <= 1.0:
        raise VarProbError("need l > 1")
    if a <= 0 or b <= 0:
        raise VarProbError("need positive a, b")
    r1 = cutoff_r1(l)
    if b > r1 + TOL or b / a < l / (l - 1.0) - 1e-9:
        return R1Check(False, None, math.nan, math.nan)
    va = float(_triple_log(a))
    vb = float(_triple_log(b))
    vlb = float(_triple_log(l * b))
    lhs = va - vlb
    rhs = 16.0 * (va - vb)
    return R1Check(True, bool(lhs <= rhs + 1e-9), lhs, rhs)


def check_r1_samples(l: float, n_samples: int, seed: int = 0) -> dict:
    """Vectorized sampling of hypothesis-satisfying pairs; counts violations."""
    rng = np.random.default_rng(seed)
    r1 = cutoff_r1(l)
    L1 = -math.log(r1)
    # -log b in [L1, 330], log(b/a) in [log(l/(l-1)), 300]: keeps a representable
    Lb = rng.uniform(L1, 330.0, size=n_samples)
    lr = rng.uniform(math.log(l / (l - 1.0)), 300.0, size=n_samples)
    La = Lb + lr
    b = np.exp(-Lb)
    a = np.exp(-La)
    assert np.all(b <= r1 + 1e-15) and np.all(a > 0)
    va = _triple_log(a)
    vb = _triple_log(b)
    vlb = _triple_log(l * b)
    lhs = va - vlb
    rhs = 16.0 * (va - vb)
    violations = int(np.count_nonzero(lhs > rhs + 1e-9))
    return {
        "l": l,
        "samples": int(n_samples),
        "violations": violations,
        "minSlack": float((rhs - lhs).min()),
    }
