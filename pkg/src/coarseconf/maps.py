"""Maps between finite metric spaces and conformality certificates.

A map is certified through its canonical ball correspondence: a domain ball
goes to the smallest codomain ball centered at the image of its center that
contains the image of its members.  Certification tests, for each target scale
``lp``, whether every tested domain packing maps to a family that splits into
at most ``np_cap`` packings at scale ``lp`` — exhaustively over all maximal
packings when the candidate universe is small, otherwise over deterministic
greedy samples.  Verdicts never claim more than the tested ranges, and every
``falsified`` verdict carries a concrete witness packing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .energy import energy
from .packing import is_packing, packing_multiplicity
from .space import TOL, Ball, FiniteMetricSpace, Interval, gen_space
from .varprob import DeltaResult, VarProbError, grotzsch_delta

SAMPLER_EXACT_CAP = 16


class MapError(ValueError):
    pass


@dataclass
class SpaceMap:
    kind: str
    domain: FiniteMetricSpace
    codomain: FiniteMetricSpace
    mapping: np.ndarray  # domain point id -> codomain point id
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mapping = np.asarray(self.mapping, dtype=int)
        if self.mapping.shape != (self.domain.n,):
            raise MapError("mapping must assign every domain point")
        if self.mapping.min() < 0 or self.mapping.max() >= self.codomain.n:
            raise MapError("mapping leaves the codomain")

    def __call__(self, i: int) -> int:
        return int(self.mapping[i])

    def is_bijective(self) -> bool:
        return (self.domain.n == self.codomain.n
                and len(set(self.mapping.tolist())) == self.domain.n)


def _integer_line(half_width: int, transform: Callable[[np.ndarray], np.ndarray] = lambda x: x,
                  ) -> FiniteMetricSpace:
    xs = transform(np.arange(-half_width, half_width + 1, dtype=float))
    mat = np.abs(xs[:, None] - xs[None, :])
    return FiniteMetricSpace(len(xs), kind="line-sample", matrix=mat,
                             meta={"coords": xs.tolist()})


def _halfplane_sample(xs: Sequence[float], ys: Sequence[float]) -> FiniteMetricSpace:
    pts = [(float(x), float(y)) for y in ys for x in xs]
    arr = np.array(pts)
    x = arr[:, 0]
    y = arr[:, 1]
    sq = (x[:, None] - x[None, :]) ** 2 + (y[:, None] - y[None, :]) ** 2
    mat = np.arccosh(1.0 + sq / (2.0 * y[:, None] * y[None, :]))
    np.fill_diagonal(mat, 0.0)
    return FiniteMetricSpace(len(pts), kind="halfplane-sample", matrix=mat,
                             meta={"points": pts})


def builtin_map(kind: str, **params) -> SpaceMap:
    """Construct one of the stock maps.

    identity(space); snowflake-identity(space, alpha); power(K, half_width):
    f(x) = x|x|^(K-1) on an integer line sample; qi-embedding(n): i -> (i, 0)
    into the square grid; grid-embedding(n, d): first-axis inclusion;
    horospherical(half_width, margin): t -> (t, 1) on a horocycle sample of
    the hyperbolic half-plane; user(domain, codomain, mapping).
    """
    if kind == "identity":
        sp = params["space"]
        return SpaceMap("identity", sp, sp, np.arange(sp.n), {})
    if kind == "snowflake-identity":
        sp = params["space"]
        alpha = float(params.get("alpha", 0.5))
        return SpaceMap("snowflake-identity", sp, sp.snowflaked(alpha),
                        np.arange(sp.n), {"alpha": alpha})
    if kind == "power":
        K = float(params.get("K", 2.0))
        half = int(params.get("half_width", 8))
        dom = _integer_line(half)
        cod = _integer_line(half, lambda x: np.sign(x) * np.abs(x) ** K)
        return SpaceMap("power", dom, cod, np.arange(dom.n), {"K": K, "half_width": half})
    if kind == "qi-embedding":
        n = int(params.get("n", 12))
        dom = gen_space({"kind": "path", "n": n})
        cod = gen_space({"kind": "grid", "d": 2, "n": n})
        mapping = np.arange(n) * n  # (i, 0) in row-major order
        return SpaceMap("qi-embedding", dom, cod, mapping, {"n": n, "L": 1.0, "C": 0.0})
    if kind == "grid-embedding":
        n = int(params.get("n", 8))
        d = int(params.get("d", 2))
        dom = gen_space({"kind": "path", "n": n})
        cod = gen_space({"kind": "grid", "d": d, "n": n})
        mapping = np.arange(n) * n ** (d - 1)
        return SpaceMap("grid-embedding", dom, cod, mapping, {"n": n, "d": d})
    if kind == "horospherical":
        half = int(params.get("half_width", 96))
        margin = int(params.get("margin", 16))
        dom = _integer_line(half)
        xs = list(range(-(half + margin), half + margin + 1))
        cod = _halfplane_sample(xs, [1.0])
        offset = half + margin
        mapping = np.arange(-half, half + 1) + offset
        return SpaceMap("horospherical", dom, cod, mapping,
                        {"half_width": half, "margin": margin})
    if kind == "user":
        return SpaceMap("user", params["domain"], params["codomain"], params["mapping"], {})
    raise MapError(f"unknown map kind {kind!r} (the tree-to-product model lives in poincare_model)")


# -- canonical ball correspondence ------------------------------------------------


def image_ball(f: SpaceMap, ball: Ball, r_floor: float = 0.0) -> Ball:
    """Smallest codomain ball centered at the image of the center that
    contains the image of the members, with an optional radius floor."""
    members = f.domain.ball_members(ball)
    c = f(ball.center)
    row = f.codomain.row(c)
    radius = float(row[f.mapping[members]].max()) if len(members) else 0.0
    return Ball(c, max(radius, r_floor))


def canonical_correspondence(f: SpaceMap, r_floor: float = 0.0):
    """The ball correspondence as a callable; kept trivial on purpose —
    centers go to image centers, radii to measured image radii."""
    def corr(ball: Ball) -> Ball:
        return image_ball(f, ball, r_floor)
    return corr


# -- packing samplers ------------------------------------------------------------


def _all_maximal_packings(space: FiniteMetricSpace, cands: List[Ball], l: float,
                          R: float, S: float) -> List[List[int]]:
    from .packing import conflict_matrix

    conf = conflict_matrix(space, cands, l)
    m = len(cands)
    nbr = [int(sum(1 << j for j in np.flatnonzero(conf[i]) if j != i)) for i in range(m)]
    out: List[List[int]] = []
    full = (1 << m) - 1

    def grow(chosen: int, allowed: int, start: int):
        extendable = False
        for v in range(start, m):
            if (allowed >> v) & 1:
                extendable = True
                grow(chosen | (1 << v), allowed & ~((1 << v) | nbr[v]), v + 1)
        if not extendable:
            # maximal iff no allowed vertex anywhere (also below start)
            if all(not ((allowed >> v) & 1) for v in range(m)):
                out.append([v for v in range(m) if (chosen >> v) & 1])

    grow(0, full, 0)
    uniq = sorted({tuple(p) for p in out if p})
    return [list(p) for p in uniq]


def _sampled_maximal_packings(space: FiniteMetricSpace, cands: List[Ball], l: float,
                              R: float, S: float, max_packings: int, seed: int,
                              ) -> List[List[int]]:
    from .packing import max_weight_packing

    rng = np.random.default_rng(seed)
    seen = set()
    out: List[List[int]] = []
    m = len(cands)
    for k in range(max_packings * 2):
        if len(out) >= max_packings:
            break
        if k == 0:
            w = np.ones(m)
        else:
            w = rng.uniform(0.5, 1.5, size=m)
        sol = max_weight_packing(space, cands, list(w), l, R, S, mode="greedy")
        key = tuple(sol.indices)
        if key and key not in seen:
            seen.add(key)
            out.append(list(sol.indices))
    return out


def sample_packings(space: FiniteMetricSpace, l: float, R: float, S: float,
                    max_packings: int = 64, seed: int = 0) -> Tuple[List[Ball], List[List[int]], bool]:
    """Candidate universe plus maximal packings: all of them when the universe
    is small (exhaustive=True), greedy-sampled otherwise."""
    from .energy import candidate_balls

    cands = candidate_balls(space, R, S)
    if len(cands) <= SAMPLER_EXACT_CAP:
        return cands, _all_maximal_packings(space, cands, l, R, S), True
    return cands, _sampled_maximal_packings(space, cands, l, R, S, max_packings, seed), False


# -- conformality certificates ------------------------------------------------------


@dataclass
class ConformalCertificate:
    klass: str
    rows: List[dict]
    verdict: str
    params: dict

    def as_dict(self) -> dict:
        return {"class": self.klass, "rows": self.rows, "verdict": self.verdict}

    def row_for(self, lp: float) -> dict:
        for row in self.rows:
            if row["lp"] == lp:
                return row
        raise MapError(f"no certificate row for target scale {lp}")


def _class_windows(klass: str, R: float, S: Optional[float], r_prime: Optional[float]):
    if klass not in ("coarse", "uniform", "rough", "largeScale"):
        raise MapError(f"unknown conformality class {klass!r}")
    if klass == "coarse":
        s = R if S is None else S
    elif klass == "uniform":
        s = math.inf if S is None else S
    else:  # rough, largeScale: upper radius unconstrained
        s = math.inf if S is None else S
    floor = 0.0
    if klass in ("rough", "largeScale"):
        floor = 1.0 if r_prime is None else float(r_prime)
    return s, floor


def _multiplicity_at_scale(cod: FiniteMetricSpace, balls: List[Ball], lp: float) -> int:
    if not balls:
        return 0
    return packing_multiplicity(cod, balls, lp).n_colors


def certify_conformal(
    f: SpaceMap,
    klass: str = "coarse",
    lp_list: Sequence[float] = (1.0, 2.0),
    R: float = 1.0,
    S: Optional[float] = None,
    r_prime: Optional[float] = None,
    np_cap: int = 1,
    l_grid: Optional[Sequence[float]] = None,
    l_cap: float = 64.0,
    max_packings: int = 64,
    seed: int = 0,
) -> ConformalCertificate:
    """Search, per target scale, for the smallest domain scale whose tested
    packings all map to families splitting into at most ``np_cap`` packings.

    The verdict speaks only about the tested grid: ``certifiedAtRange`` when
    every row passed, ``falsified`` with a witness packing when some target
    scale admits no passing domain scale.
    """
    if not lp_list:
        raise MapError("at least one target scale is required")
    S_eff, floor = _class_windows(klass, R, S, r_prime)
    cands, packs, exhaustive = sample_packings(f.domain, 1.0, R, S_eff,
                                               max_packings=max_packings, seed=seed)
    rows = []
    for lp in lp_list:
        grid = list(l_grid) if l_grid is not None else None
        if grid is None:
            grid, l = [], 1.0
            while l <= l_cap + TOL:
                grid.append(l)
                l *= 2.0
        passed = None
        worst: Tuple[int, List[int]] = (0, [])
        for l in grid:
            _, packs_l, _ = sample_packings(f.domain, l, R, S_eff,
                                            max_packings=max_packings, seed=seed)
            np_obs = 0
            bad = []
            for pk in packs_l:
                images = [image_ball(f, cands[i], floor) for i in pk]
                mult = _multiplicity_at_scale(f.codomain, images, lp)
                if mult > np_obs:
                    np_obs, bad = mult, pk
            if np_obs <= np_cap:
                passed = (l, max(np_obs, 1))
                break
            worst = (np_obs, bad)
        row = {"lp": float(lp), "R": float(R),
               "S": (None if math.isinf(S_eff) else float(S_eff)), "Rp": floor}
        if passed is not None:
            row.update({"l": float(passed[0]), "Np": int(passed[1]), "pass": True})
        else:
            row.update({"l": float(grid[-1]), "Np": int(worst[0]), "pass": False,
                        "witness": [{"c": int(cands[i].center), "r": float(cands[i].radius)}
                                    for i in worst[1]]})
        rows.append(row)
    if all(r["pass"] for r in rows):
        verdict = "certifiedAtRange"
    elif any(not r["pass"] and "witness" in r for r in rows):
        verdict = "falsified"
    else:
        verdict = "inconclusive"
    return ConformalCertificate(klass, rows, verdict,
                                {"exhaustive": exhaustive, "np_cap": np_cap,
                                 "n_packings": len(packs), "seed": seed})


# -- functoriality checks --------------------------------------------------------------


def pullback_energy_check(f: SpaceMap, row: dict, u: np.ndarray, p: float = 2.0,
                          mode: str = "exact") -> dict:
    """Transported-energy comparison for a certificate row: the energy of the
    pulled-back function at the domain scale must stay within the certificate
    multiplicity times the codomain energy at the target scale.

    The codomain window is the measured range of canonical image radii; the
    transported statement allows arbitrarily large upper radii, so shrinking
    the window only makes this check stricter, never weaker.
    """
    from .energy import candidate_balls

    u = np.asarray(u, dtype=float)
    if u.shape[0] != f.codomain.n:
        raise MapError("u must live on the codomain")
    l, lp, Np = float(row["l"]), float(row["lp"]), int(row["Np"])
    R = float(row["R"])
    S = math.inf if row.get("S") is None else float(row["S"])
    floor = float(row.get("Rp", 0.0))
    radii = [image_ball(f, b, floor).radius for b in candidate_balls(f.domain, R, S)]
    Rp = max(min(radii), 1e-12)
    Sp = max(radii)
    pulled = u[f.mapping]
    lhs = energy(f.domain, pulled, p, l, R, S, mode=mode)
    rhs = energy(f.codomain, u, p, lp, Rp, Sp, mode=mode)
    lhs_v = lhs.value if lhs.exact is None else lhs.exact
    rhs_v = rhs.value if rhs.exact is None else rhs.exact
    ok = lhs_v <= Np * rhs_v + 1e-9 * max(1.0, abs(rhs_v))
    report = {"lhs": lhs_v, "rhs": rhs_v, "Np": Np,
              "Rp": Rp, "Sp": Sp, "pass": bool(ok)}
    if not ok and lhs.witness is not None:
        report["witness"] = [{"c": int(b.center), "r": float(b.radius)} for b in lhs.witness]
    return report


def delta_transport_check(f: SpaceMap, pairs: Sequence[Tuple[int, int]], row: dict,
                          p: float = 2.0, boundary: Optional[Iterable[int]] = None,
                          codomain_boundary: Optional[Iterable[int]] = None) -> dict:
    """Connection-invariant comparison across a bijective map: for each pair,
    delta in the domain must stay within Np times delta of the image pair
    (image arcs transported from the domain pool, upper window dropped)."""
    if not f.is_bijective():
        raise MapError("delta transport requires a bijective map")
    l, lp, Np = float(row["l"]), float(row["lp"]), int(row["Np"])
    R = float(row["R"])
    S = math.inf if row.get("S") is None else float(row["S"])
    Rp = float(row.get("Rp", 0.0)) or R
    bd = list(f.domain.boundary if boundary is None else boundary)
    cod_bd = (sorted(int(f.mapping[i]) for i in bd)
              if codomain_boundary is None else sorted(codomain_boundary))
    results = []
    from .varprob import capacity, enumerate_arcs

    for x1, x2 in pairs:
        lhs = grotzsch_delta(f.domain, x1, x2, boundary=bd, p=p, l=l, R=R, S=S)
        best = None
        for arc in enumerate_arcs(f.domain, x1, x2):
            img_pts = sorted({int(f.mapping[i]) for i in arc})
            res = capacity(f.codomain, img_pts, cod_bd, p=p, l=lp, R=Rp, S=math.inf)
            if best is None or res.value < best:
                best = res.value
        ok = lhs.value <= Np * best + 1e-9 * max(1.0, best)
        results.append({"pair": [int(x1), int(x2)], "lhs": lhs.value,
                        "rhs": best, "pass": bool(ok)})
    return {"Np": Np, "pairs": results, "pass": all(r["pass"] for r in results)}


def compose_maps(f: SpaceMap, g: SpaceMap) -> SpaceMap:
    if f.codomain.n != g.domain.n:
        raise MapError("composition needs matching middle space sizes")
    return SpaceMap(f"{g.kind}*{f.kind}", f.domain, g.codomain,
                    g.mapping[f.mapping], {"inner": f.kind, "outer": g.kind})


def check_composition(f: SpaceMap, g: SpaceMap, row_f: dict, row_g: dict,
                      max_packings: int = 32, seed: int = 0) -> dict:
    """Composed correspondence multiplicity stays within the product of the
    two certified multiplicities, on the same tested packings."""
    l, R = float(row_f["l"]), float(row_f["R"])
    S = math.inf if row_f.get("S") is None else float(row_f["S"])
    lpp = float(row_g["lp"])
    cap = int(row_f["Np"]) * int(row_g["Np"])
    h = compose_maps(f, g)
    cands, packs, _ = sample_packings(f.domain, l, R, S, max_packings=max_packings, seed=seed)
    worst = 0
    for pk in packs:
        images = [image_ball(h, cands[i]) for i in pk]
        worst = max(worst, _multiplicity_at_scale(h.codomain, images, lpp))
    return {"bound": cap, "observed": worst, "pass": bool(worst <= cap),
            "n_packings": len(packs)}


# -- tree-to-product model ---------------------------------------------------------------


@dataclass
class PoincareImage:
    tree: FiniteMetricSpace
    chi: np.ndarray                  # radial coordinate e^{-depth}
    phi: np.ndarray                  # tree node -> leaf node id
    phi_idx: np.ndarray              # tree node -> boundary-space point id
    leaves: List[int]
    boundary_space: FiniteMetricSpace
    leaf_index: Dict[int, int]

    def point(self, i: int) -> Tuple[float, int]:
        return float(self.chi[i]), int(self.phi[i])


def _tree_children(parent: np.ndarray) -> List[List[int]]:
    kids: List[List[int]] = [[] for _ in parent]
    for v, par in enumerate(parent):
        if par >= 0:
            kids[par].append(v)
    return kids


def poincare_model(tree: FiniteMetricSpace, base: float = math.e,
                   radii: Optional[Sequence[int]] = None,
                   centers: Optional[Sequence[int]] = None) -> Tuple[PoincareImage, dict]:
    """Radial-times-boundary model of a rooted tree.

    chi(x) = base^{-depth(x)}, phi(x) = least leaf below x; the boundary
    carries the visual quasi-metric base^{-depth(meet)}.  For every sampled
    ball B the bounding product ball B' is checked both ways: the image of B
    sits inside B', and everything whose image lies in B' sits inside 3B.
    The report gives per-radius pass rates and the smallest radius from which
    all larger radii pass both inclusions.
    """
    meta = tree.meta or {}
    if "parent" not in meta or "depths" not in meta:
        raise MapError("poincare_model needs a generated tree (parent/depth data)")
    parent = np.asarray(meta["parent"], dtype=int)
    depth = np.asarray(meta["depths"], dtype=int)
    n = tree.n
    maxd = int(depth.max())
    kids = _tree_children(parent)
    leaves = [v for v in range(n) if depth[v] == maxd]
    if not leaves:
        raise MapError("tree has no deepest-level leaves")

    phi = np.full(n, -1, dtype=int)
    for v in sorted(range(n), key=lambda v: -depth[v]):
        if depth[v] == maxd:
            phi[v] = v
        else:
            below = [phi[c] for c in kids[v] if phi[c] >= 0]
            if not below:
                raise MapError(f"node {v} has no deepest-level descendant")
            phi[v] = min(below)
    chi = base ** (-depth.astype(float))

    # visual quasi-metric on the deepest level: base^{-depth(common ancestor)}
    leaf_index = {leaf: k for k, leaf in enumerate(leaves)}
    L = len(leaves)
    anc = np.zeros((L, maxd + 1), dtype=int)
    for k, leaf in enumerate(leaves):
        v = leaf
        chain = []
        while v >= 0:
            chain.append(v)
            v = parent[v]
        anc[k] = chain[::-1]
    meet_depth = np.zeros((L, L), dtype=int)
    for i in range(L):
        for j in range(i + 1, L):
            d = 0
            while d < maxd and anc[i][d + 1] == anc[j][d + 1]:
                d += 1
            meet_depth[i, j] = meet_depth[j, i] = d
    vis = base ** (-meet_depth.astype(float))
    np.fill_diagonal(vis, 0.0)
    bspace = FiniteMetricSpace(L, kind="tree-boundary", matrix=vis,
                               validate=False, meta={"leaves": leaves})
    phi_idx = np.array([leaf_index[int(phi[v])] for v in range(n)], dtype=int)
    img = PoincareImage(tree, chi, phi, phi_idx, leaves, bspace, leaf_index)

    if radii is None:
        radii = list(range(1, maxd + 1))
    if centers is None:
        centers = list(range(n))
    rows = []
    for r in radii:
        failures = []
        for x in centers:
            ok1, ok2 = _check_inclusions(img, int(x), int(r))
            if not (ok1 and ok2):
                failures.append({"center": int(x), "radius": int(r),
                                 "first": bool(ok1), "second": bool(ok2)})
        rows.append({"radius": int(r), "checked": len(centers),
                     "failures": len(failures),
                     "examples": failures[:3]})
    threshold = None
    for k in range(len(rows)):
        if all(row["failures"] == 0 for row in rows[k:]):
            threshold = rows[k]["radius"]
            break
    report = {"rows": rows, "threshold": threshold, "base": base,
              "maxDepth": maxd, "nLeaves": L}
    return img, report


def _check_inclusions(img: PoincareImage, x: int, r: int) -> Tuple[bool, bool]:
    tree = img.tree
    row = tree.row(x)
    mem = row <= r + TOL
    chis = img.chi[mem]
    lo, hi = float(chis.min()), float(chis.max())
    brow = img.boundary_space.row(img.phi_idx[x])
    bdist = brow[img.phi_idx]                    # boundary shadow distances
    rad = float(bdist[mem].max())

    # first inclusion: by construction, but verified literally
    ok1 = bool(np.all((img.chi[mem] >= lo - TOL) & (img.chi[mem] <= hi + TOL)
                      & (bdist[mem] <= rad + TOL)))
    if not ok1:
        return False, False

    in_product = (img.chi >= lo - TOL) & (img.chi <= hi + TOL) & \
        (bdist <= rad + TOL)
    big = row <= 3.0 * r + TOL
    ok2 = not bool(np.any(in_product & ~big))
    return True, ok2
