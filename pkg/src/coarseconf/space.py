"""Finite metric and quasi-metric spaces, balls, and ball scaling.

Points are integers ``0..n-1``.  A space carries its distance data either as a
dense matrix or, for the coordinate generators (paths, grids, cycles and their
snowflakes), as a lazy row formula so that large instances never materialize an
``n x n`` array.  Distances produced by the graph generators are integers and
therefore exact in float64; everything else is floating point with a fixed
comparison tolerance of ``TOL = 1e-12``.

Quasi-metric inputs are not rejected: the constructor records the worst
triangle-inequality violation in ``triangle_defect`` and downstream code may
inspect it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

TOL = 1e-12

#: materialize full matrices only below this point count
_MATERIALIZE_CAP = 3000


class SpaceError(ValueError):
    pass


def _as_int_ids(ids) -> np.ndarray:
    out = np.asarray(ids, dtype=np.int64)
    if out.ndim != 1:
        raise SpaceError("point ids must form a 1-d sequence")
    return out


@dataclass(frozen=True)
class Ball:
    """Closed metric ball ``B(center, radius)``; always contains its center."""

    center: int
    radius: float

    def scaled(self, l: float) -> "Ball":
        if l < 1.0:
            raise SpaceError(f"scaling factor must be >= 1, got {l}")
        return Ball(self.center, l * self.radius)


@dataclass(frozen=True)
class Interval:
    """Interval ``[a, b]`` inside ``(0, 1]`` with the boundary-anchored scaling.

    Writing ``[a, b] = [exp(-r - t), exp(r - t)]`` the scaled interval is
    ``[exp(-l*r - t), min(1, exp(l*r - t))]``; intervals touching 0 are fixed
    points of the scaling.
    """

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a <= self.b <= 1.0):
            raise SpaceError(f"interval [{self.a}, {self.b}] not inside [0, 1]")

    def scaled(self, l: float) -> "Interval":
        if l < 1.0:
            raise SpaceError(f"scaling factor must be >= 1, got {l}")
        if self.a <= TOL:  # touches 0: fixed
            return self
        la, lb = math.log(self.a), math.log(self.b)
        r = 0.5 * (lb - la)
        t = -0.5 * (la + lb)
        lo = math.exp(-l * r - t)
        hi = min(1.0, math.exp(l * r - t))
        return Interval(lo, hi)

    def contains(self, x: float) -> bool:
        return self.a - TOL <= x <= self.b + TOL


@dataclass(frozen=True)
class QsProductBall:
    """Product ball ``I x B`` of a sup-product space; scales componentwise."""

    interval: Interval
    ball: Ball

    def scaled(self, l: float) -> "QsProductBall":
        return QsProductBall(self.interval.scaled(l), self.ball.scaled(l))


class FiniteMetricSpace:
    """A finite (quasi-)metric space on points ``0..n-1``."""

    def __init__(
        self,
        n: int,
        *,
        kind: str = "explicit",
        matrix: Optional[np.ndarray] = None,
        coords: Optional[np.ndarray] = None,
        metric: str = "matrix",
        alpha: float = 1.0,
        basepoint: Optional[int] = None,
        boundary: Optional[Iterable[int]] = None,
        meta: Optional[dict] = None,
        triangle_defect: Optional[float] = None,
        validate: bool = True,
    ):
        if n <= 0:
            raise SpaceError("a space needs at least one point")
        self.n = int(n)
        self.kind = kind
        self.alpha = float(alpha)
        self.metric = metric
        self.coords = None if coords is None else np.asarray(coords)
        self.basepoint = basepoint
        self.boundary = frozenset(int(i) for i in boundary) if boundary else frozenset()
        self.meta = dict(meta or {})
        self._mat: Optional[np.ndarray] = None
        self._diam: Optional[float] = None
        self._unit: Optional[float] = None

        if metric == "matrix":
            if matrix is None:
                raise SpaceError("matrix metric requires a matrix")
            mat = np.asarray(matrix, dtype=float)
            if mat.shape != (n, n):
                raise SpaceError(f"distance matrix must be {n}x{n}, got {mat.shape}")
            if validate:
                defect = _validate_matrix(mat)
                if triangle_defect is None:
                    triangle_defect = defect
            self._mat = mat
        elif metric in ("l1", "cycle"):
            if metric == "l1":
                if self.coords is None:
                    raise SpaceError("l1 metric requires coordinates")
                if self.coords.ndim == 1:
                    self.coords = self.coords[:, None]
                if len(self.coords) != n:
                    raise SpaceError("coordinate count does not match n")
        else:
            raise SpaceError(f"unknown metric backend {metric!r}")

        if self.basepoint is not None and not (0 <= self.basepoint < n):
            raise SpaceError("basepoint out of range")
        for b in self.boundary:
            if not (0 <= b < n):
                raise SpaceError("boundary point out of range")
        self.triangle_defect = float(triangle_defect or 0.0)

    # -- distance access ------------------------------------------------

    def row(self, i: int) -> np.ndarray:
        """Distances from point ``i`` to every point, as a float vector."""
        if self._mat is not None:
            return self._mat[i]
        if self.metric == "l1":
            r = np.abs(self.coords - self.coords[i]).sum(axis=1).astype(float)
        elif self.metric == "cycle":
            d = np.abs(np.arange(self.n) - i)
            r = np.minimum(d, self.n - d).astype(float)
        else:  # pragma: no cover
            raise SpaceError("no distance backend")
        if self.alpha != 1.0:
            r = r**self.alpha
        return r

    def d(self, i: int, j: int) -> float:
        if self._mat is not None:
            return float(self._mat[i, j])
        return float(self.row(i)[j])

    @property
    def matrix(self) -> np.ndarray:
        if self._mat is None:
            if self.n > _MATERIALIZE_CAP:
                raise SpaceError(
                    f"refusing to materialize a {self.n}x{self.n} matrix; use row()"
                )
            self._mat = np.vstack([self.row(i) for i in range(self.n)])
        return self._mat

    @property
    def diameter(self) -> float:
        if self._diam is None:
            self._diam = max(float(self.row(i).max()) for i in range(self.n))
        return self._diam

    @property
    def unit_step(self) -> float:
        """Smallest positive distance; the edge length of the unit-step graph."""
        if self._unit is None:
            best = math.inf
            for i in range(self.n):
                r = self.row(i)
                pos = r[r > TOL]
                if pos.size:
                    best = min(best, float(pos.min()))
            if not math.isfinite(best):
                raise SpaceError("space has no positive distances")
            self._unit = best
        return self._unit

    def neighbors(self, i: int) -> np.ndarray:
        """Points at exactly unit-step distance from ``i``."""
        r = self.row(i)
        return np.flatnonzero(np.abs(r - self.unit_step) <= TOL)

    def is_connected(self) -> bool:
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for w in self.neighbors(v):
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        return bool(seen.all())

    # -- balls ------------------------------------------------------------

    def ball_members(self, ball) -> np.ndarray:
        """Sorted point ids inside a :class:`Ball` or :class:`QsProductBall`."""
        if isinstance(ball, QsProductBall):
            return self._product_ball_members(ball)
        if ball.radius < -TOL:
            raise SpaceError("negative radius")
        return np.flatnonzero(self.row(ball.center) <= ball.radius + TOL)

    def _product_ball_members(self, pball: QsProductBall) -> np.ndarray:
        if self.kind != "warped":
            raise SpaceError("product balls only live on warped products")
        levels = np.asarray(self.meta["levels"], dtype=float)
        nz = int(self.meta["nz"])
        zdist = np.asarray(self.meta["zmatrix"], dtype=float)
        ok_level = (levels >= pball.interval.a - TOL) & (levels <= pball.interval.b + TOL)
        zc = pball.ball.center % nz
        ok_z = zdist[zc] <= pball.ball.radius + TOL
        mask = ok_level[:, None] & ok_z[None, :]
        return np.flatnonzero(mask.ravel())

    # -- derived spaces ----------------------------------------------------

    def snowflaked(self, alpha: float) -> "FiniteMetricSpace":
        if not (0.0 < alpha <= 1.0):
            raise SpaceError(f"snowflake exponent must lie in (0, 1], got {alpha}")
        meta = dict(self.meta)
        meta["base_kind"] = self.kind
        meta["snowflake_alpha"] = alpha
        if self._mat is not None or self.metric == "matrix":
            return FiniteMetricSpace(
                self.n,
                kind=f"snowflake({self.kind},{alpha})",
                matrix=self.matrix**alpha,
                basepoint=self.basepoint,
                boundary=self.boundary,
                meta=meta,
                validate=False,
            )
        sp = FiniteMetricSpace(
            self.n,
            kind=f"snowflake({self.kind},{alpha})",
            coords=self.coords,
            metric=self.metric,
            alpha=self.alpha * alpha,
            basepoint=self.basepoint,
            boundary=self.boundary,
            meta=meta,
            validate=False,
        )
        return sp

    def restrict(self, ids: Sequence[int], *, kind: Optional[str] = None) -> "FiniteMetricSpace":
        """Subspace on ``ids`` with the restricted metric.

        Point ``k`` of the result is ``ids[k]``; the original ids are kept in
        ``meta['parent_ids']``.
        """
        ids = _as_int_ids(ids)
        meta = {"parent_ids": ids.tolist()}
        new_kind = kind or f"{self.kind}|sub"
        base = None if self.basepoint is None else _index_of(ids, self.basepoint)
        bd = [_index_of(ids, b) for b in sorted(self.boundary) if b in set(ids.tolist())]
        if self._mat is not None or self.metric == "matrix":
            sub = self.matrix[np.ix_(ids, ids)]
            return FiniteMetricSpace(
                len(ids), kind=new_kind, matrix=sub, basepoint=base,
                boundary=bd, meta=meta, validate=False,
            )
        return FiniteMetricSpace(
            len(ids), kind=new_kind, coords=self.coords[ids], metric=self.metric,
            alpha=self.alpha, basepoint=base, boundary=bd, meta=meta, validate=False,
        )

    def with_boundary(self, boundary: Iterable[int], basepoint: Optional[int] = None):
        out = self.shallow_copy()
        out.boundary = frozenset(int(b) for b in boundary)
        if basepoint is not None:
            out.basepoint = basepoint
        return out

    def shallow_copy(self) -> "FiniteMetricSpace":
        out = object.__new__(FiniteMetricSpace)
        out.__dict__.update(self.__dict__)
        return out

    def __repr__(self):
        return f"FiniteMetricSpace(n={self.n}, kind={self.kind!r})"


def _index_of(ids: np.ndarray, original: int) -> Optional[int]:
    hits = np.flatnonzero(ids == original)
    return int(hits[0]) if hits.size else None


def _validate_matrix(mat: np.ndarray) -> float:
    n = mat.shape[0]
    if not np.all(np.isfinite(mat)):
        raise SpaceError("distances must be finite")
    if np.any(mat < -TOL):
        raise SpaceError("distances must be nonnegative")
    if np.abs(np.diag(mat)).max(initial=0.0) > TOL:
        raise SpaceError("diagonal must be zero")
    if np.abs(mat - mat.T).max(initial=0.0) > TOL:
        raise SpaceError("distance matrix must be symmetric")
    # worst triangle violation, O(n^2) memory per pivot
    defect = 0.0
    for k in range(n):
        viol = mat - (mat[:, k : k + 1] + mat[k : k + 1, :])
        defect = max(defect, float(viol.max()))
    return max(0.0, defect)


# -- scaling ---------------------------------------------------------------


def scale_ball(space: FiniteMetricSpace, ball, l: float):
    """The ``l``-scaled concentric ball; product balls scale componentwise."""
    if l < 1.0:
        raise SpaceError(f"scaling factor must be >= 1, got {l}")
    return ball.scaled(l)


# -- generators --------------------------------------------------------------


def gen_space(spec: dict) -> FiniteMetricSpace:
    """Build a space from a generator description.

    Supported kinds: ``path``, ``cycle``, ``grid``, ``tree``, ``snowflake``,
    ``warped_product`` and ``explicit``.  The same description always yields
    the same space.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "path":
        n = int(spec["n"])
        offset = int(spec.get("offset", 0))
        if n < 1:
            raise SpaceError("path needs n >= 1")
        return FiniteMetricSpace(
            n, kind="path", coords=np.arange(offset, offset + n), metric="l1",
            basepoint=spec.get("basepoint", 0),
        )
    if kind == "cycle":
        n = int(spec["n"])
        if n < 3:
            raise SpaceError("cycle needs n >= 3")
        return FiniteMetricSpace(n, kind="cycle", metric="cycle", basepoint=0)
    if kind == "grid":
        d, n = int(spec["d"]), int(spec["n"])
        if d < 1 or n < 1:
            raise SpaceError("grid needs d >= 1 and n >= 1")
        axes = np.indices((n,) * d).reshape(d, -1).T
        return FiniteMetricSpace(
            n**d, kind=f"grid({d},{n})", coords=axes, metric="l1", basepoint=0,
            meta={"d": d, "side": n},
        )
    if kind == "tree":
        return _gen_tree(int(spec["arity"]), int(spec["depth"]))
    if kind == "snowflake":
        base = gen_space(spec["base"])
        return base.snowflaked(float(spec["alpha"]))
    if kind == "warped_product":
        return _gen_warped(spec)
    if kind == "explicit":
        mat = np.asarray(spec["dist"], dtype=float)
        return FiniteMetricSpace(
            mat.shape[0], kind="explicit", matrix=mat,
            basepoint=spec.get("basepoint"), boundary=spec.get("boundary"),
        )
    raise SpaceError(f"unknown generator kind {kind!r}")


def _gen_tree(arity: int, depth: int) -> FiniteMetricSpace:
    """Complete rooted tree; graph metric d(x,y) = depth(x)+depth(y)-2*depth(meet)."""
    if arity < 1 or depth < 0:
        raise SpaceError("tree needs arity >= 1 and depth >= 0")
    parent = [-1]
    depths = [0]
    frontier = [0]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            for _ in range(arity):
                parent.append(v)
                depths.append(depths[v] + 1)
                nxt.append(len(parent) - 1)
        frontier = nxt
    n = len(parent)
    depths_arr = np.array(depths)
    # ancestor chains are short (<= depth), so pairwise meets are cheap
    anc = []
    for v in range(n):
        chain = []
        w = v
        while w != -1:
            chain.append(w)
            w = parent[w]
        anc.append(set(chain))
    mat = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w = j
            while w not in anc[i]:
                w = parent[w]
            dij = depths[i] + depths[j] - 2 * depths[w]
            mat[i, j] = mat[j, i] = dij
    return FiniteMetricSpace(
        n, kind=f"tree({arity},{depth})", matrix=mat, basepoint=0,
        meta={"arity": arity, "depth": depth, "parent": parent,
              "depths": depths_arr.tolist()},
        validate=False,
    )


def _gen_warped(spec: dict) -> FiniteMetricSpace:
    """Sup-product of an interval sample inside (0,1] with a snowflaked factor."""
    levels = spec.get("levels")
    if levels is None:
        levels = [math.exp(-k) for k in range(int(spec["K"]) + 1)]
    levels = sorted((float(x) for x in levels), reverse=True)
    if not levels or levels[0] > 1.0 + TOL or levels[-1] <= 0.0:
        raise SpaceError("interval samples must lie in (0, 1]")
    z = gen_space(spec["z"]) if isinstance(spec.get("z"), dict) else spec["z"]
    alpha = float(spec.get("alpha", 1.0))
    if not (0.0 < alpha <= 1.0):
        raise SpaceError(f"snowflake exponent must lie in (0, 1], got {alpha}")
    zmat = z.matrix**alpha
    nz = z.n
    lev = np.asarray(levels)
    dlev = np.abs(lev[:, None] - lev[None, :])
    nlev = len(levels)
    n = nlev * nz
    mat = np.maximum(
        np.kron(dlev, np.ones((nz, nz))),
        np.kron(np.ones((nlev, nlev)), zmat),
    )
    return FiniteMetricSpace(
        n, kind="warped", matrix=mat, basepoint=0,
        meta={"levels": levels, "nz": nz, "zmatrix": zmat.tolist(),
              "z_kind": z.kind, "alpha": alpha},
        validate=False,
    )


# -- JSON round trip ---------------------------------------------------------


def space_to_dict(space: FiniteMetricSpace) -> dict:
    """JSON form: row-major ``dist`` plus tags; floats keep full precision."""
    out = {
        "n": space.n,
        "kind": space.kind,
        "dist": [float(x) for x in space.matrix.ravel()],
    }
    if space.basepoint is not None:
        out["basepoint"] = space.basepoint
    if space.boundary:
        out["boundary"] = sorted(space.boundary)
    return out


def space_from_dict(data: dict) -> FiniteMetricSpace:
    n = int(data["n"])
    if "dist" in data:
        flat = np.asarray(data["dist"], dtype=float)
        if flat.ndim == 2:
            mat = flat
        else:
            if flat.size != n * n:
                raise SpaceError(f"dist must hold {n * n} entries, got {flat.size}")
            mat = flat.reshape(n, n)
    elif "edges" in data:
        mat = _shortest_path_matrix(n, data["edges"])
    else:
        raise SpaceError("space JSON needs 'dist' or 'edges'")
    return FiniteMetricSpace(
        n, kind=data.get("kind", "explicit"), matrix=mat,
        basepoint=data.get("basepoint"), boundary=data.get("boundary"),
    )


def _shortest_path_matrix(n: int, edges) -> np.ndarray:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import shortest_path

    rows, cols, vals = [], [], []
    for e in edges:
        i, j = int(e[0]), int(e[1])
        w = float(e[2]) if len(e) > 2 else 1.0
        if w <= 0:
            raise SpaceError("edge weights must be positive")
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    g = coo_matrix((vals, (rows, cols)), shape=(n, n))
    mat = shortest_path(g, method="D", directed=False)
    if not np.all(np.isfinite(mat)):
        raise SpaceError("edge list describes a disconnected space")
    return mat


def save_space(space: FiniteMetricSpace, path) -> None:
    with open(path, "w") as fh:
        json.dump(space_to_dict(space), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_space(path) -> FiniteMetricSpace:
    with open(path) as fh:
        return space_from_dict(json.load(fh))
