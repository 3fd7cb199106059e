import json
import math

import numpy as np
import pytest

from coarseconf.space import (
    Ball,
    FiniteMetricSpace,
    Interval,
    QsProductBall,
    SpaceError,
    gen_space,
    load_space,
    save_space,
    scale_ball,
    space_from_dict,
    space_to_dict,
)


def test_path_distances():
    sp = gen_space({"kind": "path", "n": 3})
    assert sp.n == 3
    assert sp.d(0, 2) == 2.0
    assert sp.d(1, 2) == 1.0
    assert sp.d(0, 0) == 0.0


def test_cycle_distances():
    sp = gen_space({"kind": "cycle", "n": 6})
    assert sp.d(0, 3) == 3.0
    assert sp.d(0, 5) == 1.0
    assert sp.diameter == 3.0


def test_grid_ball_members():
    sp = gen_space({"kind": "grid", "d": 2, "n": 5})
    assert sp.n == 25
    center = 2 * 5 + 2  # (2, 2)
    got = sp.ball_members(Ball(center, 1.0))
    assert len(got) == 5  # center plus the four axis neighbours


def test_grid_metric_is_l1():
    sp = gen_space({"kind": "grid", "d": 2, "n": 4})
    # (0,0) to (3,2): indices 0 and 3*4+2
    assert sp.d(0, 3 * 4 + 2) == 5.0


def test_tree_counts_and_metric():
    sp = gen_space({"kind": "tree", "arity": 2, "depth": 3})
    assert sp.n == 15
    # two children of the root are 2 apart
    assert sp.d(1, 2) == 2.0
    # leaf to root distance equals the depth
    assert sp.d(0, sp.n - 1) == 3.0
    depths = sp.meta["depths"]
    assert max(depths) == 3


def test_snowflake_ball_identity():
    base = gen_space({"kind": "path", "n": 9})
    sf = base.snowflaked(0.5)
    for x in (0, 4, 8):
        for r in (1.0, 1.5, 2.0):
            lhs = sf.ball_members(Ball(x, r))
            rhs = base.ball_members(Ball(x, r ** (1 / 0.5)))
            assert np.array_equal(lhs, rhs)


def test_snowflake_alpha_validation():
    base = gen_space({"kind": "path", "n": 4})
    with pytest.raises(SpaceError):
        base.snowflaked(0.0)
    with pytest.raises(SpaceError):
        base.snowflaked(1.5)


def test_warped_product_point_count_and_metric():
    sp = gen_space({
        "kind": "warped_product",
        "levels": [1.0, math.exp(-1), math.exp(-2)],
        "z": {"kind": "cycle", "n": 4},
        "alpha": 1.0,
    })
    assert sp.n == 12
    # same level: distance is the cycle distance
    assert sp.d(0, 1) == 1.0
    # same cycle point, levels 1 and e^-1
    assert sp.d(0, 4) == pytest.approx(1.0 - math.exp(-1))
    # sup of the two coordinates
    assert sp.d(0, 4 + 2) == pytest.approx(max(1.0 - math.exp(-1), 2.0))


def test_interval_scaling_matches_parametrization():
    # oracle: [a, b] = [exp(-r-t), exp(r-t)], scaled = [exp(-l r - t), min(1, exp(l r - t))]
    rng = np.random.default_rng(7)
    for _ in range(200):
        t = rng.uniform(0.1, 5.0)
        r = rng.uniform(0.01, min(2.0, t))  # keep b <= 1
        a, b = math.exp(-r - t), math.exp(r - t)
        l = rng.uniform(1.0, 4.0)
        got = Interval(a, b).scaled(l)
        want_lo = math.exp(-l * r - t)
        want_hi = min(1.0, math.exp(l * r - t))
        assert got.a == pytest.approx(want_lo, rel=1e-12)
        assert got.b == pytest.approx(want_hi, rel=1e-12)


def test_interval_scaling_frozen_example():
    got = Interval(math.exp(-2), math.exp(-1)).scaled(3.0)
    assert got.a == pytest.approx(math.exp(-3), rel=1e-12)
    assert got.b == pytest.approx(1.0, rel=1e-12)


def test_interval_touching_zero_is_fixed():
    iv = Interval(0.0, 0.37)
    got = iv.scaled(5.0)
    assert got.a == 0.0 and got.b == 0.37


def test_product_ball_scaling_componentwise():
    pb = QsProductBall(Interval(math.exp(-2), math.exp(-1)), Ball(3, 1.0))
    sc = pb.scaled(3.0)
    assert sc.ball.radius == 3.0
    assert sc.interval.b == pytest.approx(1.0)


def test_product_ball_members_on_warped_product():
    sp = gen_space({
        "kind": "warped_product",
        "levels": [1.0, math.exp(-1), math.exp(-2)],
        "z": {"kind": "cycle", "n": 4},
        "alpha": 1.0,
    })
    pb = QsProductBall(Interval(math.exp(-1) - 1e-9, 1.0), Ball(0, 1.0))
    mem = sp.ball_members(pb)
    # levels {1, e^-1} x cycle points {3, 0, 1}
    assert sorted(mem) == [0, 1, 3, 4, 5, 7]


def test_scale_ball_requires_l_at_least_one():
    sp = gen_space({"kind": "path", "n": 5})
    with pytest.raises(SpaceError):
        scale_ball(sp, Ball(0, 1.0), 0.5)


def test_ball_contains_center():
    sp = gen_space({"kind": "cycle", "n": 7})
    for x in range(sp.n):
        assert x in sp.ball_members(Ball(x, 0.0))


def test_round_trip_is_bit_stable(tmp_path):
    mat = np.array(
        [[0, 1 / 3, 2 / 3], [1 / 3, 0, 1 / 3], [2 / 3, 1 / 3, 0]], dtype=float
    )
    sp = gen_space({"kind": "explicit", "dist": mat.tolist()})
    f = tmp_path / "space.json"
    save_space(sp, f)
    back = load_space(f)
    assert np.array_equal(back.matrix, sp.matrix)  # exact, not approx
    # a second round trip produces byte-identical files
    f2 = tmp_path / "space2.json"
    save_space(back, f2)
    assert f.read_bytes() == f2.read_bytes()


def test_round_trip_preserves_tags(tmp_path):
    sp = gen_space({"kind": "path", "n": 6}).with_boundary([5], basepoint=0)
    d = space_to_dict(sp)
    back = space_from_dict(d)
    assert back.basepoint == 0
    assert back.boundary == frozenset({5})
    assert back.kind == "path"


def test_edges_input_shortest_path():
    data = {"n": 4, "edges": [[0, 1], [1, 2], [2, 3], [0, 3]], "kind": "explicit"}
    sp = space_from_dict(data)
    assert sp.d(0, 2) == 2.0
    assert sp.d(0, 3) == 1.0


def test_edges_disconnected_rejected():
    with pytest.raises(SpaceError):
        space_from_dict({"n": 3, "edges": [[0, 1]]})


def test_explicit_validation():
    with pytest.raises(SpaceError):
        gen_space({"kind": "explicit", "dist": [[0, 1], [2, 0]]})  # asymmetric
    with pytest.raises(SpaceError):
        gen_space({"kind": "explicit", "dist": [[0, -1], [-1, 0]]})  # negative


def test_quasi_metric_defect_recorded():
    # d(0,2) = 5 breaks the triangle through 1 by 3; recorded, not rejected
    mat = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    sp = gen_space({"kind": "explicit", "dist": mat})
    assert sp.triangle_defect == pytest.approx(3.0)
    metric = gen_space({"kind": "explicit", "dist": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]})
    assert metric.triangle_defect == 0.0


def test_generators_deterministic():
    a = gen_space({"kind": "grid", "d": 2, "n": 4}).matrix
    b = gen_space({"kind": "grid", "d": 2, "n": 4}).matrix
    assert np.array_equal(a, b)


def test_restrict_keeps_metric_and_tags():
    sp = gen_space({"kind": "grid", "d": 2, "n": 5})
    # L1 ball of radius 2 around the middle point
    mid = 2 * 5 + 2
    ids = sp.ball_members(Ball(mid, 2.0))
    sub = sp.restrict(ids)
    k = int(np.flatnonzero(ids == mid)[0])
    for j in range(sub.n):
        assert sub.d(k, j) == sp.d(mid, int(ids[j]))


def test_unit_step_and_neighbors():
    sp = gen_space({"kind": "path", "n": 5})
    assert sp.unit_step == 1.0
    assert list(sp.neighbors(2)) == [1, 3]
    sf = sp.snowflaked(0.5)
    assert sf.unit_step == 1.0  # 1**alpha
    assert sp.is_connected()


def test_large_grid_rows_without_matrix():
    sp = gen_space({"kind": "grid", "d": 2, "n": 80})  # 6400 points
    row = sp.row(0)
    assert row.shape == (6400,)
    assert row[6399] == 158.0
    with pytest.raises(SpaceError):
        _ = sp.matrix
