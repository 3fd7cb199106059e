import itertools
import math

import numpy as np
import pytest

from coarseconf.energy import (
    Cochain,
    CochainError,
    EnergyError,
    LpProductTarget,
    ScalarTarget,
    SpaceTarget,
    candidate_balls,
    coboundary,
    cochain_from_function,
    cochain_norm,
    curve_length,
    energy,
    energy_upper_bound_covering,
    oscillation,
    simplices,
)
from coarseconf.space import Ball, gen_space
from helpers import brute_energy


def test_oscillation_scalar():
    sp = gen_space({"kind": "path", "n": 7})
    u = np.arange(7, dtype=float)
    assert oscillation(sp, u, Ball(3, 1.0)) == 2.0
    assert oscillation(sp, u, Ball(0, 1.0)) == 1.0
    assert oscillation(sp, np.ones(7), Ball(3, 2.0)) == 0.0


def test_oscillation_vector_lp():
    sp = gen_space({"kind": "path", "n": 3})
    u = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
    # ball {0,1,2}: farthest pair under l^2 is (0,0)-(2,0) -> 2; (0,0)-(1,1) is sqrt 2
    assert oscillation(sp, u, Ball(1, 1.0), p=2.0) == pytest.approx(2.0)
    assert oscillation(sp, u, Ball(1, 1.0), p=1.0) == pytest.approx(2.0)


def test_oscillation_space_target():
    sp = gen_space({"kind": "path", "n": 5})
    tgt = SpaceTarget(gen_space({"kind": "cycle", "n": 6}))
    u = np.array([0, 1, 2, 3, 4])
    assert oscillation(sp, u, Ball(2, 1.0), target=tgt) == 2.0


def test_candidate_balls_unit_window():
    sp = gen_space({"kind": "path", "n": 7})
    cands = candidate_balls(sp, 1.0, 1.0)
    assert len(cands) == 7
    assert all(b.radius == 1.0 for b in cands)


def test_candidate_balls_infinite_window_capped():
    sp = gen_space({"kind": "path", "n": 5})
    cands = candidate_balls(sp, 1.0, math.inf)
    assert max(b.radius for b in cands) == sp.diameter
    assert all(b.radius >= 1.0 for b in cands)


def test_energy_path7_frozen():
    sp = gen_space({"kind": "path", "n": 7})
    u = np.arange(7, dtype=float)
    res = energy(sp, u, 1.0, 1.0, 1.0, 1.0, mode="exact")
    assert res.exact == pytest.approx(4.0)
    assert [b.center for b in res.witness] == [0, 3, 6]


def test_energy_matches_dense_brute_force():
    rng = np.random.default_rng(5)
    for trial in range(12):
        if trial % 2:
            sp = gen_space({"kind": "path", "n": int(rng.integers(4, 7))})
        else:
            sp = gen_space({"kind": "cycle", "n": int(rng.integers(4, 7))})
        u = rng.uniform(0, 1, size=sp.n)
        p = float(rng.choice([1.0, 2.0]))
        l = float(rng.choice([1.0, 2.0]))
        R = 1.0
        S = float(rng.choice([1.0, 2.0]))
        got = energy(sp, u, p, l, R, S, mode="exact").exact
        want = brute_energy(sp, u, p, l, R, S)
        assert got == pytest.approx(want, abs=1e-9)


def test_energy_zero_for_constants():
    sp = gen_space({"kind": "grid", "d": 2, "n": 3})
    res = energy(sp, np.full(9, 0.7), 2.0, 1.0, 1.0, 2.0, mode="exact")
    assert res.exact == 0.0
    assert res.witness == []


def test_energy_monotone_in_l():
    sp = gen_space({"kind": "path", "n": 9})
    rng = np.random.default_rng(13)
    u = rng.uniform(0, 1, size=9)
    vals = [energy(sp, u, 2.0, l, 1.0, 1.0, mode="exact").exact
            for l in (1.0, 2.0, 3.0)]
    assert vals[0] >= vals[1] - 1e-12
    assert vals[1] >= vals[2] - 1e-12


def test_energy_monotone_in_window():
    sp = gen_space({"kind": "path", "n": 9})
    rng = np.random.default_rng(29)
    u = rng.uniform(0, 1, size=9)
    wide = energy(sp, u, 2.0, 1.0, 1.0, 3.0, mode="exact").exact
    narrow = energy(sp, u, 2.0, 1.0, 2.0, 3.0, mode="exact").exact
    narrower = energy(sp, u, 2.0, 1.0, 2.0, 2.0, mode="exact").exact
    assert narrow <= wide + 1e-12
    assert narrower <= narrow + 1e-12


def test_energy_scaling_and_triangle():
    sp = gen_space({"kind": "cycle", "n": 8})
    rng = np.random.default_rng(37)
    for p in (1.0, 2.0, 3.0):
        u = rng.uniform(0, 1, size=8)
        v = rng.uniform(0, 1, size=8)
        eu = energy(sp, u, p, 1.0, 1.0, 1.0, mode="exact").exact
        ev = energy(sp, v, p, 1.0, 1.0, 1.0, mode="exact").exact
        euv = energy(sp, u + v, p, 1.0, 1.0, 1.0, mode="exact").exact
        assert euv ** (1 / p) <= eu ** (1 / p) + ev ** (1 / p) + 1e-9
        c = 2.5
        ecu = energy(sp, c * u, p, 1.0, 1.0, 1.0, mode="exact").exact
        assert ecu == pytest.approx((c**p) * eu, rel=1e-9)


def test_bracket_ordering_random():
    rng = np.random.default_rng(41)
    spaces = [gen_space({"kind": "path", "n": 9}),
              gen_space({"kind": "grid", "d": 2, "n": 4})]
    for sp in spaces:
        for _ in range(10):
            u = rng.uniform(0, 1, size=sp.n)
            res = energy(sp, u, 2.0, 1.0, 1.0, 1.0, mode="bracket")
            assert res.exact is not None
            assert res.lower <= res.exact + 1e-9
            assert res.exact <= res.upper + 1e-9


def test_covering_bound_path7_frozen():
    sp = gen_space({"kind": "path", "n": 7})
    u = np.arange(7, dtype=float)
    val, details = energy_upper_bound_covering(sp, u, 1.0, 1.0, 1.0, 1.0)
    assert details["covering_centers"] == [0, 2, 4, 6]
    # an admissible ball centred on a covering centre meets itself and both
    # neighbours, so the chain-overlap constant is 3
    assert details["n_prime"] == 3
    # oscillations over the covering balls {0,1},{1,2,3},{3,4,5},{5,6}
    assert val == pytest.approx(3.0 * (1 + 2 + 2 + 1))
    exact = energy(sp, u, 1.0, 1.0, 1.0, 1.0, mode="exact").exact
    assert val >= exact


def test_vector_energy_runs():
    sp = gen_space({"kind": "path", "n": 6})
    rng = np.random.default_rng(43)
    u = rng.uniform(0, 1, size=(6, 2))
    res = energy(sp, u, 2.0, 1.0, 1.0, 1.0, mode="exact")
    assert res.exact >= 0.0


def test_energy_validation():
    sp = gen_space({"kind": "path", "n": 5})
    with pytest.raises(EnergyError):
        energy(sp, np.zeros(5), 0.5, 1.0, 1.0, 1.0)
    with pytest.raises(EnergyError):
        energy(sp, np.zeros(4), 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(EnergyError):
        energy(sp, np.zeros(5), 1.0, 1.0, 2.0, 1.0)  # S < R


# -- cochains ----------------------------------------------------------------


def test_simplices_counts_on_path5():
    sp = gen_space({"kind": "path", "n": 5})
    assert len(simplices(sp, 0, 1.0)) == 5
    # pairs within a common unit ball: |i-j| <= 2
    pairs = simplices(sp, 1, 1.0)
    assert len(pairs) == sum(1 for i in range(5) for j in range(5) if abs(i - j) <= 2)


def test_faces_of_simplices_are_simplices():
    sp = gen_space({"kind": "cycle", "n": 6})
    sset = set(simplices(sp, 1, 1.0))
    for tup in simplices(sp, 2, 1.0):
        for i in range(3):
            assert tup[:i] + tup[i + 1 :] in sset


def test_coboundary_of_function_is_difference():
    sp = gen_space({"kind": "path", "n": 5})
    u = np.array([0.0, 1.0, 4.0, 9.0, 16.0])
    du = coboundary(sp, cochain_from_function(sp, u, 1.0))
    assert du.degree == 1
    assert du[(1, 3)] == pytest.approx(u[3] - u[1])
    assert du[(3, 1)] == pytest.approx(u[1] - u[3])


def test_d_squared_vanishes_degrees_0_1():
    rng = np.random.default_rng(47)
    sp = gen_space({"kind": "cycle", "n": 5})
    u = rng.uniform(-1, 1, size=5)
    ddu = coboundary(sp, coboundary(sp, cochain_from_function(sp, u, 1.0)))
    assert max(abs(v) for v in ddu.values.values()) < 1e-12
    kappa = Cochain(1, 1.0, {t: float(rng.uniform(-1, 1)) for t in simplices(sp, 1, 1.0)})
    ddk = coboundary(sp, coboundary(sp, kappa))
    assert max(abs(v) for v in ddk.values.values()) < 1e-12


def test_cochain_norm_identity_with_energy():
    sp = gen_space({"kind": "path", "n": 7})
    u = np.arange(7, dtype=float)
    du = coboundary(sp, cochain_from_function(sp, u, 1.0))
    for p in (1.0, 2.0):
        nrm = cochain_norm(sp, du, p, 1.0, 1.0, 1.0, mode="exact")
        e = energy(sp, u, p, 1.0, 1.0, 1.0, mode="exact").exact
        assert nrm.exact**p == pytest.approx(e, rel=1e-12)
    assert cochain_norm(sp, du, 1.0, 1.0, 1.0, 1.0).exact == pytest.approx(4.0)


def test_cochain_norm_identity_random():
    rng = np.random.default_rng(53)
    sp = gen_space({"kind": "cycle", "n": 7})
    for _ in range(5):
        u = rng.uniform(0, 1, size=7)
        du = coboundary(sp, cochain_from_function(sp, u, 2.0))
        nrm = cochain_norm(sp, du, 2.0, 1.0, 1.0, 2.0, mode="exact")
        e = energy(sp, u, 2.0, 1.0, 1.0, 2.0, mode="exact").exact
        assert nrm.exact**2 == pytest.approx(e, rel=1e-9)


def test_indicator_cochain_norm_frozen():
    sp = gen_space({"kind": "path", "n": 5})
    ind = cochain_from_function(sp, np.eye(5)[2], 1.0)
    res = cochain_norm(sp, ind, 1.0, 1.0, 1.0, 1.0, mode="exact")
    assert res.exact == pytest.approx(1.0)


def test_cochain_window_guard():
    sp = gen_space({"kind": "path", "n": 5})
    du = coboundary(sp, cochain_from_function(sp, np.arange(5.0), 1.0))
    with pytest.raises(CochainError):
        cochain_norm(sp, du, 1.0, 1.0, 1.0, 2.0)


def test_curve_length():
    u = np.array([0.0, 0.5, 0.0])
    assert curve_length(u, [0, 1, 2]) == pytest.approx(1.0)
    v = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert curve_length(v, [0, 1], p=1.0) == pytest.approx(2.0)
    assert curve_length(v, [0, 1], p=2.0) == pytest.approx(math.sqrt(2))


def test_energy_report_shape():
    sp = gen_space({"kind": "path", "n": 7})
    res = energy(sp, np.arange(7.0), 1.0, 1.0, 1.0, 1.0, mode="bracket")
    d = res.as_dict()
    assert set(d) == {"p", "l", "R", "S", "lower", "exact", "upper", "witness"}
    assert d["exact"] == pytest.approx(4.0)
    assert d["upper"] >= d["exact"]
