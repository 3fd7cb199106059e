"""Maps between spaces: built-ins, certificates, transport checks, tree model."""

import math

import numpy as np
import pytest

from coarseconf.maps import (
    MapError,
    builtin_map,
    canonical_correspondence,
    certify_conformal,
    check_composition,
    compose_maps,
    delta_transport_check,
    image_ball,
    poincare_model,
    pullback_energy_check,
    sample_packings,
)
from coarseconf.packing import is_packing
from coarseconf.space import Ball, gen_space


def _coord_index(space, value):
    coords = np.asarray(space.meta["coords"], dtype=float).ravel()
    hits = np.flatnonzero(np.abs(coords - value) < 1e-9)
    assert hits.size == 1
    return int(hits[0])


# -- built-in maps -------------------------------------------------------------


def test_power_map_squares_coordinates():
    f = builtin_map("power", K=2.0, half_width=8)
    i3 = _coord_index(f.domain, 3.0)
    j = int(f.mapping[i3])
    assert abs(float(np.asarray(f.codomain.meta["coords"]).ravel()[j]) - 9.0) < 1e-9
    im3 = _coord_index(f.domain, -3.0)
    jm = int(f.mapping[im3])
    assert abs(float(np.asarray(f.codomain.meta["coords"]).ravel()[jm]) + 9.0) < 1e-9


def test_power_map_k_one_is_identity():
    f = builtin_map("power", K=1.0, half_width=5)
    dom = np.asarray(f.domain.meta["coords"], dtype=float).ravel()
    cod = np.asarray(f.codomain.meta["coords"], dtype=float).ravel()
    assert np.allclose(cod[f.mapping], dom)


def test_power_map_image_ball_radius_nine():
    # unit ball at coordinate 4 lands at 16; the far edge governs the radius
    f = builtin_map("power", K=2.0, half_width=8)
    b = image_ball(f, Ball(_coord_index(f.domain, 4.0), 1.0))
    cod = np.asarray(f.codomain.meta["coords"], dtype=float).ravel()
    assert abs(cod[b.center] - 16.0) < 1e-9
    assert abs(b.radius - 9.0) < 1e-9


def test_qi_embedding_is_isometric():
    f = builtin_map("qi-embedding", n=6)
    for i in range(f.domain.n):
        for j in range(f.domain.n):
            d0 = f.domain.row(i)[j]
            d1 = f.codomain.row(int(f.mapping[i]))[int(f.mapping[j])]
            assert abs(d0 - d1) < 1e-12


def test_user_map_validation():
    p5 = gen_space({"kind": "path", "n": 5})
    with pytest.raises(MapError):
        builtin_map("user", domain=p5, codomain=p5, mapping=[0, 1, 2])
    with pytest.raises(MapError):
        builtin_map("user", domain=p5, codomain=p5, mapping=[0, 1, 2, 3, 99])
    with pytest.raises(MapError):
        builtin_map("no-such-kind")


# -- ball correspondence -------------------------------------------------------


def test_identity_correspondence_preserves_members():
    p12 = gen_space({"kind": "path", "n": 12})
    f = builtin_map("identity", space=p12)
    corr = canonical_correspondence(f)
    for center, radius in [(0, 1.0), (5, 2.0), (11, 3.0), (6, 0.0)]:
        b = Ball(center, radius)
        bp = corr(b)
        assert sorted(p12.ball_members(bp)) == sorted(p12.ball_members(b))


def test_snowflake_correspondence_takes_root_of_radius():
    p10 = gen_space({"kind": "path", "n": 10})
    f = builtin_map("snowflake-identity", space=p10, alpha=0.5)
    assert abs(image_ball(f, Ball(4, 4.0)).radius - 2.0) < 1e-12


def test_image_ball_respects_floor():
    p10 = gen_space({"kind": "path", "n": 10})
    f = builtin_map("identity", space=p10)
    assert image_ball(f, Ball(3, 0.0), r_floor=1.5).radius == 1.5


# -- packing sampler -----------------------------------------------------------


def test_sampler_enumerates_all_maximal_packings_when_small():
    p5 = gen_space({"kind": "path", "n": 5})
    cands, packs, exhaustive = sample_packings(p5, 1.0, 1.0, 1.0)
    assert exhaustive
    assert len(cands) == 5
    families = {tuple(sorted(cands[i].center for i in pk)) for pk in packs}
    assert families == {(0, 3), (0, 4), (1, 4), (2,)}
    for pk in packs:
        assert is_packing(p5, [cands[i] for i in pk], 1.0, 1.0, 1.0)


def test_sampler_is_deterministic():
    g = gen_space({"kind": "grid", "d": 2, "n": 5})
    a = sample_packings(g, 2.0, 1.0, 1.0, max_packings=12, seed=3)
    b = sample_packings(g, 2.0, 1.0, 1.0, max_packings=12, seed=3)
    assert [sorted(pk) for pk in a[1]] == [sorted(pk) for pk in b[1]]


# -- conformality certificates -------------------------------------------------


def test_identity_certificate_passes_at_equal_scales():
    p12 = gen_space({"kind": "path", "n": 12})
    f = builtin_map("identity", space=p12)
    cert = certify_conformal(f, klass="largeScale", lp_list=[1.0, 2.0, 4.0],
                             R=1.0, np_cap=1, seed=0)
    assert cert.verdict == "certifiedAtRange"
    for row in cert.rows:
        assert row["pass"] and row["l"] == row["lp"] and row["Np"] == 1


def test_snowflake_certificate_needs_squared_scale():
    """Halving the metric exponent squares the required domain scale."""
    p10 = gen_space({"kind": "path", "n": 10})
    f = builtin_map("snowflake-identity", space=p10, alpha=0.5)
    cert = certify_conformal(f, klass="coarse", lp_list=[1.0, 2.0], R=1.0,
                             S=1.0, np_cap=1, l_grid=[1.0, 2.0, 3.0, 4.0], seed=0)
    assert cert.verdict == "certifiedAtRange"
    assert [(r["lp"], r["l"], r["Np"]) for r in cert.rows] == \
        [(1.0, 1.0, 1), (2.0, 4.0, 1)]


def test_certificate_json_shape():
    p10 = gen_space({"kind": "path", "n": 10})
    f = builtin_map("identity", space=p10)
    cert = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                             np_cap=1, l_grid=[2.0], seed=0)
    d = cert.as_dict()
    assert set(d) == {"class", "rows", "verdict"}
    assert set(d["rows"][0]) >= {"lp", "l", "Np", "R", "S", "Rp", "pass"}


def test_certify_requires_scales():
    p10 = gen_space({"kind": "path", "n": 10})
    f = builtin_map("identity", space=p10)
    with pytest.raises(MapError):
        certify_conformal(f, klass="coarse", lp_list=[], R=1.0, S=1.0)


def test_horospherical_scale_requirement_grows_with_radius():
    """The deeper the domain balls, the more separation their images need."""
    f = builtin_map("horospherical", half_width=96, margin=16)
    mins = []
    for R in (2.0, 4.0, 8.0):
        cert = certify_conformal(f, klass="coarse", lp_list=[2.0], R=R, S=R,
                                 np_cap=1, l_cap=64.0, max_packings=24, seed=0)
        row = cert.rows[0]
        assert row["pass"]
        mins.append(row["l"])
    assert mins == [4.0, 8.0, 16.0]


def test_horospherical_large_scale_falsified_with_witness():
    f = builtin_map("horospherical", half_width=48, margin=8)
    cert = certify_conformal(f, klass="largeScale", lp_list=[2.0], R=2.0,
                             np_cap=1, l_grid=[1.0, 2.0, 4.0], max_packings=8,
                             seed=0)
    assert cert.verdict == "falsified"
    witness = cert.rows[0]["witness"]
    assert witness and all({"c", "r"} <= set(w) for w in witness)
    balls = [Ball(w["c"], w["r"]) for w in witness]
    assert is_packing(f.domain, balls, 4.0, 2.0, math.inf)


# -- energy transport ----------------------------------------------------------


def test_pullback_identity_gives_equality():
    p12 = gen_space({"kind": "path", "n": 12})
    f = builtin_map("identity", space=p12)
    row = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                            np_cap=1, l_grid=[2.0], seed=0).rows[0]
    rng = np.random.default_rng(5)
    for _ in range(5):
        u = rng.uniform(0.0, 1.0, size=12)
        rep = pullback_energy_check(f, row, u, p=2.0)
        assert rep["pass"]
        assert abs(rep["lhs"] - rep["rhs"]) < 1e-9


def test_pullback_snowflake_random_inputs():
    p10 = gen_space({"kind": "path", "n": 10})
    f = builtin_map("snowflake-identity", space=p10, alpha=0.5)
    row = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                            np_cap=1, l_grid=[1.0, 2.0, 3.0, 4.0], seed=0).rows[0]
    rng = np.random.default_rng(11)
    for _ in range(20):
        u = rng.uniform(0.0, 1.0, size=10)
        assert pullback_energy_check(f, row, u, p=2.0)["pass"]


def test_pullback_qi_embedding_long_axis():
    f = builtin_map("qi-embedding", n=6)
    row = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                            np_cap=1, l_grid=[2.0], seed=0).rows[0]
    u = np.asarray(f.codomain.coords)[:, 0].astype(float)
    rep = pullback_energy_check(f, row, u, p=2.0)
    assert rep["pass"]
    assert abs(rep["lhs"] - 4.0) < 1e-9
    assert abs(rep["rhs"] - 12.0) < 1e-9


# -- connection-invariant transport --------------------------------------------


def test_delta_transport_identity_equality_on_open_windows():
    p9 = gen_space({"kind": "path", "n": 9})
    f = builtin_map("identity", space=p9)
    row = certify_conformal(f, klass="largeScale", lp_list=[2.0], R=1.0,
                            np_cap=1, l_grid=[2.0], max_packings=12,
                            seed=0).rows[0]
    rep = delta_transport_check(f, [(2, 6), (3, 5)], row, p=2.0, boundary=[0, 8])
    assert rep["pass"]
    for r in rep["pairs"]:
        assert abs(r["lhs"] - r["rhs"]) < 1e-12


def test_delta_transport_identity_capped_window():
    # a capped domain window keeps the left side below the open-window right side
    p9 = gen_space({"kind": "path", "n": 9})
    f = builtin_map("identity", space=p9)
    row = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                            np_cap=1, l_grid=[2.0], seed=0).rows[0]
    rep = delta_transport_check(f, [(2, 6), (3, 5)], row, p=2.0, boundary=[0, 8])
    assert rep["pass"]
    lhs = [r["lhs"] for r in rep["pairs"]]
    rhs = [r["rhs"] for r in rep["pairs"]]
    assert abs(lhs[0] - 2.0) < 1e-6 and abs(rhs[0] - 2.0) < 1e-6
    assert abs(lhs[1] - 0.5) < 1e-6 and abs(rhs[1] - 1.0) < 1e-6


def test_delta_transport_reversal():
    p9 = gen_space({"kind": "path", "n": 9})
    f = builtin_map("user", domain=p9, codomain=p9,
                    mapping=[8 - i for i in range(9)])
    row = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                            np_cap=1, l_grid=[2.0], seed=0).rows[0]
    rep = delta_transport_check(f, [(2, 6)], row, p=2.0, boundary=[0, 8])
    assert rep["pass"]
    assert abs(rep["pairs"][0]["lhs"] - rep["pairs"][0]["rhs"]) < 1e-12


def test_delta_transport_snowflake():
    p9 = gen_space({"kind": "path", "n": 9})
    f = builtin_map("snowflake-identity", space=p9, alpha=0.5)
    row = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                            np_cap=1, l_grid=[1.0, 2.0, 3.0, 4.0], seed=0).rows[0]
    rep = delta_transport_check(f, [(2, 6)], row, p=2.0, boundary=[0, 8])
    assert rep["pass"]


def test_delta_transport_rejects_non_bijective():
    f = builtin_map("qi-embedding", n=6)
    with pytest.raises(MapError):
        delta_transport_check(f, [(1, 4)], {"l": 2.0, "lp": 2.0, "Np": 1,
                                            "R": 1.0, "S": 1.0}, p=2.0)


# -- composition ---------------------------------------------------------------


def test_compose_maps_chains_assignments():
    p9 = gen_space({"kind": "path", "n": 9})
    rev = builtin_map("user", domain=p9, codomain=p9,
                      mapping=[8 - i for i in range(9)])
    twice = compose_maps(rev, rev)
    assert np.array_equal(twice.mapping, np.arange(9))


def test_composition_multiplicity_within_product_bound():
    p10 = gen_space({"kind": "path", "n": 10})
    f = builtin_map("snowflake-identity", space=p10, alpha=0.5)
    g = builtin_map("identity", space=p10)
    row_f = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                              np_cap=1, l_grid=[1.0, 2.0, 3.0, 4.0],
                              seed=0).rows[0]
    row_g = certify_conformal(g, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                              np_cap=1, l_grid=[2.0], seed=0).rows[0]
    rep = check_composition(f, g, row_f, row_g)
    assert rep == {"bound": 1, "observed": 1, "pass": True, "n_packings": 9}


# -- radial x boundary tree model ----------------------------------------------


def test_tree_model_radial_coordinate():
    tree = gen_space({"kind": "tree", "arity": 2, "depth": 3})
    img, _ = poincare_model(tree)
    depths = np.asarray(tree.meta["depths"])
    assert img.chi[0] == 1.0
    for v in range(tree.n):
        assert abs(img.chi[v] - math.exp(-float(depths[v]))) < 1e-12
    # strictly smaller at strictly larger depth
    for v in range(tree.n):
        for w in range(tree.n):
            if depths[v] < depths[w]:
                assert img.chi[v] > img.chi[w]


def test_tree_model_leaf_assignment_is_least_descendant():
    tree = gen_space({"kind": "tree", "arity": 2, "depth": 3})
    img, _ = poincare_model(tree)
    assert int(img.phi[0]) == 7          # first node of the deepest level
    for leaf in img.leaves:
        assert int(img.phi[leaf]) == leaf


def test_tree_model_small_tree_inclusions():
    tree = gen_space({"kind": "tree", "arity": 2, "depth": 3})
    _, report = poincare_model(tree)
    assert all(row["failures"] == 0 for row in report["rows"])
    assert report["threshold"] == 1


def test_tree_model_binary_depth_eight():
    tree = gen_space({"kind": "tree", "arity": 2, "depth": 8})
    img, report = poincare_model(tree)
    assert tree.n == 511 and len(img.leaves) == 256
    assert report["threshold"] is not None and report["threshold"] <= 3
    for row in report["rows"]:
        if row["radius"] >= report["threshold"]:
            assert row["failures"] == 0
        assert row["checked"] == 511


def test_tree_model_rejects_non_tree():
    with pytest.raises(MapError):
        poincare_model(gen_space({"kind": "path", "n": 6}))
