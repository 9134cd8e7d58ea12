import math
import random

import numpy as np
import pytest

from plifs import BreakCode, Cplifs, PLMap
from plifs.errors import (
    AmbiguousContainment,
    BadFixedPointOrder,
    EmptyGraph,
    IoscViolated,
    NotStronglyConnected,
    UnverifiedCode,
)
from plifs.gdifs import (
    DetRecursion,
    DimConfig,
    Gdifs,
    GdifsEdge,
    GdifsNode,
    alpha,
    associate_from_periodic,
    auto_codes,
    build_fixed_point_family,
    detect_fixed_point_family,
    dim_report,
    esc_diagnostic,
    perron_root,
    punctured_dimension,
    punctured_level,
    q_recursion,
    q_root,
    strongly_connected_components,
)
from plifs import natural_dimension

from helpers import cantor_pair, paper_example, random_family_instance

LOG23 = math.log(2) / math.log(3)


def one_node(*ratios):
    return Gdifs(
        nodes=(GdifsNode((1,), None, (0.0, 1.0)),),
        edges=tuple(GdifsEdge(0, 0, r, 0.0) for r in ratios),
    )


# --- spectral radius and alpha -------------------------------------------------

def test_perron_small_matrices():
    assert perron_root(np.array([[0.5]])) == pytest.approx(0.5)
    # 2-cycle: periodic irreducible matrix, handled by the identity shift
    M = np.array([[0.0, 2.0], [8.0, 0.0]])
    assert perron_root(M) == pytest.approx(4.0, abs=1e-10)
    rng = np.random.default_rng(3)
    for _ in range(20):
        A = rng.uniform(0.0, 1.0, size=(5, 5)) + 0.01
        assert perron_root(A) == pytest.approx(
            max(abs(np.linalg.eigvals(A))), abs=1e-9
        )


def test_alpha_one_node_two_loops():
    assert alpha(one_node(1 / 3, 1 / 3)) == pytest.approx(LOG23, abs=1e-10)


def test_alpha_one_node_m_loops():
    for m, r in ((3, 0.2), (5, 0.15)):
        g = one_node(*([r] * m))
        assert alpha(g) == pytest.approx(math.log(m) / math.log(1 / r), abs=1e-10)


def test_alpha_family_all_quarter():
    fam = build_fixed_point_family((0.25, 0.2, 0.3, 0.25), (0.5,))
    d = DetRecursion((0.25,) * 4)
    assert q_root(d) == pytest.approx(math.log(3) / math.log(4), abs=1e-10)
    assert alpha(fam.graph) > 0
    # same value through the spectral route on the 4-node pattern
    A = d.incidence()
    nodes = tuple(GdifsNode((i,), None, (0.0, 1.0)) for i in range(1, 5))
    edges = tuple(
        GdifsEdge(i, j, 0.25, 0.0) for i in range(4) for j in range(4) if A[i, j]
    )
    assert alpha(Gdifs(nodes, edges)) == pytest.approx(
        math.log(3) / math.log(4), abs=1e-10
    )


def test_alpha_requires_strong_connectivity():
    g = Gdifs(
        nodes=(GdifsNode((1,), None, (0, 1)), GdifsNode((2,), None, (0, 1))),
        edges=(GdifsEdge(0, 1, 0.5, 0.0), GdifsEdge(1, 1, 0.5, 0.0)),
    )
    with pytest.raises(NotStronglyConnected):
        alpha(g)


def test_alpha_pure_cycle_is_zero():
    g = Gdifs(
        nodes=(GdifsNode((1,), None, (0, 1)), GdifsNode((2,), None, (0, 1))),
        edges=(GdifsEdge(0, 1, 0.5, 0.0), GdifsEdge(1, 0, 0.25, 0.0)),
    )
    assert alpha(g) == pytest.approx(0.0, abs=1e-12)


def test_spectral_monotone_decreasing():
    rng = random.Random(17)
    for _ in range(6):
        fam = random_family_instance(rng)
        sm = fam.graph.spectral_matrix()
        values = [perron_root(sm.at(0.15 * i)) for i in range(12)]
        assert all(a > b for a, b in zip(values, values[1:]))


def test_scc_decomposition():
    adj = [[1], [0], [0, 3], [3]]
    comps = strongly_connected_components(4, adj)
    assert sorted(map(tuple, comps)) == [(0, 1), (2,), (3,)]


# --- determinant recursion -----------------------------------------------------

def test_q4_closed_form():
    d = DetRecursion((0.25, 0.2, 0.3, 0.25))
    for s in (0.3, 0.79, 1.4):
        u = [r**s for r in d.slopes]
        closed = 1 - sum(u) + u[0] * u[2] + u[1] * u[2] + u[1] * u[3]
        assert q_recursion(d, s) == pytest.approx(closed, abs=1e-14)


def test_q4_all_quarter_root():
    d = DetRecursion((0.25,) * 4)
    s = math.log(3) / math.log(4)
    assert q_recursion(d, s) == pytest.approx(0.0, abs=1e-14)


def test_q4_selfsimilar_factorization():
    # rho_2 = rho_3 = r: the determinant factors through the similarity sum
    rng = random.Random(23)
    for _ in range(50):
        r1, r, r4 = (rng.uniform(0.05, 0.6) for _ in range(3))
        d = DetRecursion((r1, r, r, r4))
        for _ in range(4):
            s = rng.uniform(0.0, 2.0)
            expect = (1 - r**s) * (1 - r1**s - r**s - r4**s)
            assert q_recursion(d, s) == pytest.approx(expect, abs=1e-12)


def test_m4_matrix_matches_displayed_pattern():
    rng = random.Random(29)
    u = [rng.uniform(0.1, 0.9) for _ in range(6)]
    d = DetRecursion(tuple(u))
    s = 0.5
    v = [x**s for x in u]
    rows = [
        [v[0]] * 6,
        [v[1], v[1], 0, 0, 0, 0],
        [0, 0, v[2], v[2], v[2], v[2]],
        [v[3], v[3], v[3], v[3], 0, 0],
        [0, 0, 0, 0, v[4], v[4]],
        [v[5]] * 6,
    ]
    M = np.array(rows) - np.eye(6)
    assert np.allclose(d.matrix(s), M, atol=0)
    assert q_recursion(d, s) == pytest.approx(float(np.linalg.det(M)), abs=1e-10)


def test_recursion_equals_dense_determinant():
    rng = random.Random(31)
    for m in (3, 4, 5):
        for _ in range(25):
            slopes = tuple(rng.uniform(0.05, 0.95) for _ in range(2 * m - 2))
            d = DetRecursion(slopes)
            for _ in range(4):
                s = rng.uniform(0.0, 2.0)
                dense = float(np.linalg.det(d.matrix(s)))
                assert abs(q_recursion(d, s) - dense) < 1e-9


def test_q_root_matches_alpha_and_similarity_case():
    rng = random.Random(37)
    # factorized case: root solves r1^s + r^s + r4^s = 1
    d = DetRecursion((0.3, 0.2, 0.2, 0.3))
    root = q_root(d)
    assert 2 * 0.3**root + 0.2**root == pytest.approx(1.0, abs=1e-12)
    for _ in range(5):
        fam = random_family_instance(rng)
        assert q_root(fam.det) == pytest.approx(alpha(fam.graph), abs=1e-10)


# --- family builder --------------------------------------------------------------

def test_family_instance_shape():
    fam = build_fixed_point_family((0.25, 0.2, 0.3, 0.25), (0.5,))
    F, g = fam.system, fam.graph
    assert F.m == 3
    assert F.type_vector == (0, 1, 0)
    cyl = [tuple(round(x, 10) for x in iv) for iv in
           (n.hull for n in g.nodes)]
    assert g.q == 4
    expected_incidence = np.array(
        [[1, 1, 1, 1], [1, 1, 0, 0], [0, 0, 1, 1], [1, 1, 1, 1]]
    )
    A = np.zeros((4, 4), dtype=int)
    for e in g.edges:
        A[e.src, e.dst] = 1
    assert (A == expected_incidence).all()
    assert (A == fam.det.incidence()).all()


def test_family_m4_incidence():
    fam = build_fixed_point_family(
        (0.15, 0.1, 0.12, 0.2, 0.1, 0.15), (0.35, 0.7)
    )
    A = np.zeros((6, 6), dtype=int)
    for e in fam.graph.edges:
        A[e.src, e.dst] = 1
    assert (A == fam.det.incidence()).all()
    assert (A[1] == [1, 1, 0, 0, 0, 0]).all()
    assert (A[2] == [0, 0, 1, 1, 1, 1]).all()
    assert (A[3] == [1, 1, 1, 1, 0, 0]).all()
    assert (A[4] == [0, 0, 0, 0, 1, 1]).all()


def test_family_rejects_equal_adjacent_slopes():
    with pytest.raises(ValueError):
        build_fixed_point_family((0.25, 0.2, 0.2, 0.25), (0.5,))
    # the determinant function itself stays evaluable
    d = DetRecursion((0.25, 0.2, 0.2, 0.25))
    assert math.isfinite(q_recursion(d, 0.7))


def test_family_rejects_bad_fixed_points():
    with pytest.raises(BadFixedPointOrder):
        build_fixed_point_family((0.25, 0.2, 0.3, 0.25), (0.0,))
    with pytest.raises(BadFixedPointOrder):
        build_fixed_point_family((0.25, 0.2, 0.3, 0.25), ())


def test_family_rejects_overlapping_cylinders():
    with pytest.raises(IoscViolated):
        build_fixed_point_family((0.45, 0.4, 0.45, 0.4), (0.5,))


# --- association ------------------------------------------------------------------

def test_associate_paper_example_level1():
    F = paper_example()
    g = associate_from_periodic(F, [BreakCode(0.5, (1,), (2,))])
    assert g.q == 2
    assert len(g.edges) == 4
    ratios = {(e.src, e.dst): abs(e.ratio) for e in g.edges}
    assert ratios == {
        (0, 0): pytest.approx(0.8),
        (0, 1): pytest.approx(0.2),
        (1, 0): pytest.approx(0.1),
        (1, 1): pytest.approx(0.1),
    }
    assert alpha(g) == pytest.approx(0.60304963, abs=1e-6)


def test_associate_rejects_unverified_code():
    with pytest.raises(UnverifiedCode):
        associate_from_periodic(paper_example(), [BreakCode(0.5, (), (1,))])


def test_associate_family_matches_direct_graph():
    rng = random.Random(41)
    for _ in range(5):
        fam = random_family_instance(rng)
        g = associate_from_periodic(fam.system, auto_codes(fam.system))
        assert g.q == fam.graph.q
        direct = {(e.src, e.dst): e.ratio for e in fam.graph.edges}
        assoc = {(e.src, e.dst): e.ratio for e in g.edges}
        assert set(direct) == set(assoc)
        for key, r in direct.items():
            assert assoc[key] == pytest.approx(r, abs=1e-12)
        assert alpha(g) == pytest.approx(alpha(fam.graph), abs=1e-11)


def test_associate_affine_no_breaks_full_graph():
    C = cantor_pair()
    g = associate_from_periodic(C, ())
    assert g.q == 2 and len(g.edges) == 4
    assert alpha(g) == pytest.approx(LOG23, abs=1e-10)


def test_associate_sanity_no_break_interior_to_nodes():
    # association invariant: node hulls never hide a breaking point inside
    rng = random.Random(43)
    for _ in range(5):
        fam = random_family_instance(rng)
        g = associate_from_periodic(fam.system, auto_codes(fam.system))
        points = [b for _, b in fam.system.breaking_points()]
        tol = fam.system.geom_tol()
        for node in g.nodes:
            lo, hi = node.hull
            for b in points:
                assert not (lo + tol < b < hi - tol)


def test_associate_period_two_code():
    # third map breaks at the fixed point of f_1 o f_2: a genuine 2-periodic
    # code; both the code cylinder and its rotation get cut
    phi12 = 0.21 / 0.91
    F = Cplifs(
        (
            PLMap((), (0.3,), 0.0),
            PLMap((), (0.3,), 0.7),
            PLMap((phi12,), (0.2, 0.25), 0.35),
        )
    )
    g = associate_from_periodic(F, [BreakCode(phi12, (), (1, 2))])
    assert g.q == 11  # 9 level-2 cylinders, two of them cut
    cut_words = sorted({n.word for n in g.nodes if n.side is not None})
    assert cut_words == [(1, 2), (2, 1)]
    a = alpha(g)
    est = natural_dimension(F, 10, 14)
    assert abs(a - est.estimate) < 2e-3
    assert punctured_dimension(F, 6) <= a + 1e-9


def test_associate_noninjective_without_cuts():
    # folded map whose fold point misses every cylinder: association works
    # and reproduces the similarity root
    F = Cplifs(
        (
            PLMap((0.5,), (0.3, -0.3), 0.0),
            PLMap((), (0.2,), 0.8),
        )
    )
    g = associate_from_periodic(F, ())
    assert g.q == 2 and len(g.edges) == 4
    a = alpha(g)
    assert 0.3**a + 0.2**a == pytest.approx(1.0, abs=1e-10)
    # the level-1 fold halves one cylinder, so s_n converges like 1/n
    est = natural_dimension(F, 6, 10)
    assert abs(a - est.estimate) < 2e-2


def test_associate_noninjective_cut_is_ambiguous():
    # tent map fixing 0 and breaking a third map there: the left/right
    # halves are not unions of whole map images, which the certification
    # detects rather than guessing edges
    F = Cplifs(
        (
            PLMap((0.5,), (0.4, -0.4), 0.0),
            PLMap((), (0.2,), 0.88),
            PLMap((0.0,), (0.25, 0.35), 0.45),
        )
    )
    code = BreakCode(0.0, (), (1,))
    with pytest.raises(AmbiguousContainment):
        associate_from_periodic(F, [code], refine_depth=6)


# --- punctured approximation -----------------------------------------------------

def test_punctured_paper_first_and_last():
    F = paper_example()
    assert punctured_dimension(F, 3) == pytest.approx(0.55122823, abs=1e-7)
    assert punctured_dimension(F, 8) == pytest.approx(0.60301162, abs=1e-7)


def test_punctured_diagnostics():
    pl = punctured_level(paper_example(), 3)
    assert pl.kept == 7
    assert pl.dropped == ((1, 2, 2),)
    assert not pl.whole_graph_strongly_connected
    assert pl.scc_size == 5


def test_punctured_regular_system_equals_full_dimension():
    pl = punctured_level(cantor_pair(), 4)
    assert pl.dropped == ()
    assert pl.whole_graph_strongly_connected
    assert pl.value == pytest.approx(LOG23, abs=1e-10)


def test_punctured_requires_injective():
    F = Cplifs((PLMap((0.5,), (0.3, -0.3), 0.0), PLMap((), (0.2,), 0.8)))
    with pytest.raises(ValueError):
        punctured_dimension(F, 3)


def test_punctured_empty_graph():
    F = Cplifs(
        (
            PLMap((), (0.45,), 0.0),
            PLMap((), (0.45,), 0.55),
        )
    )
    pl = punctured_level(F, 2)
    assert pl.dropped == ()
    # single map breaking at its own fixed point: the attractor is that
    # point, every cylinder contains it, everything gets dropped
    F2 = Cplifs((PLMap((0.5,), (0.4, 0.3), 0.3),))
    with pytest.raises(EmptyGraph):
        punctured_level(F2, 2)


# --- separation diagnostic --------------------------------------------------------

def test_esc_cantor():
    from plifs import generated_ifs

    sims = generated_ifs(cantor_pair())
    rep1 = esc_diagnostic(sims, 1)
    assert rep1.delta == pytest.approx(2 / 3, abs=1e-12)
    rep2 = esc_diagnostic(sims, 2)
    assert rep2.delta == pytest.approx(2 / 9, abs=1e-12)
    assert rep2.delta_root == pytest.approx(math.sqrt(2 / 9), abs=1e-12)


def test_esc_distinct_ratios_infinite_at_level_one():
    # the ratio-mismatch clause: distinct ratios make the distance infinite.
    # from level 2 on, permuted compositions share the same product ratio,
    # so the minimum is finite again.
    rep = esc_diagnostic([(0.5, 0.0), (0.3, 0.5)], 1)
    assert rep.delta == math.inf
    assert esc_diagnostic([(0.5, 0.0), (0.3, 0.5)], 2).delta < math.inf


def test_esc_exact_overlap_zero():
    rep = esc_diagnostic([(0.5, 0.0), (0.5, 0.0)], 1)
    assert rep.delta == 0.0


# --- aggregate report ---------------------------------------------------------------

def test_dim_report_cantor_all_methods_agree():
    cfg = DimConfig(n_min=4, n_max=8, punctured_k=4, box_samples=20000)
    rep = dim_report(cantor_pair(), cfg)
    for method in ("natural", "gdifs", "punctured"):
        assert rep.value(method) == pytest.approx(LOG23, abs=1e-6), method
    assert rep.value("determinant") is None
    assert abs(rep.value("box") - LOG23) < 0.05
    assert rep.consistent


def test_dim_report_paper_example():
    cfg = DimConfig(n_min=6, n_max=11, punctured_k=8, box_samples=20000)
    rep = dim_report(paper_example(), cfg)
    assert rep.value("gdifs") == pytest.approx(0.60304963, abs=1e-6)
    assert rep.value("punctured") == pytest.approx(0.60301162, abs=1e-6)
    assert rep.value("natural") == pytest.approx(0.58918180, abs=1e-6)
    assert rep.consistent


def test_dim_report_family_three_way():
    fam = build_fixed_point_family((0.25, 0.2, 0.3, 0.25), (0.5,))
    cfg = DimConfig(n_min=8, n_max=12, punctured_k=5, box_samples=20000)
    rep = dim_report(fam.system, cfg)
    a = rep.value("gdifs")
    assert rep.value("determinant") == pytest.approx(a, abs=1e-9)
    assert abs(rep.value("natural") - a) < 1e-2
    assert rep.consistent


def test_detect_fixed_point_family():
    fam = build_fixed_point_family((0.25, 0.2, 0.3, 0.25), (0.5,))
    det = detect_fixed_point_family(fam.system)
    assert det is not None
    assert det.slopes == (0.25, 0.2, 0.3, 0.25)
    assert detect_fixed_point_family(cantor_pair()) is None
    assert detect_fixed_point_family(paper_example()) is None


def test_export_text_deterministic():
    fam = build_fixed_point_family((0.25, 0.2, 0.3, 0.25), (0.5,))
    text = fam.graph.export_text()
    assert text == fam.graph.export_text()
    assert text.count("\nedge ") + text.startswith("edge ") == 12
    assert "node 0 word=1 side=full" in text
    assert "node 1 word=2 side=left" in text
