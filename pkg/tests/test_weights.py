import random
from fractions import Fraction

import numpy as np
import pytest
import sympy

from zhyvot import (
    OrientedGraph,
    ZhyvotGraph,
    alpha_k,
    averaging_weight,
    extend_to_trees,
    genus_template,
    inhom_chain,
    inhom_from_alpha,
    insert_vertex_extend,
    integerize,
    solve_special_state,
    solve_with_stubs,
    virtual_from_two,
    virtual_weight,
    weight_after_field_extension,
)
from zhyvot.errors import InfeasibleError, ZhyvotError
from zhyvot.scalars import QuadraticNumber, exact_sqrt

from conftest import LAMBDA_GRID, adapted_states, random_core, template_graphs

SQRT2, SQRT5 = exact_sqrt(2), exact_sqrt(5)

# Table 1 of the theta graph, edges in declared order (b, a, c)
TABLE1 = {
    (0, 1, 1): (Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)),
    (1, 0, 0): (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3)),
    (1, 0, 1): ((SQRT5 - 1) / 2, (3 - SQRT5) / 2, (SQRT5 - 1) / 2),
    (1, 1, 1): (SQRT2 / 2, SQRT2 - 1, 2 - SQRT2),
}


def to_sympy(x):
    if isinstance(x, QuadraticNumber):
        return sympy.nsimplify(x.a) + sympy.nsimplify(x.b) * sympy.sqrt(x.d)
    return sympy.Rational(Fraction(x).numerator, Fraction(x).denominator)


def sympy_states(zg, n):
    """Independent solve: roots of det(A(l) - I) in (0,1) with a positive normalized null vector."""
    lam = sympy.Symbol("l", positive=True)
    order = sorted(zg.core_vertices)
    idx = {v: i for i, v in enumerate(order)}
    A = sympy.zeros(len(order))
    core = [e for e in zg.graph.edges if e.id in zg.core_edges]
    for e, k in zip(core, n):
        A[idx[e.src], idx[e.dst]] += lam ** k
    out = []
    for r in sympy.solve((A - sympy.eye(len(order))).det(), lam):
        if not (r.is_real and 0 < r < 1):
            continue
        ns = (A.subs(lam, r) - sympy.eye(len(order))).nullspace()
        if len(ns) != 1:
            continue
        vec = ns[0] / sum(ns[0])
        if all(sympy.simplify(x) > 0 for x in vec):
            out.append((sympy.simplify(r), {v: sympy.simplify(vec[idx[v]]) for v in order}))
    return out


# --- special states ----------------------------------------------------------

@pytest.mark.parametrize("n", list(TABLE1))
def test_table1_rows(n):
    res = solve_special_state(genus_template("genus2_case2"), n)
    assert len(res) == 1
    st = res[0]
    lam, gv, gw = TABLE1[n]
    assert (st.lam_value, st.g["v"], st.g["w"]) == (lam, gv, gw)
    assert not st.approximate
    assert st.residuals() == {}


@pytest.mark.parametrize("n", [(0, 0, 0), (0, 0, 1)])
def test_table1_empty_rows(n):
    res = solve_special_state(genus_template("genus2_case2"), n)
    assert not res and res.diagnostic


@pytest.mark.parametrize("n", [(0, 1, 1), (1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1), (0, 0, 0), (0, 1, 0)])
def test_solver_matches_sympy_oracle(n):
    zg = genus_template("genus2_case2")
    ours = [(s.lam_value, s.g) for s in solve_special_state(zg, n)]
    theirs = sympy_states(zg, n)
    assert len(ours) == len(theirs)
    for (lam, g), (r, vec) in zip(ours, theirs):
        assert sympy.simplify(to_sympy(lam) - r) == 0
        assert all(sympy.simplify(to_sympy(g[v]) - vec[v]) == 0 for v in vec)


def test_cuntz_o2():
    (st,) = solve_special_state(genus_template("genus2_case1"))
    assert st.lam_value == Fraction(1, 2) and st.g == {"v": 1}


@pytest.mark.parametrize("lam", LAMBDA_GRID)
@pytest.mark.parametrize("n_loop,n_edge", [(1, 1), (1, 0)])
def test_suq2_general_formula(lam, n_loop, n_edge):
    zg = genus_template("genus2_case3")
    res = solve_special_state(zg, (n_loop, n_edge, 0))
    assert res.family and not res
    (st,) = solve_special_state(zg, (n_loop, n_edge, 0), lam=lam)
    want = lam ** n_edge / (1 - lam ** n_loop + lam ** n_edge)
    assert st.g["v"] == want and st.g["w"] == 1 - want
    assert st.residuals() == {}


def test_isomorphism_invariance():
    g = OrientedGraph(["p", "q"], [("z1", "q", "p"), ("z2", "p", "q"), ("z3", "q", "p")])
    relabeled = ZhyvotGraph(g)
    for n_theta, n_rel in [((1, 1, 1), (1, 1, 1)), ((1, 0, 1), (0, 1, 1))]:
        a = solve_special_state(genus_template("genus2_case2"), n_theta)[0]
        b = solve_special_state(relabeled, n_rel)[0]
        assert a.lam_value == b.lam_value
        assert (a.g["v"], a.g["w"]) == (b.g["p"], b.g["q"])


def test_random_cores_perron_frobenius(rng):
    for _ in range(20):
        zg = random_core(rng, rng.randint(1, 6), rng.randint(1, 5), depth=1)
        res = solve_special_state(zg)
        A = np.zeros((len(zg.core_vertices),) * 2)
        order = sorted(zg.core_vertices)
        for e in zg.core.edges:
            A[order.index(e.src), order.index(e.dst)] += 1
        rho = max(abs(np.linalg.eigvals(A)))
        assert len(res) == 1
        st = res[0]
        assert abs(float(st.lam_value) - 1 / rho) < 1e-9
        assert sum(float(st.g[v]) for v in order) == pytest.approx(1)
        assert all(float(st.g[v]) > 0 for v in order)
        if not st.approximate:
            assert st.residuals() == {}


# --- stub trees --------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 5])
@pytest.mark.parametrize("lam", [Fraction(1, 4), Fraction(1, 3), Fraction(2, 3)])
def test_genus1_budgets(n, lam):
    w = solve_with_stubs(genus_template("genus1", n=n, depth=3), lam)
    for i in range(1, n + 1):
        assert w.g[f"v{i}"] == Fraction(1, n)
        assert w.budget(f"v{i}") == (1 - lam) / n
    assert w.residuals() == {}


def test_zero_stubs_is_identity_extension():
    (st,) = solve_special_state(genus_template("genus2_case1"))
    ext = extend_to_trees(st)
    assert ext.values() == st.values()


def test_layer_sums_carry_the_residual():
    zg = genus_template("genus2_case3", 3, depth=3)
    w = solve_with_stubs(zg, Fraction(1, 3))
    X = zg.expanded
    for v in zg.graph.vertices:
        for d in range(1, 4):
            layer = sum(w.value(x) for x in X.vertices if X.anchor[x] == v and X.level[x] == d)
            assert layer == w.budget(v)


def test_negative_residual_is_infeasible():
    zg = genus_template("genus2_case2", 3, depth=1)
    (st,) = solve_special_state(zg)
    bad = st.rescaled(1)
    bad.g["v"] = Fraction(1, 100)
    with pytest.raises(InfeasibleError):
        extend_to_trees(bad)


def test_explicit_splits_respected():
    zg = genus_template("genus1", 3, n=2, depth=2)
    w = solve_with_stubs(zg, Fraction(1, 2))
    b = w.budget("v1")
    ext = extend_to_trees(w, splits={"v1": (b / 3, 2 * b / 3)})
    assert ext.stub_values["v1"] == (b / 3, 2 * b / 3)
    assert ext.residuals() == {}
    with pytest.raises(InfeasibleError):
        extend_to_trees(w, splits={"v1": (b, b)})


# --- vertex insertion and field extension -------------------------------------

def test_insertion_values():
    zg = genus_template("genus1", n=3, depth=2)
    for lam in (Fraction(1, 3), Fraction(1, 2)):
        w = solve_with_stubs(zg, lam)
        one = insert_vertex_extend(w, "e1", 1)
        gw = w.g["v2"]
        assert one.g["e1^1"] == gw
        assert one.g["e1^1*1"] == (1 - lam) / lam * gw
        if lam == Fraction(1, 2):
            assert one.g["e1^1*1"] == gw
        three = insert_vertex_extend(w, "e1", 3)
        assert all(three.g[f"e1^1*{j}"] == (1 - lam) / lam * gw / 3 for j in (1, 2, 3))
        for v in zg.graph.vertices:
            assert three.g[v] == w.g[v]


def test_insertion_on_random_combinations():
    rng = random.Random(7)
    states = [(g, w) for _, g, w in adapted_states(depth=2) if not w.approximate]
    for _ in range(100):
        g, w = rng.choice(states)
        edge = rng.choice(sorted(g.core_edges))
        out = insert_vertex_extend(w, edge, rng.randint(1, 3))
        assert out.residuals() == {}
        assert all(out.g[v] == w.g[v] for v in g.graph.vertices)


def test_field_extension_of_polygon_matches_resolve():
    zg = genus_template("genus1", 2, n=3, depth=2)
    for lam in LAMBDA_GRID:
        w = solve_with_stubs(zg, lam)
        ext = weight_after_field_extension(w, 2, 1)
        assert len(ext.graph.core.components()) == 1
        # direct re-solve along the subdivided polygon: g(e_i^1) = g(v_{i+1})
        for i in range(1, 4):
            assert ext.g[f"e{i}^1"] == w.g[f"v{i % 3 + 1}"]
            assert ext.budget(f"v{i}") >= 0
        assert ext.residuals() == {}
        assert ext.lam_value == lam


def test_field_extension_identity():
    w = solve_with_stubs(genus_template("genus1", n=3, depth=2), Fraction(1, 3))
    assert weight_after_field_extension(w, 1, 1) is w


# --- inhomogeneous weights --------------------------------------------------

def averaging(zg, g, stub_values=None):
    return averaging_weight(zg, g, stub_values)


def test_full_alpha_kills_everything():
    zg = genus_template("genus2_case2", 3, depth=2)
    w = averaging(zg, {"v": Fraction(1), "w": Fraction(1)})
    assert w.residuals() == {}
    ih = inhom_from_alpha(w, choice="full")
    assert set(ih.G.values()) == {0} and set(ih.chi.values()) == {0}


def test_indicator_on_crossing_edges():
    zg = genus_template("genus2_case2", 3, depth=2)
    w = solve_with_stubs(zg, Fraction(1, 2))
    ih = inhom_from_alpha(w, choice="indicator")
    X = zg.expanded
    for e in X.edges:
        if e.src in zg.core_vertices and e.dst not in zg.core_vertices:
            assert ih.chi[e.id] == w.value(e.src) / X.out_degree(e.src)
    assert ih.residuals() == {}


def test_indicator_can_fail():
    zg = genus_template("genus2_case2", 3, depth=2)
    w = averaging(zg, {"v": Fraction(1), "w": Fraction(2)})
    assert w.residuals() == {}
    ih = inhom_from_alpha(w, choice="indicator")
    assert ih.negative_chi() == ["b"]
    assert not ih.feasible and ih.residuals() == {}


def test_alpha_must_stay_below_g():
    zg = genus_template("genus2_case2", 3, depth=2)
    w = solve_with_stubs(zg, Fraction(1, 2))
    with pytest.raises(ValueError):
        inhom_from_alpha(w, {"v": Fraction(5)})


def alpha_oracle(w, zg, k):
    """lambda^k A^k g on the core: σ-length k paths ending in M never leave M."""
    order = sorted(zg.core_vertices)
    A = sympy.zeros(len(order))
    for e in zg.core.edges:
        A[order.index(e.src), order.index(e.dst)] += 1
    gvec = sympy.Matrix([to_sympy(w.g[v]) for v in order])
    vals = to_sympy(w.lam_value) ** k * A ** k * gvec
    return {v: vals[i] for i, v in enumerate(order)}


def test_alpha_values_and_monotonicity():
    for label, zg, w in adapted_states(depth=4):
        X = zg.expanded
        prev = alpha_k(w, 0)
        assert prev == w.values()
        for k in range(1, 5):
            a = alpha_k(w, k)
            ref = alpha_oracle(w, zg, k)
            for v in X.vertices:
                if v in zg.core_vertices:
                    assert sympy.simplify(to_sympy(a[v]) - ref[v]) == 0, label
                else:
                    assert a[v] == 0
                assert a[v] <= prev[v]
            prev = a


def test_inhom_chain_support_and_sign():
    w = solve_with_stubs(genus_template("genus1", n=3, depth=3), Fraction(1, 3))
    ih = inhom_chain(w, 1)
    assert {e for e, x in ih.chi.items() if x != 0} == {"e1", "e2", "e3"}
    for label, zg, w in adapted_states(depth=4):
        for k in range(1, 5):
            ih = inhom_chain(w, k)
            assert ih.residuals() == {}
            assert ih.feasible, label


# --- virtual weights ---------------------------------------------------------

def two_weights():
    zg = genus_template("genus2_case2", 3, depth=2)
    w1 = averaging(zg, {"v": Fraction(1), "w": Fraction(1)})
    w2 = averaging(zg, {"v": Fraction(1), "w": Fraction(3, 2)})
    return zg, w1, w2


def test_virtual_basics():
    zg, w1, w2 = two_weights()
    same = virtual_from_two(w1, w1)
    assert set(same.Ghat.values()) == {0}
    a1 = {v: x / 2 for v, x in w1.values().items()}
    v = virtual_from_two(w1, w2, a1, "full")
    assert v.witnesses[0] == {x: w1.value(x) - a1[x] for x in zg.expanded.vertices}
    assert v.residuals() == {}


def test_virtual_integerized():
    zg, w1, w2 = two_weights()
    v = integerize(virtual_from_two(w1, w2, "indicator", "indicator"))
    assert v.is_integral() and v.residuals() == {}
    assert any(x != 0 for x in v.Ghat.values())
    assert v.scale == 6


def test_integerize_rules():
    zg = genus_template("genus2_case2", 3, depth=2)
    vw = virtual_weight(zg, {"v": Fraction(1, 2), "w": Fraction(1, 3)})
    assert integerize(vw).scale == 6
    whole = virtual_weight(zg, {"v": 2, "w": 2})
    assert integerize(whole).Ghat == whole.Ghat
    bent = virtual_weight(zg, {"v": 1, "w": 1})
    bent.Ghat["v~0.0"] = Fraction(5)
    with pytest.raises(ZhyvotError):
        integerize(bent)


def test_mismatched_lambda_refused():
    zg, w1, _ = two_weights()
    w = solve_with_stubs(zg, Fraction(1, 2))
    with pytest.raises(ZhyvotError):
        virtual_from_two(w1, w)
