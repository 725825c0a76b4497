from fractions import Fraction

import pytest

from zhyvot import (
    PairingReport,
    ProjTraceQuery,
    alpha_k,
    cycle_basis,
    genus_template,
    proj_trace,
    recover_schottky,
    solve_special_state,
    solve_with_stubs,
    spectral_flow_pairing,
    trace_by_paths,
)
from zhyvot.errors import (
    AmbiguousPairingError,
    CompositionError,
    InconsistentPairingError,
    OutOfClosedFormError,
    StructuralError,
)
from zhyvot.graph import Path, enumerate_paths
from zhyvot.index import LoopSpec, schottky_candidates
from zhyvot.scalars import exact_sqrt

from conftest import adapted_states


@pytest.fixture(scope="module")
def polygon():
    zg = genus_template("genus1", n=3, depth=4)
    return zg, solve_with_stubs(zg, Fraction(1, 3))


def test_polygon_level_trace(polygon):
    zg, w = polygon
    loop = zg.expanded.path(["e1", "e2", "e3"])
    lam = Fraction(1, 3)
    assert proj_trace(w, compressor=loop, level=2) == lam ** 3 / 3


def test_vertex_negative_level(polygon):
    zg, w = polygon
    assert proj_trace(w, ProjTraceQuery("v2", -1)) == w.value("v2") == Fraction(1, 3)


def test_refusals(polygon):
    zg, w = polygon
    X = zg.expanded
    with pytest.raises(OutOfClosedFormError):
        proj_trace(w, compressor=X.path(["e1"]), level=2)
    with pytest.raises(OutOfClosedFormError):
        proj_trace(w, compressor="v1", level=1)
    with pytest.raises(OutOfClosedFormError):
        proj_trace(w, compressor=X.path(["e1", ">v2~0"]), level=1)
    theta = genus_template("genus2_case2")
    non_adapted = solve_special_state(theta, (1, 0, 1))[0]
    with pytest.raises(StructuralError):
        proj_trace(non_adapted, compressor="v", level=0)


@pytest.mark.parametrize("label,zg,w", adapted_states(depth=5), ids=lambda x: x if isinstance(x, str) else "")
def test_closed_form_equals_path_sums(label, zg, w):
    for v in sorted(zg.core_vertices):
        for s in range(1, 4):
            for p in enumerate_paths(zg, v, sigma=s):
                for k in range(-s, s + 1):
                    want = w.lam_value ** s * w.value(p.target)
                    assert trace_by_paths(w, p, k) == want
                    assert proj_trace(w, compressor=p, level=k) == want
        for k in range(-3, 1):
            assert proj_trace(w, compressor=v, level=k) == w.value(v)


def test_alpha_is_vertex_trace():
    for label, zg, w in adapted_states(depth=4):
        for k in range(0, 4):
            a = alpha_k(w, k)
            for v in zg.core_vertices:
                assert a[v] == trace_by_paths(w, v, k), label


def test_depth_stability():
    for depth in (3, 5, 7):
        zg = genus_template("genus2_case3", 3, depth=depth)
        w = solve_with_stubs(zg, Fraction(1, 2))
        p = zg.expanded.path(["e", "f", "h"])
        assert proj_trace(w, compressor=p, level=-3) == Fraction(1, 8) * w.value("w")


# --- pairings ----------------------------------------------------------------

@pytest.mark.parametrize("n", range(1, 7))
def test_polygon_pairing(n):
    zg = genus_template("genus1", n=n, depth=n)
    for lam in (Fraction(1, 4), Fraction(1, 2)):
        w = solve_with_stubs(zg, lam)
        rep = spectral_flow_pairing(w, zg.expanded.path([f"e{i}" for i in range(1, n + 1)]))
        assert rep.value == -lam ** n
        assert rep.terms == (lam ** n / n,) * n


def test_theta_pairing():
    zg = genus_template("genus2_case2")
    (st,) = solve_special_state(zg, (1, 1, 1))
    rep = spectral_flow_pairing(st, LoopSpec(zg.expanded.path(["b", "a"])))
    assert rep.value == -1 / (1 + exact_sqrt(2))
    assert rep.k == 2 and rep.range_vertex == "v"


def test_o2_pairing():
    zg = genus_template("genus2_case1")
    (st,) = solve_special_state(zg)
    rep = spectral_flow_pairing(st, zg.expanded.path(["f"]))
    assert rep.value == Fraction(-1, 2)
    assert recover_schottky(rep) == 1


def test_pairing_depends_only_on_k_and_range():
    zg = genus_template("genus2_case2")
    (st,) = solve_special_state(zg, (1, 1, 1))
    X = zg.expanded
    assert spectral_flow_pairing(st, X.path(["b", "a"])).value == spectral_flow_pairing(st, X.path(["b", "c"])).value


def test_open_path_is_not_a_loop(polygon):
    zg, w = polygon
    with pytest.raises(CompositionError):
        spectral_flow_pairing(w, zg.expanded.path(["e1"]))


# --- Schottky recovery --------------------------------------------------------

def test_recover_polygon(polygon):
    zg, w = polygon
    rep = spectral_flow_pairing(w, zg.expanded.path(["e1", "e2", "e3"]))
    assert rep.value == -Fraction(1, 27)
    assert recover_schottky(rep.value, w, "v1") == 3


@pytest.mark.parametrize("lam", [Fraction(k, 10) for k in range(2, 9)])
def test_round_trip_over_grid(lam):
    g = Fraction(1, 3)
    for k in range(1, 7):
        value = -k * lam ** k * g
        rep = PairingReport(k, lam, g, value, (), lam ** k * g, "v")
        assert recover_schottky(rep) == k
        cands = schottky_candidates(value, lam, g)
        assert k in cands
        if len(cands) == 1:
            continue
        # k -> k lambda^k is not injective here; the bare value cannot decide
        assert lam in (Fraction(1, 2), Fraction(4, 5))
        with pytest.raises(AmbiguousPairingError):
            recover_schottky(PairingReport(k, lam, g, value, (), None, "v"))


def test_inconsistent_value():
    with pytest.raises(InconsistentPairingError):
        recover_schottky(PairingReport(1, Fraction(1, 3), Fraction(1), Fraction(-7, 5), (), None, "v"))


def test_recovery_with_tolerance():
    lam = 0.3
    value = -4 * lam ** 4 * 0.25
    rep = PairingReport(4, lam, 0.25, value, (), lam ** 4 * 0.25, "v")
    assert recover_schottky(rep, tol=1e-12) == 4


def test_recover_all_template_loops():
    for label, zg, w in adapted_states(depth=4):
        for c in cycle_basis(zg.core):
            if not c.is_directed():
                continue
            rep = spectral_flow_pairing(w, c.as_path())
            assert recover_schottky(rep) == rep.k == len(c), label
