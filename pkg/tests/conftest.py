import random
from fractions import Fraction

import pytest

from zhyvot.algebra import Monomial, check_monomial
from zhyvot.graph import Path

from zhyvot import OrientedGraph, ZhyvotGraph, genus_template, solve_special_state, solve_with_stubs

LAMBDA_GRID = [Fraction(k, 10) for k in range(1, 10)]


def template_graphs(depth=4):
    """One instance of every template, with q large enough to grow stub trees where it matters."""
    return {
        "genus1(3)": genus_template("genus1", n=3, depth=depth),
        "genus1(5)": genus_template("genus1", n=5, depth=depth),
        "genus2_case1": genus_template("genus2_case1", depth=depth),
        "genus2_case2": genus_template("genus2_case2", depth=depth),
        "genus2_case2_q3": genus_template("genus2_case2", 3, depth=depth),
        "genus2_case3_q3": genus_template("genus2_case3", 3, depth=depth),
    }


def adapted_states(depth=4):
    """(label, graph, weight) for every template and every adapted state we can solve for."""
    out = []
    for label, g in template_graphs(depth).items():
        for st in solve_special_state(g):
            out.append((f"{label}/core", g, st))
        for lam in (Fraction(1, 3), Fraction(1, 2)):
            try:
                out.append((f"{label}/stubs@{lam}", g, solve_with_stubs(g, lam)))
            except ValueError:
                pass
    return out


def random_core(rng: random.Random, nv: int, extra: int, depth=2) -> ZhyvotGraph:
    """Hamiltonian directed cycle on nv vertices plus ``extra`` random edges (loops allowed)."""
    vs = [f"x{i}" for i in range(nv)]
    es = [(f"c{i}", vs[i], vs[(i + 1) % nv]) for i in range(nv)]
    for j in range(extra):
        es.append((f"r{j}", rng.choice(vs), rng.choice(vs)))
    g = OrientedGraph(vs, es)
    q = max(2, max(g.valence(v) for v in vs) - 1 + rng.randint(0, 1))
    return ZhyvotGraph(g, q=q, depth=depth)


@pytest.fixture
def rng():
    return random.Random(20261016)


def random_path(X, rng, start_levels=(0, 1), max_len=2):
    starts = [v for v in X.vertices if X.level[v] in start_levels]
    start = v = rng.choice(sorted(starts))
    edges = []
    for _ in range(rng.randint(0, max_len)):
        e = rng.choice(X.out_edges(v))
        edges.append(e.id)
        v = e.dst
    return Path(start, v, tuple(edges))


def random_back_path(X, rng, target, max_len=2):
    v, edges = target, []
    for _ in range(rng.randint(0, max_len)):
        ins = X.in_edges(v)
        if not ins or X.level[ins[0].src] > 1:
            break
        e = rng.choice(ins)
        edges.append(e.id)
        v = e.src
    return Path(v, target, tuple(reversed(edges)))


def monomial_pool(zg, n, seed):
    rng = random.Random(seed)
    X = zg.expanded
    pool = []
    while len(pool) < n:
        mu = random_path(X, rng)
        nu = random_back_path(X, rng, mu.target)
        pool.append(check_monomial(zg, Monomial(mu, nu)))
    return pool
