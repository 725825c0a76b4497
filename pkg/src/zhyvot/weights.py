"""Graph weights: special states, tree extensions, vertex insertion, inhomogeneous and virtual weights.

A weight stores values on the explicit vertices only.  Values on the
generated trees follow from two rules: the stub roots at an explicit vertex
``v`` share the residual budget of ``v`` (equally unless per-stub values are
given), and each tree vertex passes its value on to its ``q`` children in
equal parts.  Everything that is checked against the weight equation is
checked on the truncated expansion, skipping vertices whose out-star is cut
off by the truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
import sympy

from .errors import DepthError, InfeasibleError, StructuralError, ZhyvotError
from .graph import Edge, OrientedGraph, Path, ZhyvotGraph, enumerate_paths, field_extension
from .linalg import nullspace, solve
from .scalars import QuadraticNumber, exact_sqrt, format_exact, sign

TOL = 1e-10


def _is_zero(x) -> bool:
    if isinstance(x, float):
        return abs(x) <= TOL
    return x == 0


def _positive(x) -> bool:
    if isinstance(x, float):
        return x > TOL
    return sign(x) > 0


def _nonneg(x) -> bool:
    if isinstance(x, float):
        return x >= -TOL
    return sign(x) >= 0


class GraphWeight:
    """A pair (g, lambda) on a zhyvot graph and its tree expansion.

    ``edge_lambda`` covers explicit edges, ``stub_lambda`` the edge from an
    explicit vertex to each of its stub roots, ``tree_lambda`` every edge
    inside a stub tree.  ``stub_values`` optionally fixes the value of each
    stub root (a tuple per explicit vertex); otherwise the budget
    ``g(v) - sum lambda(e) g(r(e))`` over explicit edges is split equally.
    """

    def __init__(self, graph: ZhyvotGraph, g: Mapping, edge_lambda: Mapping,
                 stub_lambda=1, tree_lambda=1, stub_values: Mapping | None = None,
                 approximate: bool = False):
        self.graph = graph
        missing = [v for v in graph.graph.vertices if v not in g]
        if missing:
            raise StructuralError(f"weight has no value at {', '.join(sorted(missing))}")
        self.g = {v: g[v] for v in graph.graph.vertices}
        self.edge_lambda = {e.id: edge_lambda[e.id] for e in graph.graph.edges}
        if isinstance(stub_lambda, Mapping):
            self.stub_lambda = {v: stub_lambda.get(v, 1) for v in graph.graph.vertices}
        else:
            self.stub_lambda = {v: stub_lambda for v in graph.graph.vertices}
        self.tree_lambda = tree_lambda
        self.approximate = approximate
        roots = {}
        for v in graph.graph.vertices:
            m = graph.stubs[v]
            if stub_values is not None and v in stub_values:
                vals = tuple(stub_values[v])
                if len(vals) != m:
                    raise StructuralError(f"{v!r} has {m} stubs but {len(vals)} stub values")
            elif m == 0:
                vals = ()
            else:
                share = self.budget(v) / (m * self.stub_lambda[v])
                vals = (share,) * m
            roots[v] = vals
        self.stub_values = roots
        self._cache = {}

    # ---- values -------------------------------------------------------
    def budget(self, v):
        """g(v) minus the explicit part of the weight equation at v."""
        total = self.g[v]
        for e in self.graph.graph.out_edges(v):
            total = total - self.edge_lambda[e.id] * self.g[e.dst]
        return total

    @property
    def expanded(self):
        return self.graph.expanded

    def lam(self, eid: str):
        """lambda(e) for any edge of the expansion."""
        if eid in self.edge_lambda:
            return self.edge_lambda[eid]
        X = self.expanded
        e = X.edge(eid)
        if X.level[e.dst] == 1:
            return self.stub_lambda[X.anchor[e.dst]]
        return self.tree_lambda

    def value(self, v):
        if v in self.g:
            return self.g[v]
        if v in self._cache:
            return self._cache[v]
        X = self.expanded
        if not X.has_vertex(v):
            raise StructuralError(f"unknown vertex {v!r}")
        if X.level[v] == 1:
            a = X.anchor[v]
            j = int(v[len(a) + 1:])
            val = self.stub_values[a][j]
        else:
            parent = X.in_edges(v)[0].src
            val = self.value(parent) / (self.graph.q * self.tree_lambda)
        self._cache[v] = val
        return val

    def values(self) -> dict:
        return {v: self.value(v) for v in self.expanded.vertices}

    def path_lambda(self, p: Path):
        out = Fraction(1)
        for e in p.edges:
            out = out * self.lam(e)
        return out

    # ---- checks -------------------------------------------------------
    def residual(self, v):
        X = self.expanded
        total = self.value(v)
        for e in X.out_edges(v):
            total = total - self.lam(e.id) * self.value(e.dst)
        return total

    def residuals(self) -> dict:
        """Nonzero weight-equation residuals at every vertex with a complete out-star.

        Explicit vertices whose stub trees are cut at depth 0 are checked
        through their stub-root values instead.
        """
        X = self.expanded
        bad = {}
        for v in X.vertices:
            if X.is_complete(v):
                r = self.residual(v)
            elif v in self.g:
                r = self.budget(v)
                for val in self.stub_values[v]:
                    r = r - self.stub_lambda[v] * val
            else:
                continue
            if not _is_zero(r):
                bad[v] = r
        return bad

    def is_valid(self) -> bool:
        return not self.residuals()

    def is_faithful(self) -> bool:
        return (all(_positive(x) for x in self.g.values())
                and all(_positive(x) for vals in self.stub_values.values() for x in vals))

    def is_nonnegative(self) -> bool:
        return (all(_nonneg(x) for x in self.g.values())
                and all(_nonneg(x) for vals in self.stub_values.values() for x in vals))

    def core_mass(self):
        return sum((self.g[v] for v in sorted(self.graph.core_vertices)), Fraction(0))

    def has_averaging_lambda(self) -> bool:
        """True when lambda(e) = 1/N_e on every edge of the expansion."""
        X = self.expanded
        return all(self.lam(e.id) == Fraction(1, X.out_degree(e.src)) for e in X.edges)

    def __repr__(self):
        vals = ", ".join(f"{v}={format_exact(self.g[v])}" for v in sorted(self.g))
        return f"{type(self).__name__}({vals})"


class SpecialWeight(GraphWeight):
    """lambda(e) = lam**n_e on explicit edges and lambda = 1 on the trees."""

    def __init__(self, graph: ZhyvotGraph, lam, n: Mapping | None, g: Mapping,
                 stub_values: Mapping | None = None, approximate: bool = False):
        if n is None:
            n = {e.id: int(e.id in graph.core_edges) for e in graph.graph.edges}
        n = {e.id: int(n.get(e.id, 0)) for e in graph.graph.edges}
        if any(x not in (0, 1) for x in n.values()):
            raise StructuralError("n_e must be 0 or 1")
        if not (0 < lam < 1):
            raise ValueError(f"lambda must lie in (0,1), got {lam}")
        self.lam_value = lam
        self.n = n
        super().__init__(graph, g, {e: lam ** k for e, k in n.items()}, 1, 1, stub_values, approximate)

    @property
    def lam_scalar(self):
        return self.lam_value

    def is_adapted(self) -> bool:
        """n_e = 1 exactly on the zhyvot edges."""
        return all((k == 1) == (e in self.graph.core_edges) for e, k in self.n.items())

    def normalized(self) -> "SpecialWeight":
        mass = self.core_mass()
        return self.rescaled(1 / mass)

    def rescaled(self, c) -> "SpecialWeight":
        return SpecialWeight(self.graph, self.lam_value, self.n, {v: c * x for v, x in self.g.items()},
                             {v: tuple(c * x for x in vals) for v, vals in self.stub_values.items()},
                             self.approximate)

    def with_graph(self, graph: ZhyvotGraph, stub_values=None) -> "SpecialWeight":
        return SpecialWeight(graph, self.lam_value, self.n, self.g, stub_values, self.approximate)

    def __repr__(self):
        vals = ", ".join(f"{v}={format_exact(self.g[v])}" for v in sorted(self.g))
        return f"SpecialWeight(lambda={format_exact(self.lam_value)}, {vals})"


def averaging_weight(graph: ZhyvotGraph, g: Mapping, stub_values: Mapping | None = None) -> GraphWeight:
    """Weight with lambda(e) = 1/N_e everywhere; inside the trees it is constant."""
    G = graph.graph
    lam = {e.id: Fraction(1, graph.out_degree(e.src)) for e in G.edges}
    stub_lam = {v: Fraction(1, graph.out_degree(v)) for v in G.vertices}
    return GraphWeight(graph, g, lam, stub_lam, Fraction(1, graph.q), stub_values)


def reversed_averaging_weight(graph: ZhyvotGraph, g: Mapping, stub_values: Mapping | None = None) -> GraphWeight:
    """Weight with lambda(e) = 1/N_(reversed e), the out-degree of r(e)."""
    G = graph.graph
    lam = {e.id: Fraction(1, graph.out_degree(e.dst)) for e in G.edges}
    return GraphWeight(graph, g, lam, Fraction(1, graph.q), Fraction(1, graph.q), stub_values)


# ---------------------------------------------------------------------------
# special states on the zhyvot


@dataclass
class SolveResult:
    states: list
    diagnostic: str = ""
    family: bool = False
    polynomial: str = ""

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    def __bool__(self):
        return bool(self.states)

    def __getitem__(self, i):
        return self.states[i]


def _n_map(graph: ZhyvotGraph, n) -> dict:
    core_order = [e.id for e in graph.graph.edges if e.id in graph.core_edges]
    if n is None:
        return {e: 1 for e in core_order}
    if isinstance(n, Mapping):
        unknown = [e for e in n if e not in graph.core_edges]
        if unknown:
            raise StructuralError(f"n given for non-core edges {unknown}")
        return {e: int(n.get(e, 1)) for e in core_order}
    n = list(n)
    if len(n) != len(core_order):
        raise StructuralError(f"expected {len(core_order)} n-values ({', '.join(core_order)}), got {len(n)}")
    return dict(zip(core_order, (int(x) for x in n)))


def _ordered_core(graph: ZhyvotGraph) -> list[str]:
    sinks = graph.core_sinks()
    return [v for v in sorted(graph.core_vertices) if v not in sinks] + sorted(sinks)


def _matrix(graph, order, nmap, lam):
    """Rows: sum over edges v_j -> v_k of lam**n_e; identity rows at sinks."""
    idx = {v: i for i, v in enumerate(order)}
    sinks = graph.core_sinks()
    A = [[0] * len(order) for _ in order]
    for v in order:
        if v in sinks:
            A[idx[v]][idx[v]] = 1
    for e in graph.core.edges:
        A[idx[e.src]][idx[e.dst]] = A[idx[e.src]][idx[e.dst]] + lam ** nmap[e.id]
    return A


def _rho(graph, order, nmap, x: float) -> float:
    A = np.array(_matrix(graph, order, nmap, float(x)), dtype=float)
    return float(max(abs(np.linalg.eigvals(A))))


def _positive_state(graph, order, nmap, lam, approximate=False):
    """Strictly positive normalized null vector of A(lam) - I, or None."""
    A = _matrix(graph, order, nmap, lam)
    n = len(order)
    if approximate:
        M = np.array(A, dtype=float) - np.eye(n)
        _, s, vt = np.linalg.svd(M)
        x = vt[-1]
        if x.sum() < 0:
            x = -x
        if not np.all(x > TOL) or s[-1] > 1e-8:
            return None, "no positive eigenvector at the numerical root"
        x = x / x.sum()
        return {v: float(x[i]) for i, v in enumerate(order)}, ""
    rows = [[A[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    basis = nullspace(rows, n)
    if not basis:
        return None, "1 is not an eigenvalue"
    candidates = basis if len(basis) == 1 else basis + [[sum(col, Fraction(0)) for col in zip(*basis)]]
    for x in candidates:
        total = sum(x, Fraction(0))
        if total == 0:
            continue
        x = [xi / total for xi in x]
        if all(_positive(xi) for xi in x):
            return {v: x[i] for i, v in enumerate(order)}, ""
    return None, "eigenvector for eigenvalue 1 is not strictly positive"


def _exact_root(poly: sympy.Poly, x0: float):
    """Exact root of ``poly`` nearest ``x0`` if it has degree <= 2, else None."""
    lam = poly.gens[0]
    best = None
    for factor, _ in sympy.factor_list(poly.as_expr(), lam)[1]:
        fp = sympy.Poly(factor, lam)
        for r in fp.nroots(n=30):
            if abs(sympy.im(r)) > 1e-20:
                continue
            dist = abs(float(sympy.re(r)) - x0)
            if best is None or dist < best[0]:
                best = (dist, fp)
    if best is None or best[0] > 1e-7:
        return None
    fp = best[1]
    coeffs = [Fraction(str(c)) for c in fp.all_coeffs()]
    if fp.degree() == 1:
        root = -coeffs[1] / coeffs[0]
    elif fp.degree() == 2:
        a, b, c = coeffs
        disc = exact_sqrt(b * b - 4 * a * c)
        roots = [(-b + disc) / (2 * a), (-b - disc) / (2 * a)]
        root = min(roots, key=lambda r: abs(float(r) - x0))
    else:
        return None
    # exact verification of the polynomial equation
    val = Fraction(0)
    for c in coeffs:
        val = val * root + c
    if val != 0:
        raise AssertionError(f"exact root {root} fails its minimal polynomial")
    return root


def solve_special_state(graph: ZhyvotGraph, n=None, lam=None) -> SolveResult:
    """All special states on the zhyvot for the exponent pattern ``n``.

    ``n`` is a mapping core edge -> {0,1} or a sequence in the declared
    order of core edges.  The stub trees are ignored (they receive zero
    budget); see :func:`solve_with_stubs` for states that charge them.
    When the eigenvalue condition holds for a whole interval of lambda the
    result is a one-parameter family and ``lam`` must be supplied.
    """
    nmap = _n_map(graph, n)
    order = _ordered_core(graph)
    full_n = {e.id: nmap.get(e.id, 0) for e in graph.graph.edges}
    x = sympy.Symbol("lambda")
    A = sympy.Matrix(_matrix(graph, order, nmap, x))
    det = sympy.Poly(sympy.expand((A - sympy.eye(len(order))).det()), x)
    poly_text = str(det.as_expr())
    non_core = [v for v in graph.graph.vertices if v not in graph.core_vertices]

    def build(lam_val, g, approximate=False):
        g = dict(g)
        for v in non_core:
            g[v] = 0  # explicit non-core parts carry nothing in a core state
        return SpecialWeight(graph, lam_val, full_n, g, None, approximate)

    if lam is not None:
        if not (0 < lam < 1):
            raise ValueError("lambda must lie in (0,1)")
        g, why = _positive_state(graph, order, nmap, lam, isinstance(lam, float))
        if g is None:
            return SolveResult([], f"no state at lambda={format_exact(lam)}: {why}", det.is_zero, poly_text)
        return SolveResult([build(lam, g, isinstance(lam, float))], "", det.is_zero, poly_text)

    if det.is_zero:
        return SolveResult([], "det(A(lambda) - I) vanishes identically: one-parameter family, pass lam",
                           True, poly_text)

    # numerical location of rho(A(lambda)) = 1; rho is nondecreasing in lambda
    lo, hi = 0.0, 1.0
    r_lo, r_hi = _rho(graph, order, nmap, lo), _rho(graph, order, nmap, hi)
    if r_lo > 1 + 1e-12:
        return SolveResult([], f"spectral radius {r_lo:.6g} > 1 already at lambda=0 (edges with n=0 carry too much mass)",
                           False, poly_text)
    if r_hi < 1 - 1e-12 or abs(r_hi - 1) <= 1e-12 and r_lo >= 1 - 1e-12:
        return SolveResult([], f"spectral radius {r_hi:.6g} < 1 for all lambda in (0,1)", False, poly_text)
    if all(k == 1 for k in nmap.values()) and len(graph.core.components()) == 1:
        est = 1.0 / r_hi  # Perron-Frobenius: A(lambda) = lambda * adjacency
    else:
        while hi - lo > 1e-14:
            mid = (lo + hi) / 2
            if _rho(graph, order, nmap, mid) < 1:
                lo = mid
            else:
                hi = mid
        est = (lo + hi) / 2
    if est <= 1e-12:
        return SolveResult([], "eigenvalue 1 is only reached at lambda=0", False, poly_text)
    if est >= 1 - 1e-12:
        return SolveResult([], "eigenvalue 1 is only reached at lambda=1", False, poly_text)
    root = _exact_root(det, est)
    if root is None:
        g, why = _positive_state(graph, order, nmap, est, True)
        if g is None:
            return SolveResult([], why, False, poly_text)
        return SolveResult([build(est, g, True)], "root of degree > 2: approximate", False, poly_text)
    if not (0 < root < 1):
        return SolveResult([], "root outside (0,1)", False, poly_text)
    g, why = _positive_state(graph, order, nmap, root)
    if g is None:
        return SolveResult([], f"lambda={format_exact(root)}: {why}", False, poly_text)
    return SolveResult([build(root, g)], "", False, poly_text)


def solve_with_stubs(graph: ZhyvotGraph, lam, n=None, budgets: Mapping | None = None) -> SpecialWeight:
    """State for a given lambda whose stub trees absorb prescribed budgets.

    Solves g = A(lambda) g + B on the explicit graph, B_v = budgets[v]
    (default: the number of stubs at v, i.e. one unit per stub), and
    normalizes over the core.  Needs lambda * rho(A) < 1 for positivity.
    """
    if not (0 < lam < 1):
        raise ValueError("lambda must lie in (0,1)")
    G = graph.graph
    if n is None:
        n = {e.id: int(e.id in graph.core_edges) for e in G.edges}
    order = sorted(G.vertices)
    idx = {v: i for i, v in enumerate(order)}
    M = [[Fraction(int(i == j)) for j in range(len(order))] for i in range(len(order))]
    for e in G.edges:
        M[idx[e.src]][idx[e.dst]] = M[idx[e.src]][idx[e.dst]] - lam ** n.get(e.id, 0)
    B = [Fraction(budgets[v]) if budgets is not None else Fraction(graph.stubs[v]) for v in order]
    if any(b < 0 for b in B):
        raise InfeasibleError("budgets must be non-negative")
    try:
        x = solve(M, B)
    except ValueError:
        raise InfeasibleError(f"I - A(lambda) is singular at lambda={format_exact(lam)}") from None
    if not all(_positive(xi) for xi in x):
        raise InfeasibleError(f"no positive solution at lambda={format_exact(lam)}")
    w = SpecialWeight(graph, lam, n, {v: x[idx[v]] for v in order})
    return w.normalized()


def extend_to_trees(weight: SpecialWeight, graph: ZhyvotGraph | None = None,
                    splits: Mapping | None = None) -> SpecialWeight:
    """Attach stub trees to a core weight, splitting each residual budget over the stubs.

    ``splits`` may give per-stub budgets at some vertices; they must add up to the residual.
    """
    graph = graph or weight.graph
    probe = SpecialWeight(graph, weight.lam_value, weight.n, weight.g,
                          {v: (0,) * graph.stubs[v] for v in graph.graph.vertices})
    values = {}
    for v in graph.graph.vertices:
        b = probe.budget(v)
        if not _nonneg(b):
            raise InfeasibleError(f"negative residual {format_exact(b)} at {v!r}")
        m = graph.stubs[v]
        if m == 0:
            if not _is_zero(b):
                raise InfeasibleError(f"residual {format_exact(b)} at {v!r} but no stubs to absorb it")
            continue
        if splits is not None and v in splits:
            parts = tuple(splits[v])
            if len(parts) != m or any(not _nonneg(p) for p in parts) or not _is_zero(sum(parts, Fraction(0)) - b):
                raise InfeasibleError(f"splits at {v!r} must be {m} non-negative budgets summing to {format_exact(b)}")
            values[v] = parts
    return SpecialWeight(graph, weight.lam_value, weight.n, weight.g, values or None, weight.approximate)


# ---------------------------------------------------------------------------
# vertex insertion and field extension


def insert_vertex_extend(weight: SpecialWeight, edge: str, new_tree_count: int, *,
                         vertex: str | None = None, first: str | None = None, second: str | None = None,
                         stem_stubs: int | None = None) -> SpecialWeight:
    """Split core edge e: v -> w as v -> t -> w and hang ``new_tree_count`` stems off t.

    Stem j is an edge ``t-j`` to a new vertex ``t*j``; stems and their ranges
    join the zhyvot (so n_e = 1 exactly on M still holds) and each stem
    range carries ``stem_stubs`` stub trees (default q).  Values:
    g(t) = g(w), g(t*j) = (1/count) ((1 - lambda)/lambda) g(w); every old
    value is kept.
    """
    lam = weight.lam_value
    if not (0 < lam < 1):
        raise ZeroDivisionError("vertex insertion needs 0 < lambda < 1")
    if new_tree_count < 1:
        raise ValueError("new_tree_count must be positive")
    graph = weight.graph
    G = graph.graph
    e = G.edge(edge)
    if edge not in graph.core_edges:
        raise StructuralError(f"{edge!r} is not a core edge")
    if weight.n[edge] != 1:
        raise StructuralError(f"vertex insertion needs n_e = 1 on {edge!r}")
    t = vertex or f"{edge}^1"
    first = first or f"{edge}/1"
    second = second or f"{edge}/2"
    stems = [(f"{t}-{j}", f"{t}*{j}") for j in range(1, new_tree_count + 1)]
    taken = set(G.vertices) | {x.id for x in G.edges}
    for name in [t, first, second] + [s for pair in stems for s in pair]:
        if name in taken and name != edge:
            raise StructuralError(f"id {name!r} already in use")
    vertices = list(G.vertices) + [t] + [s for _, s in stems]
    edges = []
    for x in G.edges:
        if x.id == edge:
            edges.append(Edge(first, e.src, t))
            edges.append(Edge(second, t, e.dst))
        else:
            edges.append(x)
    edges += [Edge(fid, t, s) for fid, s in stems]
    core_v = set(graph.core_vertices) | {t} | {s for _, s in stems}
    core_e = (set(graph.core_edges) - {edge}) | {first, second} | {fid for fid, _ in stems}
    k = graph.q if stem_stubs is None else stem_stubs
    stubs = dict(graph.stubs)
    stubs[t] = 0
    for _, s in stems:
        stubs[s] = k
    new_graph = ZhyvotGraph(OrientedGraph(vertices, edges), core_v, core_e, graph.q, stubs, graph.depth, graph.name)
    gw = weight.g[e.dst]
    g = dict(weight.g)
    g[t] = gw
    stem_value = Fraction(1, new_tree_count) * ((1 - lam) / lam) * gw
    for _, s in stems:
        g[s] = stem_value
    n = dict(weight.n)
    del n[edge]
    n.update({first: 1, second: 1})
    n.update({fid: 1 for fid, _ in stems})
    sv = dict(weight.stub_values)
    out = SpecialWeight(new_graph, lam, n, g, sv, weight.approximate)
    bad = out.residuals()
    if bad:
        raise ZhyvotError(f"vertex insertion left residuals at {sorted(bad)}")
    return out


def weight_after_field_extension(weight: SpecialWeight, e_LK: int, f: int) -> SpecialWeight:
    """Carry a special weight through field_extension(graph, e_LK, f).

    Each core edge is subdivided by repeated vertex insertion with
    q**f - 1 stems per inserted vertex; the result lives on the extended
    graph with those stems promoted to the zhyvot, stubs recounted for
    valence q**f + 1, and old budgets split equally over the new stubs.
    """
    graph = weight.graph
    if e_LK == 1 and f == 1:
        return weight
    qf = graph.q ** f
    w = weight
    for e in [x.id for x in graph.graph.edges if x.id in graph.core_edges]:
        if e_LK == 1:
            break
        cur = e
        for i in range(1, e_LK):
            w = insert_vertex_extend(w, cur, qf - 1, vertex=f"{e}^{i}", first=f"{e}/{i}",
                                     second=f"{e}/{i + 1}", stem_stubs=qf)
            cur = f"{e}/{i + 1}"
    base = field_extension(graph, e_LK, f)
    # same explicit graph as w, with auto stub counts at the new valence
    final = ZhyvotGraph(w.graph.graph, w.graph.core_vertices, w.graph.core_edges, qf, None,
                        graph.depth, graph.name)
    assert set(base.graph.vertices) <= set(final.graph.vertices)
    out = SpecialWeight(final, w.lam_value, w.n, w.g, None, w.approximate)
    bad = out.residuals()
    if bad:
        raise ZhyvotError(f"field extension left residuals at {sorted(bad)}")
    return out


# ---------------------------------------------------------------------------
# inhomogeneous weights


@dataclass
class InhomWeight:
    """(G, lambda, chi) on the truncated expansion."""

    graph: ZhyvotGraph
    G: dict
    lam: dict
    chi: dict

    def residual(self, v):
        X = self.graph.expanded
        total = self.G[v]
        for e in X.out_edges(v):
            total = total + self.chi[e.id] - self.lam[e.id] * self.G[e.dst]
        return total

    def residuals(self) -> dict:
        X = self.graph.expanded
        out = {}
        for v in X.vertices:
            if X.is_complete(v):
                r = self.residual(v)
                if not _is_zero(r):
                    out[v] = r
        return out

    def negative_chi(self) -> list[str]:
        return sorted(e for e, x in self.chi.items() if not _nonneg(x))

    def negative_G(self) -> list[str]:
        return sorted(v for v, x in self.G.items() if not _nonneg(x))

    @property
    def feasible(self) -> bool:
        return not self.negative_chi() and not self.negative_G()


def _alpha_values(weight: GraphWeight, alpha, choice: str, c=None) -> dict:
    X = weight.expanded
    g = weight.values()
    if choice == "full":
        return dict(g)
    if choice == "scaled":
        if c is None or not (0 <= c <= 1):
            raise ValueError("scaled choice needs 0 <= c <= 1")
        return {v: c * x for v, x in g.items()}
    if choice == "flow":
        out = {}
        for v in X.vertices:
            s = Fraction(0)
            for e in X.out_edges(v):
                if e.id in weight.graph.core_edges:
                    s = s + weight.lam(e.id) * g[e.dst]
            out[v] = s
        return out
    if choice == "indicator":
        return {v: (x if v in weight.graph.core_vertices else Fraction(0)) for v, x in g.items()}
    if choice == "custom":
        if alpha is None:
            raise ValueError("custom choice needs alpha")
        if callable(alpha):
            return {v: alpha(v) for v in X.vertices}
        return {v: alpha.get(v, Fraction(0)) for v in X.vertices}
    raise ValueError(f"unknown alpha choice {choice!r}")


def inhom_from_alpha(weight: GraphWeight, alpha=None, choice: str = "custom", c=None) -> InhomWeight:
    """G = g - alpha and chi(e) = alpha(s(e))/N_e - lambda(e) alpha(r(e)).

    The result always satisfies the inhomogeneous equation; ``feasible``
    tells whether chi (and G) are non-negative.
    """
    if alpha is not None and choice != "custom":
        raise ValueError("pass alpha only with choice='custom'")
    X = weight.expanded
    g = weight.values()
    a = _alpha_values(weight, alpha, choice, c)
    for v in X.vertices:
        if not _nonneg(a[v]) or not _nonneg(g[v] - a[v]):
            raise ValueError(f"alpha must satisfy 0 <= alpha <= g; fails at {v!r}")
    lam = {e.id: weight.lam(e.id) for e in X.edges}
    chi = {e.id: a[e.src] / X.out_degree(e.src) - lam[e.id] * a[e.dst] for e in X.edges}
    out = InhomWeight(weight.graph, {v: g[v] - a[v] for v in X.vertices}, lam, chi)
    bad = out.residuals()
    if bad:
        raise ZhyvotError(f"inhomogeneous equation fails at {sorted(bad)[:5]}")
    return out


def _require_adapted(weight):
    if not isinstance(weight, SpecialWeight) or not weight.is_adapted():
        raise StructuralError("needs a special weight with n_e = 1 exactly on the zhyvot")


def alpha_k(weight: SpecialWeight, k: int, graph: ZhyvotGraph | None = None) -> dict:
    """alpha_k(v) = lambda^k * sum of g(r(mu)) over paths from v of σ-length k ending with an edge of M.

    alpha_0 = g.  Values are returned on every vertex of the expansion.
    """
    _require_adapted(weight)
    graph = graph or weight.graph
    if k < 0:
        raise ValueError("k must be non-negative")
    if graph.depth < k:
        raise DepthError(f"alpha_{k} needs expansion depth >= {k}, have {graph.depth}")
    X = graph.expanded
    if k == 0:
        return weight.values()
    lam_k = weight.lam_value ** k
    out = {}
    for v in X.vertices:
        if v not in graph.core_vertices:
            out[v] = Fraction(0)
            continue
        s = Fraction(0)
        for p in enumerate_paths(graph, v, sigma=k):
            s = s + weight.value(p.target)
        out[v] = lam_k * s
    return out


def inhom_chain(weight: SpecialWeight, k: int, graph: ZhyvotGraph | None = None) -> InhomWeight:
    """(g - alpha_k, lambda, chi_k) with chi_k(e) = lambda(e)(alpha_{k-1}(r(e)) - alpha_k(r(e))).

    At k = 1 the level-0 term is g restricted to the zhyvot; with the
    unrestricted alpha_0 = g the equation fails at every vertex that
    feeds a stub tree.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    _require_adapted(weight)
    graph = graph or weight.graph
    X = graph.expanded
    ak = alpha_k(weight, k, graph)
    if k == 1:
        prev = {v: (weight.value(v) if v in graph.core_vertices else Fraction(0)) for v in X.vertices}
    else:
        prev = alpha_k(weight, k - 1, graph)
    lam = {e.id: weight.lam(e.id) for e in X.edges}
    chi = {e.id: lam[e.id] * (prev[e.dst] - ak[e.dst]) for e in X.edges}
    G = {v: weight.value(v) - ak[v] for v in X.vertices}
    out = InhomWeight(graph, G, lam, chi)
    bad = out.residuals()
    if bad:
        raise ZhyvotError(f"inhomogeneous residuals at {sorted(bad)[:5]}")
    return out


# ---------------------------------------------------------------------------
# virtual weights


@dataclass
class VirtualWeight:
    """Signed solution Ghat of the averaging equation, values on the expansion."""

    graph: ZhyvotGraph
    Ghat: dict
    lam: dict
    witnesses: tuple | None = None  # (g_plus, g_minus, chi)

    def residual(self, v):
        X = self.graph.expanded
        total = self.Ghat[v]
        for e in X.out_edges(v):
            total = total - self.lam[e.id] * self.Ghat[e.dst]
        return total

    def residuals(self) -> dict:
        X = self.graph.expanded
        return {v: r for v in X.vertices if X.is_complete(v) and not _is_zero(r := self.residual(v))}

    def is_integral(self) -> bool:
        return all(isinstance(x, (int, Fraction)) and Fraction(x).denominator == 1 for x in self.Ghat.values())

    def shifted(self, c) -> "VirtualWeight":
        wit = None
        if self.witnesses is not None:
            gp, gm, chi = self.witnesses
            wit = ({v: x + c for v, x in gp.items()}, gm, chi)
        return VirtualWeight(self.graph, {v: x + c for v, x in self.Ghat.items()}, self.lam, wit)


def virtual_weight(graph: ZhyvotGraph, values: Mapping) -> VirtualWeight:
    """Virtual weight from values on the explicit vertices, constant down every stub tree.

    Stub roots take the value of their anchor unless ``values`` names them.
    """
    X = graph.expanded
    G = {}
    for v in X.vertices:
        if v in values:
            G[v] = Fraction(values[v])
        elif X.level[v] >= 1:
            root = X.anchor[v] + v[len(X.anchor[v]):].split(".")[0]
            G[v] = Fraction(values.get(root, values[X.anchor[v]]))
        else:
            raise StructuralError(f"no value for {v!r}")
    lam = {e.id: Fraction(1, X.out_degree(e.src)) for e in X.edges}
    return VirtualWeight(graph, G, lam)


def _alpha_for(weight: GraphWeight, alpha):
    if alpha is None:
        return _alpha_values(weight, None, "full")
    if isinstance(alpha, str):
        return _alpha_values(weight, None, alpha)
    return _alpha_values(weight, alpha, "custom")


def virtual_from_two(w1: GraphWeight, w2: GraphWeight, alpha1=None, alpha2=None) -> VirtualWeight:
    """Ghat = (g1 - alpha) - (g2 - alpha) with alpha = min(alpha1, alpha2).

    Both weights must use lambda(e) = 1/N_e; alphas are vertex maps,
    callables or one of the choice names of :func:`inhom_from_alpha`.
    """
    if w1.graph is not w2.graph and w1.graph != w2.graph:
        raise StructuralError("weights live on different graphs")
    if not (w1.has_averaging_lambda() and w2.has_averaging_lambda()):
        raise StructuralError("mismatched lambda: both weights need lambda(e) = 1/N_e")
    X = w1.expanded
    a1, a2 = _alpha_for(w1, alpha1), _alpha_for(w2, alpha2)
    g1, g2 = w1.values(), w2.values()
    for v in X.vertices:
        for a, g in ((a1, g1), (a2, g2)):
            if not _nonneg(a[v]) or not _nonneg(g[v] - a[v]):
                raise ValueError(f"alpha must satisfy 0 <= alpha <= g; fails at {v!r}")
    a = {v: min(a1[v], a2[v]) for v in X.vertices}
    lam = {e.id: w1.lam(e.id) for e in X.edges}
    chi = {e.id: (a[e.src] - a[e.dst]) / X.out_degree(e.src) for e in X.edges}
    G1 = {v: g1[v] - a[v] for v in X.vertices}
    G2 = {v: g2[v] - a[v] for v in X.vertices}
    for Gi in (G1, G2):
        bad = InhomWeight(w1.graph, Gi, lam, chi).residuals()
        if bad:
            raise ZhyvotError(f"witness fails the inhomogeneous equation at {sorted(bad)[:5]}")
    out = VirtualWeight(w1.graph, {v: G1[v] - G2[v] for v in X.vertices}, lam, (G1, G2, chi))
    if out.residuals():
        raise ZhyvotError("virtual weight fails the homogeneous equation")
    return out


def integerize(v: VirtualWeight) -> VirtualWeight:
    """Scale by the LCM of all denominators; needs Ghat constant inside each stub tree."""
    X = v.graph.expanded
    for e in X.edges:
        if X.level[e.src] >= 1 and v.Ghat[e.src] != v.Ghat[e.dst]:
            raise ZhyvotError(f"tree extension is not constant along {e.id!r}")
    vals = list(v.Ghat.values())
    if v.witnesses is not None:
        for part in v.witnesses:
            vals.extend(part.values())
    if any(isinstance(x, (QuadraticNumber, float)) for x in vals):
        raise ZhyvotError("integerize needs rational values")
    L = 1
    for x in vals:
        L = math.lcm(L, Fraction(x).denominator)
    scale = Fraction(L)
    wit = None
    if v.witnesses is not None:
        wit = tuple({k: x * scale for k, x in part.items()} for part in v.witnesses)
    out = VirtualWeight(v.graph, {k: x * scale for k, x in v.Ghat.items()}, v.lam, wit)
    out.scale = L
    return out
