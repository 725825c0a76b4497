"""Currents on the expanded graph, boundary pairings, periods and theta descriptors.

A current assigns a value to every edge of the truncated expansion, with
mu(reversed e) = -mu(e) implicit.  Two conservation laws occur:

``star``  sum over the whole undirected star at v (out-edges count mu(e),
          in-edges count -mu(e)) vanishes; this is the law of genuine
          currents on the tree and the one behind boundary pairings.
``out``   sum of mu(e) over edges leaving v vanishes; this is what the
          averaging equation Ghat(v) = sum Ghat(r(e))/N_e delivers for
          mu = dGhat.

Conservation is only required at vertices whose star is complete, i.e.
away from the truncation boundary.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import StructuralError, ZhyvotError
from .graph import Cycle, ZhyvotGraph, cycle_basis, spanning_tree, tree_path
from .linalg import rref
from .weights import GraphWeight, VirtualWeight, _is_zero

LAWS = ("star", "out")


@dataclass
class Current:
    graph: ZhyvotGraph
    mu: dict
    law: str = "star"

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"unknown conservation law {self.law!r}")

    @classmethod
    def from_values(cls, graph: ZhyvotGraph, values: Mapping, law: str = "star") -> "Current":
        X = graph.expanded
        for e in values:
            if not X.has_edge(e):
                raise StructuralError(f"unknown edge {e!r}")
        return cls(graph, {e.id: Fraction(values.get(e.id, 0)) for e in X.edges}, law)

    def value(self, eid: str, sign: int = 1):
        return sign * self.mu[eid]

    def __add__(self, other: "Current") -> "Current":
        return Current(self.graph, {e: x + other.mu[e] for e, x in self.mu.items()},
                       self.law if self.law == other.law else "star")

    def scaled(self, c) -> "Current":
        return Current(self.graph, {e: c * x for e, x in self.mu.items()}, self.law)

    def is_integral(self) -> bool:
        return all(Fraction(x).denominator == 1 for x in self.mu.values())

    def support(self) -> list[str]:
        return sorted(e for e, x in self.mu.items() if x != 0)


@dataclass
class CurrentReport:
    law: str
    residuals: dict

    @property
    def passed(self) -> bool:
        return not self.residuals


def _star_complete(X, v) -> bool:
    return not X.is_boundary(v) and X.is_complete(v)


def verify_current(graph: ZhyvotGraph, mu, law: str | None = None) -> CurrentReport:
    """Per-vertex conservation residuals under ``law`` (default: the current's own)."""
    if isinstance(mu, Current):
        law = law or mu.law
        values = mu.mu
    else:
        law = law or "star"
        values = mu
    X = graph.expanded
    res = {}
    for v in X.vertices:
        if not _star_complete(X, v):
            continue
        total = Fraction(0)
        try:
            for e in X.out_edges(v):
                total = total + values[e.id]
            if law == "star":
                for e in X.in_edges(v):
                    total = total - values[e.id]
        except KeyError as exc:
            raise StructuralError(f"current has no value on edge {exc.args[0]!r}") from None
        if not _is_zero(total):
            res[v] = total
    return CurrentReport(law, res)


@dataclass
class WeightCurrentReport:
    current: Current
    out_residuals: dict  # sum over s(e)=v
    reversal_applicable: bool  # lambda(e) = 1/N_(reversed e) on every edge
    in_residuals: dict | None  # sum over r(e)=v, only when the reversal clause applies

    @property
    def conserved(self) -> bool:
        return not self.out_residuals

    @property
    def full_current(self) -> bool:
        return self.reversal_applicable and not self.in_residuals


def current_from_weight(weight: GraphWeight) -> WeightCurrentReport:
    """mu(e) = lambda(e) g(r(e)) - g(s(e))/N_e, with both conservation checks."""
    X = weight.expanded
    mu = {e.id: weight.lam(e.id) * weight.value(e.dst) - weight.value(e.src) / X.out_degree(e.src)
          for e in X.edges}
    cur = Current(weight.graph, mu, "out")
    out_res = verify_current(weight.graph, cur, "out").residuals
    reversal = all(weight.lam(e.id) == Fraction(1, X.out_degree(e.dst)) for e in X.edges)
    in_res = None
    if reversal:
        in_res = {}
        for v in X.vertices:
            if not _star_complete(X, v) or not X.in_edges(v):
                continue
            total = sum((mu[e.id] for e in X.in_edges(v)), Fraction(0))
            if not _is_zero(total):
                in_res[v] = total
    return WeightCurrentReport(cur, out_res, reversal, in_res)


def current_from_virtual(V: VirtualWeight) -> Current:
    """mu(e) = Ghat(r(e)) - Ghat(s(e)); conserved in the ``out`` sense by the averaging equation."""
    bad = V.residuals()
    if bad:
        raise ZhyvotError(f"Ghat fails the averaging equation at {sorted(bad)[:5]}")
    X = V.graph.expanded
    cur = Current(V.graph, {e.id: V.Ghat[e.dst] - V.Ghat[e.src] for e in X.edges}, "out")
    rep = verify_current(V.graph, cur)
    if not rep.passed:
        raise AssertionError(f"dGhat not conserved at {sorted(rep.residuals)[:5]}")
    return cur


def walk_period(mu, steps: Iterable) -> object:
    values = mu.mu if isinstance(mu, Current) else mu
    return sum((s * values[e] for e, s in steps), Fraction(0))


def _full_tree(graph: ZhyvotGraph):
    """Spanning tree of the expansion: the core BFS tree plus every edge reaching a new vertex."""
    X = graph.expanded
    core = graph.core
    root, _, core_tree = spanning_tree(core)
    tree = set(core_tree)
    seen = set(graph.core_vertices)
    queue = deque(sorted(graph.core_vertices))
    while queue:
        x = queue.popleft()
        for e in X.out_edges(x):
            if e.dst not in seen:
                seen.add(e.dst)
                tree.add(e.id)
                queue.append(e.dst)
    return root, tree


@dataclass
class CurrentIntegration:
    g_plus: dict
    g_minus: dict
    cycles: list  # Cycle objects of the core basis
    periods: list  # period of mu around each cycle
    base: str

    def difference(self) -> dict:
        return {v: self.g_plus[v] - self.g_minus[v] for v in self.g_plus}


def weight_from_current(mu: Current, graph: ZhyvotGraph | None = None, base: str | None = None,
                        integer: bool = True) -> CurrentIntegration:
    """Integrate chi+ = max(mu, 0) and chi- = max(-mu, 0) from ``base`` along the spanning tree."""
    graph = graph or mu.graph
    if integer and not mu.is_integral():
        raise ZhyvotError("weight_from_current expects an integer current")
    X = graph.expanded
    root, tree = _full_tree(graph)
    base = base or root
    if not X.has_vertex(base):
        raise StructuralError(f"unknown vertex {base!r}")
    adj = {v: [] for v in X.vertices}
    for eid in tree:
        e = X.edge(eid)
        adj[e.src].append((e.dst, eid, 1))
        adj[e.dst].append((e.src, eid, -1))
    gp, gm = {base: Fraction(0)}, {base: Fraction(0)}
    queue = deque([base])
    while queue:
        x = queue.popleft()
        for y, eid, s in sorted(adj[x], key=lambda t: (t[1], t[2])):
            if y in gp:
                continue
            m = s * mu.mu[eid]
            gp[y] = gp[x] + max(m, 0)
            gm[y] = gm[x] + max(-m, 0)
            queue.append(y)
    cycles = cycle_basis(graph.core)
    periods = [walk_period(mu, c.steps) for c in cycles]
    return CurrentIntegration(gp, gm, cycles, periods, base)


# ---------------------------------------------------------------------------
# cylinder functions


@dataclass(frozen=True)
class CylinderFunction:
    """sum of a_i chi_V(e_i); each e_i is an oriented edge (edge id, +1 | -1)."""

    terms: tuple  # ((edge id, sign), coefficient), merged and sorted

    @classmethod
    def of(cls, items: Iterable) -> "CylinderFunction":
        acc = {}
        for (eid, s), a in items:
            if s not in (1, -1):
                raise ValueError("orientation must be +1 or -1")
            acc[(eid, s)] = acc.get((eid, s), 0) + a
        return cls(tuple(sorted((k, a) for k, a in acc.items() if a != 0)))

    def __iter__(self):
        return iter(self.terms)


def k0_pairing(mu: Current, fn: CylinderFunction) -> object:
    """sum a_i mu(e_i), with mu on a reversed edge read as -mu."""
    total = Fraction(0)
    for (eid, s), a in fn:
        if eid not in mu.mu:
            raise StructuralError(f"unknown edge {eid!r}")
        total = total + a * s * mu.mu[eid]
    return total


def _oriented_end(X, eid, s):
    e = X.edge(eid)
    return e.dst if s == 1 else e.src


def star_function(graph: ZhyvotGraph, v: str) -> CylinderFunction:
    """chi of the whole boundary seen from v: every oriented edge leaving v."""
    X = graph.expanded
    items = [((e.id, 1), 1) for e in X.out_edges(v)] + [((e.id, -1), 1) for e in X.in_edges(v)]
    return CylinderFunction.of(items)


def refine(graph: ZhyvotGraph, fn: CylinderFunction, term: int) -> CylinderFunction:
    """Replace chi_V(e) by the sum over its continuations e' (s(e') = r(e), e' != reversed e)."""
    X = graph.expanded
    (eid, s), a = fn.terms[term]
    x = _oriented_end(X, eid, s)
    if not _star_complete(X, x):
        raise ZhyvotError(f"cannot refine past {x!r}: star cut by truncation")
    rest = [t for i, t in enumerate(fn.terms) if i != term]
    for e in X.out_edges(x):
        if (e.id, 1) != (eid, -s):
            rest.append(((e.id, 1), a))
    for e in X.in_edges(x):
        if (e.id, -1) != (eid, -s):
            rest.append(((e.id, -1), a))
    return CylinderFunction.of(rest)


def can_refine(graph: ZhyvotGraph, fn: CylinderFunction, term: int) -> bool:
    X = graph.expanded
    (eid, s), _ = fn.terms[term]
    return _star_complete(X, _oriented_end(X, eid, s))


# ---------------------------------------------------------------------------
# current space


def cycle_current(graph: ZhyvotGraph, cycle: Cycle) -> Current:
    vals = {}
    for e, s in cycle.steps:
        vals[e] = vals.get(e, 0) + s
    return Current.from_values(graph, vals, "star")


def current_space_rank(graph: ZhyvotGraph) -> tuple[int, list[Current]]:
    """Rank |E_M| - |V_M| + 1 and the unit cycle currents of the core cycle basis."""
    cycles = cycle_basis(graph.core)
    basis = [cycle_current(graph, c) for c in cycles]
    for c, b in zip(cycles, basis):
        rep = verify_current(graph, b, "star")
        if not rep.passed:
            raise AssertionError(f"cycle current of {c} is not conserved")
    rank = len(graph.core_edges) - len(graph.core_vertices) + 1
    if rank != len(basis):
        raise AssertionError("cycle basis size differs from |E| - |V| + 1")
    return rank, basis


def decompose(mu: Current, basis: list[Current]) -> list:
    """Exact coefficients c with mu = sum c_i basis_i; raises if mu is not in the span."""
    edges = sorted(mu.mu)
    cols = [[b.mu[e] for e in edges] for b in basis]
    rows = [[cols[j][i] for j in range(len(basis))] + [mu.mu[e]] for i, e in enumerate(edges)]
    m, pivots = rref(rows)
    if len(basis) in pivots:
        raise ZhyvotError("current is not in the span of the basis")
    coeffs = [Fraction(0)] * len(basis)
    for i, pc in enumerate(pivots):
        coeffs[pc] = m[i][-1]
    return coeffs


# ---------------------------------------------------------------------------
# theta descriptors


def _ray(graph: ZhyvotGraph, v: str) -> list[str]:
    """Edges of the leftmost ray from explicit vertex v down to the truncation boundary."""
    X = graph.expanded
    if graph.stubs.get(v, 0) == 0 or graph.depth == 0:
        return []
    out, x = [], f"{v}~0"
    while True:
        out.append(">" + x)
        if X.is_boundary(x):
            return out
        x = x + ".0"


def period_current(graph: ZhyvotGraph, periods: list) -> Current:
    """A star-conserved current whose periods on the core cycle basis are ``periods``.

    The value c_i sits on the non-tree edge x -> y of cycle i and is fed in
    from the boundary along a ray at x and drained along a ray at y.  If
    some endpoint has no stub tree, falls back to an integer combination of
    cycle currents when one exists.
    """
    cycles = cycle_basis(graph.core)
    if len(periods) != len(cycles):
        raise ValueError(f"expected {len(periods)} == {len(cycles)} periods")
    X = graph.expanded
    vals = {e.id: Fraction(0) for e in X.edges}
    feasible = True
    for c, p in zip(cycles, periods):
        if p == 0:
            continue
        eid = next(e for e, s in c.steps if s == 1 and e not in spanning_tree(graph.core)[2])
        e = X.edge(eid)
        vals[eid] += p
        if e.src == e.dst:
            continue
        rin, rout = _ray(graph, e.src), _ray(graph, e.dst)
        if not rin or not rout:
            feasible = False
            break
        for r in rin:
            vals[r] -= p
        for r in rout:
            vals[r] += p
    if feasible:
        return Current(graph, vals, "star")
    basis = [cycle_current(graph, c) for c in cycles]
    P = [[walk_period(b, c.steps) for b in basis] for c in cycles]
    rows = [P[i] + [Fraction(periods[i])] for i in range(len(cycles))]
    m, pivots = rref(rows)
    if len(cycles) in pivots or len(pivots) < len(cycles):
        raise ZhyvotError("periods cannot be realized by a conserved current on this graph")
    coeffs = [m[i][-1] for i in range(len(cycles))]
    if any(Fraction(a).denominator != 1 for a in coeffs):
        raise ZhyvotError("periods need stub trees at the cycle endpoints or a unimodular cycle lattice")
    out = Current(graph, {e.id: Fraction(0) for e in X.edges}, "star")
    for a, b in zip(coeffs, basis):
        out = out + b.scaled(a)
    return out


def loop_at(graph: ZhyvotGraph, cycle: Cycle, root: str | None = None) -> tuple:
    """The cycle conjugated to a closed walk at the spanning-tree root."""
    core = graph.core
    r, parent, _ = spanning_tree(core)
    to_base = tree_path(core, parent, cycle.base)
    back = [(e, -s) for e, s in reversed(to_base)]
    return tuple(to_base) + tuple(cycle.steps) + tuple(back)


@dataclass
class ThetaDescriptor:
    Ghat: VirtualWeight | None
    mu: Current
    mu_weight: Current
    mu_periods: Current
    cycles: list
    periods: list
    base: str

    def equivalent(self, other: "ThetaDescriptor") -> bool:
        """Equal currents, decided edge by edge through single-edge cylinder functions."""
        if set(self.mu.mu) != set(other.mu.mu):
            return False
        return all(k0_pairing(self.mu, CylinderFunction.of([((e, 1), 1)]))
                   == k0_pairing(other.mu, CylinderFunction.of([((e, 1), 1)])) for e in self.mu.mu)


def build_theta(Ghat: VirtualWeight | None, c_valuations=None, graph: ZhyvotGraph | None = None,
                base: str | None = None) -> ThetaDescriptor:
    """Package (Ghat, mu, periods).

    mu = dGhat + (a star-conserved current carrying the prescribed periods);
    without ``c_valuations`` the periods are those of dGhat, hence zero.
    """
    graph = graph or Ghat.graph
    X = graph.expanded
    cycles = cycle_basis(graph.core)
    if Ghat is not None:
        if not Ghat.is_integral():
            raise ZhyvotError("Ghat must be integer valued; integerize first")
        mu_w = current_from_virtual(Ghat)
    else:
        mu_w = Current(graph, {e.id: Fraction(0) for e in X.edges}, "out")
    if c_valuations is None:
        mu_p = Current(graph, {e.id: Fraction(0) for e in X.edges}, "star")
        wanted = None
    else:
        if isinstance(c_valuations, Mapping):
            wanted = [int(c_valuations.get(i, 0)) for i in range(len(cycles))]
        else:
            wanted = [int(x) for x in c_valuations]
        mu_p = period_current(graph, wanted)
    mu = Current(graph, {e: mu_w.mu[e] + mu_p.mu[e] for e in mu_w.mu}, "star")
    periods = [walk_period(mu, c.steps) for c in cycles]
    if wanted is not None and periods != wanted:
        raise ZhyvotError(f"period/current mismatch: wanted {wanted}, got {periods}")
    if not verify_current(graph, mu_w, "out").passed or not verify_current(graph, mu_p, "star").passed:
        raise ZhyvotError("current components are not conserved")
    # cocycle additivity on concatenated loops at the root
    loops = [loop_at(graph, c) for c in cycles]
    for i, a in enumerate(loops):
        for j, b in enumerate(loops):
            if walk_period(mu, a + b) != periods[i] + periods[j]:
                raise AssertionError("periods are not additive under concatenation")
    root = spanning_tree(graph.core)[0]
    return ThetaDescriptor(Ghat, mu, mu_w, mu_p, cycles, periods, base or root)
