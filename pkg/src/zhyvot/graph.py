"""Directed graphs with a zhyvot, their outward tree expansions, paths and surgery.

A :class:`ZhyvotGraph` is a finite explicit graph (the zhyvot ``M`` plus any
explicitly listed non-core vertices) together with a count of homogeneous
outward trees ("stubs") hanging off each explicit vertex.  The infinite
graph is never built; :meth:`ZhyvotGraph.expanded` grows the trees down to
a fixed depth and tags the last layer as ``boundary``.

Generated tree vertices are named ``<anchor>~<j>`` for the root of stub
``j`` at ``anchor`` and ``<parent>.<c>`` below that; the tree edge ending
at ``x`` is named ``>x``.  Explicit ids may not contain ``~`` or whitespace.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple

from .errors import (
    CompositionError,
    DepthError,
    DisconnectedError,
    ResourceLimitError,
    StructuralError,
    ZhyvotAxiomError,
    ZhyvotError,
)

MAX_PATH_LENGTH = 64
MAX_PATHS = 1_000_000


class Edge(NamedTuple):
    id: str
    src: str
    dst: str


def _check_id(x: str, what: str):
    if not isinstance(x, str) or not x or any(ch.isspace() for ch in x) or "~" in x:
        raise StructuralError(f"invalid {what} id {x!r}")


class OrientedGraph:
    """Finite directed multigraph; self-loops and parallel edges allowed.

    Vertices and edges keep their declaration order (used for user-facing
    lists such as the ``n`` vector of a weight); every iteration that affects
    results goes through the id-sorted accessors.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable):
        vs = list(dict.fromkeys(vertices))
        es = [Edge(*e) for e in edges]
        vset = set(vs)
        seen = set()
        for e in es:
            if e.id in seen:
                raise StructuralError(f"duplicate edge id {e.id!r}")
            seen.add(e.id)
            for end in (e.src, e.dst):
                if end not in vset:
                    raise StructuralError(f"edge {e.id!r} references unknown vertex {end!r}")
        self._vertices = tuple(vs)
        self._edges = tuple(es)
        self._by_id = {e.id: e for e in es}
        out = {v: [] for v in vs}
        inc = {v: [] for v in vs}
        for e in sorted(es, key=lambda e: e.id):
            out[e.src].append(e)
            inc[e.dst].append(e)
        self._out = {v: tuple(x) for v, x in out.items()}
        self._in = {v: tuple(x) for v, x in inc.items()}

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    def sorted_vertices(self) -> list[str]:
        return sorted(self._vertices)

    def has_vertex(self, v) -> bool:
        return v in self._out

    def has_edge(self, e) -> bool:
        return e in self._by_id

    def edge(self, eid: str) -> Edge:
        try:
            return self._by_id[eid]
        except KeyError:
            raise StructuralError(f"unknown edge {eid!r}") from None

    def out_edges(self, v) -> tuple[Edge, ...]:
        return self._out[v]

    def in_edges(self, v) -> tuple[Edge, ...]:
        return self._in[v]

    def valence(self, v) -> int:
        """Undirected valence; a loop counts twice."""
        return len(self._out[v]) + len(self._in[v])

    def subgraph(self, vertices, edges) -> "OrientedGraph":
        vs = [v for v in self._vertices if v in vertices]
        es = [e for e in self._edges if e.id in edges]
        return OrientedGraph(vs, es)

    def components(self) -> list[list[str]]:
        """Weakly connected components, each sorted, listed by smallest id."""
        seen, comps = set(), []
        for v in self.sorted_vertices():
            if v in seen:
                continue
            comp, stack = [], [v]
            seen.add(v)
            while stack:
                x = stack.pop()
                comp.append(x)
                for e in self._out[x] + self._in[x]:
                    y = e.dst if e.src == x else e.src
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def __eq__(self, other):
        if not isinstance(other, OrientedGraph):
            return NotImplemented
        return set(self._vertices) == set(other._vertices) and set(self._edges) == set(other._edges)

    def __hash__(self):
        return hash((frozenset(self._vertices), frozenset(self._edges)))

    def __repr__(self):
        return f"OrientedGraph({len(self._vertices)} vertices, {len(self._edges)} edges)"


@dataclass(frozen=True)
class ValidationReport:
    checks: dict  # axiom name -> (passed, detail)

    @property
    def ok(self) -> bool:
        return all(passed for passed, _ in self.checks.values())

    def failures(self) -> dict:
        return {k: d for k, (p, d) in self.checks.items() if not p}

    def __str__(self):
        lines = []
        for name, (passed, detail) in self.checks.items():
            lines.append(f"{name}: {'pass' if passed else 'FAIL'}" + (f" ({detail})" if detail else ""))
        return "\n".join(lines)


def validate_zhyvot(graph: OrientedGraph, core_vertices, core_edges) -> ValidationReport:
    """Check the zhyvot axioms for ``M = (core_vertices, core_edges)`` inside ``graph``."""
    cv, ce = set(core_vertices), set(core_edges)
    for v in cv:
        if not graph.has_vertex(v):
            raise StructuralError(f"core vertex {v!r} is not in the graph")
    for eid in ce:
        e = graph.edge(eid)
        if e.src not in cv or e.dst not in cv:
            raise StructuralError(f"core edge {eid!r} leaves the core vertex set")

    checks = {"locally_finite": (True, "")}
    sources = sorted(v for v in cv if not any(e.id in ce for e in graph.in_edges(v)))
    checks["core_no_sources"] = (
        not sources and bool(cv),
        "empty core" if not cv else ("sources: " + ", ".join(sources) if sources else ""),
    )
    reach, stack = set(cv), list(cv)
    while stack:
        x = stack.pop()
        for e in graph.out_edges(x):
            if e.dst not in reach:
                reach.add(e.dst)
                stack.append(e.dst)
    missing = sorted(set(graph.vertices) - reach)
    checks["downstream_of_core"] = (not missing, "unreachable: " + ", ".join(missing) if missing else "")
    reentry = sorted(e.id for e in graph.edges if e.src not in cv and e.dst in cv)
    checks["no_reentry"] = (not reentry, "edges into core from outside: " + ", ".join(reentry) if reentry else "")
    return ValidationReport(checks)


@dataclass(frozen=True)
class Path:
    """A path in an expanded graph; length-0 paths are vertices."""

    source: str
    target: str
    edges: tuple[str, ...] = ()

    @classmethod
    def vertex(cls, v: str) -> "Path":
        return cls(v, v, ())

    def __len__(self):
        return len(self.edges)

    def is_vertex(self) -> bool:
        return not self.edges

    def is_prefix_of(self, other: "Path") -> bool:
        return (
            self.source == other.source
            and len(self.edges) <= len(other.edges)
            and other.edges[: len(self.edges)] == self.edges
        )

    def __repr__(self):
        if not self.edges:
            return f"Path({self.source})"
        return f"Path({'.'.join(self.edges)})"


class ExpandedGraph(OrientedGraph):
    """Depth-truncated expansion with per-vertex tags."""

    def __init__(self, vertices, edges, kind, level, anchor, core_vertices, core_edges, q, fanout):
        super().__init__(vertices, edges)
        self.kind = kind  # vertex -> "core" | "explicit" | "tree" | "boundary"
        self.level = level  # vertex -> depth below its anchor (0 for explicit vertices)
        self.anchor = anchor  # vertex -> explicit vertex the tree hangs from
        self.core_vertices = frozenset(core_vertices)
        self.core_edges = frozenset(core_edges)
        self.q = q
        self._fanout = fanout  # explicit vertex -> full out-degree in the infinite graph

    def is_boundary(self, v) -> bool:
        return self.kind[v] == "boundary"

    def is_tree(self, v) -> bool:
        return self.kind[v] in ("tree", "boundary")

    def out_degree(self, v) -> int:
        """Number of edges leaving ``v`` in the untruncated graph (N_e for s(e)=v)."""
        if v in self._fanout:
            return self._fanout[v]
        return self.q

    def is_complete(self, v) -> bool:
        """True when every edge leaving ``v`` in the infinite graph is present."""
        return len(self.out_edges(v)) == self.out_degree(v)

    def path(self, edge_ids: Iterable[str], source: str | None = None) -> Path:
        ids = tuple(edge_ids)
        if not ids:
            if source is None or not self.has_vertex(source):
                raise CompositionError(f"length-0 path needs a vertex, got {source!r}")
            return Path.vertex(source)
        es = [self.edge(i) for i in ids]
        for a, b in zip(es, es[1:]):
            if a.dst != b.src:
                raise CompositionError(f"edges {a.id!r} and {b.id!r} do not compose")
        if source is not None and source != es[0].src:
            raise CompositionError(f"path does not start at {source!r}")
        return Path(es[0].src, es[-1].dst, ids)

    def check_path(self, p: Path) -> Path:
        if not self.has_vertex(p.source):
            raise CompositionError(f"unknown vertex {p.source!r}")
        q = self.path(p.edges, p.source)
        if q.target != p.target:
            raise CompositionError(f"{p!r} has wrong range")
        return p

    def path_vertices(self, p: Path) -> list[str]:
        return [p.source] + [self.edge(e).dst for e in p.edges]

    def touches_boundary(self, p: Path) -> bool:
        return any(self.is_boundary(v) for v in self.path_vertices(p))


class ZhyvotGraph:
    """Finite explicit graph with zhyvot ``M``, branching ``q``, stubs and depth."""

    def __init__(
        self,
        graph: OrientedGraph,
        core_vertices: Iterable[str] | None = None,
        core_edges: Iterable[str] | None = None,
        q: int = 2,
        stubs: Mapping[str, int] | None = None,
        depth: int = 0,
        name: str | None = None,
    ):
        for v in graph.vertices:
            _check_id(v, "vertex")
        for e in graph.edges:
            _check_id(e.id, "edge")
        if not isinstance(q, int) or q < 2:
            raise StructuralError(f"q must be an integer >= 2, got {q!r}")
        if not isinstance(depth, int) or depth < 0:
            raise StructuralError(f"depth must be a non-negative integer, got {depth!r}")
        self.graph = graph
        self.core_vertices = frozenset(graph.vertices if core_vertices is None else core_vertices)
        if core_edges is None:
            core_edges = [e.id for e in graph.edges if e.src in self.core_vertices and e.dst in self.core_vertices]
        self.core_edges = frozenset(core_edges)
        self.q = q
        self.depth = depth
        self.name = name
        report = validate_zhyvot(graph, self.core_vertices, self.core_edges)
        if not report.ok:
            raise ZhyvotAxiomError("zhyvot conditions fail: " + "; ".join(
                f"{k}: {d}" for k, d in report.failures().items()), report)
        self.report = report
        explicit = dict(stubs or {})
        for v in explicit:
            if not graph.has_vertex(v):
                raise StructuralError(f"stubs given for unknown vertex {v!r}")
        counts = {}
        for v in graph.vertices:
            if v in explicit:
                c = explicit[v]
                if not isinstance(c, int) or c < 0:
                    raise StructuralError(f"stub count at {v!r} must be a non-negative integer")
            else:
                c = (q + 1) - graph.valence(v)
                if c < 0:
                    raise StructuralError(
                        f"vertex {v!r} has valence {graph.valence(v)} > q+1 = {q + 1}; cannot auto-complete stubs")
            counts[v] = c
        self.stubs = counts
        self._explicit_stubs = explicit

    # convenience views
    @cached_property
    def core(self) -> OrientedGraph:
        return self.graph.subgraph(self.core_vertices, self.core_edges)

    def is_core_edge(self, eid) -> bool:
        return eid in self.core_edges

    def is_core_vertex(self, v) -> bool:
        return v in self.core_vertices

    def core_sinks(self) -> set[str]:
        return {v for v in self.core_vertices
                if not any(e.id in self.core_edges for e in self.graph.out_edges(v))}

    def with_depth(self, depth: int) -> "ZhyvotGraph":
        return ZhyvotGraph(self.graph, self.core_vertices, self.core_edges, self.q,
                           self._explicit_stubs, depth, self.name)

    def with_stubs(self, stubs: Mapping[str, int] | None) -> "ZhyvotGraph":
        return ZhyvotGraph(self.graph, self.core_vertices, self.core_edges, self.q, stubs, self.depth, self.name)

    @property
    def explicit_stubs(self) -> dict:
        return dict(self._explicit_stubs)

    def out_degree(self, v) -> int:
        """Out-degree of an explicit vertex in the infinite graph."""
        return len(self.graph.out_edges(v)) + self.stubs[v]

    @cached_property
    def expanded(self) -> ExpandedGraph:
        return _expand(self)

    def __eq__(self, other):
        if not isinstance(other, ZhyvotGraph):
            return NotImplemented
        return (self.graph == other.graph and self.core_vertices == other.core_vertices
                and self.core_edges == other.core_edges and self.q == other.q
                and self.stubs == other.stubs and self.depth == other.depth)

    def __hash__(self):
        return hash((self.graph, self.core_vertices, self.core_edges, self.q, self.depth))

    def __repr__(self):
        label = f"{self.name}, " if self.name else ""
        return (f"ZhyvotGraph({label}{len(self.core_vertices)} core vertices, "
                f"{len(self.core_edges)} core edges, q={self.q}, depth={self.depth})")


def _expand(zg: ZhyvotGraph) -> ExpandedGraph:
    vertices = list(zg.graph.vertices)
    edges = list(zg.graph.edges)
    kind, level, anchor = {}, {}, {}
    for v in vertices:
        kind[v] = "core" if v in zg.core_vertices else "explicit"
        level[v] = 0
        anchor[v] = v
    fanout = {v: zg.out_degree(v) for v in vertices}
    D, q = zg.depth, zg.q
    for v in sorted(zg.graph.vertices):
        if D == 0:
            break
        frontier = []
        for j in range(zg.stubs[v]):
            root = f"{v}~{j}"
            frontier.append((v, root))
        for d in range(1, D + 1):
            nxt = []
            for parent, x in frontier:
                vertices.append(x)
                edges.append(Edge(">" + x, parent, x))
                kind[x] = "boundary" if d == D else "tree"
                level[x] = d
                anchor[x] = v
                if d < D:
                    nxt.extend((x, f"{x}.{c}") for c in range(q))
            frontier = nxt
    return ExpandedGraph(vertices, edges, kind, level, anchor, zg.core_vertices, zg.core_edges, q, fanout)


def expand(graph: ZhyvotGraph) -> ExpandedGraph:
    return graph.expanded


def sigma_length(graph: ZhyvotGraph, path: Path) -> int:
    """Number of edges of ``path`` lying in the zhyvot."""
    graph.expanded.check_path(path)
    return sum(1 for e in path.edges if e in graph.core_edges)


def concat(graph: ZhyvotGraph, a: Path, b: Path) -> Path:
    if a.target != b.source:
        raise CompositionError(f"{a!r} ends at {a.target!r} but {b!r} starts at {b.source!r}")
    return Path(a.source, b.target, a.edges + b.edges)


def enumerate_paths(graph: ZhyvotGraph, source: str, *, sigma: int | None = None,
                    upto: int | None = None, limit: int = MAX_PATHS) -> list[Path]:
    """All paths from ``source`` under one of two constraints.

    ``sigma=k``: σ-length exactly k and (for k >= 1) final edge in M.
    ``upto=k``: |μ| ⪯ k, i.e. length k, or shorter and ending at a sink.
    Output is in lexicographic order of edge ids.
    """
    if (sigma is None) == (upto is None):
        raise ValueError("give exactly one of sigma= or upto=")
    k = sigma if sigma is not None else upto
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > MAX_PATH_LENGTH:
        raise ResourceLimitError(f"k={k} exceeds the configured bound {MAX_PATH_LENGTH}")
    X = graph.expanded
    if not X.has_vertex(source):
        raise StructuralError(f"unknown vertex {source!r}")
    out: list[Path] = []

    def emit(p):
        out.append(p)
        if len(out) > limit:
            raise ResourceLimitError(f"more than {limit} paths")

    if sigma is not None:
        if k == 0:
            return [Path.vertex(source)] if source in graph.core_vertices else []
        # a path ending in M never left M, so only core edges matter
        def walk(v, edges):
            if len(edges) == k:
                emit(Path(source, v, tuple(edges)))
                return
            for e in X.out_edges(v):
                if e.id in graph.core_edges:
                    edges.append(e.id)
                    walk(e.dst, edges)
                    edges.pop()
        if source in graph.core_vertices:
            walk(source, [])
        return out

    def walk_upto(v, edges):
        if len(edges) == k:
            emit(Path(source, v, tuple(edges)))
            return
        if X.is_boundary(v):
            raise DepthError(f"path from {source!r} of length {k} runs past the truncation depth")
        outs = X.out_edges(v)
        if not outs:
            emit(Path(source, v, tuple(edges)))
            return
        for e in outs:
            edges.append(e.id)
            walk_upto(e.dst, edges)
            edges.pop()

    walk_upto(source, [])
    return out


def field_extension(graph: ZhyvotGraph, e_LK: int, f: int) -> ZhyvotGraph:
    """Subdivide every core edge into ``e_LK`` pieces and raise q to q**f.

    Edge ``e`` becomes ``e/1 ... e/e_LK`` through new vertices ``e^1 ... e^(e_LK-1)``;
    with ``e_LK == 1`` edge ids are kept.  Stub counts are recomputed.
    """
    if not isinstance(e_LK, int) or e_LK < 1 or not isinstance(f, int) or f < 1:
        raise ValueError("e_LK and f must be positive integers")
    vertices = list(graph.graph.vertices)
    edges, core_v, core_e = [], set(graph.core_vertices), set()
    for e in graph.graph.edges:
        if e.id not in graph.core_edges or e_LK == 1:
            edges.append(e)
            if e.id in graph.core_edges:
                core_e.add(e.id)
            continue
        chain = [e.src] + [f"{e.id}^{i}" for i in range(1, e_LK)] + [e.dst]
        vertices.extend(chain[1:-1])
        core_v.update(chain[1:-1])
        for i in range(e_LK):
            eid = f"{e.id}/{i + 1}"
            edges.append(Edge(eid, chain[i], chain[i + 1]))
            core_e.add(eid)
    return ZhyvotGraph(OrientedGraph(vertices, edges), core_v, core_e, graph.q ** f, None,
                       graph.depth, graph.name)


def _cycle_graph(n: int):
    vs = [f"v{i}" for i in range(1, n + 1)]
    es = [(f"e{i}", f"v{i}", f"v{i % n + 1}") for i in range(1, n + 1)]
    return OrientedGraph(vs, es)


_MIN_Q = {"genus2_case1": 3, "genus2_case2": 2, "genus2_case3": 2}


def genus_template(name: str, q: int | None = None, *, n: int | None = None, depth: int = 4) -> ZhyvotGraph:
    """Core graphs of the low-genus examples.

    ``genus1`` (size ``n``) is the directed n-cycle v1 -> v2 -> ... -> v1 with
    edges e1..en.  ``genus2_case1`` is one vertex with loops e, f.
    ``genus2_case2`` is the theta graph b: v->w, a: w->v, c: w->v (edges
    declared in the order b, a, c).  ``genus2_case3`` has a loop e at v, an
    edge f: v->w and a loop h at w.  ``q`` defaults to the smallest value
    for which stubs auto-complete.
    """
    if name.startswith("genus1(") and name.endswith(")"):
        n = int(name[7:-1])
        name = "genus1"
    if name == "genus1":
        if n is None or n < 1:
            raise ValueError("genus1 needs a size n >= 1")
        g = _cycle_graph(n)
        label = f"genus1({n})"
        qmin = 2
    elif name == "genus2_case1":
        g = OrientedGraph(["v"], [("e", "v", "v"), ("f", "v", "v")])
        label, qmin = name, 3
    elif name == "genus2_case2":
        g = OrientedGraph(["v", "w"], [("b", "v", "w"), ("a", "w", "v"), ("c", "w", "v")])
        label, qmin = name, 2
    elif name == "genus2_case3":
        g = OrientedGraph(["v", "w"], [("e", "v", "v"), ("f", "v", "w"), ("h", "w", "w")])
        label, qmin = name, 2
    else:
        raise ValueError(f"unknown template {name!r}")
    return ZhyvotGraph(g, q=qmin if q is None else q, depth=depth, name=label)


TEMPLATE_NAMES = ("genus1", "genus2_case1", "genus2_case2", "genus2_case3")


@dataclass(frozen=True)
class Cycle:
    """Closed walk given as (edge id, +1 | -1) steps starting at ``base``."""

    base: str
    steps: tuple[tuple[str, int], ...]

    @property
    def edges(self) -> tuple[str, ...]:
        return tuple(e for e, _ in self.steps)

    def is_directed(self) -> bool:
        return all(s == 1 for _, s in self.steps)

    def as_path(self) -> Path:
        if not self.is_directed():
            raise CompositionError("cycle is not directed")
        return Path(self.base, self.base, self.edges)

    def __len__(self):
        return len(self.steps)


def spanning_tree(core: OrientedGraph) -> tuple[str, dict, set]:
    """BFS tree from the smallest vertex, outgoing edges before incoming, ids ascending.

    Returns (root, parent map vertex -> (edge, sign) step into it, tree edge ids).
    """
    comps = core.components()
    if len(comps) != 1:
        raise DisconnectedError(comps)
    root = comps[0][0]
    parent, tree = {root: None}, set()
    queue = deque([root])
    while queue:
        x = queue.popleft()
        steps = [(e, 1, e.dst) for e in core.out_edges(x)] + [(e, -1, e.src) for e in core.in_edges(x)]
        for e, sgn, y in steps:
            if y not in parent:
                parent[y] = (e.id, sgn)
                tree.add(e.id)
                queue.append(y)
    return root, parent, tree


def tree_path(core: OrientedGraph, parent: dict, v: str) -> list[tuple[str, int]]:
    """Steps from the root to ``v`` along the spanning tree."""
    steps = []
    while parent[v] is not None:
        eid, sgn = parent[v]
        steps.append((eid, sgn))
        e = core.edge(eid)
        v = e.src if sgn == 1 else e.dst
    steps.reverse()
    return steps


def _step_end(core, step):
    e = core.edge(step[0])
    return e.dst if step[1] == 1 else e.src


def cycle_basis(core: OrientedGraph) -> list[Cycle]:
    """Fundamental cycles of a BFS spanning tree, one per non-tree edge (sorted by id)."""
    if isinstance(core, ZhyvotGraph):
        core = core.core
    root, parent, tree = spanning_tree(core)
    cycles = []
    for e in sorted(core.edges, key=lambda e: e.id):
        if e.id in tree:
            continue
        p, q = tree_path(core, parent, e.src), tree_path(core, parent, e.dst)
        c = 0
        while c < min(len(p), len(q)) and p[c] == q[c]:
            c += 1
        base = root if c == 0 else _step_end(core, p[c - 1])
        steps = p[c:] + [(e.id, 1)] + [(eid, -s) for eid, s in reversed(q[c:])]
        cycles.append(Cycle(base, tuple(steps)))
    return cycles


def first_betti_number(core: OrientedGraph) -> int:
    comps = core.components()
    return len(core.edges) - len(core.vertices) + len(comps)


def genus_templates(name: str, q: int | None = None, **kw) -> ZhyvotGraph:
    """Alias of :func:`genus_template`."""
    return genus_template(name, q, **kw)


__all__ = [
    "Edge", "OrientedGraph", "ValidationReport", "validate_zhyvot", "Path", "ExpandedGraph",
    "ZhyvotGraph", "expand", "sigma_length", "concat", "enumerate_paths", "field_extension",
    "genus_template", "genus_templates", "TEMPLATE_NAMES", "Cycle", "cycle_basis", "spanning_tree",
    "tree_path", "first_betti_number", "ZhyvotError",
]
