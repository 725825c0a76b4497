"""Structured-text formats for graphs, weights and currents.

Graph files::

    # comments run to end of line
    [meta]
    q=2 depth=4 name=theta
    [vertices]
    v core
    t tree          # explicit vertex outside the zhyvot
    [edges]
    b v w core      # id source target core|tree
    [stubs]
    t 2             # overrides the automatic (q+1) - valence count

``[meta]`` keys may also follow the header on the same line.  Weight files
use ``[weight] lambda=<value>``, then ``<vertex> <value>`` lines, and an
optional ``[n]`` section of ``<edge> 0|1``.  Current files hold one
``[current]`` section of ``<edge> <integer>`` lines.  Values use the exact
syntax ``p/q``, ``(a+b*sqrt(d))/c`` or a decimal.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ZhyvotError
from .graph import Edge, OrientedGraph, ZhyvotGraph
from .scalars import format_exact, parse_exact
from .weights import SpecialWeight

_HEADER = re.compile(r"^\[([A-Za-z_]+)\]")


class FormatError(ZhyvotError):
    """Syntax error in a structured-text file, with 1-based line and column."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _lines(text):
    """Yield (lineno, column offset, tokens with their columns) for non-blank lines."""
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", body)]
        if toks:
            yield no, toks


def _sections(text, allowed):
    """Split into (section, lineno, tokens) triples; header tails become a first body line."""
    current = None
    for no, toks in _lines(text):
        word, col = toks[0]
        m = _HEADER.match(word)
        if m:
            name = m.group(1)
            if name not in allowed or m.end() != len(word):
                raise FormatError(f"unknown section {word!r}", no, col)
            current = name
            if len(toks) > 1:
                yield current, no, toks[1:]
            continue
        if word.startswith("["):
            raise FormatError(f"malformed section header {word!r}", no, col)
        if current is None:
            raise FormatError("content before the first section header", no, col)
        yield current, no, toks


def _expect(toks, n, no, what):
    if len(toks) != n:
        col = toks[min(n, len(toks) - 1)][1]
        raise FormatError(f"expected {what}", no, col)


def _int(tok, no, what, minimum=None):
    text, col = tok
    try:
        v = int(text)
    except ValueError:
        raise FormatError(f"{what} must be an integer, got {text!r}", no, col) from None
    if minimum is not None and v < minimum:
        raise FormatError(f"{what} must be >= {minimum}", no, col)
    return v


def _value(tok, no):
    text, col = tok
    try:
        return parse_exact(text)
    except ValueError:
        raise FormatError(f"not a number: {text!r}", no, col) from None


def _keyvals(toks, no, allowed):
    out = {}
    for text, col in toks:
        if "=" not in text:
            raise FormatError(f"expected key=value, got {text!r}", no, col)
        k, v = text.split("=", 1)
        if k not in allowed:
            raise FormatError(f"unknown key {k!r}", no, col)
        out[k] = (v, col + len(k) + 1)
    return out


def parse_graph_file(text: str) -> ZhyvotGraph:
    meta = {"q": 2, "depth": 0, "name": None}
    vertices, core_v, edges, core_e, stubs = [], [], [], [], {}
    for sec, no, toks in _sections(text, ("meta", "vertices", "edges", "stubs")):
        if sec == "meta":
            for k, (v, col) in _keyvals(toks, no, ("q", "depth", "name")).items():
                meta[k] = v if k == "name" else _int((v, col), no, k, 2 if k == "q" else 0)
        elif sec == "vertices":
            _expect(toks, 2, no, "<id> core|tree")
            (vid, _), (kind, col) = toks
            if kind not in ("core", "tree"):
                raise FormatError(f"vertex kind must be core or tree, got {kind!r}", no, col)
            vertices.append(vid)
            if kind == "core":
                core_v.append(vid)
        elif sec == "edges":
            _expect(toks, 4, no, "<id> <src> <dst> core|tree")
            (eid, _), (src, _), (dst, _), (kind, col) = toks
            if kind not in ("core", "tree"):
                raise FormatError(f"edge kind must be core or tree, got {kind!r}", no, col)
            edges.append(Edge(eid, src, dst))
            if kind == "core":
                core_e.append(eid)
        else:
            _expect(toks, 2, no, "<vertex> <count>")
            if toks[0][0] in stubs:
                raise FormatError(f"duplicate stub line for {toks[0][0]!r}", no, toks[0][1])
            stubs[toks[0][0]] = _int(toks[1], no, "stub count", 0)
    graph = OrientedGraph(vertices, edges)
    return ZhyvotGraph(graph, core_v, core_e, meta["q"], stubs, meta["depth"], meta["name"])


def serialize_graph(graph: ZhyvotGraph) -> str:
    head = f"q={graph.q} depth={graph.depth}"
    if graph.name:
        head += f" name={graph.name}"
    out = ["[meta]", head, "[vertices]"]
    for v in graph.graph.vertices:
        out.append(f"{v} {'core' if v in graph.core_vertices else 'tree'}")
    out.append("[edges]")
    for e in graph.graph.edges:
        out.append(f"{e.id} {e.src} {e.dst} {'core' if e.id in graph.core_edges else 'tree'}")
    stubs = graph.explicit_stubs
    if stubs:
        out.append("[stubs]")
        out.extend(f"{v} {stubs[v]}" for v in graph.graph.vertices if v in stubs)
    return "\n".join(out) + "\n"


def parse_weight_file(text: str, graph: ZhyvotGraph) -> SpecialWeight:
    lam, g, n = None, {}, {}
    for sec, no, toks in _sections(text, ("weight", "n")):
        if sec == "weight":
            if "=" in toks[0][0]:
                kv = _keyvals(toks, no, ("lambda",))
                lam = _value(kv["lambda"], no)
                continue
            _expect(toks, 2, no, "<vertex> <value>")
            if not graph.graph.has_vertex(toks[0][0]):
                raise FormatError(f"unknown vertex {toks[0][0]!r}", no, toks[0][1])
            g[toks[0][0]] = _value(toks[1], no)
        else:
            _expect(toks, 2, no, "<edge> 0|1")
            if not graph.graph.has_edge(toks[0][0]):
                raise FormatError(f"unknown edge {toks[0][0]!r}", no, toks[0][1])
            n[toks[0][0]] = _int(toks[1], no, "n")
    if lam is None:
        raise FormatError("missing lambda=", 1, 1)
    return SpecialWeight(graph, lam, n or None, g)


def serialize_weight(weight: SpecialWeight) -> str:
    out = [f"[weight] lambda={format_exact(weight.lam_value)}"]
    out.extend(f"{v} {format_exact(weight.g[v])}" for v in weight.graph.graph.vertices)
    out.append("[n]")
    out.extend(f"{e} {k}" for e, k in weight.n.items())
    return "\n".join(out) + "\n"


def parse_current_file(text: str, graph: ZhyvotGraph):
    from .currents import Current

    vals = {}
    X = graph.expanded
    for _, no, toks in _sections(text, ("current",)):
        _expect(toks, 2, no, "<edge> <integer>")
        if not X.has_edge(toks[0][0]):
            raise FormatError(f"unknown edge {toks[0][0]!r}", no, toks[0][1])
        vals[toks[0][0]] = Fraction(_int(toks[1], no, "current value"))
    return Current.from_values(graph, vals, "star")


def serialize_current(mu) -> str:
    out = ["[current]"]
    out.extend(f"{e} {format_exact(x)}" for e, x in mu.mu.items() if x != 0)
    return "\n".join(out) + "\n"
