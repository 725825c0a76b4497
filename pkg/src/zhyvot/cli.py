"""zhyvot-lab: command-line front end.

Every subcommand builds or loads a graph, runs one pipeline stage and
prints either an aligned table (default) or line-delimited JSON records
under a ``# zhyvot-lab/1 <command>`` header.  Exit status: 0 on success,
2 when the requested object does not exist (empty solve, infeasible
budgets), 1 on any other error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .currents import (
    CylinderFunction,
    build_theta,
    current_space_rank,
    k0_pairing,
    star_function,
    verify_current,
    weight_from_current,
)
from .errors import InfeasibleError, ZhyvotError
from .graph import TEMPLATE_NAMES, cycle_basis, field_extension, genus_template
from .index import recover_schottky, spectral_flow_pairing
from .io import parse_current_file, parse_graph_file, parse_weight_file, serialize_graph
from .scalars import format_exact, parse_exact
from .weights import (
    alpha_k,
    inhom_chain,
    solve_special_state,
    solve_with_stubs,
    weight_after_field_extension,
)

FORMAT_VERSION = "zhyvot-lab/1"


class Emitter:
    """Collects rows and prints them as a table or as JSON records."""

    def __init__(self, command, fmt, approx):
        self.command = command
        self.fmt = fmt
        self.approx = approx
        self.rows = []

    def value(self, x):
        if x is None:
            return "-"
        if isinstance(x, (int, str)) and not isinstance(x, bool):
            return str(x)
        text = format_exact(x)
        if self.approx:
            text += f" ~{float(x):.15g}"
        return text

    def row(self, **fields):
        self.rows.append(fields)

    def flush(self, out=None):
        out = out or sys.stdout
        if self.fmt == "records":
            out.write(f"# {FORMAT_VERSION} {self.command}\n")
            for r in self.rows:
                out.write(json.dumps({k: self._plain(v) for k, v in r.items()}, sort_keys=True) + "\n")
            return
        if not self.rows:
            return
        keys = list(dict.fromkeys(k for r in self.rows for k in r))
        cells = [[self._plain(r.get(k), table=True) for k in keys] for r in self.rows]
        widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
        out.write("  ".join(k.ljust(w) for k, w in zip(keys, widths)).rstrip() + "\n")
        for c in cells:
            out.write("  ".join(x.ljust(w) for x, w in zip(c, widths)).rstrip() + "\n")

    def _plain(self, v, table=False):
        if isinstance(v, bool):
            return ("yes" if v else "no") if table else v
        if isinstance(v, (list, tuple)):
            parts = [self._plain(x, table) for x in v]
            return ",".join(parts) if table else parts
        if isinstance(v, int) and not table:
            return v
        return self.value(v)


def _graph(args):
    if getattr(args, "graph", None):
        with open(args.graph, encoding="utf-8") as fh:
            g = parse_graph_file(fh.read())
        if args.depth is not None:
            g = g.with_depth(args.depth)
        return g
    if not getattr(args, "template", None):
        raise ZhyvotError("give --template or --graph")
    return genus_template(args.template, args.q, n=args.size,
                          depth=4 if args.depth is None else args.depth)


def _lam(text):
    if text is None:
        return None
    return parse_exact(text)


def _weight(args, graph):
    """Weight from --weight, else a special state on the core, else a stub-charged state at --lam (default 1/2)."""
    if getattr(args, "weight", None):
        with open(args.weight, encoding="utf-8") as fh:
            return parse_weight_file(fh.read(), graph), "file"
    lam = _lam(getattr(args, "lam", None))
    if lam is None:
        res = solve_special_state(graph)
        if res:
            return res[0], "core"
        lam = Fraction(1, 2)
    return solve_with_stubs(graph, lam), "stubs"


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_template(args, em):
    g = _graph(args)
    sys.stdout.write(serialize_graph(g))


def cmd_validate(args, em):
    with open(args.file, encoding="utf-8") as fh:
        g = parse_graph_file(fh.read())
    for name, (ok, detail) in sorted(g.report.checks.items()):
        em.row(check=name, ok=ok, detail=detail or "")


def cmd_solve(args, em):
    g = _graph(args)
    n = _ints(args.n) if args.n else None
    res = solve_special_state(g, n, _lam(args.lam))
    order = [e.id for e in g.graph.edges if e.id in g.core_edges]
    nvals = dict(zip(order, n)) if n else {e: 1 for e in order}
    if not res:
        em.row(n=[nvals[e] for e in order], **{"lambda": None}, note=res.diagnostic)
        return 2
    for st in res:
        row = {"n": [nvals[e] for e in order], "lambda": st.lam_value}
        for v in sorted(g.core_vertices):
            row[f"g({v})"] = st.g[v]
        if st.approximate:
            row["note"] = res.diagnostic or "approximate"
        em.row(**row)
    return 0


def cmd_extend_field(args, em):
    g = _graph(args)
    w, _ = _weight(args, g)
    new_g = field_extension(g, args.e, args.f)
    new_w = weight_after_field_extension(w, args.e, args.f)
    X = new_g.expanded
    val = sorted({X.valence(v) for v in X.vertices if not X.is_boundary(v)})
    kept = all(new_w.g[v] == w.g[v] for v in g.graph.vertices)
    em.row(e=args.e, f=args.f, q=new_g.q, vertices=len(new_g.graph.vertices), valences=val,
           **{"lambda": new_w.lam_value}, old_values_kept=kept, residuals=len(new_w.residuals()))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(serialize_graph(new_w.graph))


def _loops(g, args):
    X = g.expanded
    if args.loop:
        return [X.path(args.loop.split(","))]
    return [c.as_path() for c in cycle_basis(g.core) if c.is_directed()]


def cmd_pair(args, em):
    g = _graph(args)
    w, _ = _weight(args, g)
    for loop in _loops(g, args):
        rep = spectral_flow_pairing(w, loop)
        em.row(loop=".".join(loop.edges), k=rep.k, **{"lambda": rep.lam}, g_range=rep.g_range,
               pairing=rep.value, recovered_k=recover_schottky(rep))


def cmd_alpha(args, em):
    g = _graph(args)
    if g.depth < args.k:
        g = g.with_depth(args.k)
    w, _ = _weight(args, g)
    tables = [alpha_k(w, j, g) for j in range(args.k + 1)]
    for v in sorted(g.core_vertices):
        em.row(vertex=v, **{f"alpha_{j}": t[v] for j, t in enumerate(tables)})
    for j in range(1, args.k + 1):
        ih = inhom_chain(w, j, g)
        em.row(vertex=f"chi_{j}", min_chi=min(ih.chi.values()), residuals=len(ih.residuals()))


def cmd_currents(args, em):
    g = _graph(args)
    rank, basis = current_space_rank(g)
    for i, c in enumerate(cycle_basis(g.core)):
        em.row(item=f"cycle{i}", rank=rank, steps=[f"{e}{'+' if s == 1 else '-'}" for e, s in c.steps])
    if args.current:
        with open(args.current, encoding="utf-8") as fh:
            mu = parse_current_file(fh.read(), g)
        rep = verify_current(g, mu)
        em.row(item="current", rank=rank, conserved=rep.passed, bad_vertices=sorted(rep.residuals))
        return 0 if rep.passed else 2
    return 0


def cmd_theta(args, em):
    g = _graph(args)
    periods = _ints(args.periods) if args.periods else None
    th = build_theta(None, periods, g)
    integ = weight_from_current(th.mu, g)
    for i, (c, p) in enumerate(zip(th.cycles, th.periods)):
        em.row(cycle=f"cycle{i}", period=int(p), recovered=int(integ.periods[i]),
               mu=[f"{e}:{format_exact(th.mu.mu[e])}" for e, _ in c.steps])
    if args.current:
        with open(args.current, encoding="utf-8") as fh:
            mu = parse_current_file(fh.read(), g)
        other = build_theta(None, None, g)
        other.mu = mu
        em.row(cycle="compare", equivalent=th.equivalent(other))


def _cylinder(text):
    items = []
    for part in text.split(","):
        eid, sign, coef = part.split(":")
        items.append(((eid, 1 if sign in ("+", "+1", "1") else -1), int(coef)))
    return CylinderFunction.of(items)


def cmd_k0_pair(args, em):
    g = _graph(args)
    with open(args.current, encoding="utf-8") as fh:
        mu = parse_current_file(fh.read(), g)
    if args.star:
        fn = star_function(g, args.star)
    elif args.fn:
        fn = _cylinder(args.fn)
    else:
        raise ZhyvotError("give --fn or --star")
    em.row(terms=len(fn.terms), pairing=k0_pairing(mu, fn))


def build_parser():
    p = argparse.ArgumentParser(prog="zhyvot-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, weight=False):
        sp.add_argument("--template", choices=TEMPLATE_NAMES)
        sp.add_argument("--graph", help="graph file")
        sp.add_argument("--size", type=int, help="cycle length for genus1")
        sp.add_argument("--q", type=int)
        sp.add_argument("--depth", type=int)
        sp.add_argument("--format", choices=("table", "records"), default="table")
        sp.add_argument("--approx", action="store_true", help="append 15-digit decimals")
        if weight:
            sp.add_argument("--weight", help="weight file")
            sp.add_argument("--lam", help="lambda for a stub-charged state")

    sp = sub.add_parser("template", help="print a template graph file")
    common(sp)
    sp.set_defaults(func=cmd_template)

    sp = sub.add_parser("validate", help="parse and check a graph file")
    sp.add_argument("file")
    sp.add_argument("--format", choices=("table", "records"), default="table")
    sp.add_argument("--approx", action="store_true")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="special states for an exponent pattern")
    common(sp)
    sp.add_argument("--n", help="comma-separated 0/1 per core edge in declared order")
    sp.add_argument("--lam", help="fix lambda (needed for one-parameter families)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("extend-field", help="subdivide and carry a weight along")
    common(sp, weight=True)
    sp.add_argument("--e", type=int, required=True)
    sp.add_argument("--f", type=int, default=1)
    sp.add_argument("--out", help="write the extended graph here")
    sp.set_defaults(func=cmd_extend_field)

    sp = sub.add_parser("pair", help="spectral flow pairing and Schottky recovery")
    common(sp, weight=True)
    sp.add_argument("--loop", help="comma-separated edge ids")
    sp.set_defaults(func=cmd_pair)

    sp = sub.add_parser("alpha", help="alpha_k tables and chi_k checks")
    common(sp, weight=True)
    sp.add_argument("--k", type=int, default=3)
    sp.set_defaults(func=cmd_alpha)

    sp = sub.add_parser("currents", help="current space rank, basis, verification")
    common(sp)
    sp.add_argument("--current", help="current file to verify")
    sp.set_defaults(func=cmd_currents)

    sp = sub.add_parser("theta", help="theta descriptor from prescribed periods")
    common(sp)
    sp.add_argument("--periods", help="comma-separated integer periods per basis cycle")
    sp.add_argument("--current", help="current file to compare against")
    sp.set_defaults(func=cmd_theta)

    sp = sub.add_parser("k0-pair", help="pair a current with a cylinder function")
    common(sp)
    sp.add_argument("--current", required=True)
    sp.add_argument("--fn", help="edge:sign:coef,... e.g. e1:+:1,e2:-:2")
    sp.add_argument("--star", help="use the full star at this vertex")
    sp.set_defaults(func=cmd_k0_pair)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    em = Emitter(args.command, args.format, args.approx)
    try:
        status = args.func(args, em) or 0
    except InfeasibleError as exc:
        em.flush()
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except (ZhyvotError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    em.flush()
    return status


if __name__ == "__main__":
    sys.exit(main())
