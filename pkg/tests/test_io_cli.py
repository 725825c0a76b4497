import json
import subprocess
import sys
from fractions import Fraction

import networkx as nx
import pytest

from zhyvot import (
    genus_template,
    parse_current_file,
    parse_graph_file,
    parse_weight_file,
    serialize_current,
    serialize_graph,
    serialize_weight,
    solve_special_state,
    solve_with_stubs,
)
from zhyvot.cli import main
from zhyvot.currents import cycle_current
from zhyvot.errors import ZhyvotAxiomError
from zhyvot.graph import cycle_basis
from zhyvot.io import FormatError

from conftest import template_graphs


@pytest.mark.parametrize("name", list(template_graphs()))
def test_graph_round_trip(name):
    zg = template_graphs(depth=3)[name]
    text = serialize_graph(zg)
    back = parse_graph_file(text)
    assert back == zg
    assert serialize_graph(back) == text


def test_reordered_file_parses_to_isomorphic_graph():
    text = """
    # theta graph, edges shuffled
    [meta] q=2
    depth=1
    [vertices]
    w core
    v core
    [edges]
    c w v core   # one of two return edges
    b v w core
    a w v core
    """
    g = parse_graph_file(text)
    ref = genus_template("genus2_case2", depth=1)
    to_nx = lambda z: nx.MultiDiGraph([(e.src, e.dst) for e in z.core.edges])
    assert nx.is_isomorphic(to_nx(g), to_nx(ref))
    assert parse_graph_file(serialize_graph(g)) == g


def test_explicit_stubs_and_tree_vertices():
    text = "[meta] q=2 depth=2\n[vertices]\nv core\nt tree\n[edges]\ne v v core\nf v t tree\n[stubs]\nt 2\n"
    g = parse_graph_file(text)
    assert g.stubs == {"v": 0, "t": 2}
    assert g.core_vertices == {"v"}
    assert parse_graph_file(serialize_graph(g)) == g


def test_syntax_errors_carry_location():
    with pytest.raises(FormatError) as err:
        parse_graph_file("[meta] q=2\n[vertices]\nv core\n\n  [oops]\n")
    assert (err.value.line, err.value.column) == (5, 3)
    with pytest.raises(FormatError) as err:
        parse_graph_file("[vertices]\nv core extra\n")
    assert err.value.line == 2
    with pytest.raises(FormatError) as err:
        parse_graph_file("[meta] q=two\n")
    assert (err.value.line, err.value.column) == (1, 10)
    with pytest.raises(FormatError):
        parse_graph_file("v core\n")


def test_zhyvot_violation_names_vertex():
    with pytest.raises(ZhyvotAxiomError) as err:
        parse_graph_file("[vertices]\nv core\nw core\n[edges]\nb v w core\nc w w core\n")
    assert "sources: v" in str(err.value)


def test_weight_round_trip():
    zg = genus_template("genus2_case2")
    for st in (solve_special_state(zg, (1, 0, 1))[0], solve_special_state(zg, (1, 0, 0))[0]):
        back = parse_weight_file(serialize_weight(st), zg)
        assert back.lam_value == st.lam_value and back.g == st.g and back.n == st.n
    w = solve_with_stubs(genus_template("genus1", n=3, depth=2), Fraction(1, 3))
    back = parse_weight_file(serialize_weight(w), w.graph)
    assert back.values() == w.values()


def test_current_round_trip():
    zg = genus_template("genus2_case2", 3, depth=2)
    mu = cycle_current(zg, cycle_basis(zg.core)[1]).scaled(3)
    back = parse_current_file(serialize_current(mu), zg)
    assert back.mu == mu.mu
    with pytest.raises(FormatError):
        parse_current_file("[current]\nb 1/2\n", zg)


# --- command line ---------------------------------------------------------------

def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def records(text):
    lines = text.splitlines()
    return lines[0], [json.loads(x) for x in lines[1:]]


def test_solve_table1_row(capsys):
    code, out, _ = run(capsys, "solve", "--template", "genus2_case2", "--n", "1,1,1", "--format", "records")
    assert code == 0
    head, rows = records(out)
    assert head == "# zhyvot-lab/1 solve"
    assert rows == [{"n": [1, 1, 1], "lambda": "(0+1*sqrt(2))/2", "g(v)": "(-1+1*sqrt(2))/1",
                     "g(w)": "(2-1*sqrt(2))/1"}]


def test_solve_empty_row_exits_2(capsys):
    code, out, _ = run(capsys, "solve", "--template", "genus2_case2", "--n", "0,0,1")
    assert code == 2
    assert "eigenvalue 1" in out


def test_pair_polygon(capsys):
    code, out, _ = run(capsys, "pair", "--template", "genus1", "--size", "5", "--lam", "1/3", "--format", "records")
    assert code == 0
    _, rows = records(out)
    assert rows[0]["pairing"] == "-1/243" and rows[0]["recovered_k"] == 5


def test_validate_corrupt_file(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("[vertices]\nv core\n[edgez]\n")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 1 and "line 3, column 1" in err


def test_template_validate_round_trip(tmp_path, capsys):
    code, out, _ = run(capsys, "template", "--template", "genus2_case3", "--q", "3", "--depth", "2")
    f = tmp_path / "g.txt"
    f.write_text(out)
    code, out, _ = run(capsys, "validate", str(f), "--format", "records")
    assert code == 0
    _, rows = records(out)
    assert all(r["ok"] for r in rows) and len(rows) == 4


def test_approx_appends_digits(capsys):
    code, out, _ = run(capsys, "solve", "--template", "genus2_case2", "--n", "1,0,1", "--approx")
    assert "~0.618033988749895" in out


def test_alpha_extend_currents_theta_k0(tmp_path, capsys):
    assert run(capsys, "alpha", "--template", "genus2_case2", "--q", "3", "--k", "2", "--lam", "1/2")[0] == 0
    code, out, _ = run(capsys, "extend-field", "--template", "genus1", "--size", "3", "--e", "2", "--f", "2",
                       "--lam", "1/3", "--format", "records")
    _, rows = records(out)
    assert rows[0]["valences"] == [5] and rows[0]["residuals"] == 0 and rows[0]["old_values_kept"] is True
    cur = tmp_path / "mu.txt"
    cur.write_text("[current]\ne1 2\ne2 2\ne3 2\n")
    code, out, _ = run(capsys, "currents", "--template", "genus1", "--size", "3", "--current", str(cur))
    assert code == 0 and "yes" in out
    code, out, _ = run(capsys, "k0-pair", "--template", "genus1", "--size", "3", "--current", str(cur),
                       "--fn", "e1:+:1,e2:-:3", "--format", "records")
    assert records(out)[1][0]["pairing"] == "-4"
    code, out, _ = run(capsys, "k0-pair", "--template", "genus1", "--size", "3", "--current", str(cur),
                       "--star", "v2", "--format", "records")
    assert records(out)[1][0]["pairing"] == "0"
    code, out, _ = run(capsys, "theta", "--template", "genus1", "--size", "3", "--periods", "6",
                       "--current", str(cur), "--format", "records")
    _, rows = records(out)
    # same period, but the descriptor routes its flow through stub rays: a different current
    assert rows[0]["period"] == 6 and rows[-1]["equivalent"] is False
    empty = tmp_path / "zero.txt"
    empty.write_text("[current]\n")
    code, out, _ = run(capsys, "theta", "--template", "genus1", "--size", "3", "--current", str(empty),
                       "--format", "records")
    assert records(out)[1][-1]["equivalent"] is True


def test_records_are_byte_stable():
    cmd = [sys.executable, "-m", "zhyvot", "pair", "--template", "genus2_case2", "--format", "records"]
    a = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    assert a == b and a.startswith("# zhyvot-lab/1 pair\n")
