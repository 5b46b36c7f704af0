import json
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from lapdet import cli
from lapdet.beta import BetaRescaledWarning
from lapdet.io import GraphFormatError, format_edge_list, parse_edge_list, parse_graph, read_beta

DATA = Path(__file__).resolve().parent.parent / "data"


def _run(*argv):
    return cli.run(cli.build_parser().parse_args([str(a) for a in argv]))


def _strip(report):
    out = dict(report)
    out.pop("timings")
    return out


@pytest.fixture(scope="module")
def schema():
    return json.loads(resources.files("lapdet").joinpath("report.schema.json").read_text())


def test_paw_fixture_parses():
    pg = parse_graph(DATA / "paw.g")
    assert pg.graph.n_vertices == 4 and pg.graph.n_edges == 4
    assert pg.sigma is None and pg.beta is None


def test_json_graph_carries_beta():
    pg = parse_graph(DATA / "paw.json")
    assert pg.graph.n_edges == 4
    assert [str(x) for x in pg.beta.exact] == ["1/3", "2/9", "2/9", "2/9"]


def test_self_loop_reports_line():
    with pytest.raises(GraphFormatError) as exc:
        parse_edge_list("# comment\ne0 a b\ne1 a a\n", path="g.txt")
    assert exc.value.line == 3 and "g.txt:3" in str(exc.value)


@pytest.mark.parametrize("text,line", [
    ("e0 a b\ne0 b c\n", 2),         # duplicate id
    ("e0 a b\ne1 b\n", 2),           # too few fields
    ("e0 a b 1.0\ne1 b c -2\n", 2),  # nonpositive sigma
])
def test_parse_errors_have_line_numbers(text, line):
    with pytest.raises(GraphFormatError) as exc:
        parse_edge_list(text)
    assert exc.value.line == line


def test_partial_sigma_column_names_edges():
    with pytest.raises(GraphFormatError, match="e0"):
        parse_edge_list("e0 a b\ne1 b c 1.0\n")


def test_disconnected_graph_rejected():
    with pytest.raises(GraphFormatError, match="connected"):
        parse_edge_list("e0 a b\ne1 c d\n")


def test_edge_list_round_trip(house):
    text = format_edge_list(house, sigma=np.arange(1, 7) / 2)
    pg = parse_edge_list(text)
    assert pg.graph.n_edges == house.n_edges and pg.graph.n_vertices == house.n_vertices
    assert np.allclose(pg.sigma, np.arange(1, 7) / 2)


def test_beta_file_rescaled_with_warning(tmp_path):
    g = parse_graph(DATA / "triangle.g").graph
    f = tmp_path / "t.beta"
    f.write_text("e0 0.3\ne1 0.3\ne2 0.3\n")
    with pytest.warns(BetaRescaledWarning):
        beta = read_beta(f, g)
    assert np.allclose(beta.values, 1 / 3)
    code, report, _ = _run("density", DATA / "triangle.g", "--beta", f"file:{f}")
    assert code == 0 and any("rescaled" in w for w in report["warnings"])


def test_mindet_diamond_example():
    code, report, _ = _run("mindet", DATA / "diamond.g", "--beta", "uniform")
    r = report["result"]
    assert code == 0 and r["status"] == "StrictMinimizer"
    assert r["p_star"] == pytest.approx(10 * (2 / 3) ** 0.6, rel=1e-9)
    assert round(r["p_star"], 4) == 7.8405


def test_density_house_example():
    code, report, _ = _run("density", DATA / "house.g")
    r = report["result"]
    assert code == 0 and r["verdict"] == "DenseNotStrict"
    assert [t["edges"] for t in r["tight_subgraphs"]] == [["e0", "e1", "e2"]]


def test_sample_diamond_example():
    code, report, _ = _run("sample", DATA / "diamond.g", "--sigma-from", "mindet", "--n", 20000, "--seed", 7)
    r = report["result"]
    assert code == 0 and np.allclose(r["frequencies"], 0.6, atol=0.02)
    assert r["max_abs_z"] < 4


def test_effres_reproduces_repaired_paw():
    code, report, _ = _run("mindet", DATA / "paw.g", "--beta", "effres")
    assert report["beta"]["exact"] == ["1/3", "2/9", "2/9", "2/9"]
    assert report["result"]["status"] == "StrictMinimizer"
    assert report["result"]["p_star"] == pytest.approx(3, rel=1e-8)


def test_beta_from_graph_column():
    code, report, _ = _run("mindet", DATA / "paw.json", "--beta", "graph")
    assert code == 0 and report["result"]["p_star"] == pytest.approx(3, rel=1e-8)
    code, _, msg = _run("mindet", DATA / "paw.g", "--beta", "graph")
    assert code == 1 and "beta" in msg


def test_exit_codes(tmp_path):
    assert _run("analyze", DATA / "house.g")[0] == 0
    bad = tmp_path / "bad.g"
    bad.write_text("e0 a b\ne1 a a\n")
    code, report, msg = _run("density", bad)
    assert code == 1 and report is None and ":2:" in msg
    assert _run("density", tmp_path / "missing.g")[0] == 1
    assert _run("maxent", DATA / "house.g", "--max-trees", 3)[0] == 2
    assert _run("density", DATA / "house.g", "--max-subgraph-edges", 4)[0] == 2
    assert _run("core", DATA / "paw.g")[0] == 1  # not biconnected
    assert _run("sample", DATA / "house.g", "--sigma-from", "mindet")[0] == 2


def test_inconsistent_analyze_exits_3(monkeypatch):
    real = cli.solve_min_det

    def wrong(*a, **k):
        rep = real(*a, **k)
        rep.status = cli.Status.STRICT
        return rep

    monkeypatch.setattr(cli, "solve_min_det", wrong)
    code, report, _ = _run("analyze", DATA / "house.g")
    assert code == 3 and not report["result"]["consistent"]
    assert cli.main(["analyze", str(DATA / "house.g")]) == 3


ALL_COMMANDS = [
    ("analyze", "diamond.g", []),
    ("analyze", "paw.g", []),
    ("mindet", "house.g", []),
    ("mindet", "paw.g", []),
    ("maxent", "house.g", []),
    ("maxent", "paw.g", []),
    ("density", "paw.g", []),
    ("core", "house.g", []),
    ("core", "diamond.g", []),
    ("deflate", "house.g", []),
    ("sample", "diamond.g", ["--n", 500, "--seed", 3]),
    ("sample", "paw.g", ["--beta", "effres", "--sigma-from", "mindet", "--n", 200]),
    ("bound", "house.g", ["--b", "2/3"]),
    ("bound", "diamond.g", []),
]


@pytest.mark.parametrize("command,graph,extra", ALL_COMMANDS)
def test_reports_validate_and_are_deterministic(schema, command, graph, extra):
    jsonschema = pytest.importorskip("jsonschema")
    code, first, _ = _run(command, DATA / graph, *extra)
    assert code == 0
    jsonschema.validate(first, schema)
    json.dumps(first, allow_nan=False)
    _, second, _ = _run(command, DATA / graph, *extra)
    assert cli.dumps(_strip(first)) == cli.dumps(_strip(second))


def test_paw_mindet_reports_descent():
    r = _run("mindet", DATA / "paw.g")[1]["result"]
    assert r["status"] == "NotHomogeneous"
    assert r["descent"]["drop"] >= 30
    assert all(isinstance(x, float) for x in r["witness"]["log_sigma"])


def test_bound_house():
    r = _run("bound", DATA / "house.g", "--b", "2/3")[1]["result"]
    assert r["holds"] and not r["attained"]
    assert r["c_star"] == pytest.approx(45, rel=1e-9)


def test_main_writes_report_and_summary(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["density", str(DATA / "paw.g"), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "NotDense" in text and "violating" in text
    assert json.loads(out.read_text())["result"]["verdict"] == "NotDense"
    assert cli.main(["maxent", str(DATA / "diamond.g"), "--format", "report"]) == 0
    assert json.loads(capsys.readouterr().out)["schema"] == cli.SCHEMA_ID


def test_numbers_round_trip():
    x = 10 * (2 / 3) ** 0.6
    assert json.loads(json.dumps(cli.num(x))) == x
    assert cli.num(float("inf")) == "inf" and cli.num(float("nan")) == "nan"
