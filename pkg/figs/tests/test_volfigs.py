"""Renderer tests: schema readers, drawing contracts, CLI exits.

Fixture files are written by hand against the frozen formats; nothing
here imports the producing library.
"""
import json

import matplotlib.pyplot as plt
import numpy as np
import pytest

from volfigs import (
    Histogram,
    Profile,
    RenderStyle,
    SchemaError,
    SchemaMismatchError,
    cli,
    load_flowgraph,
    read_histogram,
    read_profile,
    render_flow,
    render_histograms,
    render_profiles,
)
from volfigs.render import _draw_flow, _draw_profiles


# ---------------------------------------------------------------------------
# fixture builders

NODES = tuple(f"V{k}" for k in range(6))


def flow_doc(n_edges=17, schema_version=1):
    pairs = [(i, j) for i in range(6) for j in range(6) if i != j][:n_edges]
    rng = np.random.default_rng(0)
    edges = []
    for i, j in pairs:
        w = float(rng.normal(0.0, 0.2))
        edges.append({"source": NODES[i], "target": NODES[j],
                      "weight": w, "sign": 1 if w >= 0 else -1})
    return {
        "schema_version": schema_version,
        "nodes": list(NODES),
        "edges": edges,
        "self_loops": [{"node": "V0", "weight": 0.21}],
        "significance_level": 0.01,
    }


def write_doc(path, doc):
    path.write_text(json.dumps(doc, sort_keys=True))
    return str(path)


def profile_lines(values):
    lines = ["slot,utc,value"]
    for s, v in enumerate(values):
        lines.append(f"{s},{s // 12:02d}:{(s % 12) * 5:02d},{float(v)!r}")
    return "\n".join(lines) + "\n"


def peaked_values(peak=192):
    x = np.arange(288, dtype=np.float64)
    return 1.0 + np.exp(-0.5 * ((x - peak) / 12.0) ** 2)


def hist_lines(bins=10):
    rng = np.random.default_rng(3)
    before = rng.integers(0, 50, bins)
    after = rng.integers(0, 50, bins)
    edges = np.linspace(0.0, 2.0, bins + 1)
    lines = ["bin_left,bin_right,count_before,count_after"]
    for i in range(bins):
        lines.append(f"{float(edges[i])!r},{float(edges[i + 1])!r},"
                     f"{int(before[i])},{int(after[i])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# flow-graph schema

def test_flowgraph_parses(tmp_path):
    p = tmp_path / "flowgraph.json"
    write_doc(p, flow_doc())
    doc = load_flowgraph(p)
    assert doc.nodes == NODES
    assert len(doc.edges) == 17
    assert len(doc.self_loops) == 1
    assert doc.significance_level == 0.01


def test_flowgraph_version_mismatch(tmp_path):
    p = tmp_path / "flowgraph.json"
    write_doc(p, flow_doc(schema_version=9))
    with pytest.raises(SchemaMismatchError) as err:
        load_flowgraph(p)
    assert err.value.found == 9
    assert err.value.supported == 1
    assert "schema_version 9" in str(err.value)
    assert "version 1" in str(err.value)


def test_flowgraph_missing_version_is_mismatch(tmp_path):
    doc = flow_doc()
    del doc["schema_version"]
    p = tmp_path / "flowgraph.json"
    write_doc(p, doc)
    with pytest.raises(SchemaMismatchError):
        load_flowgraph(p)


def test_flowgraph_invalid_json(tmp_path):
    p = tmp_path / "flowgraph.json"
    p.write_text("{nope")
    with pytest.raises(SchemaError, match="not valid JSON"):
        load_flowgraph(p)


def test_flowgraph_top_level_must_be_object(tmp_path):
    p = tmp_path / "flowgraph.json"
    p.write_text(json.dumps([1, 2]))
    with pytest.raises(SchemaError, match="top-level"):
        load_flowgraph(p)


def test_flowgraph_missing_edges_key(tmp_path):
    doc = flow_doc()
    del doc["edges"]
    p = tmp_path / "flowgraph.json"
    write_doc(p, doc)
    with pytest.raises(SchemaError, match="malformed"):
        load_flowgraph(p)


def test_flowgraph_edge_missing_field(tmp_path):
    doc = flow_doc(n_edges=1)
    del doc["edges"][0]["sign"]
    p = tmp_path / "flowgraph.json"
    write_doc(p, doc)
    with pytest.raises(SchemaError, match="edge 0"):
        load_flowgraph(p)


def test_flowgraph_edge_unknown_node(tmp_path):
    doc = flow_doc(n_edges=1)
    doc["edges"][0]["target"] = "V99"
    p = tmp_path / "flowgraph.json"
    write_doc(p, doc)
    with pytest.raises(SchemaError, match="unknown node"):
        load_flowgraph(p)


def test_flowgraph_nonfinite_weight(tmp_path):
    doc = flow_doc(n_edges=1)
    doc["edges"][0]["weight"] = "nan"
    p = tmp_path / "flowgraph.json"
    write_doc(p, doc)
    with pytest.raises(SchemaError, match="non-finite"):
        load_flowgraph(p)


def test_flowgraph_self_loop_unknown_node(tmp_path):
    doc = flow_doc(n_edges=0)
    doc["self_loops"] = [{"node": "V99", "weight": 0.1}]
    p = tmp_path / "flowgraph.json"
    write_doc(p, doc)
    with pytest.raises(SchemaError, match="unknown node"):
        load_flowgraph(p)


# ---------------------------------------------------------------------------
# profile and histogram schema

def test_profile_parses(tmp_path):
    p = tmp_path / "profile_ALPHA.csv"
    vals = peaked_values()
    p.write_text(profile_lines(vals))
    prof = read_profile(p)
    assert prof.labels[0] == "00:00"
    assert prof.labels[192] == "16:00"
    assert np.allclose(prof.values, vals)


def test_profile_bad_header(tmp_path):
    p = tmp_path / "profile.csv"
    p.write_text("slot,label,value\n")
    with pytest.raises(SchemaError, match="expected header"):
        read_profile(p)


def test_profile_row_count(tmp_path):
    p = tmp_path / "profile.csv"
    lines = profile_lines(peaked_values()).splitlines()[:-1]
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="287"):
        read_profile(p)


def test_profile_bad_value_reports_line(tmp_path):
    p = tmp_path / "profile.csv"
    lines = profile_lines(peaked_values()).splitlines()
    lines[3] = "2,00:10,not-a-number"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="line 4"):
        read_profile(p)


def test_profile_out_of_order_slot(tmp_path):
    p = tmp_path / "profile.csv"
    lines = profile_lines(peaked_values()).splitlines()
    lines[1], lines[2] = lines[2], lines[1]
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="out of order"):
        read_profile(p)


def test_histogram_parses(tmp_path):
    p = tmp_path / "hist_ALPHA.csv"
    p.write_text(hist_lines(10))
    h = read_histogram(p)
    assert h.edges.size == 11
    assert h.before.size == h.after.size == 10
    assert h.edges[0] == 0.0 and h.edges[-1] == 2.0


def test_histogram_bad_header(tmp_path):
    p = tmp_path / "hist.csv"
    p.write_text("left,right,a,b\n1,2,3,4\n")
    with pytest.raises(SchemaError, match="expected header"):
        read_histogram(p)


def test_histogram_no_rows(tmp_path):
    p = tmp_path / "hist.csv"
    p.write_text("bin_left,bin_right,count_before,count_after\n")
    with pytest.raises(SchemaError, match="no histogram rows"):
        read_histogram(p)


def test_histogram_bad_count_reports_line(tmp_path):
    p = tmp_path / "hist.csv"
    lines = hist_lines(5).splitlines()
    lines[2] = "0.4,0.8,seven,1"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="line 3"):
        read_histogram(p)


def test_histogram_gap_rejected(tmp_path):
    p = tmp_path / "hist.csv"
    p.write_text("bin_left,bin_right,count_before,count_after\n"
                 "0.0,1.0,3,4\n1.5,2.0,1,2\n")
    with pytest.raises(SchemaError, match="not contiguous"):
        read_histogram(p)


# ---------------------------------------------------------------------------
# drawing

def parsed(tmp_path, doc):
    p = tmp_path / "flowgraph.json"
    write_doc(p, doc)
    return load_flowgraph(p)


def test_flow_ribbon_count_and_styles(tmp_path):
    doc = parsed(tmp_path, flow_doc())
    fig, ax = plt.subplots()
    n_ribbons, n_loops = _draw_flow(ax, doc, RenderStyle())
    assert n_ribbons == 17
    assert n_loops == 1
    assert len(ax.patches) == 17
    styles = {p.get_linestyle() for p in ax.patches}
    assert any(s in ("--", "dashed") for s in styles)   # negative edges
    assert any(s in ("-", "solid") for s in styles)
    # ribbon width grows with |weight|
    widths = {}
    for e, patch in zip(doc.edges, ax.patches):
        widths[abs(float(e["weight"]))] = patch.get_linewidth()
    lo, hi = min(widths), max(widths)
    assert widths[hi] > widths[lo]
    plt.close(fig)


def test_flow_edge_color_encodes_source(tmp_path):
    doc = parsed(tmp_path, flow_doc(n_edges=17))
    fig, ax = plt.subplots()
    _draw_flow(ax, doc, RenderStyle())
    by_source = {}
    for e, patch in zip(doc.edges, ax.patches):
        by_source.setdefault(e["source"], set()).add(patch.get_edgecolor())
    # one colour per source, distinct across sources
    assert all(len(cs) == 1 for cs in by_source.values())
    flat = [next(iter(cs)) for cs in by_source.values()]
    assert len(set(flat)) == len(flat)
    plt.close(fig)


def test_flow_empty_graph_renders_nodes_only(tmp_path):
    doc = parsed(tmp_path, {**flow_doc(n_edges=0), "self_loops": []})
    out = tmp_path / "flow.png"
    report = render_flow(doc, out)
    assert report.n_ribbons == 0
    assert report.n_self_loops == 0
    assert out.stat().st_size > 0


def test_flow_self_loop_only_annotates(tmp_path):
    doc = parsed(tmp_path, flow_doc(n_edges=0))
    fig, ax = plt.subplots()
    n_ribbons, n_loops = _draw_flow(ax, doc, RenderStyle())
    assert n_ribbons == 0 and n_loops == 1
    texts = [t.get_text() for t in ax.texts]
    assert "+0.21" in texts
    plt.close(fig)


def test_render_does_not_mutate_input(tmp_path):
    p = tmp_path / "flowgraph.json"
    write_doc(p, flow_doc())
    before = p.read_bytes()
    render_flow(load_flowgraph(p), tmp_path / "flow.png")
    assert p.read_bytes() == before


def test_render_twice_is_byte_identical(tmp_path):
    doc = parsed(tmp_path, flow_doc())
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_flow(doc, a)
    render_flow(doc, b)
    assert a.read_bytes() == b.read_bytes()


def test_profiles_flat_line_and_ticks(tmp_path):
    p = tmp_path / "profile_X.csv"
    p.write_text(profile_lines(np.full(288, 3.0)))
    prof = read_profile(p)
    fig, ax = plt.subplots()
    _draw_profiles(ax, [("X", prof)], RenderStyle())
    assert np.all(ax.lines[0].get_ydata() == 3.0)
    labels = [t.get_text() for t in ax.get_xticklabels()]
    assert labels == ["00:00", "04:00", "08:00", "12:00", "16:00", "20:00"]
    plt.close(fig)


def test_profiles_peak_label(tmp_path):
    p = tmp_path / "profile_ALPHA.csv"
    p.write_text(profile_lines(peaked_values(192)))
    report = render_profiles([("ALPHA", read_profile(p))], tmp_path / "prof.png")
    assert report.peak_labels == {"ALPHA": "16:00"}


def test_profiles_overlay_has_legend(tmp_path):
    a = tmp_path / "profile_A.csv"
    b = tmp_path / "profile_B.csv"
    a.write_text(profile_lines(peaked_values(100)))
    b.write_text(profile_lines(peaked_values(200)))
    fig, ax = plt.subplots()
    _draw_profiles(ax, [("A", read_profile(a)), ("B", read_profile(b))],
                   RenderStyle())
    legend = ax.get_legend()
    assert legend is not None
    names = {t.get_text() for t in legend.get_texts()}
    assert names == {"A", "B"}
    plt.close(fig)


def test_histogram_panels(tmp_path):
    named = []
    for name in ("A", "B", "C"):
        p = tmp_path / f"hist_{name}.csv"
        p.write_text(hist_lines())
        named.append((name, read_histogram(p)))
    out = tmp_path / "hist.png"
    report = render_histograms(named, out)
    assert report.n_panels == 3
    assert out.stat().st_size > 0


def test_empty_render_requests_rejected(tmp_path):
    with pytest.raises(ValueError, match="no profiles"):
        render_profiles([], tmp_path / "x.png")
    with pytest.raises(ValueError, match="no histograms"):
        render_histograms([], tmp_path / "x.png")


def test_style_rejects_unknown_format():
    with pytest.raises(ValueError, match="format"):
        RenderStyle(fmt="pdf")


# ---------------------------------------------------------------------------
# command line

def test_cli_flow(tmp_path, capsys):
    p = tmp_path / "flowgraph.json"
    write_doc(p, flow_doc())
    out = tmp_path / "flow.png"
    rc = cli.main(["flow", str(p), "--out", str(out)])
    assert rc == 0
    assert "17 ribbons" in capsys.readouterr().out
    assert out.stat().st_size > 0


def test_cli_flow_version_mismatch_exits_nonzero(tmp_path, capsys):
    p = tmp_path / "flowgraph.json"
    write_doc(p, flow_doc(schema_version=9))
    rc = cli.main(["flow", str(p), "--out", str(tmp_path / "x.png")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "schema_version 9" in err
    assert "version 1" in err
    assert not (tmp_path / "x.png").exists()


def test_cli_profiles_strips_prefix(tmp_path, capsys):
    p = tmp_path / "profile_ALPHA.csv"
    p.write_text(profile_lines(peaked_values(192)))
    rc = cli.main(["profiles", str(p), "--out", str(tmp_path / "prof.svg")])
    assert rc == 0
    assert "ALPHA peaks at 16:00" in capsys.readouterr().out
    assert "16:00" in (tmp_path / "prof.svg").read_text()


def test_cli_malformed_csv_reports_line(tmp_path, capsys):
    p = tmp_path / "profile_X.csv"
    lines = profile_lines(peaked_values()).splitlines()
    lines[5] = "4,00:20,oops"
    p.write_text("\n".join(lines) + "\n")
    rc = cli.main(["profiles", str(p), "--out", str(tmp_path / "x.png")])
    assert rc == 2
    assert "line 6" in capsys.readouterr().err


def test_cli_histograms(tmp_path, capsys):
    p = tmp_path / "hist_A.csv"
    p.write_text(hist_lines())
    rc = cli.main(["histograms", str(p), "--out", str(tmp_path / "h.png")])
    assert rc == 0
    assert "1 panels" in capsys.readouterr().out


def test_cli_missing_input_exits_2(tmp_path, capsys):
    rc = cli.main(["flow", str(tmp_path / "absent.json"),
                   "--out", str(tmp_path / "x.png")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_cli_unknown_command_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sparkline", "--out", "x.png"])
    assert exc.value.code == 2
