import json
import os
from importlib import resources

import jsonschema
import numpy as np
import pytest

from netdiff.cli import (
    IngestManifest,
    ingest_panel,
    run_cli,
    write_covariates_csv,
    write_edges_csv,
    write_outcomes_csv,
)
from netdiff.dgp import DgpSpec, simulate_panel
from netdiff.errors import EmptyPanelError, OrphanNodeError, SchemaError
from netdiff.graph import erdos_renyi, from_edge_list
from netdiff.inference import EstimateOptions, estimate_diffusion

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_manifest(**kw):
    base = dict(
        edges_path=os.path.join(FIXTURES, "edges.csv"),
        outcomes_path=os.path.join(FIXTURES, "outcomes.csv"),
        covariates_path=os.path.join(FIXTURES, "covariates.csv"),
    )
    base.update(kw)
    return IngestManifest(**base)


def load_schema(name):
    with resources.files("netdiff.schemas").joinpath(name).open() as fh:
        return json.load(fh)


# --- ingestion ----------------------------------------------------------

def test_golden_fixture_exact_panel():
    panel, g, ids = ingest_panel(fixture_manifest())
    assert ids == [0, 1, 2, 3, 4]
    assert list(panel.y0) == [0, 1, 0, 0, 1]
    assert list(panel.y1) == [1, 0, 0, 1, 0]
    assert panel.x.shape == (5, 2)
    assert panel.x[3, 1] == -0.5
    expected = from_edge_list([(0, 1), (1, 2), (2, 0), (3, 1), (4, 3)], 5)
    assert g == expected


def test_reversed_mode_transposes():
    panel_f, g_f, _ = ingest_panel(fixture_manifest())
    panel_r, g_r, _ = ingest_panel(fixture_manifest(direction="reversed"))
    assert g_r == g_f.transpose()
    assert np.array_equal(panel_r.y0, panel_f.y0)


def test_reversed_is_involution(tmp_path):
    # reversing the already-reversed file recovers the original graph
    _, g_r, _ = ingest_panel(fixture_manifest(direction="reversed"))
    path = tmp_path / "edges_rev.csv"
    write_edges_csv(str(path), g_r)
    _, g_rr, _ = ingest_panel(fixture_manifest(edges_path=str(path),
                                               direction="reversed"))
    _, g_f, _ = ingest_panel(fixture_manifest())
    assert g_rr == g_f


def test_missing_field_drops_node_and_prunes_edges(caplog):
    manifest = fixture_manifest(
        outcomes_path=os.path.join(FIXTURES, "outcomes_missing.csv"))
    with caplog.at_level("WARNING", logger="netdiff"):
        panel, g, ids = ingest_panel(manifest)
    assert panel.n == 4
    assert ids == [0, 1, 2, 3]
    assert g.n_edges == 4  # edge (4,3) pruned
    assert any("dropping 1 node" in m for m in caplog.messages)


def test_missing_policy_error():
    manifest = fixture_manifest(
        outcomes_path=os.path.join(FIXTURES, "outcomes_missing.csv"),
        missing="error")
    with pytest.raises(SchemaError):
        ingest_panel(manifest)


def test_orphan_edge_rejected(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("target,source\n0,99\n")
    with pytest.raises(OrphanNodeError):
        ingest_panel(fixture_manifest(edges_path=str(path)))


def test_empty_panel_rejected(tmp_path):
    out = tmp_path / "outcomes.csv"
    out.write_text("id,y0,y1\n0,,\n")
    cov = tmp_path / "covariates.csv"
    cov.write_text("id,x1\n0,1.0\n")
    edges = tmp_path / "edges.csv"
    edges.write_text("target,source\n")
    with pytest.raises(EmptyPanelError):
        ingest_panel(IngestManifest(edges_path=str(edges), outcomes_path=str(out),
                                    covariates_path=str(cov)))


def test_bad_header_rejected(tmp_path):
    bad = tmp_path / "edges.csv"
    bad.write_text("a,b\n0,1\n")
    with pytest.raises(SchemaError):
        ingest_panel(fixture_manifest(edges_path=str(bad)))


# --- round trip -----------------------------------------------------------

def test_round_trip_bit_identical(tmp_path):
    seed = 2024
    g = erdos_renyi(150, 1.5, seed=seed)
    ss = np.random.SeedSequence(seed)
    s_panel, _ = ss.spawn(2)
    panel = simulate_panel(g, DgpSpec.benchmark_lowdim(1.0), seed=s_panel)
    in_memory = estimate_diffusion(panel, g, EstimateOptions(seed=7, draws=400))

    write_edges_csv(str(tmp_path / "e.csv"), g)
    write_outcomes_csv(str(tmp_path / "o.csv"), panel)
    write_covariates_csv(str(tmp_path / "x.csv"), panel)
    panel2, g2, _ = ingest_panel(IngestManifest(
        edges_path=str(tmp_path / "e.csv"),
        outcomes_path=str(tmp_path / "o.csv"),
        covariates_path=str(tmp_path / "x.csv")))
    assert g2 == g
    assert np.array_equal(panel2.x, panel.x)  # %.17g round-trips exactly
    again = estimate_diffusion(panel2, g2, EstimateOptions(seed=7, draws=400))
    assert again.estimate == in_memory.estimate
    assert again.sigma_plus == in_memory.sigma_plus
    assert again.ci == in_memory.ci and again.clb == in_memory.clb


# --- command dispatch -------------------------------------------------------

def test_cli_usage_error_is_exit_2(capsys):
    assert run_cli(["estimate"]) == 2
    capsys.readouterr()


def test_cli_unknown_command_is_exit_2(capsys):
    assert run_cli(["frobnicate"]) == 2
    capsys.readouterr()


def test_cli_validation_error_is_exit_2(tmp_path, capsys):
    rc = run_cli(["graph-stats", "--edges", str(tmp_path / "nope.csv")])
    assert rc == 2
    capsys.readouterr()


def test_gen_graph_then_stats_pipeline(tmp_path, capsys):
    edges = str(tmp_path / "g.csv")
    stats = str(tmp_path / "s.json")
    assert run_cli(["gen-graph", "--model", "er", "--n", "500", "--lambda", "1",
                    "--seed", "7", "--out", edges]) == 0
    assert run_cli(["graph-stats", "--edges", edges, "--n", "500",
                    "--out", stats]) == 0
    payload = json.load(open(stats))
    jsonschema.validate(payload, load_schema("graph_stats.schema.json"))
    assert payload["n"] == 500
    assert 0.8 <= payload["avg_deg"] <= 1.25
    capsys.readouterr()


def test_simulate_then_estimate_cli(tmp_path, capsys):
    prefix = str(tmp_path / "run")
    assert run_cli(["simulate", "--model", "er", "--n", "200", "--lambda", "1.5",
                    "--delta0", "1.0", "--seed", "3", "--true-sims", "2000",
                    "--out-prefix", prefix]) == 0
    sidecar = json.load(open(prefix + "-truth.json"))
    jsonschema.validate(sidecar, load_schema("sidecar.schema.json"))
    report_path = str(tmp_path / "report.json")
    assert run_cli(["estimate", "--edges", prefix + "-edges.csv",
                    "--outcomes", prefix + "-outcomes.csv",
                    "--covariates", prefix + "-covariates.csv",
                    "--variant", "irr", "--alpha", "0.01", "--seed", "5",
                    "--out", report_path]) == 0
    report = json.load(open(report_path))
    jsonschema.validate(report, load_schema("report.schema.json"))
    assert report["alpha"] == 0.01
    assert report["ci_lower"] <= report["estimate"] <= report["ci_upper"]
    err = capsys.readouterr().err
    assert "estimate=" in err  # one-line human summary


def test_mc_command_toml(tmp_path, capsys):
    config = tmp_path / "cells.toml"
    config.write_text(
        "[defaults]\nreps = 12\ntrue_sims = 1000\nseed = 5\n\n"
        "[[cells]]\nname = \"demo\"\ngraph_model = \"er\"\n"
        "graph_param = 1.0\nn = 100\ndelta0 = 1.0\n")
    out = str(tmp_path / "mcout")
    assert run_cli(["mc", "--config", str(config), "--out", out,
                    "--workers", "1"]) == 0
    cell = json.load(open(os.path.join(out, "cell-demo.json")))
    jsonschema.validate(cell, load_schema("mc_report.schema.json"))
    merged = open(os.path.join(out, "cells.csv")).read().splitlines()
    assert merged[0].startswith("cell,model,param,n,delta0")
    assert len(merged) == 2
    capsys.readouterr()


def test_mc_command_bad_config(tmp_path, capsys):
    config = tmp_path / "cells.json"
    config.write_text(json.dumps({"cells": [{"name": "x", "bogus": 1}]}))
    assert run_cli(["mc", "--config", str(config), "--out",
                    str(tmp_path / "o")]) == 2
    capsys.readouterr()


def test_custom_column_mapping(tmp_path):
    edges = tmp_path / "e.csv"
    edges.write_text("to,frm\n1,0\n")
    out = tmp_path / "o.csv"
    out.write_text("node,start,end\n0,0,1\n1,1,0\n")
    cov = tmp_path / "x.csv"
    cov.write_text("node,x1\n0,0.5\n1,1.5\n")
    manifest = IngestManifest(
        edges_path=str(edges), outcomes_path=str(out), covariates_path=str(cov),
        columns={"edges": {"target": "to", "source": "frm"},
                 "outcomes": {"id": "node", "y0": "start", "y1": "end"},
                 "covariates": {"id": "node"}})
    panel, g, _ = ingest_panel(manifest)
    assert panel.n == 2
    assert g.n_edges == 1 and g.targets[0] == 1 and g.sources[0] == 0
