import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfperc import LatticeBox, ModelParams, WeightDistribution, connected_components, generate_graph
from sfperc import config as C
from sfperc import io
from sfperc.cli import COMMANDS, main, run
from sfperc.errors import ConfigError

GOLDEN = Path(__file__).parent / "golden"

HEADERS = {
    "degrees.csv": "trial,w0,degree,R,truncation_bound",
    "degree_growth.csv": "R,mean_degree,stderr",
    "conditional_degree.csv": "w,R,quadrature,truncation_bound,empirical_mean,stderr",
    "percolation.csv": "L,lambda,trials,mean_fraction,stderr",
    "percolation_trials.csv": "trial,L,lambda,fraction",
    "distances.csv": "norm,pair,x,y,hops",
    "distance_table.csv": "norm,pairs,connected_fraction,median_hops,mean_hops",
    "gfun.csv": "u,g,envelope_ratio",
}


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def data_files(out):
    return {p.name: p.read_bytes() for p in sorted(Path(out).iterdir()) if p.name != "manifest.json"}


class TestConstants:
    def test_pareto_example(self, tmp_path):
        cfg = {"model": {"dimension": 1, "alpha": 2.0, "lambda": 1.0, "weights": {"kind": "pareto", "tau": 3.0}}}
        doc = run("constants", cfg, tmp_path)
        assert doc["gamma"] == 4.0
        assert doc["xi"] == pytest.approx(4.7265436, abs=1e-6)
        assert doc["regime"]["citations"]["degrees_infinite"]
        assert doc["lambda_c_lower_bound"] is None and doc["lambda_c_lower_bound_reason"]

    def test_boundary_flag(self, tmp_path):
        cfg = {"model": {"dimension": 1, "alpha": 2.0, "lambda": 1.0, "weights": {"kind": "pareto", "tau": 2.0}}}
        doc = run("constants", cfg, tmp_path)
        assert doc["gamma"] == 2.0
        assert doc["regime"]["degree_variance_finite"] == "boundary"

    def test_infinite_degrees(self, tmp_path):
        cfg = {"model": {"dimension": 2, "alpha": 1.5, "lambda": 1.0, "weights": {"kind": "pareto", "tau": 2.0}}}
        doc = run("constants", cfg, tmp_path)
        assert doc["degrees_infinite"] is True
        assert doc["xi"] is None and doc["xi_reason"]

    def test_lambda_c_bound(self, tmp_path):
        cfg = {"model": {"dimension": 1, "alpha": 2.0, "lambda": 1.0, "weights": {"kind": "constant"}}}
        doc = run("constants", cfg, tmp_path)
        assert doc["lambda_c_lower_bound"] == pytest.approx(0.3039636, abs=1e-7)
        saved = read_json(tmp_path / "constants.json")
        assert saved["lattice_sum"]["error"] <= 1e-6 * saved["lattice_sum"]["value"]

    def test_distance_constants(self, tmp_path):
        cfg = {"model": {"dimension": 2, "alpha": 3.0, "lambda": 1.0, "weights": {"kind": "pareto", "tau": 2.0}}}
        doc = run("constants", cfg, tmp_path)
        assert doc["distance_constants"]["upper"] == pytest.approx(2 / math.log(2))
        assert doc["distance_constants"]["equal"] is True

    def test_stdout(self, tmp_path, write_config, capsys):
        cfg = {"model": {"dimension": 1, "alpha": 2.0, "lambda": 1.0, "weights": {"kind": "constant"}}}
        assert main(["constants", "--config", str(write_config(cfg)), "--out", str(tmp_path / "o")]) == 0
        assert json.loads(capsys.readouterr().out)["gamma"] is None


class TestGenerate:
    def test_tiny_lambda_header_only(self, tmp_path, base_config):
        base_config["model"]["lambda"] = 1e-12
        run("generate", base_config, tmp_path)
        lines = (tmp_path / "edges.txt").read_text().splitlines()
        assert lines and all(line.startswith("#") for line in lines)
        keys = [line[1:].split("=")[0] for line in lines]
        assert keys == ["d", "L", "boundary", "alpha", "lambda", "weights", "seed", "norm", "version"]

    def test_rerun_identical(self, tmp_path, base_config):
        run("generate", base_config, tmp_path / "a")
        run("generate", base_config, tmp_path / "b")
        assert data_files(tmp_path / "a") == data_files(tmp_path / "b")

    def test_round_trip(self, tmp_path, base_config):
        run("generate", base_config, tmp_path)
        header, edges = io.read_edge_list(tmp_path / "edges.txt")
        _, weights = io.read_weights(tmp_path / "weights.txt")
        params = C.build_params(C.resolve(base_config))
        box = LatticeBox(2, 16)
        g = generate_graph(params, box, 7)
        assert np.array_equal(edges, g.edges)
        assert np.array_equal(weights, g.weights.values)
        assert header["norm"] == "l2" and int(header["seed"]) == 7
        from sfperc.graph import graph_from_edges
        rebuilt = graph_from_edges(box, g.weights, params, 7, edges)
        assert np.array_equal(connected_components(rebuilt)[1], connected_components(g)[1])
        summary = read_json(tmp_path / "generate_summary.json")
        assert summary["edge_count"] == g.edge_count

    def test_budget_exit_code(self, tmp_path, base_config, write_config):
        base_config["generate"] = {"pair_budget": 10}
        assert main(["generate", "--config", str(write_config(base_config)), "--out", str(tmp_path)]) == 3


class TestDegrees:
    def test_rows_and_summary(self, tmp_path, base_config):
        summary = run("degrees", base_config, tmp_path)
        rows = io.read_csv(tmp_path / "degrees.csv")
        assert len(rows) == 300
        for r in rows:
            assert float(r["truncation_bound"]) >= 0
        assert summary["hill"]["k"] == math.ceil(300**0.6)
        assert set(summary["growth"]) >= {"increments", "increment_ratios", "predicted_ratios"}
        cond = io.read_csv(tmp_path / "conditional_degree.csv")
        assert len(cond) == 1

    def test_infinite_regime_bounds_empty(self, tmp_path, base_config):
        base_config["model"]["alpha"] = 1.5
        base_config["model"]["weights"] = {"kind": "constant"}
        base_config["degrees"] = {"trials": 50, "R": 10, "radii": [5, 10, 20]}
        summary = run("degrees", base_config, tmp_path)
        rows = io.read_csv(tmp_path / "degrees.csv")
        assert all(r["truncation_bound"] == "" for r in rows)
        assert summary["degrees_infinite"] is True
        assert summary["growth"]["predicted_ratios"] == [pytest.approx(2**0.5)]


class TestPercolation:
    def test_schema_and_monotone(self, tmp_path, base_config):
        run("percolation", base_config, tmp_path)
        assert (tmp_path / "percolation.csv").read_bytes().split(b"\r\n")[0] == HEADERS["percolation.csv"].encode()
        trials = io.read_csv(tmp_path / "percolation_trials.csv")
        series = {}
        for r in trials:
            series.setdefault((r["trial"], r["L"]), []).append((float(r["lambda"]), float(r["fraction"])))
        for seq in series.values():
            fr = [f for _, f in sorted(seq)]
            assert fr == sorted(fr)

    def test_crossing_json_has_bound(self, tmp_path, base_config):
        base_config["model"] = {"dimension": 2, "alpha": 4.0, "lambda": 1.0, "weights": {"kind": "constant"}}
        base_config["percolation"] = {"sides": [8, 12], "lambdas": [0.05, 0.3, 1.0, 3.0], "trials": 4}
        doc = run("percolation", base_config, tmp_path)
        assert doc["lambda_c_lower_bound"] == pytest.approx(1 / 6.0268120, rel=1e-6)
        assert len(doc["crossings"]) == 2


class TestDistances:
    def test_outputs(self, tmp_path, base_config):
        base_config["distances"]["max_hops"] = 1
        summary = run("distances", base_config, tmp_path)
        raw = io.read_csv(tmp_path / "distances.csv")
        assert len(raw) == 12
        disconnected = sum(r["hops"] == "" for r in raw)
        table = io.read_csv(tmp_path / "distance_table.csv")
        connected = sum(float(t["connected_fraction"]) * int(t["pairs"]) for t in table)
        assert round(connected) == 12 - disconnected
        assert summary["distance_constants"]["upper"] == pytest.approx(2 / math.log(2))
        assert len(summary["reach_profile"]["radii"]) == 4


class TestGfun:
    def test_outputs(self, tmp_path, base_config):
        summary = run("gfun", base_config, tmp_path)
        assert summary["g_nonincreasing"]
        assert len(io.read_csv(tmp_path / "gfun.csv")) == 2


class TestConfig:
    def test_unknown_keys(self, tmp_path, base_config, write_config, capsys):
        base_config["bogus"] = 1
        base_config["geometry"]["x"] = 2
        assert main(["constants", "--config", str(write_config(base_config)), "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "bogus" in err and "geometry/x" in err

    def test_offending_paths(self, base_config):
        base_config["model"]["alpha"] = -1
        with pytest.raises(ConfigError) as info:
            C.resolve(base_config)
        assert "model/alpha" in info.value.offending

    def test_inapplicable_weight_keys(self, base_config):
        base_config["model"]["weights"] = {"kind": "constant", "tau": 3.0}
        with pytest.raises(ConfigError):
            C.resolve(base_config)

    def test_missing_block(self, tmp_path, write_config):
        cfg = {"model": {"dimension": 1, "alpha": 2.0, "lambda": 1.0, "weights": {"kind": "constant"}}}
        assert main(["gfun", "--config", str(write_config(cfg)), "--out", str(tmp_path)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["constants", "--config", str(tmp_path / "nope.json")]) == 2

    def test_manifest_round_trip(self, tmp_path, base_config):
        run("gfun", base_config, tmp_path)
        m = read_json(tmp_path / "manifest.json")
        assert C.resolve(m["config"]) == m["config"]
        assert m["config"] == C.resolve(base_config)
        assert m["seed_rule"] and m["norm"] == "l2" and m["version"]

    def test_manifest_reproduces(self, tmp_path, base_config):
        run("degrees", base_config, tmp_path / "a")
        m = read_json(tmp_path / "a" / "manifest.json")
        run("degrees", m["config"], tmp_path / "b")
        assert data_files(tmp_path / "a") == data_files(tmp_path / "b")

    @settings(max_examples=20, deadline=None)
    @given(alpha=st.floats(2.1, 8.0), lam=st.floats(1e-3, 100.0), tau=st.floats(1.2, 6.0),
           seed=st.integers(0, 2**64 - 1))
    def test_resolve_idempotent(self, alpha, lam, tau, seed):
        raw = {"model": {"dimension": 2, "alpha": alpha, "lambda": lam, "weights": {"kind": "pareto", "tau": tau}},
               "seed": seed}
        once = C.resolve(raw)
        assert C.resolve(once) == once
        assert json.loads(json.dumps(once)) == once


class TestSerialisation:
    def test_csv_empty_fields(self, tmp_path):
        io.write_csv(tmp_path / "t.csv", ["a", "b", "c"], [(1, math.inf, None), (0.1, math.nan, True)])
        assert (tmp_path / "t.csv").read_bytes() == b"a,b,c\r\n1,,\r\n0.1,,true\r\n"

    def test_json_nulls(self):
        assert json.loads(io.dumps_json({"x": math.inf, "y": np.float64(0.5)})) == {"x": None, "y": 0.5}

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_float_round_trip(self, x):
        assert float(io.format_field(x)) == x


@pytest.mark.parametrize("command", COMMANDS)
def test_golden(command, tmp_path, base_config):
    """Byte-for-byte comparison with the frozen outputs of the base config."""
    run(command, base_config, tmp_path)
    for name, content in data_files(tmp_path).items():
        golden = GOLDEN / command / name
        assert golden.exists(), f"no golden file for {command}/{name}"
        assert content == golden.read_bytes(), f"{command}/{name} differs from the golden file"
        if name in HEADERS:
            assert content.split(b"\r\n")[0].decode() == HEADERS[name]
