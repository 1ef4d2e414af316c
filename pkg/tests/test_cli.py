import csv
import json
from pathlib import Path

import pytest

from netfilt import graph as G
from netfilt import theory as T
from netfilt.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_gen_graph(tmp_path):
    assert main(["gen-graph", "--topology", "er", "--p", "50", "--seed", "7", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "graph.txt").read_text()
    assert text.splitlines()[0] == "# p=50"
    g = G.read_edge_list(tmp_path / "graph.txt")
    assert g.p == 50 and g.n_edges > 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "gen-graph" and manifest["seed"] == 7
    assert set(manifest["outputs"]) == {"graph.txt"}

    again = tmp_path / "again"
    main(["gen-graph", "--topology", "er", "--p", "50", "--seed", "7", "--out", str(again)])
    assert (again / "graph.txt").read_text() == text


def test_gen_graph_geometric_positions(tmp_path):
    assert main(["gen-graph", "--topology", "geometric", "--p", "30", "--seed", "1", "--out", str(tmp_path)]) == 0
    pos = [ln for ln in (tmp_path / "graph.txt").read_text().splitlines() if ln.startswith("# pos ")]
    assert len(pos) == 30
    assert all(0 <= float(x) <= 1 for ln in pos for x in ln.split()[3:])


def test_check_conditions_outputs(tmp_path):
    main(["gen-graph", "--topology", "geometric", "--p", "100", "--seed", "0", "--out", str(tmp_path)])
    rc = main(["check-conditions", "--graph", str(tmp_path / "graph.txt"), "--q", "0.99", "--n", "50",
               "--q-sweep", "0.1:0.9:5", "--rho-grid", "--rho-points", "20", "--out", str(tmp_path)])
    assert rc == 0
    rows = {r["condition"]: r for r in read_csv(tmp_path / "conditions.csv")}
    ev = rows["eigenvalue_ratio"]
    assert ev["satisfied"] == "false"
    assert float(ev["lhs"]) >= 10 * float(ev["rhs"])
    assert {"rho", "theorem2[printed]", "theorem2[corrected]"} <= set(rows)
    sweep = read_csv(tmp_path / "q_sweep.csv")
    assert [float(r["q"]) for r in sweep] == pytest.approx([0.1, 0.3, 0.5, 0.7, 0.9])
    assert len(read_csv(tmp_path / "rho_grid.csv")) == 3 * 20
    limits = read_csv(tmp_path / "rho_limits.csv")
    for r in limits:
        assert float(r["r_limit"]) == pytest.approx(T.sparsity_limit(float(r["n_over_p"]), 1.0))
    assert set(json.loads((tmp_path / "manifest.json").read_text())["outputs"]) >= {"conditions.csv", "q_sweep.csv"}


def test_check_conditions_empty_graph(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("# p=10\n")
    assert main(["check-conditions", "--graph", str(path), "--out", str(tmp_path)]) == 0
    ev = read_csv(tmp_path / "conditions.csv")[0]
    assert float(ev["lhs"]) == 1.0 and ev["satisfied"] == "true"


def test_run_experiment_quick(tmp_path):
    assert main(["run-experiment", "--config", str(CONFIGS / "quick.txt"), "--out", str(tmp_path), "--outcomes"]) == 0
    table = read_csv(tmp_path / "quick.csv")
    assert len(table) == 3 * 3
    assert {r["method"] for r in table} == {"true", "filter", "direct"}
    assert len(read_csv(tmp_path / "quick_outcomes.csv")) == 3 * 3 * 5
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "quick.csv" in manifest["outputs"]

    other = tmp_path / "b"
    main(["run-experiment", "--config", str(CONFIGS / "quick.txt"), "--out", str(other)])
    assert (other / "quick.csv").read_bytes() == (tmp_path / "quick.csv").read_bytes()

    main(["run-experiment", "--config", str(CONFIGS / "quick.txt"), "--set", "name=alt",
          "--set", "replicates=2", "--out", str(other)])
    assert read_csv(other / "alt.csv")[0]["replicates"] == "2"


def test_shipped_configs_parse():
    from netfilt.cli import load_config_runs
    for name in ("topologies.json", "weight_shapes.json", "sample_size.json", "quick.txt"):
        _, runs = load_config_runs(CONFIGS / name)
        assert runs and all(n_values for _, n_values in runs)
    _, sizes = load_config_runs(CONFIGS / "sample_size.json")
    assert all(n_values == [20, 50, 100, 150] for _, n_values in sizes)


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run-experiment", "--bogus"])
    assert exc.value.code == 1
    assert main(["check-conditions", "--graph", str(tmp_path / "missing.txt")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"topolgy": "ba"}))
    assert main(["run-experiment", "--config", str(bad), "--out", str(tmp_path)]) == 1
    capsys.readouterr()


def test_domain_errors(tmp_path):
    assert main(["check-conditions", "--topology", "ba", "--q", "1.5", "--out", str(tmp_path)]) == 2
    assert main(["gen-graph", "--topology", "geometric", "--p", "10", "--out", str(tmp_path)]) == 2
