import csv

import numpy as np
import pytest

from hermflow import io as hio
from hermflow.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main, read_config
from hermflow.experiments import mean_rows, run_sweep
from hermflow.trade import DEFAULT_COLUMNS

from conftest import bipartite_one_way

HEADER = [DEFAULT_COLUMNS[f] for f in ("reporter", "partner", "flow", "commodity", "year", "value")]


def tree(root):
    return sorted(str(p.relative_to(root)) for p in root.rglob("*"))


def test_generate_writes_files_and_is_deterministic(tmp_path):
    argv = ["generate", "--n", "200", "--k", "4", "--p", "0.5", "--q", "0.5", "--eta", "0.9", "--seed", "1"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(argv + ["--out", str(tmp_path / "b")]) == EXIT_OK
    assert tree(tmp_path / "a") == ["graph.tsv", "ground_truth.csv", "manifest.json"]
    for name in ("graph.tsv", "ground_truth.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    m = hio.read_json(tmp_path / "a" / "manifest.json")
    assert m["subcommand"] == "generate" and m["seeds"] == {"dsbm": 1}
    assert m["params"]["n"] == 200 and "generate" in m["timings"]


def test_generate_rejects_indivisible_k(tmp_path, capsys):
    rc = main(["generate", "--n", "10", "--k", "3", "--p", "0.5", "--q", "0.5", "--eta", "0.9", "--out", str(tmp_path)])
    assert rc == EXIT_INPUT
    assert "divide" in capsys.readouterr().err


def test_usage_error_exit_code(tmp_path):
    assert main(["generate", "--out", str(tmp_path)]) == EXIT_INPUT


def test_cluster_bipartite_fixture(tmp_path):
    hio.write_edge_list(bipartite_one_way(5, 3), tmp_path / "g.tsv")
    out = tmp_path / "run"
    assert main(["cluster", str(tmp_path / "g.tsv"), "--k", "2", "--out", str(out)]) == EXIT_OK
    diag = hio.read_json(out / "diagnostics.json")
    assert diag["phi"] == 0.5
    assert abs(diag["lambda1"]) <= 1e-9
    ids, raw, ordered = hio.read_labels(out / "labels.csv")
    np.testing.assert_array_equal(ordered, [1] * 5 + [0] * 3)
    assert (out / "embedding.png").stat().st_size > 0


def test_cluster_with_truth_baseline_and_sidecar(tmp_path):
    assert main(["generate", "--n", "120", "--k", "3", "--p", "0.3", "--q", "0.3", "--eta", "1.0",
                 "--variant", "path_only", "--out", str(tmp_path / "gen")]) == EXIT_OK
    hio.write_sidecar([f"v{i}" for i in range(120)], tmp_path / "ids.tsv")
    out = tmp_path / "run"
    rc = main(["cluster", str(tmp_path / "gen" / "graph.tsv"), "--k", "3", "--truth",
               str(tmp_path / "gen" / "ground_truth.csv"), "--baseline", "ddsym",
               "--sidecar", str(tmp_path / "ids.tsv"), "--plot", "false", "--out", str(out)])
    assert rc == EXIT_OK
    diag = hio.read_json(out / "diagnostics.json")
    assert diag["ari"] >= 0.9
    assert {"ddsym_phi", "ddsym_ari", "lambda2", "cost", "seed", "k"} <= set(diag)
    ids, _, ordered = hio.read_labels(out / "labels_ddsym.csv")
    assert ids[0] == "v0" and len(ordered) == 120
    assert not (out / "embedding.png").exists()


def test_cluster_sparsify_report(tmp_path):
    assert main(["generate", "--n", "200", "--k", "4", "--p", "0.5", "--q", "0.5", "--eta", "0.9",
                 "--out", str(tmp_path / "gen")]) == EXIT_OK
    out = tmp_path / "run"
    rc = main(["cluster", str(tmp_path / "gen" / "graph.tsv"), "--k", "4", "--sparsify",
               "--plot", "no", "--out", str(out)])
    assert rc == EXIT_OK
    rep = hio.read_json(out / "preservation.json")
    assert rep["retained_edges"] < rep["original_edges"]
    assert rep["sparsifier"]["lambda2_source"].startswith("estimated")
    assert hio.read_edge_list(out / "sparsified.tsv").m == rep["retained_edges"]


def test_cluster_k_too_large(tmp_path):
    hio.write_edge_list(bipartite_one_way(1, 1), tmp_path / "g.tsv")
    assert main(["cluster", str(tmp_path / "g.tsv"), "--k", "3", "--out", str(tmp_path / "o")]) == EXIT_INPUT


def test_cluster_missing_graph(tmp_path):
    assert main(["cluster", str(tmp_path / "none.tsv"), "--k", "2", "--out", str(tmp_path / "o")]) == EXIT_INPUT


def test_cluster_nonconvergence_exit_code(tmp_path):
    assert main(["generate", "--n", "120", "--k", "4", "--p", "0.3", "--q", "0.3", "--eta", "0.8",
                 "--out", str(tmp_path / "gen")]) == EXIT_OK
    rc = main(["cluster", str(tmp_path / "gen" / "graph.tsv"), "--k", "4", "--tolerance", "1e-300",
               "--plot", "0", "--out", str(tmp_path / "o")])
    assert rc == EXIT_NUMERIC


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("# dsbm settings\nn = 60\nk = 3\np = 0.4\nq = 0.4\neta = 0.9\nseed = 7\n")
    assert read_config(cfg)["n"] == "60"
    assert main(["generate", "--config", str(cfg), "--seed", "8", "--out", str(tmp_path / "o")]) == EXIT_OK
    m = hio.read_json(tmp_path / "o" / "manifest.json")
    assert m["params"]["n"] == 60 and m["params"]["seed"] == 8
    cfg.write_text("colour = blue\n")
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "p")]) == EXIT_INPUT


def test_rerun_is_bit_exact(tmp_path):
    assert main(["generate", "--n", "120", "--k", "3", "--p", "0.3", "--q", "0.3", "--eta", "0.9",
                 "--out", str(tmp_path / "gen")]) == EXIT_OK
    first = tmp_path / "first"
    assert main(["cluster", str(tmp_path / "gen" / "graph.tsv"), "--k", "3", "--sparsify", "--alpha-s", "0.5",
                 "--baseline", "hermrw", "--seed", "3", "--out", str(first)]) == EXIT_OK
    second = tmp_path / "second"
    assert main(["rerun", str(first / "manifest.json"), "--out", str(second)]) == EXIT_OK
    assert tree(first) == tree(second)
    for name in tree(first):
        if name != "manifest.json":
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
    a, b = hio.read_json(first / "manifest.json"), hio.read_json(second / "manifest.json")
    a["params"].pop("out"), b["params"].pop("out")
    assert a["params"] == b["params"]


def test_no_writes_outside_out(tmp_path, monkeypatch):
    work = tmp_path / "cwd"
    work.mkdir()
    monkeypatch.chdir(work)
    hio.write_edge_list(bipartite_one_way(3, 3), tmp_path / "g.tsv")
    before = tree(tmp_path)
    assert main(["cluster", str(tmp_path / "g.tsv"), "--k", "2", "--sparsify", "--out", str(tmp_path / "o")]) == 0
    after = [p for p in tree(tmp_path) if not p.startswith("o")]
    assert after == before


def test_sweep_rows_and_means(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--protocol", "all_pairs", "--n", "40", "--seeds", "2", "--out", str(out)]) == EXIT_OK
    with open(out / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["method", "p", "eta", "seed", "ari"]
    seed_rows = [r for r in rows if r["seed"] != "mean"]
    means = [r for r in rows if r["seed"] == "mean"]
    assert len(seed_rows) == 3 * 4 * 5 * 2 and len(means) == 3 * 4 * 5
    for m in means:
        vals = [float(r["ari"]) for r in seed_rows if (r["method"], r["p"], r["eta"]) == (m["method"], m["p"], m["eta"])]
        assert float(m["ari"]) == pytest.approx(np.mean(vals), abs=1e-15)
    assert (out / "sweep.png").exists()


def test_sweep_no_signal_rows():
    rows = run_sweep("all_pairs", n=200, seeds=range(5), eta_grid=(0.5,))
    for method, p, eta, seed, ari in mean_rows(rows):
        assert ari <= 0.1, (method, p)


def test_sweep_workers_do_not_change_results():
    kw = dict(n=40, seeds=range(2), p_grid=(0.5,), eta_grid=(0.9,))
    assert run_sweep("all_pairs", workers=1, **kw) == run_sweep("all_pairs", workers=2, **kw)


def test_sweep_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("HERMFLOW_THREADS", "1")
    assert main(["sweep", "--protocol", "path_only", "--n", "80", "--seeds", "1", "--methods", "simpleherm",
                 "--plot", "false", "--out", str(tmp_path)]) == EXIT_OK


# -- trade ------------------------------------------------------------------------


def chain_rows(groups, year, commodity="2701"):
    """Every country of group j exports to every country of group j + 1, with mirror imports."""
    rows = []
    for j in range(len(groups) - 1):
        for a in groups[j]:
            for b in groups[j + 1]:
                rows.append((a, b, "X", commodity, year, 10.0))
                rows.append((b, a, "M", commodity, year, 9.0))
    return rows


def write_trade(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        w.writerows(rows)
    return path


CODES = [f"C{i:02d}" for i in range(12)]


def test_trade_drift_and_ordering(tmp_path):
    base = [CODES[0:3], CODES[3:6], CODES[6:9], CODES[9:12]]
    shuffled = [[CODES[i] for i in idx] for idx in ([0, 4, 8], [1, 5, 9], [2, 6, 10], [3, 7, 11])]
    rows = chain_rows(base, 2001) + chain_rows(base, 2002) + chain_rows(shuffled, 2003) + chain_rows(shuffled, 2004)
    rows.append(("C00", "C01", "X", "4401", 2001, 99.0))  # other commodity, filtered out
    path = write_trade(tmp_path / "t.csv", rows)
    out = tmp_path / "run"
    rc = main(["trade", str(path), "--commodity", "27", "--k", "4", "--years", "2001", "2002", "2003", "2004",
               "2005", "--out", str(out)])
    assert rc == EXIT_OK
    with open(out / "drift.csv", newline="") as fh:
        drift = [float(r["symmetric_difference"]) for r in csv.DictReader(fh)]
    assert drift[0] == 0 and drift[2] == 0 and drift[1] > 0
    ids, _, ordered = hio.read_labels(out / "labels_2001.csv")
    lab = dict(zip(ids, ordered.tolist()))
    # the first exporters form the chain start (label k - 1), the last importers the sink
    assert {lab[c] for c in base[0]} == {3} and {lab[c] for c in base[3]} == {0}
    assert {lab[c] for c in base[1]} == {2} and {lab[c] for c in base[2]} == {1}
    rep = hio.read_json(out / "trade_diagnostics.json")
    assert rep["skipped_years"] == [{"year": 2005, "reason": "no matching records"}]
    assert rep["years"]["2001"]["reconciled_by_max"] == 27
    assert rep["years"]["2001"]["chain_start_label"] == 3
    assert rep["parse"]["filtered_out"] == 1
    assert hio.read_sidecar(out / "countries_2001.tsv") == CODES
    assert (out / "drift.png").exists()


def test_trade_identical_years_up_to_relabel(tmp_path):
    groups = [CODES[0:4], CODES[4:8], CODES[8:12]]
    path = write_trade(tmp_path / "t.csv", chain_rows(groups, 2010) + chain_rows(groups, 2011))
    assert main(["trade", str(path), "--k", "3", "--plot", "off", "--out", str(tmp_path / "o")]) == EXIT_OK
    with open(tmp_path / "o" / "drift.csv", newline="") as fh:
        assert [float(r["symmetric_difference"]) for r in csv.DictReader(fh)] == [0.0]


def test_trade_custom_columns(tmp_path):
    header = ["r", "pt", "f", "c", "y", "v"]
    with open(tmp_path / "t.tsv", "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t")
        w.writerow(header)
        w.writerows(chain_rows([["A"], ["B"], ["C"]], 2000))
    cols = "reporter=r,partner=pt,flow=f,commodity=c,year=y,value=v"
    rc = main(["trade", str(tmp_path / "t.tsv"), "--k", "2", "--columns", cols, "--delimiter", "\t",
               "--out", str(tmp_path / "o")])
    assert rc == EXIT_OK
    assert main(["trade", str(tmp_path / "t.tsv"), "--k", "2", "--out", str(tmp_path / "p")]) == EXIT_INPUT
