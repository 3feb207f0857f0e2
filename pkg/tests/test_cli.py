"""End-to-end command-line checks, run in-process through cli.main."""

import json

import numpy as np
import pytest

import pushwalk as pw
from pushwalk import cli, pathsampling


@pytest.fixture
def two_cycle_file(tmp_path):
    path = tmp_path / "pair.txt"
    path.write_text("a b\nb a\n")
    return str(path)


def _records(capsys):
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.strip()]
    return [json.loads(ln) for ln in lines]


# ---------------------------------------------------------------------------
# synthetic generator


def test_gen_families_are_deterministic():
    a = cli.generate_synthetic("power-law", 1000, seed=9)
    b = cli.generate_synthetic("power-law", 1000, seed=9)
    assert a == b
    assert cli.generate_synthetic("cycle", 2) == ["0 1", "1 0"]
    star = cli.generate_synthetic("star", 5)
    assert len(star) == 8 and star.count("0 1") == 1 and star.count("1 0") == 1
    with pytest.raises(ValueError):
        cli.generate_synthetic("cycle", 1)
    with pytest.raises(ValueError):
        cli.generate_synthetic("mystery", 10)


def test_gen_writes_loadable_file(tmp_path, capsys):
    out = tmp_path / "cycle.txt"
    rc = cli.main(["gen", "--kind", "cycle", "--n", "6", "--output", str(out)])
    assert rc == 0
    recs = _records(capsys)
    assert recs[0]["record"] == "config" and recs[0]["parameters"]["n"] == 6
    g = pw.load_edge_list(str(out))
    assert g.n == 6 and g.m == 6
    first = out.read_text().splitlines()[0]
    assert first.startswith("# ")  # config comment survives the parser


def test_gen_rejects_tiny_graph():
    assert cli.main(["gen", "--kind", "cycle", "--n", "1"]) == 1


# ---------------------------------------------------------------------------
# happy paths


def test_oracle_pair_value(two_cycle_file, capsys):
    rc = cli.main(["oracle", "--graph", two_cycle_file, "--source", "a",
                   "--target", "b", "--alpha", "0.2"])
    assert rc == 0
    config, result = _records(capsys)
    assert config["record"] == "config"
    assert result["record"] == "result"
    assert result["estimates"]["target"] == "b"
    assert result["estimates"]["value"] == pytest.approx(4.0 / 9.0, rel=1e-9)


def test_oracle_top_listing_and_global_rank(two_cycle_file, capsys):
    rc = cli.main(["oracle", "--graph", two_cycle_file, "--source", "a",
                   "--global-rank"])
    assert rc == 0
    _, result = _records(capsys)
    top = dict(map(tuple, result["estimates"]["top"]))
    assert top["a"] == pytest.approx(0.5) and top["b"] == pytest.approx(0.5)


def test_oracle_multistep_horizon(two_cycle_file, capsys):
    rc = cli.main(["oracle", "--graph", two_cycle_file, "--source", "a",
                   "--target", "b", "--ell", "3"])
    assert rc == 0
    _, result = _records(capsys)
    assert result["estimates"]["value"] == pytest.approx(1.0)


def test_estimate_default_and_flags(two_cycle_file, capsys):
    rc = cli.main(["estimate", "--graph", two_cycle_file, "--source", "a",
                   "--target", "b", "--seed", "3"])
    assert rc == 0
    config, result = _records(capsys)
    assert config["record"] == "config"
    assert result["estimates"]["value"] == pytest.approx(4.0 / 9.0, abs=0.25)
    assert result["counters"]["pushes"] >= 0
    line = json.dumps(result, sort_keys=True)
    rec = cli.RunRecord.from_line(line)
    assert rec.to_line() == line  # lossless record round-trip


def test_estimate_monte_carlo_and_balanced(two_cycle_file, capsys):
    rc = cli.main(["estimate", "--graph", two_cycle_file, "--source", "a",
                   "--target", "a", "--monte-carlo", "--walks", "700"])
    assert rc == 0
    _, result = _records(capsys)
    assert result["counters"]["walks"] == 700
    assert result["counters"]["r_max"] == "inf"
    assert result["estimates"]["value"] == pytest.approx(5.0 / 9.0, abs=0.06)

    rc = cli.main(["estimate", "--graph", two_cycle_file, "--source", "a",
                   "--target", "b", "--balanced"])
    assert rc == 0
    _, result = _records(capsys)
    assert result["parameters"]["method"] == "balanced"
    assert result["estimates"]["value"] == pytest.approx(4.0 / 9.0, abs=0.25)


def test_estimate_undirected_variant(tmp_path, capsys):
    path = tmp_path / "path3.txt"
    path.write_text("a b\nb c\n")
    rc = cli.main(["estimate", "--graph", str(path), "--undirected",
                   "--undirected-variant", "--source", "a", "--target", "b"])
    assert rc == 0
    _, result = _records(capsys)
    assert result["parameters"]["method"] == "undirected"
    assert result["estimates"]["value"] >= 0.0
    # degree-symmetric estimator demands a symmetric graph
    rc = cli.main(["estimate", "--graph", str(path),
                   "--undirected-variant", "--source", "a", "--target", "b"])
    assert rc == 1


def test_estimate_mstp_and_first_passage(two_cycle_file, capsys):
    rc = cli.main(["estimate-mstp", "--graph", two_cycle_file, "--source", "a",
                   "--target", "b", "--ell-max", "3", "--c", "30"])
    assert rc == 0
    config, result = _records(capsys)
    per_ell = result["estimates"]["per_ell"]
    # entries cover horizons 1..ell_max; on the two-cycle a reaches b at
    # every odd horizon with certainty
    assert len(per_ell) == 3
    assert per_ell[0] == pytest.approx(1.0, abs=0.3)
    assert per_ell[1] == pytest.approx(0.0, abs=0.3)
    assert result["counters"]["paths"] >= 1

    rc = cli.main(["estimate-mstp", "--graph", two_cycle_file, "--source", "a",
                   "--target", "b", "--ell-max", "3", "--first-passage",
                   "--eps-r", "0.001"])
    assert rc == 0
    _, result = _records(capsys)
    # b is hit for the first time at step 1, with certainty
    assert result["estimates"]["per_ell"] == pytest.approx([1, 0, 0], abs=0.05)


def test_heat_kernel_pair(two_cycle_file, capsys):
    rc = cli.main(["heat-kernel", "--graph", two_cycle_file, "--source", "a",
                   "--target", "b", "--t", "1.0"])
    assert rc == 0
    config, result = _records(capsys)
    assert config["parameters"]["ell_max"] >= 1
    # exact value: e^-1 * sum_{odd ell} 1/ell! = e^-1 * sinh(1)
    assert result["estimates"]["value"] == pytest.approx(
        np.exp(-1.0) * np.sinh(1.0), abs=0.2)


def test_search_methods_agree_on_lone_target(tmp_path, two_cycle_file, capsys):
    kw = tmp_path / "kw.tsv"
    kw.write_text("topic\tb\n")
    for method in ("direct", "grouped", "sampling"):
        rc = cli.main(["search", "--graph", two_cycle_file, "--source", "a",
                       "--keyword", "topic", "--keywords", str(kw),
                       "--method", method, "--nsamples", "200"])
        assert rc == 0
        _, result = _records(capsys)
        ranking = result["estimates"]["ranking"]
        assert ranking[0][0] == "b"


def test_precompute_search_then_query(tmp_path, two_cycle_file, capsys):
    kw = tmp_path / "kw.tsv"
    kw.write_text("topic\tb\ntopic\ta\n")
    idx = tmp_path / "idx.bin"
    rc = cli.main(["precompute-search", "--graph", two_cycle_file,
                   "--keywords", str(kw), "--rmax", "0.3",
                   "--output", str(idx)])
    assert rc == 0
    recs = _records(capsys)
    assert recs[1]["counters"]["targets"] == 2
    payload = pw.load_index(idx)
    assert payload["per_keyword"]["topic"]["r_max"] == 0.3

    rc = cli.main(["search", "--graph", two_cycle_file, "--source", "a",
                   "--keyword", "topic", "--index", str(idx), "--seed", "2"])
    assert rc == 0
    _, result = _records(capsys)
    names = [name for name, _ in result["estimates"]["ranking"]]
    assert sorted(names) == ["a", "b"]


def test_precompute_search_adaptive_threshold(tmp_path, two_cycle_file, capsys):
    kw = tmp_path / "kw.tsv"
    kw.write_text("topic\tb\n")
    idx = tmp_path / "adaptive.bin"
    rc = cli.main(["precompute-search", "--graph", two_cycle_file,
                   "--keywords", str(kw), "--adaptive", "--walks", "100",
                   "--topk", "1", "--output", str(idx)])
    assert rc == 0
    payload = pw.load_index(idx)
    got = payload["per_keyword"]["topic"]["r_max"]
    want = pw.adaptive_r_max([1], pw.exact_global_pagerank(
        pw.load_edge_list(two_cycle_file), 0.2), 100, 1)
    assert got == pytest.approx(want)


def test_sample_path_output_format(two_cycle_file, capsys):
    rc = cli.main(["sample-path", "--graph", two_cycle_file, "--source", "a",
                   "--targets", "b", "--epsr", "0.5", "--count", "3"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    header = json.loads(lines[0][2:])
    assert header["record"] == "config"
    assert header["parameters"]["targets"] == ["b"]
    assert len(lines) == 5
    for path_line in lines[1:4]:
        toks = path_line.split()
        assert toks[0] == "a" and toks[-1] == "b"
    assert lines[4].startswith("# paths=3 attempts=")


def test_sample_path_targets_file(tmp_path, two_cycle_file, capsys):
    tf = tmp_path / "targets.txt"
    tf.write_text("b\n")
    rc = cli.main(["sample-path", "--graph", two_cycle_file, "--source", "a",
                   "--targets-file", str(tf)])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].split()[-1] == "b"


def test_precompute_store_and_serve(tmp_path, two_cycle_file, capsys):
    store1 = tmp_path / "store1.bin"
    rc = cli.main(["precompute", "--graph", two_cycle_file, "--delta", "0.05",
                   "--shards", "1", "--output", str(store1)])
    assert rc == 0
    capsys.readouterr()

    store3 = tmp_path / "store3.bin"
    rc = cli.main(["precompute", "--graph", two_cycle_file, "--delta", "0.05",
                   "--shards", "3", "--output", str(store3)])
    assert rc == 0
    capsys.readouterr()

    values = {}
    for store in (store1, store3):
        rc = cli.main(["serve-sim", "--graph", two_cycle_file,
                       "--store", str(store), "--query", "a,b"])
        assert rc == 0
        _, result = _records(capsys)
        assert result["estimates"]["value"] == pytest.approx(
            result["estimates"]["in_process_value"], abs=1e-12)
        values[str(store)] = result["estimates"]["value"]
    # identical walks, exact partial sums: shard count cannot change the answer
    assert len(set(values.values())) == 1


def test_serve_sim_queries_file(tmp_path, two_cycle_file, capsys):
    store = tmp_path / "store.bin"
    assert cli.main(["precompute", "--graph", two_cycle_file, "--delta",
                     "0.05", "--output", str(store)]) == 0
    capsys.readouterr()
    qf = tmp_path / "queries.txt"
    qf.write_text("# header\na b\nb a\n")
    rc = cli.main(["serve-sim", "--graph", two_cycle_file, "--store",
                   str(store), "--queries", str(qf)])
    assert rc == 0
    recs = _records(capsys)
    assert len(recs) == 3  # config + two queries
    assert recs[1]["estimates"]["source"] == "a"
    assert recs[2]["estimates"]["source"] == "b"


def test_bench_rows_and_empty_run(tmp_path, capsys):
    path = tmp_path / "cycle.txt"
    path.write_text("\n".join(cli.generate_synthetic("cycle", 30)) + "\n")
    rc = cli.main(["bench", "--graph", str(path), "--pairs", "3"])
    assert rc == 0
    recs = _records(capsys)
    assert [r["record"] for r in recs] == ["config", "result", "result", "result"]
    names = [r["estimates"]["algorithm"] for r in recs[1:]]
    assert names == ["bidirectional", "balanced", "monte-carlo"]
    for r in recs[1:]:
        assert r["estimates"]["pairs"] == 3
        assert r["estimates"]["median_time_s"] >= 0.0

    rc = cli.main(["bench", "--graph", str(path), "--pairs", "0"])
    assert rc == 0
    assert [r["record"] for r in _records(capsys)] == ["config"]


def test_output_file_instead_of_stdout(tmp_path, two_cycle_file, capsys):
    out = tmp_path / "recs.jsonl"
    rc = cli.main(["estimate", "--graph", two_cycle_file, "--source", "a",
                   "--target", "b", "--output", str(out)])
    assert rc == 0
    assert capsys.readouterr().out == ""
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["record"] == "config"


# ---------------------------------------------------------------------------
# exit codes


def test_usage_errors_exit_one(two_cycle_file):
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["estimate", "--graph", two_cycle_file])  # missing node args
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["oracle", "--graph", two_cycle_file, "--source", "a",
                  "--threads", "0"])
    assert exc.value.code == 1
    # post-parse usage problems return 1 instead of raising
    assert cli.main(["oracle", "--source", "a"]) == 1
    assert cli.main(["search", "--graph", two_cycle_file, "--source", "a",
                     "--keyword", "topic"]) == 1


def test_data_errors_exit_two(tmp_path, two_cycle_file):
    assert cli.main(["oracle", "--graph", str(tmp_path / "missing.txt"),
                     "--source", "0"]) == 2
    assert cli.main(["oracle", "--graph", two_cycle_file,
                     "--source", "zzz"]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("a b notaweight\n")
    assert cli.main(["oracle", "--graph", str(bad), "--source", "a"]) == 2
    garbage = tmp_path / "store.bin"
    garbage.write_bytes(b"this is not a pickle")
    assert cli.main(["serve-sim", "--graph", two_cycle_file, "--store",
                     str(garbage), "--query", "a,b"]) == 2
    kw = tmp_path / "kw.tsv"
    kw.write_text("topic\tb\n")
    assert cli.main(["search", "--graph", two_cycle_file, "--source", "a",
                     "--keyword", "absent", "--keywords", str(kw)]) == 2


def test_numerical_failure_exits_three(tmp_path, monkeypatch):
    path = tmp_path / "islands.txt"
    path.write_text("a a\nb b\n")
    monkeypatch.setattr(pathsampling, "ACCEPTANCE_CAP", 100)
    rc = cli.main(["sample-path", "--graph", str(path), "--source", "a",
                   "--targets", "b"])
    assert rc == 3
