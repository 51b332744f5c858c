import json

import pytest

from answergraph.cli import main

from .conftest import DATA, G_SPURIOUS

STATS_KEYS = {
    "edgeWalks", "agPairsPerEdge", "agTotal", "burnedNodes",
    "burnedPairs", "embeddings", "phase1Ms", "phase2Ms",
}


@pytest.fixture
def chain_files(tmp_path):
    store, cat = tmp_path / "chain.json", tmp_path / "chain.cat"
    assert main(["load", str(DATA / "g_chain.nt"), str(store)]) == 0
    assert main(["catalog", str(store), str(cat)]) == 0
    return store, cat


@pytest.fixture
def spurious_files(tmp_path):
    store, cat = tmp_path / "sp.json", tmp_path / "sp.cat"
    assert main(["load", str(DATA / "g_spurious.nt"), str(store)]) == 0
    assert main(["catalog", str(store), str(cat)]) == 0
    return store, cat


def test_load_reports_counts(tmp_path, capsys):
    assert main(["load", str(DATA / "g_chain.nt"), str(tmp_path / "s.json")]) == 0
    assert capsys.readouterr().out.strip() == "8 triples, 9 nodes, 3 predicates"


def test_catalog_of_empty_store(tmp_path):
    empty = tmp_path / "empty.nt"
    empty.write_text("")
    assert main(["catalog", str(empty), str(tmp_path / "e.cat")]) == 0
    assert (tmp_path / "e.cat").read_text().startswith("#")


def test_missing_file(tmp_path, capsys):
    assert main(["load", str(tmp_path / "nope.nt"), str(tmp_path / "s.json")]) == 1
    assert "error" in capsys.readouterr().err


def test_bad_usage():
    with pytest.raises(SystemExit) as err:
        main(["run"])
    assert err.value.code == 1


def test_parse_error_exit_code(tmp_path, chain_files):
    bad = tmp_path / "bad.rq"
    bad.write_text("?x A\n")
    store, cat = chain_files
    assert main(["run", str(store), str(cat), str(bad)]) == 2
    broken = tmp_path / "broken.nt"
    broken.write_text("a b\n")
    assert main(["load", str(broken), str(tmp_path / "x.json")]) == 2


def test_run_chain_stats(chain_files, capsys):
    store, cat = chain_files
    capsys.readouterr()
    assert main(["run", str(store), str(cat), str(DATA / "chain.rq"), "--stats-json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert set(stats) == STATS_KEYS
    assert stats["agTotal"] == 8 and stats["embeddings"] == 12


def test_run_human_output_and_rows(chain_files, capsys):
    store, cat = chain_files
    capsys.readouterr()
    assert main(["run", str(store), str(cat), str(DATA / "chain.rq")]) == 0
    out = capsys.readouterr().out
    assert "results: 12" in out and "plan:" in out
    assert main(["run", str(store), str(cat), str(DATA / "chain.rq"), "--emit-results", "--no-factorize"]) == 0
    rows = [line for line in capsys.readouterr().out.splitlines() if line.startswith("w")]
    assert len(rows) == 12


@pytest.mark.parametrize("flags, total", [([], 8), (["--edge-burnback"], 0)])
def test_run_spurious(spurious_files, capsys, flags, total):
    store, cat = spurious_files
    capsys.readouterr()
    assert main(["run", str(store), str(cat), str(DATA / "diamond.rq"), "--stats-json", *flags]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert (stats["agTotal"], stats["embeddings"]) == (total, 0)


def test_verify(chain_files, capsys):
    assert main(["verify", str(DATA / "g_chain.nt"), str(DATA / "chain.rq")]) == 0
    assert capsys.readouterr().out.strip() == "MATCH 12 = 12"
    assert main(["verify", str(DATA / "g_spurious.nt"), str(DATA / "diamond.rq"), "--edge-burnback"]) == 0
    assert capsys.readouterr().out.strip() == "MATCH 0 = 0"


def test_verify_detects_corruption(capsys):
    assert main(["verify", str(DATA / "g_chain.nt"), str(DATA / "chain.rq"), "--corrupt"]) == 3
    out = capsys.readouterr().out
    assert out.startswith("MISMATCH")
    assert any(line.startswith("-\t") for line in out.splitlines())


def test_plan_prints_json(chain_files, capsys):
    _, cat = chain_files
    capsys.readouterr()
    assert main(["plan", str(cat), str(DATA / "diamond.rq")]) == 0
    json.loads(capsys.readouterr().out)


def test_mine(tmp_path, capsys):
    data = tmp_path / "d.nt"
    data.write_text(G_SPURIOUS + "a3 P b3\nb3 Q d3\na3 R c3\nc3 S d3\n")
    cat = tmp_path / "d.cat"
    assert main(["catalog", str(data), str(cat)]) == 0
    capsys.readouterr()
    assert main(["mine", str(data), str(cat), "diamond4", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert 1 <= len(lines) <= 3
    assert all(json.loads(line)["embeddings"] > 0 for line in lines)
    assert main(["mine", str(data), str(cat), "hexagon", "3"]) != 0
