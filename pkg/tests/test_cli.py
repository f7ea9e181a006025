import numpy as np
import pytest

from cicmb.cli import main


@pytest.fixture(scope="module")
def graph_file(tmp_path_factory):
    rng = np.random.default_rng(21)
    src, dst = rng.integers(100, 400, 1200), rng.integers(100, 400, 1200)
    path = tmp_path_factory.mktemp("cli") / "graph.txt"
    path.write_text("# random test graph\n" + "".join(f"{u} {v}\n" for u, v in zip(src, dst)))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


FAST = ["--rumor-count", 5, "--prospect-count", 20, "--reps", 20, "--resamples", 2,
        "--selector-runs", 20, "--seed", 3]


def test_ingest_chain(tmp_path, capsys):
    p = tmp_path / "chain.txt"
    p.write_text("0 1\n1 2\n")
    code, out, _ = run(capsys, "ingest", "--graph", p)
    assert code == 0
    assert out.strip() == "nodes=3 edges=2 diameter=2 self_loops_dropped=0 duplicates_dropped=0"


def test_ingest_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    code, _, err = run(capsys, "ingest", "--graph", missing)
    assert code != 0
    assert str(missing) in err
    assert len(err.strip().splitlines()) == 1


def test_ingest_parse_error(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("0 1\nfoo bar\n")
    code, _, err = run(capsys, "ingest", "--graph", p)
    assert code == 1 and "line 2" in err


@pytest.mark.parametrize("selector", ["ktruthscore", "tmb", "tib", "random"])
def test_select_prints_k_lines(graph_file, capsys, selector):
    code, out, err = run(capsys, "select", "--graph", graph_file, "--selector", selector, "--k", 5, *FAST)
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 5
    nodes = [int(line.split()[0]) for line in lines]
    assert len(set(nodes)) == 5 and all(100 <= v < 400 for v in nodes)
    [float(line.split()[1]) for line in lines]
    assert err.startswith("# cicmb 0.1.0 ") and "master_seed=3" in err


def test_select_reproducible(graph_file, capsys):
    args = ("select", "--graph", graph_file, "--selector", "random", *FAST)
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_select_k_too_large(graph_file, capsys):
    code, _, err = run(capsys, "select", "--graph", graph_file, "--k", 21, *FAST)
    assert code != 0 and "k=21" in err


def test_select_schedule_dump(graph_file, tmp_path, capsys):
    out = tmp_path / "sched.csv"
    code, _, _ = run(capsys, "select", "--graph", graph_file, "--k", 2, "--schedule-out", out, *FAST)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# cicmb 0.1.0 config_sha256=")
    assert {line.split(",")[1] for line in lines[1:]} == {"mval", "tval"}


def test_seed_defaults_to_time_and_is_echoed(graph_file, capsys):
    code, _, err = run(capsys, "select", "--graph", graph_file, "--selector", "random", "--k", 1,
                       "--rumor-count", 2, "--prospect-count", 5)
    assert code == 0
    assert "master_seed=" in err and "master_seed= " not in err


def test_simulate_and_log(graph_file, tmp_path, capsys):
    log = tmp_path / "log.csv"
    code, out, _ = run(capsys, "simulate", "--graph", graph_file, "--selector", "ktruthscore", "--k", 3,
                       "--log-out", log, *FAST)
    assert code == 0
    assert out.startswith("runs=20 ")
    rows = log.read_text().splitlines()
    assert rows[0].startswith("# cicmb")
    run_ids = {int(r.split(",")[0]) for r in rows[1:]}
    assert run_ids == set(range(20))
    assert {r.split(",")[3] for r in rows[1:]} <= {"M", "T"}


def test_evaluate(graph_file, capsys):
    code, out, _ = run(capsys, "evaluate", "--graph", graph_file, "--selector", "ktruthscore,random", *FAST)
    assert code == 0
    lines = out.strip().splitlines()
    assert [line.split()[0] for line in lines] == ["selector=ktruthscore", "selector=random"]


def test_suite_outputs_and_determinism(graph_file, tmp_path, capsys):
    args = ["suite", "--graph", graph_file, "--selector", "ktruthscore,tmb,tib", "--sweep", "k",
            "--values", "2,4,6,8,10", *FAST]
    assert run(capsys, *args, "--out", tmp_path / "a")[0] == 0
    assert run(capsys, *args, "--out", tmp_path / "b", "--jobs", 2)[0] == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    assert len(a.decode().splitlines()) == 2 + 3 * 5 * 2
    assert (tmp_path / "a" / "plot_k.tsv").read_text().startswith("# cicmb 0.1.0 config_sha256=")


def test_suite_bias_rule_files(graph_file, tmp_path, capsys):
    code, _, _ = run(capsys, "suite", "--graph", graph_file, "--sweep", "bias_rule",
                     "--values", "linear,quadratic", "--out", tmp_path, *FAST)
    assert code == 0
    assert (tmp_path / "plot_bias_rule_linear.tsv").exists()
    assert (tmp_path / "plot_bias_rule_quadratic.tsv").exists()


def test_suite_from_config_file(graph_file, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"graph_path={graph_file}\nselector=random\nsweep_param=rumor_count\nsweep_values=5,10\n"
                   "prospect_count=20\nrepetitions=10\nresamples=1\nmaster_seed=4\n")
    code, _, err = run(capsys, "suite", "--config", cfg, "--out", tmp_path / "o")
    assert code == 0 and "master_seed=4" in err
    assert len((tmp_path / "o" / "results.csv").read_text().splitlines()) == 4


def test_suite_needs_sweep(graph_file, tmp_path, capsys):
    code, _, err = run(capsys, "suite", "--graph", graph_file, "--out", tmp_path, *FAST)
    assert code == 1 and "--sweep" in err


def test_unknown_flag_rejected(graph_file):
    with pytest.raises(SystemExit) as exc:
        main(["select", "--graph", str(graph_file), "--frobnicate"])
    assert exc.value.code != 0
