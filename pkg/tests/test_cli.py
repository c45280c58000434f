import json

import pytest

from lvsa import __version__
from lvsa.checkpoint import load_checkpoint
from lvsa.cli import main
from lvsa.kg import read_vocab


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """gen-kg, queries for every stage, and a three-stage model."""
    root = tmp_path_factory.mktemp("cli")
    kg = root / "kg"
    cfg = root / "run.cfg"
    cfg.write_text("d = 8\nepochs = 2\nbatch_size = 16\nlr = 0.01\n")
    assert run("gen-kg", "--entities", 30, "--relations", 3, "--degree", 4, "--seed", 1, "--out", kg) == 0
    assert run("gen-queries", "--kg", kg, "--tag", "1p", "--mode", "train", "--exhaustive", "--out", root / "q1.jsonl") == 0
    assert run("gen-queries", "--kg", kg, "--tag", "2p", "--tag", "3p", "--n", 10, "--mode", "train", "--out", root / "q2.jsonl") == 0
    assert run("gen-queries", "--kg", kg, "--tag", "2in", "--n", 10, "--mode", "train", "--out", root / "q3.jsonl") == 0
    assert run("gen-queries", "--kg", kg, "--tag", "2p", "--tag", "2in", "--n", 5, "--seed", 3, "--out", root / "test.jsonl") == 0
    ckpt = None
    for stage, q in ((1, "q1"), (2, "q2"), (3, "q3")):
        extra = ["--init", ckpt] if ckpt else []
        out = root / f"s{stage}.ckpt"
        args = ["train", "--stage", stage, "--kg", kg, "--queries", root / f"{q}.jsonl", "--config", cfg, "--out", out]
        assert run(*args, *extra, "--log", root / f"s{stage}.json") == 0
        ckpt = out
    return root


class TestUsage:
    def test_help(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("eval", "--help")
        assert exc.value.code == 0
        assert "--ckpt" in capsys.readouterr().out

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("--version")
        assert exc.value.code == 0 and __version__ in capsys.readouterr().out

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            run("eval", "--bogus")
        assert exc.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            run("fly")
        assert exc.value.code == 2

    def test_bad_threads(self, tmp_path):
        assert run("--threads", 0, "gen-kg", "--entities", 5, "--relations", 1, "--degree", 1, "--out", tmp_path) == 2


class TestPipeline:
    def test_stage_metadata(self, workspace):
        p, adam = load_checkpoint(workspace / "s3.ckpt")
        assert p.meta["stage"] == 3 and p.d == 8
        assert adam is not None and adam.step > 0
        log = json.loads((workspace / "s1.json").read_text())
        assert [e["epoch"] for e in log] == [1, 2]

    def test_eval_report(self, workspace, capsys):
        assert run("eval", "--ckpt", workspace / "s3.ckpt", "--kg", workspace / "kg", "--queries", workspace / "test.jsonl") == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report) == {"2p", "2in", "a_p", "a_n"}
        assert report["2p"]["n"] == 5

    def test_eval_is_reproducible(self, workspace):
        outs = []
        for name in ("a.json", "b.json"):
            path = workspace / name
            run("eval", "--ckpt", workspace / "s3.ckpt", "--kg", workspace / "kg", "--queries", workspace / "test.jsonl", "--out", path)
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_ground_and_trace(self, workspace, capsys):
        args = ["--ckpt", workspace / "s3.ckpt", "--kg", workspace / "kg"]
        assert run("ground", *args, "--queries", workspace / "test.jsonl", "--k", 3) == 0
        rows = json.loads(capsys.readouterr().out)
        assert len(rows) == 10
        assert all(len(r) == 3 for r in rows[:5]) and rows[5:] == [None] * 5
        line = (workspace / "test.jsonl").read_text().splitlines()[0]
        assert run("trace", *args, "--query", line, "--k", 2) == 0
        trace = json.loads(capsys.readouterr().out)
        assert [n["kind"] for n in trace["disjuncts"][0]["nodes"]] == ["anchor", "dependent", "free"]

    def test_interpret_and_bench(self, workspace, capsys):
        args = ["--ckpt", workspace / "s3.ckpt", "--kg", workspace / "kg"]
        assert run("interpret", *args, "--queries", workspace / "q2.jsonl") == 0
        assert 0 <= json.loads(capsys.readouterr().out)["path_precision"] <= 1
        assert run("bench", *args, "--n", 0) == 0
        assert json.loads(capsys.readouterr().out) == {"ratios": {}, "rows": {}}


class TestErrors:
    def test_stage_without_init(self, workspace, capsys):
        code = run("train", "--stage", 2, "--kg", workspace / "kg", "--queries", workspace / "q2.jsonl", "--out", workspace / "x.ckpt")
        assert code == 1
        assert "lvsa: error:" in capsys.readouterr().err

    def test_stage_skipping(self, workspace):
        code = run(
            "train", "--stage", 3, "--kg", workspace / "kg", "--queries", workspace / "q3.jsonl",
            "--init", workspace / "s1.ckpt", "--out", workspace / "x.ckpt",
        )
        assert code == 1

    def test_missing_file(self, workspace, capsys):
        assert run("eval", "--ckpt", workspace / "nope.ckpt", "--kg", workspace / "kg", "--queries", workspace / "test.jsonl") == 1
        assert "nope.ckpt" in capsys.readouterr().err

    def test_exhaustive_needs_1p_train(self, workspace):
        assert run("gen-queries", "--kg", workspace / "kg", "--tag", "2p", "--exhaustive", "--mode", "train", "--out", workspace / "x") == 1

    def test_bad_config(self, workspace, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = blue\n")
        args = ["train", "--stage", 1, "--kg", workspace / "kg", "--queries", workspace / "q1.jsonl", "--config", cfg]
        assert run(*args, "--out", tmp_path / "x.ckpt") == 1

    def test_ingest(self, tmp_path):
        (tmp_path / "train.tsv").write_text("a\tr\tb\nb\tr\tc\n")
        (tmp_path / "test.tsv").write_text("c\tr\td\n")
        assert run("ingest", "--train", tmp_path / "train.tsv", "--test", tmp_path / "test.tsv", "--out", tmp_path / "kg") == 0
        assert read_vocab(tmp_path / "kg" / "entities.tsv") == ["a", "b", "c", "d"]
        (tmp_path / "bad.tsv").write_text("a\tr\n")
        assert run("ingest", "--train", tmp_path / "bad.tsv", "--out", tmp_path / "kg2") == 1
