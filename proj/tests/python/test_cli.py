import json
import os
import struct
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("REPLIMIT_CLI")
SOURCE = Path(os.environ.get("REPLIMIT_SOURCE_DIR", Path(__file__).resolve().parents[2]))
pytestmark = pytest.mark.skipif(not CLI, reason="REPLIMIT_CLI not set")


def run(*args, cwd=None, check=True):
    proc = subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True)
    if check:
        assert proc.returncode == 0, proc.stderr
    return proc


def write_lexicon(path):
    path.write_text("lemma\thypo\tdepth\ndog\t10\t8\ncat\t3\t9\n#avg_global_hypo=2\n#da_global=7\n")


def test_score_and_errors(tmp_path):
    write_lexicon(tmp_path / "lex.tsv")
    (tmp_path / "c.jsonl").write_text(
        '{"id":"a","caption":"A dog runs in Paris"}\n{"id":"b","caption":"two cats"}\n{"id":"c","caption":"a cat"}\n'
    )
    out = json.loads(run("score", "--captions", tmp_path / "c.jsonl", "--lexicon", tmp_path / "lex.tsv",
                         "--per-caption").stdout)
    assert 0 <= out["summary"]["gs"] <= 10
    assert [i["id"] for i in out["captions"]] == ["a", "b", "c"]
    assert out["config"]["lexicon"].endswith("lex.tsv")

    (tmp_path / "bad.jsonl").write_text('{"id":"a","caption":"x"}\nnot json\n')
    bad = run("score", "--captions", tmp_path / "bad.jsonl", "--lexicon", tmp_path / "lex.tsv", check=False)
    assert bad.returncode != 0 and ":2" in bad.stderr and bad.stdout == ""


def test_generalize_mock_uses_cache(tmp_path):
    write_lexicon(tmp_path / "lex.tsv")
    (tmp_path / "c.jsonl").write_text('{"id":"a","caption":"A dog in Paris"}\n')
    args = ("generalize", "--captions", tmp_path / "c.jsonl", "--mock", "--lexicon", tmp_path / "lex.tsv",
            "--cache", tmp_path / "cache.jsonl")
    first = run(*args).stdout
    assert json.loads(first)["generalized"] == "dog"
    assert run(*args).stdout == first
    assert len((tmp_path / "cache.jsonl").read_text().splitlines()) == 1
    assert run("generalize", "--captions", tmp_path / "c.jsonl", "--mock", check=False).returncode != 0


def test_synth_features_repscore(tmp_path):
    run("synth", "--n-base", 10, "--dup-factor", 3, "--dup-fraction", 0.2, "--seed", 4, "-o", tmp_path / "d.rltn")
    assert len((tmp_path / "d.rltn.jsonl").read_text().splitlines()) == 14
    run("features", "--images", tmp_path / "d.rltn", "-o", tmp_path / "d.rlft")
    same = json.loads(run("repscore", "--train-features", tmp_path / "d.rlft", "--gen-features",
                          tmp_path / "d.rlft").stdout)
    assert same["R"] == 1.0 and same["n_train"] == 14

    # one unit row of dimension 3
    (tmp_path / "e.rlft").write_bytes(b"RLFT" + struct.pack("<3I3f", 1, 1, 3, 1.0, 0.0, 0.0))
    mismatch = run("repscore", "--train-features", tmp_path / "d.rlft", "--gen-features", tmp_path / "e.rlft",
                   check=False)
    assert mismatch.returncode != 0 and "dimension" in mismatch.stderr


def test_train_sample_roundtrip(tmp_path):
    run("synth", "--n-base", 6, "--seed", 1, "-o", tmp_path / "d.rltn")
    run("train", "--images", tmp_path / "d.rltn", "--captions", tmp_path / "d.rltn.jsonl", "--steps", 20,
        "--hidden", 8, "--t-max", 10, "--seed", 2, "-o", tmp_path / "m.json")
    model = json.loads((tmp_path / "m.json").read_text())
    assert model["training"]["seed"] == 2
    for name in ("a.rltn", "b.rltn"):
        run("sample", "--model", tmp_path / "m.json", "--caption", "a circle", "--n", 2, "--seed", 7,
            "-o", tmp_path / name)
    assert (tmp_path / "a.rltn").read_bytes() == (tmp_path / "b.rltn").read_bytes()


def test_experiment_reproducible_and_field_errors(tmp_path):
    cfg = json.loads((SOURCE / "configs" / "table4_toy.json").read_text())
    cfg.update(steps=15, hidden=16, t_max=10, dataset={"n_base": 8, "dup_factor": 2, "dup_fraction": 0.5})
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    args = ("experiment", "--config", tmp_path / "cfg.json", "--seed", 9, "--quiet")
    run(*args, "-o", tmp_path / "a.json", "--samples-dir", tmp_path / "sa")
    run(*args, "-o", tmp_path / "b.json", "--samples-dir", tmp_path / "sb")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    report = json.loads((tmp_path / "a.json").read_text())
    assert {r["strategy"]["name"] for r in report["results"]} >= {"none", "dual_fusion"}
    assert report["config"]["seeds"] == [9]
    for f in sorted((tmp_path / "sa").iterdir()):
        assert f.read_bytes() == (tmp_path / "sb" / f.name).read_bytes()

    cfg["strategies"] = ["none", "sparkle"]
    (tmp_path / "bad.json").write_text(json.dumps(cfg))
    bad = run("experiment", "--config", tmp_path / "bad.json", check=False)
    assert bad.returncode != 0 and "strategies[1]" in bad.stderr


def test_import_lexicon_missing_dir(tmp_path):
    res = run("import-lexicon", "--wordnet", tmp_path / "nowhere", check=False)
    assert res.returncode != 0 and res.stderr
