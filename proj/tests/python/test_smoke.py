import math

import numpy as np
import pytest
import scipy.linalg

import replimit


def test_aggregate_matches_mean():
    assert replimit.aggregate(8.18, 3.67, 5.0, 5.15) == pytest.approx(5.50, abs=0.005)
    with pytest.raises(ValueError):
        replimit.aggregate(11.0, 0, 0, 0)


def test_lexicon_and_scoring():
    lex = replimit.Lexicon([("dog", 10, 8.0), ("cat", 3, 9.0)], 2.0, 7.0)
    assert len(lex) == 2
    assert lex.lookup("dog") == (10, 8.0)
    assert lex.lookup("zebra") is None
    back = replimit.Lexicon.parse(lex.to_tsv())
    assert back.to_tsv() == lex.to_tsv()
    r = replimit.score_caption("a dog", lex)
    assert set(r) == {"si", "bt", "tm", "da", "si10", "bt10", "tm10", "da10", "gs"}
    assert r["tm"] == 0.5
    assert 0.0 <= r["gs"] <= 10.0
    assert replimit.mock_generalize("A dog in Paris", "general", lex) == "dog"
    assert "dog" in replimit.build_prompt("dog", "five-word")


def test_replication_score_against_numpy_oracle():
    rng = np.random.default_rng(0)
    train = rng.normal(size=(20, 8)).astype(np.float32)
    gen = rng.normal(size=(15, 8)).astype(np.float32)
    r, n = replimit.replication_score(train, gen)
    tn = train / np.linalg.norm(train, axis=1, keepdims=True)
    gn = gen / np.linalg.norm(gen, axis=1, keepdims=True)
    top = np.sort((gn.astype(np.float64) @ tn.T.astype(np.float64)).max(axis=1))
    assert n == 15
    assert r == pytest.approx(top[math.ceil(0.95 * 15) - 1], abs=1e-6)
    assert replimit.quantile_score([i / 100 for i in range(1, 101)]) == 0.95


def test_frechet_against_scipy():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(60, 5)).astype(np.float32)
    b = (rng.normal(size=(50, 5)) + 0.5).astype(np.float32)
    fa = (a / np.linalg.norm(a, axis=1, keepdims=True)).astype(np.float64)
    fb = (b / np.linalg.norm(b, axis=1, keepdims=True)).astype(np.float64)
    ca, cb = np.cov(fa, rowvar=False), np.cov(fb, rowvar=False)
    covmean = scipy.linalg.sqrtm(ca @ cb).real
    want = np.sum((fa.mean(0) - fb.mean(0)) ** 2) + np.trace(ca + cb - 2 * covmean)
    assert replimit.frechet_distance(a, b) == pytest.approx(want, abs=1e-6)
    assert abs(replimit.frechet_distance(a, a)) < 1e-9


def test_synth_features_and_tensor_files(tmp_path):
    images, captions = replimit.synth_dataset(n_base=6, dup_factor=2, dup_fraction=0.5, seed=2)
    assert images.shape == (9, 16, 16)
    assert len(captions) == 9 and captions[6] == captions[0]
    feats = replimit.toy_features(images)
    assert np.allclose(np.linalg.norm(feats, axis=1), 1.0, atol=1e-5)
    replimit.save_tensor(images, str(tmp_path / "x.rltn"))
    assert np.array_equal(replimit.load_tensor(str(tmp_path / "x.rltn")), images)
    replimit.save_features(feats, str(tmp_path / "f.rlft"))
    assert np.array_equal(replimit.load_features(str(tmp_path / "f.rlft")), feats)
    with pytest.raises(replimit.FormatError):
        replimit.load_tensor(str(tmp_path / "missing.rltn"))


def test_small_experiment_is_reproducible():
    cfg = {
        "dataset": {"n_base": 6, "dup_factor": 2, "dup_fraction": 0.5},
        "strategies": ["none", "dual_fusion"],
        "seeds": [3],
        "steps": 30,
        "hidden": 16,
        "t_max": 10,
    }
    a = replimit.run_experiment(cfg)
    assert a == replimit.run_experiment(cfg)
    assert [r["strategy"]["name"] for r in a["results"]] == ["none", "dual_fusion"]
    assert a["config"]["seeds"] == [3]
    with pytest.raises(ValueError, match="strategies"):
        replimit.run_experiment({**cfg, "strategies": ["nope"]})
