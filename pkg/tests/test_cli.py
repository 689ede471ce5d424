import json

import pytest

from codematch.cli import main

FUNC = 'def f(x):\n    """doc."""\n    return x\n'


def _run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_no_args_is_usage_error(capsys):
    code, _, _ = _run([], capsys)
    assert code == 1


def test_unknown_subcommand(capsys):
    code, _, _ = _run(["frobnicate"], capsys)
    assert code == 1


def test_help_exits_zero(capsys):
    code, out, _ = _run(["--help"], capsys)
    assert code == 0


def test_parse_subcommand(tmp_path, capsys):
    src = tmp_path / "func.py"
    src.write_text(FUNC)
    code, out, _ = _run(["parse", "--in", str(src)], capsys)
    assert code == 0
    parsed = json.loads(out)
    assert parsed["header"] == "def f(x):\n"
    assert parsed["docstring"].strip() == '"""doc."""'


def test_parse_error_exit_2(tmp_path, capsys):
    src = tmp_path / "notafunc.py"
    src.write_text("x = 1\n")
    code, _, err = _run(["parse", "--in", str(src)], capsys)
    assert code == 2
    assert "error" in err


def test_strip_subcommand(tmp_path, capsys):
    src = tmp_path / "func.py"
    src.write_text(FUNC)
    code, out, _ = _run(["strip", "--in", str(src), "--keep", "header,body"], capsys)
    assert code == 0
    assert out == "def f(x):\n    return x\n"


def test_strip_bad_component(tmp_path, capsys):
    src = tmp_path / "func.py"
    src.write_text(FUNC)
    code, _, err = _run(["strip", "--in", str(src), "--keep", "comments"], capsys)
    assert code == 1


def test_filter_subcommand(tmp_path, capsys):
    queries = tmp_path / "queries.jsonl"
    with open(queries, "w") as f:
        for q in [
            "python sort a list",
            "difference between list and tuple python",
            "sort a list",  # no 'python'
        ]:
            f.write(json.dumps({"query": q}) + "\n")
    kept = tmp_path / "kept.jsonl"
    rejected = tmp_path / "rejected.jsonl"
    code, _, err = _run(
        ["filter", "--in", str(queries), "--out", str(kept), "--rejected", str(rejected)],
        capsys,
    )
    assert code == 0
    kept_rows = [json.loads(l) for l in kept.read_text().splitlines()]
    rejected_rows = [json.loads(l) for l in rejected.read_text().splitlines()]
    assert [r["query"] for r in kept_rows] == ["python sort a list"]
    assert len(rejected_rows) == 2
    reasons = {r["query"]: r["reason"] for r in rejected_rows}
    assert reasons["sort a list"] == "missing 'python' keyword"
    assert "intent" in reasons["difference between list and tuple python"]
    # manifest written next to the primary output
    manifest = json.loads((tmp_path / "kept.jsonl.manifest.json").read_text())
    assert manifest["subcommand"] == "filter"
    assert str(queries) in manifest["inputs"]


def _synth(tmp_path, capsys, n_train=40, n_test=10, seed=1):
    out_dir = tmp_path / "corpus"
    code, _, _ = _run(
        [
            "synth", "--out-dir", str(out_dir),
            "--n-train", str(n_train), "--n-test", str(n_test),
            "--pos-fraction", "0.7", "--seed", str(seed),
        ],
        capsys,
    )
    assert code == 0
    return out_dir


def test_synth_outputs(tmp_path, capsys):
    out_dir = _synth(tmp_path, capsys)
    for name in ("train.jsonl", "test.jsonl", "codebase.jsonl", "manifest.json"):
        assert (out_dir / name).exists()
    rows = [json.loads(l) for l in (out_dir / "train.jsonl").read_text().splitlines()]
    assert len(rows) == 40
    assert {"pair_id", "query", "code", "label"} <= set(rows[0])


CONFIG = {
    "d": 8,
    "batch_size": 8,
    "epochs": 1,
    "learning_rate": 0.05,
    "min_token_freq": 1,
}


def _train(tmp_path, capsys, out_name, seed):
    out_dir = tmp_path / "corpus"
    config = tmp_path / "config.json"
    if not config.exists():
        config.write_text(json.dumps(CONFIG))
    ckpt = tmp_path / out_name
    code, _, _ = _run(
        [
            "train", "--train", str(out_dir / "train.jsonl"),
            "--config", str(config), "--seed", str(seed), "--out", str(ckpt),
        ],
        capsys,
    )
    assert code == 0
    return ckpt


def test_train_deterministic_checkpoints(tmp_path, capsys):
    _synth(tmp_path, capsys)
    c1 = _train(tmp_path, capsys, "a.ckpt.json", seed=7)
    c2 = _train(tmp_path, capsys, "b.ckpt.json", seed=7)
    assert c1.read_bytes() == c2.read_bytes()
    c3 = _train(tmp_path, capsys, "c.ckpt.json", seed=8)
    assert c1.read_bytes() != c3.read_bytes()
    history = (tmp_path / "a.ckpt.json.history.jsonl").read_text().splitlines()
    assert len(history) == 1
    assert "train_loss" in json.loads(history[0])
    manifest = json.loads((tmp_path / "a.ckpt.json.manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["subcommand"] == "train"


def test_eval_qa_and_search(tmp_path, capsys):
    out_dir = _synth(tmp_path, capsys)
    ckpt = _train(tmp_path, capsys, "model.ckpt.json", seed=3)
    code, out, _ = _run(
        ["eval", "qa", "--checkpoint", str(ckpt), "--data", str(out_dir / "train.jsonl")],
        capsys,
    )
    assert code == 0
    result = json.loads(out)
    assert result["task"] == "qa" and 0.0 <= result["accuracy"] <= 1.0

    per_query = tmp_path / "perq.jsonl"
    code, out, _ = _run(
        [
            "eval", "search", "--checkpoint", str(ckpt),
            "--data", str(out_dir / "test.jsonl"),
            "--codebase", str(out_dir / "codebase.jsonl"),
            "--per-query", str(per_query),
        ],
        capsys,
    )
    assert code == 0
    result = json.loads(out)
    assert 0.0 < result["mrr"] <= 1.0
    assert result["mrr_x100"] == pytest.approx(100 * result["mrr"])
    detail = [json.loads(l) for l in per_query.read_text().splitlines()]
    assert len(detail) == result["n"]


def test_eval_search_requires_codebase(tmp_path, capsys):
    out_dir = _synth(tmp_path, capsys)
    ckpt = _train(tmp_path, capsys, "model.ckpt.json", seed=3)
    code, _, err = _run(
        ["eval", "search", "--checkpoint", str(ckpt), "--data", str(out_dir / "test.jsonl")],
        capsys,
    )
    assert code == 1
    assert "codebase" in err


def test_eval_search_rejects_negative_pairs(tmp_path, capsys):
    out_dir = _synth(tmp_path, capsys)
    ckpt = _train(tmp_path, capsys, "model.ckpt.json", seed=3)
    code, _, err = _run(
        [
            "eval", "search", "--checkpoint", str(ckpt),
            "--data", str(out_dir / "train.jsonl"),
            "--codebase", str(out_dir / "codebase.jsonl"),
        ],
        capsys,
    )
    assert code == 2
    assert "positive" in err


def test_alpha_subcommand_on_service_log(tmp_path, capsys):
    log = tmp_path / "votes.jsonl"
    events = [
        {"event": "register", "annotator_id": "a1"},
        {"event": "judgment", "pair_id": "p1", "annotator_id": "a1", "intent": "yes", "answer": 1},
        {"event": "judgment", "pair_id": "p1", "annotator_id": "a2", "intent": "yes", "answer": 0},
        {"event": "judgment", "pair_id": "p2", "annotator_id": "a1", "intent": "yes", "answer": 1},
        {"event": "judgment", "pair_id": "p2", "annotator_id": "a2", "intent": "yes", "answer": 1},
    ]
    log.write_text("\n".join(json.dumps(e) for e in events) + "\n")
    code, out, _ = _run(["alpha", "--in", str(log)], capsys)
    assert code == 0
    report = json.loads(out)
    assert set(report["steps"]) == {"answer", "intent"}
    assert report["steps"]["answer"]["n_votes"] == 4


def test_alpha_subcommand_on_bare_votes(tmp_path, capsys):
    log = tmp_path / "votes.jsonl"
    records = [
        {"pair_id": "p1", "annotator_id": "a1", "step": "answer", "value": 1},
        {"pair_id": "p1", "annotator_id": "a2", "step": "answer", "value": 0},
        {"pair_id": "p2", "annotator_id": "a1", "step": "answer", "value": 0},
        {"pair_id": "p2", "annotator_id": "a2", "step": "answer", "value": 0},
    ]
    log.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    code, out, _ = _run(["alpha", "--in", str(log)], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["steps"]["answer"]["alpha"] is not None


def test_curate_subcommand(tmp_path, capsys):
    _synth(tmp_path, capsys)
    ckpt = _train(tmp_path, capsys, "model.ckpt.json", seed=3)
    queries = tmp_path / "queries.jsonl"
    rows = [json.loads(l) for l in (tmp_path / "corpus" / "test.jsonl").read_text().splitlines()]
    with open(queries, "w") as f:
        for r in rows[:5]:
            f.write(json.dumps({"query": r["query"]}) + "\n")
    out = tmp_path / "candidates.jsonl"
    code, _, _ = _run(
        [
            "curate", "--checkpoint", str(ckpt),
            "--queries", str(queries),
            "--codes", str(tmp_path / "corpus" / "codebase.jsonl"),
            "--threshold", "-1.0", "--max-occ", "10",
            "--out", str(out),
        ],
        capsys,
    )
    assert code == 0
    candidates = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(candidates) == 5  # threshold -1 keeps the best code per query
    assert {"pair_id", "query", "code", "similarity"} <= set(candidates[0])
