"""Single entry point wiring all subcommands.

    codematch parse|strip|filter|curate|train|eval|alpha|serve|synth ...

Every run resolves its configuration into a manifest (inputs content-hashed,
outputs listed) so reruns are reproducible; the manifest lands next to the
primary output, at --manifest when given, or on stderr for stdout-only runs.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .data import (
    Corpus,
    CorpusError,
    load_codebase,
    load_pairs,
    save_codebase,
    save_pairs,
)
from .evaluation import CodeBase, qa_accuracy, search_mrr
from .funcparse import ComponentMask, ParseError, parse_function, strip_components
from .intent import RuleSet, classify, default_rules, prefilter_python
from .model import ContrastiveMatcher
from .synth import SynthConfig, generate
from .train import TrainingDiverged


class UsageError(ValueError):
    pass


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(args, subcommand, config, inputs, outputs, seed=None):
    manifest = {
        "tool": f"codematch {__version__}",
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    target = getattr(args, "manifest", None)
    if target is None and outputs:
        primary = Path(outputs[0])
        if primary.is_dir():
            target = primary / "manifest.json"
        else:
            target = primary.with_name(primary.name + ".manifest.json")
    if target is None:
        sys.stderr.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8")


def _read_text(path) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _emit(args, payload: str):
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


def _read_query_records(path):
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {lineno}: malformed JSON ({e.msg})") from e
            text = record.get("query") or record.get("text") or record.get("doc")
            if text is None:
                raise CorpusError(f"line {lineno}: missing query text")
            records.append(
                {"query_id": str(record.get("query_id", f"q{lineno:06d}")), "query": text}
            )
    return records


# -- subcommands ---------------------------------------------------------------


def cmd_parse(args) -> int:
    func = parse_function(_read_text(args.infile))
    payload = json.dumps(
        {"header": func.header, "docstring": func.docstring, "body": func.body},
        ensure_ascii=False,
        indent=2,
    ) + "\n"
    _emit(args, payload)
    inputs = [] if args.infile == "-" else [args.infile]
    outputs = [args.out] if args.out else []
    _write_manifest(args, "parse", {"in": args.infile}, inputs, outputs)
    return 0


def cmd_strip(args) -> int:
    keep = {part.strip() for part in args.keep.split(",") if part.strip()}
    unknown = keep - {"header", "docstring", "body"}
    if unknown:
        raise UsageError(f"unknown components: {sorted(unknown)}")
    mask = ComponentMask(
        keep_header="header" in keep,
        keep_docstring="docstring" in keep,
        keep_body="body" in keep,
    )
    func = parse_function(_read_text(args.infile))
    _emit(args, strip_components(func, mask))
    inputs = [] if args.infile == "-" else [args.infile]
    outputs = [args.out] if args.out else []
    _write_manifest(args, "strip", {"in": args.infile, "keep": sorted(keep)}, inputs, outputs)
    return 0


def cmd_filter(args) -> int:
    rules = RuleSet.load(args.rules) if args.rules else default_rules()
    records = _read_query_records(args.infile)
    kept, rejected = [], []
    for record in records:
        text = record["query"]
        if args.require_python and not prefilter_python(text):
            rejected.append({**record, "reason": "missing 'python' keyword"})
            continue
        verdict = classify(text, rules)
        if verdict.has_intent:
            kept.append(record)
        else:
            rejected.append(
                {
                    **record,
                    "reason": "no code-search intent",
                    "category": verdict.matched_category,
                    "keyword": verdict.matched_keyword,
                }
            )
    with open(args.out, "w", encoding="utf-8") as f:
        for record in kept:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    with open(args.rejected, "w", encoding="utf-8") as f:
        for record in rejected:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"kept {len(kept)} / {len(records)} queries", file=sys.stderr)
    inputs = [args.infile] + ([args.rules] if args.rules else [])
    _write_manifest(
        args,
        "filter",
        {"require_python": args.require_python, "rules": args.rules or "bundled"},
        inputs,
        [args.out, args.rejected],
    )
    return 0


def cmd_curate(args) -> int:
    from .curation import CurationConfig, curate
    from .data import make_query

    model = ContrastiveMatcher.load(args.checkpoint)
    queries = [make_query(r["query"]) for r in _read_query_records(args.queries)]
    codes = load_codebase(args.codes)
    config = CurationConfig(
        similarity_threshold=args.threshold, max_code_occurrence=args.max_occ
    )
    query_text = {q.query_id: q.text for q in queries}
    code_text = {c.code_id: c.raw_text for c in codes}
    candidates = curate(queries, codes, model, config)
    with open(args.out, "w", encoding="utf-8") as f:
        for cand in candidates:
            f.write(
                json.dumps(
                    {
                        "pair_id": cand.pair_id,
                        "query": query_text[cand.query_id],
                        "code": code_text[cand.code_id],
                        "similarity": cand.similarity,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"curated {len(candidates)} candidate pairs", file=sys.stderr)
    _write_manifest(
        args,
        "curate",
        {"threshold": args.threshold, "max_occ": args.max_occ},
        [args.checkpoint, args.queries, args.codes],
        [args.out],
    )
    return 0


def cmd_train(args) -> int:
    params = {}
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            params = json.load(f)
    if args.seed is not None:
        params["seed"] = args.seed
    model = ContrastiveMatcher(**params)

    corpus = load_pairs(args.train)
    X, y = corpus.text_pairs(), corpus.labels()
    valid = None
    if args.valid:
        vc = load_pairs(args.valid)
        valid = (vc.text_pairs(), vc.labels())
    model.fit(X, y, valid=valid)
    model.save(args.out)

    history_path = args.history or (args.out + ".history.jsonl")
    with open(history_path, "w", encoding="utf-8") as f:
        for stat in model.history_:
            f.write(
                json.dumps(
                    {
                        "epoch": stat.epoch,
                        "train_loss": stat.train_loss,
                        "valid_metric": stat.valid_metric,
                    }
                )
                + "\n"
            )
    print(f"trained {model.epochs} epochs -> {args.out}", file=sys.stderr)
    inputs = [args.train] + ([args.valid] if args.valid else []) + (
        [args.config] if args.config else []
    )
    _write_manifest(
        args, "train", model.get_params(), inputs, [args.out, history_path],
        seed=model.seed,
    )
    return 0


def cmd_eval(args) -> int:
    if args.task == "search" and not args.codebase:
        raise UsageError("eval search requires --codebase")
    model = ContrastiveMatcher.load(args.checkpoint)
    corpus = load_pairs(args.data)
    if args.task == "qa":
        acc = qa_accuracy(model, corpus.text_pairs(), corpus.labels(), args.threshold)
        result = {"task": "qa", "n": len(corpus.pairs), "accuracy": acc}
    else:
        non_positive = [p.pair_id for p in corpus.pairs if p.label != 1]
        if non_positive:
            raise CorpusError(
                f"search evaluation needs all-positive pairs; offending: {non_positive[:5]}"
            )
        codebase = CodeBase(load_codebase(args.codebase))
        test_pairs = [
            (p.pair_id, corpus.queries[p.query_id].text, p.code_id) for p in corpus.pairs
        ]
        mrr, detail = search_mrr(model, test_pairs, codebase, collect=True)
        result = {
            "task": "search",
            "n": len(test_pairs),
            "codebase_size": len(codebase),
            "mrr": mrr,
            "mrr_x100": 100.0 * mrr,
        }
        if args.per_query:
            with open(args.per_query, "w", encoding="utf-8") as f:
                for r in detail:
                    f.write(
                        json.dumps(
                            {
                                "pair_id": r.query_id,
                                "rank": r.rank_of_gold,
                                "reciprocal_rank": r.reciprocal_rank,
                            }
                        )
                        + "\n"
                    )
    payload = json.dumps(result, indent=2) + "\n"
    _emit(args, payload)
    inputs = [args.checkpoint, args.data] + ([args.codebase] if args.codebase else [])
    outputs = [p for p in (args.out, getattr(args, "per_query", None)) if p]
    _write_manifest(args, "eval", {"task": args.task}, inputs, outputs)
    return 0


def cmd_alpha(args) -> int:
    from .agreement import build_report

    by_step: dict[str, dict[str, list[int]]] = {}

    def add(step, pair_id, value):
        by_step.setdefault(step, {}).setdefault(pair_id, []).append(int(value))

    with open(args.infile, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("event") == "register":
                continue
            if record.get("event") == "judgment":
                add("intent", record["pair_id"], 1 if record["intent"] == "yes" else 0)
                if record.get("answer") is not None:
                    add("answer", record["pair_id"], record["answer"])
            elif "step" in record:
                add(record["step"], record["pair_id"], record["value"])
            else:
                raise CorpusError(f"line {lineno}: unrecognized vote record")
    report = {}
    for step in sorted(by_step):
        rep = build_report(by_step[step])
        report[step] = {
            "alpha": rep.alpha,
            "degenerate": rep.degenerate,
            "n_items": len(by_step[step]),
            "n_votes": sum(len(v) for v in by_step[step].values()),
            "retained": rep.retained,
            "removed": rep.removed,
        }
    payload = json.dumps({"steps": report}, indent=2, sort_keys=True) + "\n"
    _emit(args, payload)
    outputs = [args.out] if args.out else []
    _write_manifest(args, "alpha", {}, [args.infile], outputs)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data, args.log)
    _write_manifest(args, "serve", {"port": args.port, "host": args.host},
                    [args.data], [args.log])
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_synth(args) -> int:
    config = SynthConfig(
        n_train=args.n_train,
        n_valid=args.n_valid,
        n_test=args.n_test,
        pos_fraction=args.pos_fraction,
        seed=args.seed,
    )
    corpus = generate(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_pairs(out_dir / "train.jsonl", corpus.train)
    if config.n_valid:
        save_pairs(out_dir / "valid.jsonl", corpus.valid)
    save_pairs(out_dir / "test.jsonl", corpus.test)
    save_codebase(out_dir / "codebase.jsonl", corpus.test_codebase())
    print(
        f"synth corpus: {config.n_train} train / {config.n_valid} valid / "
        f"{config.n_test} test -> {out_dir}",
        file=sys.stderr,
    )
    _write_manifest(
        args,
        "synth",
        {k: getattr(config, k) for k in ("n_train", "n_valid", "n_test", "pos_fraction")},
        [],
        [out_dir],
        seed=config.seed,
    )
    return 0


# -- argument wiring -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codematch", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("parse", help="segment one function into header/docstring/body")
    p.add_argument("--in", dest="infile", required=True, help="source file or '-' for stdin")
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("strip", help="re-render a function keeping selected components")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--keep", required=True, help="comma list of header,docstring,body")
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_strip)

    p = sub.add_parser("filter", help="remove queries without code-search intent")
    p.add_argument("--rules", default=None, help="rule file (default: bundled rules)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rejected", required=True)
    p.add_argument("--no-require-python", dest="require_python", action="store_false")
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("curate", help="mine candidate pairs with an encoder checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--codes", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--max-occ", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_curate)

    p = sub.add_parser("train", help="train the matcher on a pair file")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", default=None)
    p.add_argument("--config", default=None, help="JSON file of estimator parameters")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", required=True)
    p.add_argument("--history", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on qa or search")
    p.add_argument("task", choices=["qa", "search"])
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--codebase", default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--per-query", dest="per_query", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("alpha", help="agreement report from a vote log")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_alpha)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--data", required=True, help="candidate pair JSONL")
    p.add_argument("--log", required=True, help="append-only vote log path")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-valid", type=int, default=0)
    p.add_argument("--n-test", type=int, default=200)
    p.add_argument("--pos-fraction", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (CorpusError, ParseError, TrainingDiverged, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
