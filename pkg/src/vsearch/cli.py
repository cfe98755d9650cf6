"""Command-line entry point: gen, mine, train, eval, serve, bench.

Every subcommand that writes artifacts also writes a manifest (sorted
key=value lines, including checkpoint hashes) into its output directory so
a run can be reproduced from the manifest alone. All randomness flows from
--seed.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from vsearch.errors import VsearchError


def _manifest(out_dir: Path, values: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"{k}={values[k]}" for k in sorted(values)]
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_world_files(data_dir: Path):
    from vsearch.ranker import RankFeatureContext, click_counts
    from vsearch.retrieval import InvertedIndex
    from vsearch.synth import read_documents, read_lexicons, read_query_log
    docs = read_documents(data_dir / "docs.jsonl")
    log = read_query_log(data_dir / "log.tsv")
    lexicons = read_lexicons(data_dir / "lexicons")
    return docs, log, lexicons


def cmd_gen(args) -> int:
    from vsearch.synth import (GeneratorConfig, generate_world, write_annotations,
                               write_documents, write_lexicons, write_query_log)
    cfg = GeneratorConfig(seed=args.seed, users=args.users, queries=args.queries,
                          paraphrase_rate=args.paraphrase_rate,
                          typo_rate=args.typo_rate,
                          random_click_rate=args.random_click_rate)
    world = generate_world(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_documents(out / "docs.jsonl", world.documents)
    write_query_log(out / "log.tsv", world.log)
    write_lexicons(out / "lexicons", world.lexicons)
    write_annotations(out / "annotations.txt", world.annotations)
    _manifest(out, {"command": "gen", "seed": args.seed, "users": args.users,
                    "queries": args.queries, "paraphrase_rate": args.paraphrase_rate,
                    "typo_rate": args.typo_rate,
                    "random_click_rate": args.random_click_rate,
                    "documents": len(world.documents), "log_entries": len(world.log)})
    print(f"wrote {len(world.documents)} documents, {len(world.log)} log entries -> {out}")
    return 0


def cmd_mine(args) -> int:
    from vsearch.suggest import PairTable
    from vsearch.synth import (filter_generalization_pairs, mine_suggestion_pairs,
                               read_query_log)
    from vsearch.synth.mining import split_log_by_user
    log = read_query_log(Path(args.data) / "log.tsv")
    train, _ = split_log_by_user(log)
    pairs = mine_suggestion_pairs(train)
    filtered = filter_generalization_pairs(pairs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    PairTable.from_pairs(filtered).save(out / "pairs.tsv")
    with open(out / "pairs_raw.tsv", "w", encoding="utf-8") as f:
        for src, tgt in pairs:
            f.write(f"{src}\t{tgt}\n")
    _manifest(out, {"command": "mine", "data": args.data, "pairs_mined": len(pairs),
                    "pairs_filtered": len(filtered)})
    print(f"mined {len(pairs)} pairs, kept {len(filtered)} after generalization filter")
    return 0


def _train_intent(args, data_dir: Path, out: Path) -> dict:
    from vsearch.intent import IntentConfig, train_intent
    from vsearch.synth import derive_intent_labels, read_lexicons, read_query_log
    from vsearch.synth.mining import split_log_by_user
    from vsearch.textprep import Vocabulary, tokenize
    log = read_query_log(data_dir / "log.tsv")
    lexicons = read_lexicons(data_dir / "lexicons")
    train, _ = split_log_by_user(log)
    labeled = derive_intent_labels(train)[: args.max_examples]
    vocab = Vocabulary.build((tokenize(q) for q, _ in labeled), 100_000)
    model = train_intent(labeled, vocab, lexicons,
                         IntentConfig(seed=args.seed, epochs=args.epochs))
    model.save(out / "intent.vsnn")
    return {"examples": len(labeled), "checkpoint": "intent.vsnn"}


def _train_tagger(args, data_dir: Path, out: Path) -> dict:
    from vsearch.synth import read_annotations, read_lexicons, read_query_log
    from vsearch.synth.mining import split_log_by_user
    from vsearch.tagger import TaggerConfig, train_tagger
    log = read_query_log(data_dir / "log.tsv")
    annotations = read_annotations(data_dir / "annotations.txt")
    lexicons = read_lexicons(data_dir / "lexicons")
    train_log, _ = split_log_by_user(log)
    train_users = {e.user for e in train_log}
    train_anns = [a for e, a in zip(log, annotations) if e.user in train_users]
    train_anns = train_anns[: args.max_examples]
    cfg = TaggerConfig(mode=args.mode, seed=args.seed, epochs=args.epochs)
    model = train_tagger(train_anns, lexicons, cfg)
    model.save(out / "tagger.vsnn")
    return {"examples": len(train_anns), "mode": args.mode, "checkpoint": "tagger.vsnn"}


def _train_lm(args, data_dir: Path, out: Path) -> dict:
    from vsearch.complete import CompletionIndex
    from vsearch.lm import LMConfig, train_lm
    from vsearch.synth import read_query_log
    from vsearch.synth.mining import split_log_by_user
    from vsearch.textprep import tokenize
    log = read_query_log(data_dir / "log.tsv")
    train, _ = split_log_by_user(log)
    queries = [e.query for e in train][: args.max_examples]
    corpus = [tokenize(q) for q in queries]
    model = train_lm(corpus, LMConfig(seed=args.seed, epochs=args.epochs,
                                      alpha=args.alpha))
    model.save(out / "lm.vsnn")
    index = CompletionIndex.from_queries(queries)
    index.save(out / "completion_queries.tsv", out / "completion_suffixes.tsv")
    return {"examples": len(corpus), "alpha": args.alpha, "checkpoint": "lm.vsnn"}


def _train_seq2seq(args, data_dir: Path, out: Path) -> dict:
    from vsearch.seq2seq import Seq2SeqConfig, train_seq2seq
    from vsearch.suggest import PairTable
    from vsearch.synth import (filter_generalization_pairs, mine_suggestion_pairs,
                               read_query_log)
    from vsearch.synth.mining import split_log_by_user
    log = read_query_log(data_dir / "log.tsv")
    train, _ = split_log_by_user(log)
    pairs = mine_suggestion_pairs(train)
    filtered = filter_generalization_pairs(pairs)[: args.max_examples]
    cfg = Seq2SeqConfig(seed=args.seed, epochs=args.epochs)
    model = train_seq2seq(filtered, cfg)
    model.save(out / "seq2seq.vsnn")
    PairTable.from_pairs(filtered).save(out / "pairs.tsv")
    return {"pairs": len(filtered), "checkpoint": "seq2seq.vsnn"}


def _train_ranker(args, data_dir: Path, out: Path) -> dict:
    from vsearch.ranker import (RankerConfig, RankFeatureContext, build_embedding_store,
                                build_ranking_groups, click_counts, train_baseline_linear,
                                train_ranker)
    from vsearch.retrieval import InvertedIndex
    from vsearch.synth.mining import split_log_by_user
    from vsearch.textprep import Vocabulary, tokenize
    docs, log, _ = _load_world_files(data_dir)
    index = InvertedIndex(docs)
    train, _ = split_log_by_user(log)
    ctx = RankFeatureContext(index, click_counts(train))
    groups = build_ranking_groups(train, index, max_groups=args.max_examples)
    corpus = [tokenize(e.query) for e in train]
    corpus += [toks for d in docs for toks in index.doc_tokens[d.doc_id].values()]
    vocab = Vocabulary.build(corpus, 100_000)
    cfg = RankerConfig(seed=args.seed, epochs=args.epochs)
    deep = train_ranker(groups, vocab, index, ctx, cfg)
    deep.save(out / "ranker.vsnn")
    light = train_baseline_linear(groups, index, ctx, seed=args.seed)
    light.save(out / "ranker_light.vsnn")
    store = build_embedding_store(deep, [d.doc_id for d in docs], index)
    store.save(out / "store.vseb")
    return {"groups": len(groups), "checkpoint": "ranker.vsnn",
            "store": "store.vseb"}


def cmd_train(args) -> int:
    from vsearch.nn import checkpoint_hash
    data_dir = Path(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    trainers = {"intent": _train_intent, "tagger": _train_tagger, "lm": _train_lm,
                "seq2seq": _train_seq2seq, "ranker": _train_ranker}
    info = trainers[args.task](args, data_dir, out)
    info.update({"command": f"train {args.task}", "seed": args.seed,
                 "data": str(data_dir), "elapsed_s": round(time.time() - t0, 1)})
    for ckpt in sorted(out.glob("*.vsnn")):
        info[f"hash.{ckpt.name}"] = checkpoint_hash(ckpt)
    _manifest(out, info)
    print(f"trained {args.task} in {info['elapsed_s']}s -> {out}")
    return 0


def cmd_eval(args) -> int:
    from vsearch.evalbench import eval_task, write_eval_report
    from vsearch.synth.mining import split_log_by_user
    data_dir = Path(args.data)
    model_dir = Path(args.models)
    out = Path(args.out)
    docs, log, lexicons = _load_world_files(data_dir)
    _, test = split_log_by_user(log)
    config = {"task": args.task, "data": args.data, "models": args.models,
              "seed": args.seed}

    if args.task == "intent":
        from vsearch.intent import IntentModel
        from vsearch.synth import derive_intent_labels
        model = IntentModel.load(model_dir / "intent.vsnn")
        split = derive_intent_labels(test)[: args.max_examples]
        report = eval_task("intent", split, {"model": model, "lexicons": lexicons},
                           config)
    elif args.task == "tagger":
        from vsearch.synth import read_annotations
        from vsearch.tagger import TaggerModel
        model = TaggerModel.load(model_dir / "tagger.vsnn", lexicons)
        annotations = read_annotations(data_dir / "annotations.txt")
        test_users = {e.user for e in test}
        split = [a for e, a in zip(log, annotations) if e.user in test_users]
        report = eval_task("tagger", split[: args.max_examples], {"model": model},
                           config)
    elif args.task == "autocomplete":
        from vsearch.complete import CompletionIndex
        from vsearch.evalbench import keystroke_impressions
        from vsearch.lm import LanguageModel
        from vsearch.textprep import tokenize
        index = CompletionIndex.load(model_dir / "completion_queries.tsv",
                                     model_dir / "completion_suffixes.tsv")
        lm = LanguageModel.load(model_dir / "lm.vsnn")
        queries = [" ".join(tokenize(e.query)) for e in test][: args.max_examples]
        split = keystroke_impressions(queries)
        report = eval_task("autocomplete", split,
                           {"index": index, "lm": lm, "ranker": args.ranker}, config)
    elif args.task == "suggest":
        from vsearch.seq2seq import Seq2SeqModel
        from vsearch.suggest import PairTable
        from vsearch.synth import mine_suggestion_pairs
        split = mine_suggestion_pairs(test)[: args.max_examples]
        if args.mode == "frequency":
            table = PairTable.load(model_dir / "pairs.tsv")
            report = eval_task("suggest", split, {"mode": "frequency", "table": table},
                               config)
        else:
            model = Seq2SeqModel.load(model_dir / "seq2seq.vsnn")
            report = eval_task("suggest", split, {"mode": "seq2seq", "model": model},
                               config)
    elif args.task == "ranker":
        from vsearch.ranker import (LinearRanker, RankFeatureContext, RankerModel,
                                    build_ranking_groups, click_counts)
        from vsearch.retrieval import InvertedIndex
        index = InvertedIndex(docs)
        ctx = RankFeatureContext(index, click_counts(log))
        deep = RankerModel.load(model_dir / "ranker.vsnn")
        models = {"deep": deep, "index": index, "ctx": ctx,
                  "strategy": args.strategy, "k": args.k}
        if args.strategy == "two-pass":
            models["light"] = LinearRanker.load(model_dir / "ranker_light.vsnn")
        if args.strategy == "precomputed":
            from vsearch.ranker import EmbeddingStore
            models["store"] = EmbeddingStore.load(model_dir / "store.vseb")
        split = build_ranking_groups(test, index, vertical=args.vertical,
                                     max_groups=args.max_examples)
        report = eval_task("ranker", split, models, config)
    else:
        raise VsearchError(f"unknown eval task {args.task!r}")

    jpath, _ = write_eval_report(report, out)
    _manifest(out, {**config, **{f"metric.{k}": v for k, v in report.metrics.items()}})
    print(f"{args.task}: " + " ".join(f"{k}={v:.4f}" for k, v in report.metrics.items()))
    print(f"report -> {jpath}")
    return 0


def cmd_serve(args) -> int:
    from vsearch.serving import SearchService, ServingConfig, serve_forever
    config = ServingConfig.parse(args.config)
    if args.port is not None:
        config.port = args.port
    service = SearchService.load(config)
    serve_forever(service)
    return 0


def cmd_bench(args) -> int:
    from vsearch.benchrun import bench_autocomplete, bench_ranking
    out = Path(args.out)
    if args.workload == "autocomplete":
        reports = bench_autocomplete(Path(args.data), Path(args.models), out,
                                     samples=args.samples, seed=args.seed)
    else:
        reports = bench_ranking(Path(args.data), Path(args.models), out,
                                samples=args.samples, k=args.k, seed=args.seed)
    for r in reports:
        print(f"{r.workload_id}: p50={r.p50_us:.0f}us p99={r.p99_us:.0f}us "
              f"(n={r.n_samples})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vsearch",
                                description="latency-aware vertical-search NLP stack")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate the synthetic world")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out", required=True)
    g.add_argument("--users", type=int, default=400)
    g.add_argument("--queries", type=int, default=8000)
    g.add_argument("--paraphrase-rate", type=float, default=0.35)
    g.add_argument("--typo-rate", type=float, default=0.02)
    g.add_argument("--random-click-rate", type=float, default=0.05)
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("mine", help="mine suggestion pairs from the log")
    m.add_argument("--data", required=True)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mine)

    t = sub.add_parser("train", help="train a task model")
    t.add_argument("task", choices=["intent", "tagger", "lm", "seq2seq", "ranker"])
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=1)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--max-examples", type=int, default=4000)
    t.add_argument("--mode", default="SCRF", help="tagger mode")
    t.add_argument("--alpha", type=float, default=0.1, help="LM self-norm penalty")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a trained model on the test split")
    e.add_argument("--task", required=True,
                   choices=["intent", "tagger", "autocomplete", "suggest", "ranker"])
    e.add_argument("--data", required=True)
    e.add_argument("--models", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--seed", type=int, default=1)
    e.add_argument("--max-examples", type=int, default=2000)
    e.add_argument("--ranker", default="unnormalized",
                   help="autocomplete ranker: frequency|normalized|unnormalized")
    e.add_argument("--mode", default="seq2seq", help="suggest mode")
    e.add_argument("--strategy", default="full",
                   help="ranker strategy: full|precomputed|two-pass|light")
    e.add_argument("--vertical", default=None)
    e.add_argument("--k", type=int, default=200)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--config", required=True)
    s.add_argument("--port", type=int, default=None)
    s.set_defaults(func=cmd_serve)

    b = sub.add_parser("bench", help="latency benchmarks")
    b.add_argument("workload", choices=["autocomplete", "ranking"])
    b.add_argument("--data", required=True)
    b.add_argument("--models", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--samples", type=int, default=1000)
    b.add_argument("--k", type=int, default=200)
    b.add_argument("--seed", type=int, default=1)
    b.set_defaults(func=cmd_bench)
    return p


_EPOCH_DEFAULTS = {"intent": 4, "tagger": 8, "lm": 6, "seq2seq": 10, "ranker": 4}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "epochs", None) is None and hasattr(args, "task") \
            and args.command == "train":
        args.epochs = _EPOCH_DEFAULTS[args.task]
    try:
        return args.func(args)
    except (VsearchError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
