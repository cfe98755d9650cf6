"""Comparative latency benchmarks over trained artifacts.

Each comparison replays one deterministic workload against every strategy
and reports nearest-rank percentiles plus the P99 ratio between strategies
(ratios, not absolute milliseconds, are the meaningful output).
"""

from __future__ import annotations

from pathlib import Path

from vsearch.complete import gen_candidates, rank_candidates
from vsearch.evalbench import (LatencyReport, bench_latency, keystroke_stream,
                               write_latency_reports)
from vsearch.synth.mining import split_log_by_user
from vsearch.textprep import tokenize


def bench_autocomplete(data_dir: Path, model_dir: Path, out: Path,
                       samples: int = 1000, seed: int = 1) -> list[LatencyReport]:
    from vsearch.complete import CompletionIndex
    from vsearch.lm import LanguageModel
    from vsearch.synth import read_query_log
    log = read_query_log(data_dir / "log.tsv")
    _, test = split_log_by_user(log)
    queries = [" ".join(tokenize(e.query)) for e in test]
    workload = keystroke_stream(queries, max_requests=samples)
    index = CompletionIndex.load(model_dir / "completion_queries.tsv",
                                 model_dir / "completion_suffixes.tsv")
    lm = LanguageModel.load(model_dir / "lm.vsnn")

    def target(kind):
        def run(prefix: str):
            cands = gen_candidates(index, prefix, max_n=10)
            rank_candidates(kind, cands, lm=None if kind == "frequency" else lm)
        return run

    reports = []
    for kind in ("frequency", "unnormalized", "normalized"):
        reports.append(bench_latency(target(kind), workload,
                                     workload_id=f"autocomplete-{kind}",
                                     min_samples=samples))
    by_id = {r.workload_id: r for r in reports}
    speedup = (by_id["autocomplete-normalized"].p99_us
               / max(by_id["autocomplete-unnormalized"].p99_us, 1e-9))
    by_id["autocomplete-unnormalized"].meta["p99_speedup_vs_normalized"] = round(speedup, 2)
    write_latency_reports(reports, out, name="autocomplete_latency")
    return reports


def bench_ranking(data_dir: Path, model_dir: Path, out: Path, samples: int = 1000,
                  k: int = 200, seed: int = 1) -> list[LatencyReport]:
    from vsearch.ranker import (EmbeddingStore, LinearRanker, RankerModel,
                                RankFeatureContext, click_counts, rank_full,
                                rank_precomputed, rank_two_pass)
    from vsearch.retrieval import InvertedIndex
    from vsearch.synth import read_documents, read_query_log
    docs = read_documents(data_dir / "docs.jsonl")
    log = read_query_log(data_dir / "log.tsv")
    index = InvertedIndex(docs)
    ctx = RankFeatureContext(index, click_counts(log))
    deep = RankerModel.load(model_dir / "ranker.vsnn")
    light = LinearRanker.load(model_dir / "ranker_light.vsnn")
    store = EmbeddingStore.load(model_dir / "store.vseb")

    _, test = split_log_by_user(log)
    workload = []
    for e in test:
        cands = index.retrieve(e.query, limit=2000)
        if len(cands) >= 10:
            workload.append((e.query, cands))
        if len(workload) >= 50:
            break

    cache = deep.make_doc_cache(index)
    targets = {
        "ranking-full": lambda w: rank_full(deep, w[0], w[1], index, ctx,
                                            enc_cache=cache),
        "ranking-two-pass": lambda w: rank_two_pass(light, deep, w[0], w[1], k,
                                                    index, ctx, enc_cache=cache),
        "ranking-precomputed": lambda w: rank_precomputed(deep, store, w[0], w[1], ctx),
    }
    reports = []
    for wid, target in targets.items():
        reports.append(bench_latency(target, workload, workload_id=wid,
                                     min_samples=samples))
    by_id = {r.workload_id: r for r in reports}
    ratio = by_id["ranking-full"].p99_us / max(by_id["ranking-two-pass"].p99_us, 1e-9)
    by_id["ranking-two-pass"].meta["p99_speedup_vs_full"] = round(ratio, 2)
    write_latency_reports(reports, out, name="ranking_latency")
    return reports
