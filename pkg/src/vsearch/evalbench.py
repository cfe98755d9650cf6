"""Offline metrics and the latency benchmark harness.

Percentiles are nearest-rank (ceil(p*N)-th order statistic); latency
comparisons are reported as ratios between strategies, never as absolute
hardware-dependent milliseconds being meaningful on their own.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from vsearch.errors import InputError

US = 1_000  # ns per microsecond


def percentile(samples: list[float], p: float) -> float:
    """Nearest-rank percentile: the ceil(p*N)-th smallest sample."""
    if not samples:
        raise InputError("empty sample list")
    if not (0.0 < p <= 1.0):
        raise InputError(f"p={p} outside (0, 1]")
    ordered = sorted(samples)
    rank = math.ceil(p * len(ordered))
    return ordered[rank - 1]


def dcg_at_k(grades: list[int], k: int = 10) -> float:
    return sum((2.0 ** g - 1.0) / math.log2(i + 2) for i, g in enumerate(grades[:k]))


def ndcg_at_k(ranked_grades: list[int], k: int = 10,
              all_grades: list[int] | None = None) -> float:
    """NDCG of grades in ranked order; ideal order from all_grades (defaults
    to the same multiset). 0.0 when the query has no positive grade."""
    pool = ranked_grades if all_grades is None else all_grades
    idcg = dcg_at_k(sorted(pool, reverse=True), k)
    if idcg == 0.0:
        return 0.0
    return dcg_at_k(ranked_grades, k) / idcg


@dataclass
class LatencyReport:
    workload_id: str
    n_samples: int
    p50_us: float
    p95_us: float
    p99_us: float
    mean_us: float
    meta: dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"workload_id": self.workload_id, "n_samples": self.n_samples,
                "p50_us": self.p50_us, "p95_us": self.p95_us,
                "p99_us": self.p99_us, "mean_us": self.mean_us, "meta": self.meta}


def bench_latency(target: Callable[[object], object], workload: list,
                  workload_id: str = "workload", warmup: int = 100,
                  min_samples: int = 1000) -> LatencyReport:
    """Replay a recorded request stream against an in-process callable.

    The workload is cycled deterministically until at least min_samples
    measurements are taken; warmup requests are excluded from statistics.
    A raising target aborts the run with no partial report.
    """
    if not workload:
        raise InputError("empty workload")
    n = len(workload)
    for i in range(min(warmup, n * 2)):
        target(workload[i % n])
    samples_us: list[float] = []
    i = 0
    while len(samples_us) < min_samples:
        req = workload[i % n]
        t0 = time.perf_counter_ns()
        target(req)
        samples_us.append((time.perf_counter_ns() - t0) / US)
        i += 1
    return LatencyReport(
        workload_id=workload_id,
        n_samples=len(samples_us),
        p50_us=percentile(samples_us, 0.50),
        p95_us=percentile(samples_us, 0.95),
        p99_us=percentile(samples_us, 0.99),
        mean_us=float(np.mean(samples_us)),
    )


def write_latency_reports(reports: list[LatencyReport], out_dir: str | Path,
                          name: str = "latency") -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jpath = out / f"{name}.json"
    tpath = out / f"{name}.tsv"
    jpath.write_text(json.dumps([r.as_dict() for r in reports], indent=2),
                     encoding="utf-8")
    with open(tpath, "w", encoding="utf-8") as f:
        f.write("workload_id\tn_samples\tp50_us\tp95_us\tp99_us\tmean_us\n")
        for r in reports:
            f.write(f"{r.workload_id}\t{r.n_samples}\t{r.p50_us:.1f}\t"
                    f"{r.p95_us:.1f}\t{r.p99_us:.1f}\t{r.mean_us:.1f}\n")
    return jpath, tpath


@dataclass
class EvalReport:
    task: str
    metrics: dict[str, float]
    split_sizes: dict[str, int]
    config_hash: str

    def as_dict(self) -> dict:
        return {"task": self.task, "metrics": self.metrics,
                "split_sizes": self.split_sizes, "config_hash": self.config_hash}


def config_hash(config: dict) -> str:
    text = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def write_eval_report(report: EvalReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = f"eval_{report.task}_{report.config_hash}"
    jpath = out / f"{base}.json"
    tpath = out / f"{base}.tsv"
    jpath.write_text(json.dumps(report.as_dict(), indent=2), encoding="utf-8")
    with open(tpath, "w", encoding="utf-8") as f:
        f.write("metric\tvalue\n")
        for k in sorted(report.metrics):
            f.write(f"{k}\t{report.metrics[k]:.6f}\n")
    return jpath, tpath


TASKS = ("intent", "tagger", "autocomplete", "suggest", "ranker")


def eval_task(task: str, split, models: dict, config: dict | None = None) -> EvalReport:
    """Compute a task's offline metric suite on a frozen model bundle.

    `split` and `models` carry what the task needs; see the per-task branches.
    Empty splits and vocabulary mismatches are rejected.
    """
    if task not in TASKS:
        raise InputError(f"unknown task {task!r}")
    if not split:
        raise InputError(f"empty test split for task {task!r}")
    cfg_hash = config_hash(config or {})
    metrics: dict[str, float] = {}
    sizes = {"test": len(split)}

    if task == "intent":
        from vsearch.intent import accuracy
        model, lexicons = models["model"], models["lexicons"]
        vocab = models.get("vocab", model.vocab)
        if vocab._id_to_token != model.vocab._id_to_token:
            raise InputError("split vocabulary does not match model vocabulary")
        metrics["accuracy"] = accuracy(model, split, vocab, lexicons)

    elif task == "tagger":
        from vsearch.tagger import bio_to_segments, entity_f1
        model = models["model"]
        golds = [bio_to_segments(list(a.labels)) for a in split]
        preds = [model.decode(list(a.tokens)) for a in split]
        metrics["entity_f1"] = entity_f1(golds, preds)

    elif task == "autocomplete":
        from vsearch.complete import gen_candidates, mrr_at_10, rank_candidates
        index, kind = models["index"], models.get("ranker", "frequency")
        lm = models.get("lm")
        runs = []
        covered = 0
        for prefix, truth in split:
            cands = gen_candidates(index, prefix, max_n=10)
            if cands:
                covered += 1
            ranked = rank_candidates(kind, cands, lm=lm)
            runs.append(([c.text for c in ranked], truth))
        metrics["mrr_at_10"] = mrr_at_10(runs)
        metrics["coverage"] = covered / len(split)

    elif task == "suggest":
        from vsearch.complete import mrr_at_10
        mode = models.get("mode", "frequency")
        runs = []
        covered = 0
        for src, truth in split:
            if mode == "frequency":
                suggestions, hit = models["table"].suggest(src, k=10)
            else:
                suggestions = [t for t, _ in models["model"].beam_decode(src, k=10)]
                hit = bool(suggestions)
            covered += bool(hit and suggestions)
            runs.append((suggestions, truth))
        metrics["mrr_at_10"] = mrr_at_10(runs)
        metrics["coverage"] = covered / len(split)

    else:  # ranker
        from vsearch.ranker import rank_full, rank_precomputed, rank_two_pass
        from vsearch.textprep import tokenize
        strategy = models.get("strategy", "full")
        index, ctx = models["index"], models["ctx"]
        total = 0.0
        used = 0
        for group in split:
            if max(group.grades) == 0:
                continue
            if strategy == "full":
                order = rank_full(models["deep"], group.query, group.doc_ids,
                                  index, ctx).doc_ids
            elif strategy == "precomputed":
                order = rank_precomputed(models["deep"], models["store"], group.query,
                                         group.doc_ids, ctx).doc_ids
            elif strategy == "two-pass":
                order = rank_two_pass(models["light"], models["deep"], group.query,
                                      group.doc_ids, models.get("k", 200),
                                      index, ctx).doc_ids
            elif strategy == "light":
                feats = np.stack([ctx.features(tokenize(group.query), d)
                                  for d in group.doc_ids])
                scores = models["light"].score_batch(feats)
                order = [d for d, _ in sorted(zip(group.doc_ids, scores),
                                              key=lambda x: (-x[1], x[0]))]
            else:
                raise InputError(f"unknown strategy {strategy!r}")
            grade_of = dict(zip(group.doc_ids, group.grades))
            total += ndcg_at_k([grade_of[d] for d in order], k=10)
            used += 1
        if used == 0:
            raise InputError("no ranker groups with a positive grade")
        metrics["ndcg_at_10"] = total / used
        sizes["scored"] = used

    return EvalReport(task=task, metrics=metrics, split_sizes=sizes,
                      config_hash=cfg_hash)


def keystroke_impressions(queries: list[str], prefix_lens: Iterable[int] = (3, 6)
                          ) -> list[tuple[str, str]]:
    """(typed prefix, eventually submitted query) pairs for MRR evaluation."""
    out = []
    for q in queries:
        for pl in prefix_lens:
            if len(q) > pl:
                out.append((q[:pl], q))
    return out


def keystroke_stream(queries: list[str], max_requests: int | None = None) -> list[str]:
    """Every per-keystroke prefix of each query, in typing order."""
    out = []
    for q in queries:
        for i in range(1, len(q) + 1):
            out.append(q[:i])
            if max_requests is not None and len(out) >= max_requests:
                return out
    return out
