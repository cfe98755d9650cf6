"""Online serving: pipeline orchestration, deadlines, and the HTTP API.

One SearchService owns all frozen models plus the retrieval index. A search
request runs intent -> tagging -> retrieval -> ranking while the suggestion
decoder runs concurrently from request start; at response assembly the
suggestion branch is joined with a deadline and simply dropped (marked
timed out) when late, leaving the ranked results byte-identical either way.

Endpoints (GET, JSON): /search /autocomplete /suggest /tag /intent /healthz,
plus /ui static assets when configured. All response fields snake_case;
stage timings in microseconds under "timings_us".
"""

from __future__ import annotations

import json
import mimetypes
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field, fields as dc_fields
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from vsearch import kernels
from vsearch.complete import CompletionIndex, gen_candidates, rank_candidates
from vsearch.errors import InputError, ServiceError, StaleStoreError, VsearchError
from vsearch.evalbench import percentile
from vsearch.intent import IntentModel, featurize_intent
from vsearch.lm import LanguageModel
from vsearch.ranker import (
    EmbeddingStore,
    LinearRanker,
    RankFeatureContext,
    RankerModel,
    click_counts,
    rank_full,
    rank_precomputed,
    rank_two_pass,
)
from vsearch.retrieval import InvertedIndex
from vsearch.seq2seq import Seq2SeqModel
from vsearch.suggest import PairTable
from vsearch.synth import read_documents, read_lexicons, read_query_log
from vsearch.tagger import TaggerModel
from vsearch.textprep import TokenSequence, tokenize

STRATEGIES = ("full", "precomputed", "two-pass")


@dataclass
class ServingConfig:
    data_dir: str = "data"
    model_dir: str = "models"
    strategy: str = "two-pass"
    k: int = 200
    suggestion_deadline_ms: float = 100.0
    autocomplete_max_n: int = 10
    autocomplete_ranker: str = "unnormalized"
    suggest_mode: str = "seq2seq"
    retrieve_limit: int = 2000
    intent_blend_weight: float = 1.0
    port: int = 8080
    ui_dir: str = ""

    @classmethod
    def parse(cls, path: str | Path) -> "ServingConfig":
        """key=value lines; '#' starts a comment."""
        values: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        kwargs = {}
        for f in dc_fields(cls):
            if f.name in values:
                kwargs[f.name] = _coerce(values.pop(f.name), f.default)
        if values:
            raise InputError(f"{path}: unknown config keys {sorted(values)}")
        return cls(**kwargs)

    def save(self, path: str | Path) -> None:
        lines = [f"{f.name}={getattr(self, f.name)}" for f in dc_fields(self)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _coerce(raw: str, default):
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


@dataclass
class SearchRequest:
    query: str
    vertical: str | None = None
    size: int = 10


class _Timer:
    def __init__(self):
        self.t0 = time.perf_counter_ns()
        self.stages: dict[str, int] = {}

    def stage(self, name: str, start_ns: int) -> None:
        self.stages[name] = (time.perf_counter_ns() - start_ns) // 1000

    def done(self) -> dict[str, int]:
        out = dict(self.stages)
        out["total"] = (time.perf_counter_ns() - self.t0) // 1000
        return out


class SearchService:
    """All models immutable after construction; handlers are stateless per
    request and safe to call from many threads."""

    def __init__(self, index: InvertedIndex, feature_ctx: RankFeatureContext,
                 lexicons: dict, intent_model: IntentModel | None = None,
                 tagger_model: TaggerModel | None = None,
                 lm: LanguageModel | None = None,
                 completion_index: CompletionIndex | None = None,
                 seq2seq: Seq2SeqModel | None = None,
                 pair_table: PairTable | None = None,
                 ranker: RankerModel | None = None,
                 light_ranker: LinearRanker | None = None,
                 store: EmbeddingStore | None = None,
                 config: ServingConfig | None = None):
        self.index = index
        self.ctx = feature_ctx
        self.lexicons = lexicons
        self.intent_model = intent_model
        self.tagger_model = tagger_model
        self.lm = lm
        self.completion_index = completion_index
        self.seq2seq = seq2seq
        self.pair_table = pair_table
        self.ranker = ranker
        self.light_ranker = light_ranker
        self.store = store
        self.config = config or ServingConfig()
        if self.store is not None and self.ranker is not None:
            if self.store.checkpoint_hash != self.ranker.params_hash():
                raise StaleStoreError("embedding store does not match ranker checkpoint")
        self._executor = ThreadPoolExecutor(max_workers=4)
        self._latency_lock = threading.Lock()
        self._autocomplete_latencies_us: list[float] = []

    @classmethod
    def load(cls, config: ServingConfig) -> "SearchService":
        data = Path(config.data_dir)
        model_dir = Path(config.model_dir)
        docs = read_documents(data / "docs.jsonl")
        log = read_query_log(data / "log.tsv")
        lexicons = read_lexicons(data / "lexicons")
        index = InvertedIndex(docs)
        ctx = RankFeatureContext(index, click_counts(log))

        def maybe(path: Path, loader):
            return loader(path) if path.exists() else None

        service = cls(
            index=index, feature_ctx=ctx, lexicons=lexicons,
            intent_model=maybe(model_dir / "intent.vsnn", IntentModel.load),
            tagger_model=maybe(model_dir / "tagger.vsnn",
                               lambda p: TaggerModel.load(p, lexicons)),
            lm=maybe(model_dir / "lm.vsnn", LanguageModel.load),
            completion_index=(CompletionIndex.load(
                model_dir / "completion_queries.tsv",
                model_dir / "completion_suffixes.tsv")
                if (model_dir / "completion_queries.tsv").exists() else None),
            seq2seq=maybe(model_dir / "seq2seq.vsnn", Seq2SeqModel.load),
            pair_table=maybe(model_dir / "pairs.tsv", PairTable.load),
            ranker=maybe(model_dir / "ranker.vsnn", RankerModel.load),
            light_ranker=maybe(model_dir / "ranker_light.vsnn", LinearRanker.load),
            store=maybe(model_dir / "store.vseb", EmbeddingStore.load),
            config=config,
        )
        return service

    # -- single-task handlers ------------------------------------------------

    def handle_intent(self, query: str) -> dict:
        if self.intent_model is None:
            raise ServiceError("intent model not loaded")
        timer = _Timer()
        q = TokenSequence.from_text(query, self.intent_model.vocab)
        probs = self.intent_model.predict(q, featurize_intent(q, self.lexicons))
        from vsearch.intent import INTENT_CLASSES
        return {"query": query,
                "intent": {c: float(p) for c, p in zip(INTENT_CLASSES, probs)},
                "timings_us": timer.done()}

    def handle_tag(self, query: str) -> dict:
        if self.tagger_model is None:
            raise ServiceError("tagger model not loaded")
        timer = _Timer()
        from vsearch.textprep import tokenize_cased
        cased = tokenize_cased(query)
        tokens = [t.lower() for t in cased]
        if not tokens:
            return {"query": query, "tokens": [], "tags": [], "timings_us": timer.done()}
        seg = self.tagger_model.decode(tokens, cased)
        tags = [{"start": s, "end": e, "type": t}
                for s, e, t in seg.entities()]
        return {"query": query, "tokens": tokens, "tags": tags,
                "timings_us": timer.done()}

    def handle_suggest(self, query: str, mode: str | None = None) -> dict:
        mode = mode or self.config.suggest_mode
        timer = _Timer()
        if mode == "frequency":
            if self.pair_table is None:
                raise ServiceError("pair table not loaded")
            texts, covered = self.pair_table.suggest(query, k=10)
            suggestions = [{"text": t, "score": float(len(texts) - i)}
                           for i, t in enumerate(texts)]
        elif mode == "seq2seq":
            if self.seq2seq is None:
                raise ServiceError("seq2seq model not loaded")
            decoded = self.seq2seq.beam_decode(query, k=10)
            covered = bool(decoded)
            suggestions = [{"text": t, "score": float(s)} for t, s in decoded]
        else:
            raise InputError(f"unknown suggest mode {mode!r}")
        return {"query": query, "mode": mode, "suggestions": suggestions,
                "coverage": bool(covered), "timings_us": timer.done()}

    def handle_autocomplete(self, prefix: str, max_n: int | None = None) -> dict:
        if self.completion_index is None:
            raise ServiceError("completion index not loaded")
        timer = _Timer()
        max_n = max_n or self.config.autocomplete_max_n
        kind = self.config.autocomplete_ranker
        if kind != "frequency" and self.lm is None:
            raise ServiceError("language model not loaded")
        cands = gen_candidates(self.completion_index, prefix, max_n)
        ranked = rank_candidates(kind, cands, lm=self.lm)
        timings = timer.done()
        with self._latency_lock:
            self._autocomplete_latencies_us.append(timings["total"])
        return {"prefix": prefix, "ranker": kind,
                "candidates": [{"text": c.text, "source": c.source,
                                "score": float(c.score)} for c in ranked],
                "timings_us": timings}

    def autocomplete_latency_summary(self) -> dict:
        with self._latency_lock:
            lat = list(self._autocomplete_latencies_us)
        if not lat:
            return {"n": 0}
        return {"n": len(lat), "p50_us": percentile(lat, 0.5),
                "p99_us": percentile(lat, 0.99)}

    # -- federated search -------------------------------------------------------

    def _suggestion_branch(self, query: str) -> list[dict]:
        if self.config.suggest_mode == "seq2seq" and self.seq2seq is not None:
            return [{"text": t, "score": float(s)}
                    for t, s in self.seq2seq.beam_decode(query, k=5)]
        if self.pair_table is not None:
            texts, _ = self.pair_table.suggest(query, k=5)
            return [{"text": t, "score": float(len(texts) - i)}
                    for i, t in enumerate(texts)]
        return []

    def _rank(self, query: str, candidates: list[int]) -> tuple[list[int], list[float], str]:
        strategy = self.config.strategy
        if self.ranker is None:
            scores = self.index.bm25_scores(tokenize(query))
            ordered = sorted(candidates, key=lambda d: (-scores.get(d, 0.0), d))
            return ordered, [float(scores.get(d, 0.0)) for d in ordered], "bm25"
        if strategy == "full":
            ranked = rank_full(self.ranker, query, candidates, self.index, self.ctx)
        elif strategy == "precomputed":
            if self.store is None:
                raise ServiceError("embedding store not loaded")
            ranked = rank_precomputed(self.ranker, self.store, query, candidates,
                                      self.ctx)
        elif strategy == "two-pass":
            if self.light_ranker is None:
                raise ServiceError("light ranker not loaded")
            ranked = rank_two_pass(self.light_ranker, self.ranker, query, candidates,
                                   self.config.k, self.index, self.ctx)
        else:
            raise InputError(f"unknown strategy {strategy!r}")
        return ranked.doc_ids, ranked.scores, ranked.strategy

    def handle_search(self, req: SearchRequest) -> dict:
        if not req.query or not tokenize(req.query):
            raise InputError("empty query")
        timer = _Timer()
        deadline_s = self.config.suggestion_deadline_ms / 1000.0
        future: Future | None = None
        if deadline_s > 0 and (self.seq2seq is not None or self.pair_table is not None):
            future = self._executor.submit(self._suggestion_branch, req.query)

        intent_dist: dict[str, float] = {}
        t = time.perf_counter_ns()
        if self.intent_model is not None:
            q = TokenSequence.from_text(req.query, self.intent_model.vocab)
            probs = self.intent_model.predict(q, featurize_intent(q, self.lexicons))
            from vsearch.intent import INTENT_CLASSES
            intent_dist = {c: float(p) for c, p in zip(INTENT_CLASSES, probs)}
        timer.stage("intent", t)

        tags: list[dict] = []
        t = time.perf_counter_ns()
        if self.tagger_model is not None:
            from vsearch.textprep import tokenize_cased
            cased = tokenize_cased(req.query)
            seg = self.tagger_model.decode([tok.lower() for tok in cased], cased)
            tags = [{"start": s, "end": e, "type": ty} for s, e, ty in seg.entities()]
        timer.stage("tagging", t)

        t = time.perf_counter_ns()
        candidates = self.index.retrieve(req.query, limit=self.config.retrieve_limit,
                                         vertical=req.vertical)
        timer.stage("retrieval", t)

        t = time.perf_counter_ns()
        ordered, scores, strategy = self._rank(req.query, candidates)
        if req.vertical is None and intent_dist:
            blend = self.config.intent_blend_weight
            blended = [s + blend * intent_dist.get(self.index.docs[d].vertical, 0.0)
                       for d, s in zip(ordered, scores)]
            combined = sorted(zip(ordered, blended), key=lambda x: (-x[1], x[0]))
            ordered = [d for d, _ in combined]
            scores = [s for _, s in combined]
        timer.stage("ranking", t)

        results = []
        for d, s in list(zip(ordered, scores))[:req.size]:
            doc = self.index.docs[d]
            results.append({"doc_id": d, "vertical": doc.vertical,
                            "score": float(s), "fields": doc.fields})

        suggestions: list[dict] = []
        timed_out = False
        t = time.perf_counter_ns()
        if future is None:
            timed_out = True
        else:
            try:
                remaining = deadline_s - (time.perf_counter_ns() - timer.t0) / 1e9
                if deadline_s == float("inf"):
                    suggestions = future.result()
                else:
                    suggestions = future.result(timeout=max(remaining, 0.0))
            except FutureTimeout:
                timed_out = True
                future.cancel()
        timer.stage("suggestion_wait", t)

        return {
            "query": req.query,
            "vertical": req.vertical,
            "intent": intent_dist,
            "tags": tags,
            "strategy": strategy,
            "results": results,
            "suggestions": suggestions,
            "suggestions_timed_out": timed_out,
            "timings_us": timer.done(),
        }

    def handle_healthz(self) -> dict:
        return {
            "status": "ok",
            "kernel_backend": kernels.BACKEND,
            "documents": self.index.n_docs,
            "models": {
                "intent": self.intent_model is not None,
                "tagger": self.tagger_model is not None,
                "lm": self.lm is not None,
                "completion_index": self.completion_index is not None,
                "seq2seq": self.seq2seq is not None,
                "pair_table": self.pair_table is not None,
                "ranker": self.ranker is not None,
                "light_ranker": self.light_ranker is not None,
                "store": self.store is not None,
            },
        }


def search_content(response: dict) -> bytes:
    """The suggestion-independent part of a search response, serialized
    canonically; used to assert deadline invariance."""
    stripped = {k: v for k, v in response.items()
                if k not in ("suggestions", "suggestions_timed_out", "timings_us")}
    return json.dumps(stripped, sort_keys=True).encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    service: SearchService = None  # set by make_server

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, obj: dict, status: int = 200) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_file(self, path: Path) -> None:
        ctype = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
        body = path.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):  # noqa: N802 (http.server API)
        url = urlparse(self.path)
        params = {k: v[0] for k, v in parse_qs(url.query).items()}
        svc = self.service
        try:
            if url.path == "/healthz":
                self._send_json(svc.handle_healthz())
            elif url.path == "/autocomplete":
                n = int(params["n"]) if "n" in params else None
                self._send_json(svc.handle_autocomplete(params.get("prefix", ""), n))
            elif url.path == "/search":
                if "q" not in params:
                    raise InputError("missing required parameter q")
                req = SearchRequest(query=params["q"],
                                    vertical=params.get("vertical") or None,
                                    size=int(params.get("size", 10)))
                self._send_json(svc.handle_search(req))
            elif url.path == "/suggest":
                if "q" not in params:
                    raise InputError("missing required parameter q")
                self._send_json(svc.handle_suggest(params["q"], params.get("mode")))
            elif url.path == "/tag":
                self._send_json(svc.handle_tag(params.get("q", "")))
            elif url.path == "/intent":
                if "q" not in params:
                    raise InputError("missing required parameter q")
                self._send_json(svc.handle_intent(params["q"]))
            elif url.path == "/" or url.path.startswith("/ui"):
                self._serve_ui(url.path)
            else:
                self._send_json({"error": "not found", "path": url.path}, 404)
        except InputError as exc:
            self._send_json({"error": str(exc)}, 400)
        except ServiceError as exc:
            self._send_json({"error": str(exc)}, 503)
        except VsearchError as exc:
            self._send_json({"error": str(exc)}, 500)

    def _serve_ui(self, path: str) -> None:
        ui_dir = self.service.config.ui_dir
        if not ui_dir:
            self._send_json({"error": "ui not configured"}, 404)
            return
        rel = path.removeprefix("/ui").lstrip("/") or "index.html"
        target = (Path(ui_dir) / rel).resolve()
        if not str(target).startswith(str(Path(ui_dir).resolve())) or not target.is_file():
            self._send_json({"error": "not found"}, 404)
            return
        self._send_file(target)


def make_server(service: SearchService, port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve_forever(service: SearchService) -> None:
    server = make_server(service, service.config.port)
    host, port = server.server_address
    print(f"serving on http://{host}:{port} (backend: {kernels.BACKEND})")
    try:
        server.serve_forever()
    finally:
        server.server_close()
