"""Seeded generator of the synthetic professional-search world.

Everything is a pure function of GeneratorConfig: one numpy PCG64 stream
(documented PRNG) drives all sampling, so equal configs give byte-identical
worlds. Queries are composed from the target document's own field values,
which makes relevance checkable by construction: with zero noise rates, a
clicked document contains every entity token of its query.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from vsearch.errors import InputError
from vsearch.synth import pools
from vsearch.tagger.schema import ENTITY_TYPES, TagAnnotation
from vsearch.textprep import Lexicon

VERTICALS = ("people", "job", "company", "group", "school", "event", "help")

_VERTICAL_WEIGHTS = {
    "people": 0.30, "job": 0.25, "help": 0.20, "company": 0.08,
    "group": 0.05, "school": 0.06, "event": 0.06,
}

_BASE_TS = 1_700_000_000
_CLICK_BASE = 0.7
_CLICK_DECAY = 0.85


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: int
    vertical: str
    fields: dict[str, str]


@dataclass(frozen=True)
class QueryLogEntry:
    ts: int
    user: str
    query: str
    clicked_doc: Optional[int]
    clicked_vertical: Optional[str]
    sat: bool = False
    shown: tuple[int, ...] = ()


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 1
    users: int = 400
    queries: int = 8000
    docs_per_vertical: dict[str, int] = field(default_factory=lambda: {
        "people": 600, "job": 300, "company": 150, "group": 100,
        "school": 120, "event": 100, "help": 150,
    })
    paraphrase_rate: float = 0.35
    typo_rate: float = 0.02
    random_click_rate: float = 0.05
    sat_rate: float = 0.30
    reformulate_rate: float = 0.35

    def validate(self) -> None:
        for name in ("paraphrase_rate", "typo_rate", "random_click_rate",
                     "sat_rate", "reformulate_rate"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InputError(f"{name}={v} outside [0, 1]")
        if self.users < 1 or self.queries < 1:
            raise InputError("users and queries must be positive")
        for v in VERTICALS:
            if self.docs_per_vertical.get(v, 0) < 1:
                raise InputError(f"need at least one document for vertical {v!r}")


@dataclass
class World:
    config: GeneratorConfig
    lexicons: dict[str, Lexicon]
    documents: list[DocumentRecord]
    log: list[QueryLogEntry]
    annotations: list[TagAnnotation]

    def documents_by_vertical(self) -> dict[str, list[DocumentRecord]]:
        out: dict[str, list[DocumentRecord]] = {v: [] for v in VERTICALS}
        for d in self.documents:
            out[d.vertical].append(d)
        return out


def build_lexicons() -> dict[str, Lexicon]:
    return {t: Lexicon.from_phrases(t, pools.ENTITY_POOLS[t]) for t in ENTITY_TYPES}


# A query plan is a list of (entity_type | None, tokens) parts; None marks
# marker/template tokens that are labeled O.
_Part = tuple[Optional[str], tuple[str, ...]]


@dataclass
class _Plan:
    vertical: str
    target: DocumentRecord
    parts: list[_Part]

    def tokens(self) -> list[str]:
        return [t for _, toks in self.parts for t in toks]

    def labels(self) -> list[str]:
        out: list[str] = []
        for etype, toks in self.parts:
            if etype is None:
                out.extend("O" for _ in toks)
            else:
                out.append(f"B-{etype}")
                out.extend(f"I-{etype}" for _ in toks[1:])
        return out


def _pick(rng: np.random.Generator, xs: list[str]) -> str:
    return xs[int(rng.integers(len(xs)))]


def _make_documents(cfg: GeneratorConfig, rng: np.random.Generator
                    ) -> tuple[list[DocumentRecord], dict[str, list[DocumentRecord]]]:
    docs: list[DocumentRecord] = []
    by_v: dict[str, list[DocumentRecord]] = {v: [] for v in VERTICALS}
    next_id = 1

    def add(vertical: str, fields: dict[str, str]) -> None:
        nonlocal next_id
        doc = DocumentRecord(next_id, vertical, fields)
        docs.append(doc)
        by_v[vertical].append(doc)
        next_id += 1

    for _ in range(cfg.docs_per_vertical["people"]):
        n_skills = int(rng.integers(2, 5))
        add("people", {
            "name": f"{_pick(rng, pools.FIRST_NAMES)} {_pick(rng, pools.LAST_NAMES)}",
            "title": _pick(rng, pools.TITLES),
            "company": _pick(rng, pools.COMPANIES),
            "skills": ", ".join(_pick(rng, pools.SKILLS) for _ in range(n_skills)),
            "school": _pick(rng, pools.SCHOOLS),
            "geo": _pick(rng, pools.GEOS),
        })
    for _ in range(cfg.docs_per_vertical["job"]):
        n_skills = int(rng.integers(1, 4))
        add("job", {
            "title": _pick(rng, pools.TITLES),
            "company": _pick(rng, pools.COMPANIES),
            "skills": ", ".join(_pick(rng, pools.SKILLS) for _ in range(n_skills)),
            "geo": _pick(rng, pools.GEOS),
        })
    for _ in range(cfg.docs_per_vertical["company"]):
        add("company", {
            "name": _pick(rng, pools.COMPANIES),
            "industry": _pick(rng, pools.SKILLS),
            "geo": _pick(rng, pools.GEOS),
        })
    for _ in range(cfg.docs_per_vertical["group"]):
        kind = _pick(rng, ["group", "network", "community", "professionals"])
        skill = _pick(rng, pools.SKILLS)
        add("group", {"name": f"{skill} {kind}", "topic": skill})
    for _ in range(cfg.docs_per_vertical["school"]):
        add("school", {"name": _pick(rng, pools.SCHOOLS), "geo": _pick(rng, pools.GEOS)})
    for _ in range(cfg.docs_per_vertical["event"]):
        kind = _pick(rng, ["conference", "summit", "meetup", "expo"])
        year = str(2019 + int(rng.integers(8)))
        add("event", {
            "name": f"{_pick(rng, pools.SKILLS)} {kind} {year}",
            "geo": _pick(rng, pools.GEOS),
        })
    seen_pairs: set[tuple[str, str]] = set()
    while len(by_v["help"]) < cfg.docs_per_vertical["help"]:
        act = _pick(rng, pools.HELP_ACTIONS)
        obj = _pick(rng, pools.HELP_OBJECTS)
        if (act, obj) in seen_pairs:
            continue
        seen_pairs.add((act, obj))
        add("help", {
            "title": f"{act} your {obj}",
            "body": f"learn how to {act} your {obj} from the settings page "
                    f"step by step instructions for {obj}",
        })
    return docs, by_v


def _typed_parts(doc: DocumentRecord) -> dict[str, list[tuple[str, ...]]]:
    """Field values of a document as typed token tuples."""
    f = doc.fields
    out: dict[str, list[tuple[str, ...]]] = {}
    if doc.vertical == "people":
        first, last = f["name"].split(" ", 1)
        out["first_name"] = [(first,)]
        out["last_name"] = [(last,)]
        out["title"] = [tuple(f["title"].split())]
        out["company"] = [tuple(f["company"].split())]
        out["skill"] = [tuple(s.split()) for s in f["skills"].split(", ")]
        out["school"] = [tuple(f["school"].split())]
        out["geo"] = [tuple(f["geo"].split())]
    elif doc.vertical == "job":
        out["title"] = [tuple(f["title"].split())]
        out["company"] = [tuple(f["company"].split())]
        out["skill"] = [tuple(s.split()) for s in f["skills"].split(", ")]
        out["geo"] = [tuple(f["geo"].split())]
    elif doc.vertical == "company":
        out["company"] = [tuple(f["name"].split())]
        out["skill"] = [tuple(f["industry"].split())]
        out["geo"] = [tuple(f["geo"].split())]
    elif doc.vertical == "group":
        out["skill"] = [tuple(f["topic"].split())]
    elif doc.vertical == "school":
        out["school"] = [tuple(f["name"].split())]
        out["geo"] = [tuple(f["geo"].split())]
    elif doc.vertical == "event":
        out["skill"] = [tuple(f["name"].split()[:-2])]
        out["geo"] = [tuple(f["geo"].split())]
    return out


_PEOPLE_RECIPES: list[list[str]] = [
    ["first_name", "last_name"], ["first_name", "last_name"],
    ["first_name", "last_name"], ["first_name"], ["last_name"],
    ["first_name", "last_name", "title"], ["first_name", "last_name", "company"],
    ["title", "geo"], ["title", "company"], ["title"],
    ["skill", "skill"], ["first_name", "last_name", "skill"],
]
_JOB_RECIPES: list[list[str]] = [
    ["title"], ["title", "geo"], ["title", "company"],
    ["skill"], ["skill", "geo"], ["title", "skill"],
]
_HELP_TEMPLATES = [
    ("how", "to", "{act}", "my", "{obj}"),
    ("how", "to", "{act}", "my", "{obj}"),
    ("{act}", "{obj}"),
    ("how", "do", "i", "{act}", "my", "{obj}"),
    ("cannot", "{act}", "{obj}"),
    ("{act}", "{obj}", "help"),
]


def _compose(vertical: str, target: DocumentRecord, rng: np.random.Generator,
             paraphrase_rate: float) -> _Plan:
    typed = _typed_parts(target)
    parts: list[_Part] = []
    if vertical == "people":
        recipe = _PEOPLE_RECIPES[int(rng.integers(len(_PEOPLE_RECIPES)))]
        used: set[tuple[str, ...]] = set()
        for etype in recipe:
            options = [v for v in typed.get(etype, []) if v not in used]
            if not options:
                continue
            val = options[int(rng.integers(len(options)))]
            used.add(val)
            parts.append((etype, val))
    elif vertical == "job":
        recipe = _JOB_RECIPES[int(rng.integers(len(_JOB_RECIPES)))]
        used = set()
        for etype in recipe:
            options = [v for v in typed.get(etype, []) if v not in used]
            if not options:
                continue
            val = options[int(rng.integers(len(options)))]
            used.add(val)
            parts.append((etype, val))
        if rng.random() < 0.7:
            parts.append((None, (_pick(rng, ["jobs", "hiring", "openings"]),)))
    elif vertical == "company":
        parts.append(("company", typed["company"][0]))
        if rng.random() < 0.3:
            parts.append((None, ("company",)))
    elif vertical == "group":
        parts.append(("skill", typed["skill"][0]))
        parts.append((None, (_pick(rng, ["group", "community", "network"]),)))
    elif vertical == "school":
        parts.append(("school", typed["school"][0]))
        if rng.random() < 0.3 and "geo" in typed:
            parts.append(("geo", typed["geo"][0]))
    elif vertical == "event":
        name_tokens = target.fields["name"].split()
        parts.append(("skill", tuple(name_tokens[:-2])))
        parts.append((None, tuple(name_tokens[-2:])))
    elif vertical == "help":
        title_tokens = target.fields["title"].split()
        act, obj = title_tokens[0], " ".join(title_tokens[2:])
        act_out, obj_out = act, obj
        if rng.random() < paraphrase_rate:
            subs = [s for s in (act, obj) if s in pools.HELP_SYNONYMS]
            if subs:
                slot = subs[int(rng.integers(len(subs)))]
                repl = _pick(rng, pools.HELP_SYNONYMS[slot])
                if slot == act:
                    act_out = repl
                else:
                    obj_out = repl
        template = _HELP_TEMPLATES[int(rng.integers(len(_HELP_TEMPLATES)))]
        toks: list[str] = []
        for cell in template:
            if cell == "{act}":
                toks.extend(act_out.split())
            elif cell == "{obj}":
                toks.extend(obj_out.split())
            else:
                toks.append(cell)
        parts.append((None, tuple(toks)))
    if not parts:  # degenerate fallback, e.g. exhausted options
        parts.append((None, tuple(target.fields[next(iter(target.fields))].split()[:2])))
    return _Plan(vertical=vertical, target=target, parts=parts)


def _reformulate(plan: _Plan, rng: np.random.Generator, paraphrase_rate: float
                 ) -> Optional[_Plan]:
    if plan.vertical == "help":
        return _compose("help", plan.target, rng, paraphrase_rate)
    typed = _typed_parts(plan.target)
    used = {toks for _, toks in plan.parts}
    addable = [(t, v) for t, vs in typed.items() for v in vs if v not in used]
    entity_idx = [i for i, (t, _) in enumerate(plan.parts) if t is not None]
    ops = []
    if addable:
        ops.append("add")
    if len(entity_idx) >= 2:
        ops.append("drop")
    if addable and entity_idx:
        ops.append("replace")
    if not ops:
        return None
    op = ops[int(rng.integers(len(ops)))]
    parts = list(plan.parts)
    if op == "add":
        etype, val = addable[int(rng.integers(len(addable)))]
        parts.append((etype, val))
    elif op == "drop":
        parts.pop(entity_idx[int(rng.integers(len(entity_idx)))])
    else:
        parts.pop(entity_idx[int(rng.integers(len(entity_idx)))])
        etype, val = addable[int(rng.integers(len(addable)))]
        parts.append((etype, val))
    return _Plan(vertical=plan.vertical, target=plan.target, parts=parts)


def _typo(token: str, rng: np.random.Generator) -> str:
    if len(token) < 3:
        return token
    i = int(rng.integers(1, len(token) - 1))
    kind = int(rng.integers(3))
    if kind == 0:
        return token[:i] + token[i + 1:]
    if kind == 1:
        return token[:i] + token[i] + token[i:]
    return token[:i - 1] + token[i] + token[i - 1] + token[i + 1:]


def _rank_distribution(n: int = 10) -> np.ndarray:
    p = 0.65 ** np.arange(n)
    return p / p.sum()


_RANK_P = _rank_distribution()


def generate_world(cfg: GeneratorConfig) -> World:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    lexicons = build_lexicons()
    docs, by_v = _make_documents(cfg, rng)
    vert_names = list(_VERTICAL_WEIGHTS)
    vert_p = np.array([_VERTICAL_WEIGHTS[v] for v in vert_names])
    vert_p = vert_p / vert_p.sum()

    log: list[QueryLogEntry] = []
    annotations: list[TagAnnotation] = []
    clock = {u: _BASE_TS + int(rng.integers(0, 86_400)) for u in range(cfg.users)}

    def emit(plan: _Plan, user: int) -> None:
        tokens = plan.tokens()
        labels = plan.labels()
        if rng.random() < cfg.typo_rate and tokens:
            i = int(rng.integers(len(tokens)))
            tokens = list(tokens)
            tokens[i] = _typo(tokens[i], rng)
        pool = by_v[plan.vertical]
        rank = 1 + int(rng.choice(10, p=_RANK_P))
        others = []
        seen = {plan.target.doc_id}
        for d in rng.choice(len(pool), size=min(len(pool), 14), replace=True):
            doc = pool[int(d)]
            if doc.doc_id not in seen:
                seen.add(doc.doc_id)
                others.append(doc)
        others = others[:9]
        rank = min(rank, len(others) + 1)
        shown = others[:rank - 1] + [plan.target] + others[rank - 1:]
        clicked: Optional[DocumentRecord] = None
        if rng.random() < _CLICK_BASE * _CLICK_DECAY ** (rank - 1):
            clicked = plan.target
        elif rng.random() < cfg.random_click_rate:
            clicked = shown[int(rng.integers(len(shown)))]
        sat = clicked is not None and rng.random() < cfg.sat_rate
        log.append(QueryLogEntry(
            ts=clock[user],
            user=f"u{user:04d}",
            query=" ".join(tokens),
            clicked_doc=clicked.doc_id if clicked else None,
            clicked_vertical=clicked.vertical if clicked else None,
            sat=sat,
            shown=tuple(d.doc_id for d in shown),
        ))
        annotations.append(TagAnnotation(tuple(tokens), tuple(labels)))

    emitted = 0
    while emitted < cfg.queries:
        user = int(rng.integers(cfg.users))
        clock[user] += int(rng.integers(700, 50_000))
        vertical = vert_names[int(rng.choice(len(vert_names), p=vert_p))]
        pool = by_v[vertical]
        target = pool[int(rng.integers(len(pool)))]
        plan = _compose(vertical, target, rng, cfg.paraphrase_rate)
        chain = 1
        while True:
            emit(plan, user)
            emitted += 1
            if emitted >= cfg.queries or chain >= 4:
                break
            if rng.random() >= cfg.reformulate_rate:
                break
            nxt = _reformulate(plan, rng, cfg.paraphrase_rate)
            if nxt is None:
                break
            clock[user] += int(rng.integers(20, 580))
            plan = nxt
            chain += 1

    order = sorted(range(len(log)), key=lambda i: (log[i].ts, log[i].user, i))
    log = [log[i] for i in order]
    annotations = [annotations[i] for i in order]
    return World(config=cfg, lexicons=lexicons, documents=docs, log=log,
                 annotations=annotations)
