"""On-disk formats for the generated world.

Documents: one JSON object per line ({"id", "vertical", "fields"}) behind a
"# vsearch-docs v1" header comment. Query log: TSV behind a
"# vsearch-querylog v1" header with columns timestamp, user, query,
clicked_doc, clicked_vertical, sat; click columns are empty for unclicked
entries. Lexicons: one phrase per line in <type>.lex. Annotated queries:
token/LABEL pairs, one query per line.
"""

from __future__ import annotations

import json
from pathlib import Path

from vsearch.errors import FormatError
from vsearch.synth.world import DocumentRecord, QueryLogEntry
from vsearch.tagger.schema import TagAnnotation
from vsearch.textprep import Lexicon

DOCS_HEADER = "# vsearch-docs v1"
LOG_HEADER = "# vsearch-querylog v1\tcolumns=timestamp,user,query,clicked_doc,clicked_vertical,sat"


def write_documents(path: str | Path, docs: list[DocumentRecord]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(DOCS_HEADER + "\n")
        for d in docs:
            f.write(json.dumps(
                {"id": d.doc_id, "vertical": d.vertical, "fields": d.fields},
                sort_keys=True) + "\n")


def read_documents(path: str | Path) -> list[DocumentRecord]:
    docs = []
    with open(path, encoding="utf-8") as f:
        first = f.readline().rstrip("\n")
        if not first.startswith("# vsearch-docs"):
            raise FormatError(f"{path}: missing document header")
        for line in f:
            if not line.strip() or line.startswith("#"):
                continue
            obj = json.loads(line)
            docs.append(DocumentRecord(int(obj["id"]), obj["vertical"], obj["fields"]))
    return docs


def write_query_log(path: str | Path, log: list[QueryLogEntry]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(LOG_HEADER + "\n")
        for e in log:
            clicked = "" if e.clicked_doc is None else str(e.clicked_doc)
            vertical = e.clicked_vertical or ""
            f.write(f"{e.ts}\t{e.user}\t{e.query}\t{clicked}\t{vertical}\t{int(e.sat)}\n")


def read_query_log(path: str | Path) -> list[QueryLogEntry]:
    entries = []
    with open(path, encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("# vsearch-querylog"):
            raise FormatError(f"{path}: missing query log header")
        for lineno, line in enumerate(f, start=2):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) not in (5, 6):
                raise FormatError(f"{path}:{lineno}: expected 5 or 6 columns")
            ts, user, query, clicked, vertical = cols[:5]
            sat = len(cols) == 6 and cols[5] == "1"
            entries.append(QueryLogEntry(
                ts=int(ts), user=user, query=query,
                clicked_doc=int(clicked) if clicked else None,
                clicked_vertical=vertical or None,
                sat=sat))
    return entries


def write_lexicons(directory: str | Path, lexicons: dict[str, Lexicon]) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for etype, lex in lexicons.items():
        lex.save(d / f"{etype}.lex")


def read_lexicons(directory: str | Path) -> dict[str, Lexicon]:
    out = {}
    for path in sorted(Path(directory).glob("*.lex")):
        out[path.stem] = Lexicon.load(path)
    return out


def write_annotations(path: str | Path, annotations: list[TagAnnotation]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for a in annotations:
            f.write(" ".join(f"{t}/{l}" for t, l in zip(a.tokens, a.labels)) + "\n")


def read_annotations(path: str | Path) -> list[TagAnnotation]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            tokens, labels = [], []
            for cell in line.split(" "):
                tok, sep, lab = cell.rpartition("/")
                if not sep:
                    raise FormatError(f"{path}:{lineno}: cell {cell!r} lacks /LABEL")
                tokens.append(tok)
                labels.append(lab)
            out.append(TagAnnotation(tuple(tokens), tuple(labels)))
    return out
