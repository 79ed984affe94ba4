"""Corpus loading, batching, and disk-backed stage persistence.

Large corpora never need to sit fully in working memory: documents are
processed in fixed-size batches and every pipeline phase writes its output
to a stage file that the next phase streams back in.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence, TypeVar

from .errors import InvalidBatchSize, MissingPath, SchemaMismatch, StageIoError

log = logging.getLogger(__name__)

STAGE_FORMAT_VERSION = 1
DEFAULT_BATCH_SIZE = 50

T = TypeVar("T")


@dataclass(frozen=True)
class Document:
    """One scholarly article. ``doc_id`` is namespaced by corpus label so
    that ids stay unique when several corpora are merged."""

    doc_id: str
    title: str
    body: str
    corpus_label: str

    def to_record(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "body": self.body,
            "corpus_label": self.corpus_label,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "Document":
        return cls(
            doc_id=rec["doc_id"],
            title=rec["title"],
            body=rec["body"],
            corpus_label=rec["corpus_label"],
        )


@dataclass(frozen=True)
class ParseFailure:
    path: str
    message: str


@dataclass
class LoadReport:
    """Documents that loaded plus per-file failures (never silently dropped)."""

    documents: list[Document] = field(default_factory=list)
    errors: list[ParseFailure] = field(default_factory=list)


def load_corpus(path: str | Path, label: str) -> LoadReport:
    """Load every ``*.json`` article file under ``path``.

    Files are read in lexicographic filename order. Each file must hold one
    JSON object with string fields ``paper_id`` and ``title`` and a
    ``body_text`` list of paragraph strings; paragraphs are joined with
    blank lines to form the document body. Malformed files, duplicate ids,
    and empty bodies are collected as :class:`ParseFailure` entries.
    """
    root = Path(path)
    if not root.is_dir():
        raise MissingPath(f"corpus directory not found: {root}")
    report = LoadReport()
    seen: set[str] = set()
    for fp in sorted(root.glob("*.json")):
        try:
            doc = _parse_article(fp, label)
        except (json.JSONDecodeError, UnicodeDecodeError, OSError, ValueError) as exc:
            report.errors.append(ParseFailure(str(fp), str(exc)))
            continue
        if doc.doc_id in seen:
            report.errors.append(ParseFailure(str(fp), f"duplicate paper_id {doc.doc_id!r}"))
            continue
        seen.add(doc.doc_id)
        report.documents.append(doc)
    return report


def _parse_article(fp: Path, label: str) -> Document:
    raw = json.loads(fp.read_text("utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("article JSON must be an object")
    for key in ("paper_id", "title", "body_text"):
        if key not in raw:
            raise ValueError(f"missing required field {key!r}")
    paper_id = raw["paper_id"]
    title = raw["title"]
    body_text = raw["body_text"]
    if not isinstance(paper_id, str) or not paper_id:
        raise ValueError("paper_id must be a non-empty string")
    if not isinstance(title, str):
        raise ValueError("title must be a string")
    if not isinstance(body_text, list) or not all(isinstance(p, str) for p in body_text):
        raise ValueError("body_text must be a list of paragraph strings")
    body = "\n\n".join(body_text)
    if not body.strip():
        raise ValueError("empty body")
    return Document(doc_id=f"{label}/{paper_id}", title=title, body=body, corpus_label=label)


def batch_iter(items: Sequence[T], batch_size: int) -> Iterator[list[T]]:
    """Yield consecutive batches; every batch except possibly the last has
    exactly ``batch_size`` items, and their concatenation is the input."""
    if batch_size < 1:
        raise InvalidBatchSize(f"batch_size must be >= 1, got {batch_size}")
    for start in range(0, len(items), batch_size):
        yield list(items[start : start + batch_size])


@dataclass
class StageStore:
    """Line-delimited JSON persistence for one named pipeline stage.

    The first line is a header carrying the stage name, the record schema,
    and the format version; each following line is one record. Records are
    written with sorted keys and full-precision floats, so a save/load
    round trip is bit-exact and re-saving identical records is
    byte-identical.
    """

    root_path: Path
    stage_name: str
    record_count: int = 0

    @property
    def path(self) -> Path:
        return Path(self.root_path) / f"{self.stage_name}.jsonl"

    def exists(self) -> bool:
        return self.path.is_file()

    def save(
        self,
        records: Iterable[Mapping[str, Any]],
        schema: str,
        meta: Mapping[str, Any] | None = None,
    ) -> int:
        path = self.path
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "stage": self.stage_name,
            "schema": schema,
            "version": STAGE_FORMAT_VERSION,
        }
        if meta:
            header.update(meta)
        tmp = path.with_suffix(path.suffix + ".tmp")
        count = 0
        try:
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(_dumps(header) + "\n")
                for rec in records:
                    fh.write(_dumps(rec) + "\n")
                    count += 1
            os.replace(tmp, path)
        except OSError as exc:
            tmp.unlink(missing_ok=True)
            raise StageIoError(f"cannot write stage {self.stage_name!r}: {exc}") from exc
        self.record_count = count
        return count

    def load(self, schema: str) -> list[dict[str, Any]]:
        records, _ = self.load_with_meta(schema)
        return records

    def load_with_meta(self, schema: str) -> tuple[list[dict[str, Any]], dict[str, Any]]:
        path = self.path
        if not path.is_file():
            raise StageIoError(f"stage not found: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                head_line = fh.readline()
                if not head_line.strip():
                    raise SchemaMismatch(f"stage {self.stage_name!r} has no header")
                try:
                    header = json.loads(head_line)
                except json.JSONDecodeError as exc:
                    raise SchemaMismatch(
                        f"stage {self.stage_name!r} header is not valid JSON"
                    ) from exc
                if not isinstance(header, dict) or header.get("schema") != schema:
                    raise SchemaMismatch(
                        f"stage {self.stage_name!r} holds schema "
                        f"{header.get('schema') if isinstance(header, dict) else None!r}, "
                        f"expected {schema!r}"
                    )
                if header.get("version") != STAGE_FORMAT_VERSION:
                    raise SchemaMismatch(
                        f"stage {self.stage_name!r} has format version "
                        f"{header.get('version')!r}, expected {STAGE_FORMAT_VERSION}"
                    )
                records = [json.loads(line) for line in fh if line.strip()]
        except OSError as exc:
            raise StageIoError(f"cannot read stage {self.stage_name!r}: {exc}") from exc
        self.record_count = len(records)
        meta = {k: v for k, v in header.items() if k not in ("stage", "schema", "version")}
        return records, meta


def _dumps(obj: Mapping[str, Any]) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
