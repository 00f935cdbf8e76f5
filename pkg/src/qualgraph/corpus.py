"""Corpus loading and time normalization.

The unit of evidence is an excerpt: a pre-segmented span of text with a
document identity, an optional time reference, and free-form metadata.
The JSONL interchange format is one object per line with keys
``excerpt_id``, ``doc_id``, ``text``, optional ``time`` ({kind, value}),
and optional ``metadata`` (string map). Unknown top-level keys are
preserved in the metadata passthrough.
"""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field, replace

from qualgraph.errors import IntegrityError, ParseError


class TimeKind(enum.Enum):
    ABSOLUTE = "ABSOLUTE"
    NARRATIVE_INDEX = "NARRATIVE_INDEX"
    TURN_INDEX = "TURN_INDEX"


@dataclass(frozen=True, order=True)
class TimeRef:
    """A totally ordered time reference within a document.

    ABSOLUTE values are seconds since epoch; the index kinds are
    non-negative ordinals.
    """

    kind: TimeKind = field(compare=False)
    value: int

    def __post_init__(self):
        if self.kind is not TimeKind.ABSOLUTE and self.value < 0:
            raise IntegrityError(
                f"{self.kind.value} time value must be non-negative, got {self.value}"
            )


@dataclass(frozen=True)
class Excerpt:
    excerpt_id: str
    doc_id: str
    text: str
    time: TimeRef | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.text:
            raise IntegrityError(f"excerpt {self.excerpt_id!r} has empty text")


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of excerpts with a per-document index."""

    excerpts: tuple[Excerpt, ...]
    doc_index: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.doc_index:
            index: dict[str, list[str]] = {}
            for ex in self.excerpts:
                index.setdefault(ex.doc_id, []).append(ex.excerpt_id)
            object.__setattr__(
                self, "doc_index", {d: tuple(ids) for d, ids in index.items()}
            )
        indexed = [eid for ids in self.doc_index.values() for eid in ids]
        if sorted(indexed) != sorted(ex.excerpt_id for ex in self.excerpts):
            raise IntegrityError("doc_index does not cover excerpts exactly once")

    def __len__(self):
        return len(self.excerpts)

    def get(self, excerpt_id: str) -> Excerpt:
        try:
            return self._by_id[excerpt_id]
        except AttributeError:
            object.__setattr__(
                self, "_by_id", {ex.excerpt_id: ex for ex in self.excerpts}
            )
            return self._by_id[excerpt_id]

    def doc_excerpts(self, doc_id: str) -> list[Excerpt]:
        return [self.get(eid) for eid in self.doc_index.get(doc_id, ())]


def _parse_time(obj, line_no: int) -> TimeRef:
    if not isinstance(obj, dict) or "kind" not in obj or "value" not in obj:
        raise ParseError(
            f"line {line_no}: time must be an object with kind and value",
            line=line_no,
        )
    try:
        kind = TimeKind(obj["kind"])
    except ValueError:
        raise ParseError(
            f"line {line_no}: unknown time kind {obj['kind']!r}", line=line_no
        ) from None
    value = obj["value"]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(
            f"line {line_no}: time value must be an integer", line=line_no
        )
    try:
        return TimeRef(kind=kind, value=value)
    except IntegrityError as exc:
        raise ParseError(f"line {line_no}: {exc}", line=line_no) from None


_CORE_KEYS = {"excerpt_id", "doc_id", "text", "time", "metadata"}


def load_corpus(source, format: str = "JSONL") -> Corpus:
    """Load a corpus from a byte stream (or str/bytes) of JSONL records.

    Raises ParseError (with a line number) on malformed records and
    IntegrityError on duplicate excerpt ids or mixed time kinds within
    one document.
    """
    if format != "JSONL":
        raise ParseError(f"unsupported corpus format {format!r}")
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    if isinstance(source, str):
        source = io.StringIO(source)

    excerpts: list[Excerpt] = []
    seen_ids: set[str] = set()
    doc_kinds: dict[str, TimeKind] = {}
    for line_no, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"line {line_no}: invalid JSON: {exc.msg}", line=line_no
            ) from None
        if not isinstance(record, dict):
            raise ParseError(
                f"line {line_no}: record must be a JSON object", line=line_no
            )
        for key in ("excerpt_id", "doc_id", "text"):
            if key not in record or not isinstance(record[key], str):
                raise ParseError(
                    f"line {line_no}: missing or non-string field {key!r}",
                    line=line_no,
                )
        if not record["text"]:
            raise ParseError(f"line {line_no}: empty text field", line=line_no)
        excerpt_id = record["excerpt_id"]
        if excerpt_id in seen_ids:
            raise IntegrityError(f"duplicate excerpt_id {excerpt_id!r} at line {line_no}")
        seen_ids.add(excerpt_id)

        time = None
        if record.get("time") is not None:
            time = _parse_time(record["time"], line_no)
            prior = doc_kinds.get(record["doc_id"])
            if prior is not None and prior is not time.kind:
                raise IntegrityError(
                    f"doc {record['doc_id']!r} mixes time kinds "
                    f"{prior.value} and {time.kind.value}"
                )
            doc_kinds[record["doc_id"]] = time.kind

        metadata = dict(record.get("metadata") or {})
        for key, value in record.items():
            if key not in _CORE_KEYS:
                metadata[key] = value if isinstance(value, str) else json.dumps(value)
        excerpts.append(
            Excerpt(
                excerpt_id=excerpt_id,
                doc_id=record["doc_id"],
                text=record["text"],
                time=time,
                metadata=metadata,
            )
        )
    return Corpus(excerpts=tuple(excerpts))


def normalize_time(corpus: Corpus) -> Corpus:
    """Return a corpus where every excerpt carries a TimeRef.

    Untimed excerpts receive a NARRATIVE_INDEX equal to their within-doc
    position. Documents mixing time kinds are rejected.
    """
    doc_kinds: dict[str, TimeKind] = {}
    for ex in corpus.excerpts:
        if ex.time is not None:
            prior = doc_kinds.get(ex.doc_id)
            if prior is not None and prior is not ex.time.kind:
                raise IntegrityError(
                    f"doc {ex.doc_id!r} mixes time kinds {prior.value} "
                    f"and {ex.time.kind.value}"
                )
            doc_kinds[ex.doc_id] = ex.time.kind

    positions: dict[str, int] = {}
    new_excerpts = []
    for ex in corpus.excerpts:
        pos = positions.get(ex.doc_id, 0)
        positions[ex.doc_id] = pos + 1
        if ex.time is None:
            # Filling in an index next to real timestamps would itself
            # create a mixed-kind document.
            kind = doc_kinds.get(ex.doc_id, TimeKind.NARRATIVE_INDEX)
            if kind is TimeKind.ABSOLUTE:
                raise IntegrityError(
                    f"doc {ex.doc_id!r} mixes ABSOLUTE times with untimed excerpts"
                )
            ex = replace(ex, time=TimeRef(kind=kind, value=pos))
        new_excerpts.append(ex)
    return Corpus(excerpts=tuple(new_excerpts))
