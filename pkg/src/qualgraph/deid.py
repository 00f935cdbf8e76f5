"""Corpus de-identification with consistent pseudonyms.

Pipeline: pluggable span detection (built-in regex detectors for emails,
phones, dates, and alphanumeric IDs; external NER detectors register
through the same interface), string-similarity entity clustering,
stable pseudonym assignment against a separately stored map, policy
application, and tiered artifact export.

Placeholders use the grammar "[TYPE_n]"; redaction tokens are
"[REDACTED:TYPE]". Both are exempt from re-detection, which makes the
pipeline idempotent on its own output.
"""

from __future__ import annotations

import datetime as _dt
import enum
import hashlib
import json
import os
import random
import re
from dataclasses import dataclass, field, replace

from qualgraph.corpus import Corpus, Excerpt
from qualgraph.errors import DomainError, IntegrityError, PreconditionError


class EntityType(enum.Enum):
    PERSON = "PERSON"
    ORG = "ORG"
    LOCATION = "LOCATION"
    EMAIL = "EMAIL"
    PHONE = "PHONE"
    DATE = "DATE"
    ID = "ID"
    OTHER = "OTHER"


class Action(enum.Enum):
    REDACT = "REDACT"
    PSEUDONYMIZE = "PSEUDONYMIZE"
    GENERALIZE = "GENERALIZE"
    DATE_SHIFT = "DATE_SHIFT"


@dataclass(frozen=True)
class PiiSpan:
    excerpt_id: str
    span: tuple[int, int]
    entity_type: EntityType
    surface: str
    detector_id: str


@dataclass(frozen=True)
class EntityCluster:
    cluster_id: str
    entity_type: EntityType
    members: tuple[str, ...]  # surface forms
    pseudonym: str = ""


@dataclass(frozen=True)
class DeidPolicy:
    actions: dict[EntityType, Action]
    date_granularity: str = "month"  # or "year", for GENERALIZE
    date_shift_bounds: tuple[int, int] = (-30, 30)  # days, per document
    hash_doc_ids: bool = False

    def action_for(self, entity_type: EntityType) -> Action:
        return self.actions.get(entity_type, Action.REDACT)


PLACEHOLDER_RE = re.compile(r"\[(?:[A-Z]+_\d+|REDACTED:[A-Z]+)\]")

_MONTHS = (
    "January February March April May June July August September "
    "October November December"
).split()
_MONTH_RE = "|".join(_MONTHS)

BUILTIN_PATTERNS = {
    EntityType.EMAIL: re.compile(
        r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b"
    ),
    # listed formats: 555-0100, 555-123-4567, (555) 123-4567, +1-555-123-4567
    EntityType.PHONE: re.compile(
        r"(?:\+\d{1,2}-)?(?:\(\d{3}\)\s?|\d{3}-)?\d{3}-\d{4}\b"
    ),
    # ISO 8601 dates plus "Month D, YYYY" English forms
    EntityType.DATE: re.compile(
        r"\b\d{4}-\d{2}-\d{2}\b|\b(?:" + _MONTH_RE + r") \d{1,2}, \d{4}\b"
    ),
    EntityType.ID: re.compile(r"\b[A-Z]{2,}\d{4,}\b"),
}


class RegexDetector:
    """Built-in detector for the listed email/phone/date/ID formats."""

    detector_id = "builtin_regex"

    def detect(self, excerpt: Excerpt) -> list[PiiSpan]:
        exempt = [m.span() for m in PLACEHOLDER_RE.finditer(excerpt.text)]
        spans = []
        for entity_type, pattern in BUILTIN_PATTERNS.items():
            for m in pattern.finditer(excerpt.text):
                if any(s <= m.start() and m.end() <= e for s, e in exempt):
                    continue
                spans.append(
                    PiiSpan(
                        excerpt_id=excerpt.excerpt_id,
                        span=m.span(),
                        entity_type=entity_type,
                        surface=m.group(),
                        detector_id=self.detector_id,
                    )
                )
        return spans


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def detect_pii(corpus: Corpus, detectors=None) -> tuple[list[PiiSpan], list[str]]:
    """Union of detector outputs with overlap resolution.

    Same-type overlaps merge to the maximal extent. Different-type
    overlaps keep the longer span (tie: earlier detector in the list).
    Returns (spans, detector error messages); a failing detector is
    skipped, not fatal.
    """
    detectors = detectors if detectors is not None else [RegexDetector()]
    errors: list[str] = []
    raw: dict[str, list[tuple[int, PiiSpan]]] = {}
    for priority, detector in enumerate(detectors):
        for excerpt in corpus.excerpts:
            try:
                found = detector.detect(excerpt)
            except Exception as exc:  # detector contract: isolate failures
                errors.append(f"{getattr(detector, 'detector_id', '?')}: {exc}")
                break
            for span in found:
                raw.setdefault(excerpt.excerpt_id, []).append((priority, span))

    result: list[PiiSpan] = []
    for excerpt_id in sorted(raw):
        excerpt = next(
            ex for ex in corpus.excerpts if ex.excerpt_id == excerpt_id
        )
        # merge same-type overlaps to maximal extent
        by_type: dict[EntityType, list[tuple[int, PiiSpan]]] = {}
        for priority, span in raw[excerpt_id]:
            by_type.setdefault(span.entity_type, []).append((priority, span))
        merged: list[tuple[int, PiiSpan]] = []
        for entity_type, items in by_type.items():
            items.sort(key=lambda p: p[1].span)
            current: tuple[int, list[int]] | None = None
            for priority, span in items:
                if current is not None and span.span[0] <= current[1][1]:
                    current = (min(current[0], priority),
                               [current[1][0], max(current[1][1], span.span[1])])
                else:
                    if current is not None:
                        merged.append(_respan(excerpt, entity_type, current))
                    current = (priority, list(span.span))
            if current is not None:
                merged.append(_respan(excerpt, entity_type, current))
        # resolve cross-type overlaps: longer wins, tie -> detector priority
        merged.sort(
            key=lambda p: (-(p[1].span[1] - p[1].span[0]), p[0], p[1].span)
        )
        chosen: list[PiiSpan] = []
        for _priority, span in merged:
            if not any(_overlaps(span.span, c.span) for c in chosen):
                chosen.append(span)
        chosen.sort(key=lambda s: s.span)
        result.extend(chosen)
    return result, errors


def _respan(excerpt: Excerpt, entity_type: EntityType,
            current: tuple[int, list[int]]) -> tuple[int, PiiSpan]:
    priority, (start, end) = current
    return (
        priority,
        PiiSpan(
            excerpt_id=excerpt.excerpt_id,
            span=(start, end),
            entity_type=entity_type,
            surface=excerpt.text[start:end],
            detector_id="merged",
        ),
    )


def normalize_surface(surface: str) -> str:
    folded = surface.casefold()
    stripped = re.sub(r"[^\w\s@]", "", folded, flags=re.UNICODE)
    return re.sub(r"\s+", " ", stripped).strip()


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> float:
    """Normalized edit-distance ratio on normalized surfaces, in [0,1]."""
    na, nb = normalize_surface(a), normalize_surface(b)
    if not na and not nb:
        return 1.0
    longest = max(len(na), len(nb))
    return 1.0 - levenshtein(na, nb) / longest


def cluster_entities(spans: list[PiiSpan], threshold: float) -> list[EntityCluster]:
    """Single-linkage clusters of surface forms within each entity type."""
    if not (0.0 <= threshold <= 1.0):
        raise DomainError("cluster threshold must lie in [0,1]")
    clusters: list[EntityCluster] = []
    by_type: dict[EntityType, list[str]] = {}
    for span in spans:
        surfaces = by_type.setdefault(span.entity_type, [])
        if span.surface not in surfaces:
            surfaces.append(span.surface)
    for entity_type in sorted(by_type, key=lambda t: t.value):
        surfaces = sorted(by_type[entity_type])
        parent = list(range(len(surfaces)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(len(surfaces)):
            for j in range(i + 1, len(surfaces)):
                if similarity(surfaces[i], surfaces[j]) >= threshold:
                    parent[find(i)] = find(j)
        groups: dict[int, list[str]] = {}
        for i, surface in enumerate(surfaces):
            groups.setdefault(find(i), []).append(surface)
        for members in sorted(groups.values()):
            clusters.append(
                EntityCluster(
                    cluster_id=f"{entity_type.value}:{normalize_surface(members[0])}",
                    entity_type=entity_type,
                    members=tuple(members),
                )
            )
    return clusters


class PseudonymMap:
    """Injective cluster -> placeholder mapping, stored apart from outputs.

    Surfaces are keyed by (type, normalized form); reruns over the same
    clusters keep their pseudonyms and new clusters take the next index
    per type.
    """

    def __init__(self):
        self.counters: dict[str, int] = {}
        self.surfaces: dict[str, str] = {}  # "TYPE|normalized surface" -> pseudonym

    def pseudonym_for_surface(self, entity_type: EntityType,
                              surface: str) -> str | None:
        return self.surfaces.get(f"{entity_type.value}|{normalize_surface(surface)}")

    def to_json(self) -> bytes:
        doc = {"counters": self.counters, "surfaces": self.surfaces}
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str) -> "PseudonymMap":
        doc = json.loads(data)
        store = cls()
        store.counters = dict(doc.get("counters", {}))
        store.surfaces = dict(doc.get("surfaces", {}))
        return store

    def save(self, path: str, key: bytes | None = None) -> None:
        payload = self.to_json()
        if key is not None:
            from cryptography.fernet import Fernet

            payload = Fernet(key).encrypt(payload)
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)

    @classmethod
    def load(cls, path: str, key: bytes | None = None) -> "PseudonymMap":
        with open(path, "rb") as handle:
            payload = handle.read()
        if key is not None:
            from cryptography.fernet import Fernet

            payload = Fernet(key).decrypt(payload)
        return cls.from_json(payload)


def assign_pseudonyms(clusters: list[EntityCluster],
                      map_store: PseudonymMap) -> list[EntityCluster]:
    """Give each cluster a stable "[TYPE_n]" placeholder.

    Clusters with a previously mapped member keep that pseudonym; new
    clusters take the next per-type counter value.
    """
    assigned = []
    for cluster in clusters:
        existing = None
        for member in cluster.members:
            existing = map_store.pseudonym_for_surface(cluster.entity_type, member)
            if existing is not None:
                break
        if existing is None:
            n = map_store.counters.get(cluster.entity_type.value, 0) + 1
            map_store.counters[cluster.entity_type.value] = n
            existing = f"[{cluster.entity_type.value}_{n}]"
        for member in cluster.members:
            key = f"{cluster.entity_type.value}|{normalize_surface(member)}"
            map_store.surfaces[key] = existing
        assigned.append(replace(cluster, pseudonym=existing))
    return assigned


def _parse_date(surface: str) -> tuple[_dt.date, str]:
    iso = re.fullmatch(r"(\d{4})-(\d{2})-(\d{2})", surface)
    if iso:
        return _dt.date(*map(int, iso.groups())), "iso"
    english = re.fullmatch(r"(" + _MONTH_RE + r") (\d{1,2}), (\d{4})", surface)
    if english:
        month = _MONTHS.index(english.group(1)) + 1
        return (
            _dt.date(int(english.group(3)), month, int(english.group(2))),
            "english",
        )
    raise DomainError(f"unparseable date surface {surface!r}")


def _format_date(date: _dt.date, style: str) -> str:
    if style == "iso":
        return date.isoformat()
    return f"{_MONTHS[date.month - 1]} {date.day}, {date.year}"


def _generalize_date(surface: str, granularity: str) -> str:
    date, _style = _parse_date(surface)
    if granularity == "year":
        return str(date.year)
    return f"{_MONTHS[date.month - 1]} {date.year}"


def apply_policy(corpus: Corpus, spans: list[PiiSpan], map_store: PseudonymMap,
                 policy: DeidPolicy, seed: int = 0) -> tuple[Corpus, list[dict]]:
    """Rewrite every detected span per the policy; returns corpus + audit log.

    Replacements run right-to-left within each excerpt so earlier offsets
    stay valid. Date shifting uses one seeded offset per document, which
    preserves within-document intervals exactly.
    """
    by_excerpt: dict[str, list[PiiSpan]] = {}
    for span in spans:
        by_excerpt.setdefault(span.excerpt_id, []).append(span)

    doc_offsets: dict[str, int] = {}

    def offset_for(doc_id: str) -> int:
        if doc_id not in doc_offsets:
            rng = random.Random(f"{seed}:{doc_id}")
            lo, hi = policy.date_shift_bounds
            doc_offsets[doc_id] = rng.randint(lo, hi)
        return doc_offsets[doc_id]

    audit: list[dict] = []
    new_excerpts = []
    for excerpt in corpus.excerpts:
        text = excerpt.text
        for span in sorted(by_excerpt.get(excerpt.excerpt_id, []),
                           key=lambda s: s.span, reverse=True):
            start, end = span.span
            if text[start:end] != span.surface:
                raise IntegrityError(
                    f"span {span.span} of excerpt {excerpt.excerpt_id} does not "
                    f"match its recorded surface"
                )
            action = policy.action_for(span.entity_type)
            if action is Action.REDACT:
                replacement = f"[REDACTED:{span.entity_type.value}]"
            elif action is Action.PSEUDONYMIZE:
                replacement = map_store.pseudonym_for_surface(
                    span.entity_type, span.surface
                )
                if replacement is None:
                    raise IntegrityError(
                        f"no pseudonym for {span.entity_type.value} surface in "
                        f"excerpt {excerpt.excerpt_id}"
                    )
            elif action is Action.GENERALIZE:
                replacement = _generalize_date(span.surface, policy.date_granularity)
            elif action is Action.DATE_SHIFT:
                date, style = _parse_date(span.surface)
                shifted = date + _dt.timedelta(days=offset_for(excerpt.doc_id))
                replacement = _format_date(shifted, style)
            text = text[:start] + replacement + text[end:]
            audit.append(
                {
                    "excerpt_id": excerpt.excerpt_id,
                    "span": [start, end],
                    "entity_type": span.entity_type.value,
                    "action": action.value,
                    "replacement": replacement,
                }
            )
        doc_id = excerpt.doc_id
        if policy.hash_doc_ids:
            doc_id = hashlib.sha256(doc_id.encode("utf-8")).hexdigest()[:12]
        new_excerpts.append(
            replace(excerpt, text=text, doc_id=doc_id)
        )
    audit.sort(key=lambda entry: (entry["excerpt_id"], entry["span"]))
    return Corpus(excerpts=tuple(new_excerpts)), audit


@dataclass(frozen=True)
class TierBundle:
    tier: str
    contents: dict


def _scan_for_text_fields(obj) -> bool:
    if isinstance(obj, dict):
        if "text" in obj:
            return True
        return any(_scan_for_text_fields(v) for v in obj.values())
    if isinstance(obj, list):
        return any(_scan_for_text_fields(v) for v in obj)
    return False


def export_tier(tier: str, *, corpus: Corpus | None = None,
                graphs: list | None = None, codebook=None,
                statistics: dict | None = None,
                confirm_raw: bool = False) -> TierBundle:
    """Assemble a release bundle for tier A (structure only), B
    (de-identified text plus trace links), or C (raw, gated)."""
    from qualgraph.graph import serialize

    if tier == "A":
        if graphs is None or codebook is None:
            raise PreconditionError("tier A requires graphs and a codebook")
        graph_docs = [json.loads(serialize(g)) for g in graphs]
        contents = {
            "graphs": graph_docs,
            "codebook": codebook,
            "statistics": statistics or {},
        }
        if _scan_for_text_fields(contents):
            raise IntegrityError("tier A bundle would contain a text field; aborted")
        return TierBundle(tier="A", contents=contents)
    if tier == "B":
        if corpus is None:
            raise PreconditionError("tier B requires a de-identified corpus")
        trace_links = {}
        for g in graphs or []:
            for element in list(g.nodes) + list(g.edges):
                trace_links[element.id] = sorted(
                    {ev.excerpt_id for ev in element.evidence}
                )
        contents = {
            "excerpts": [
                {
                    "excerpt_id": ex.excerpt_id,
                    "doc_id": ex.doc_id,
                    "text": ex.text,
                    "metadata": ex.metadata,
                }
                for ex in corpus.excerpts
            ],
            "trace_links": trace_links,
        }
        return TierBundle(tier="B", contents=contents)
    if tier == "C":
        if not confirm_raw:
            raise PreconditionError(
                "tier C exports raw text and requires explicit confirmation"
            )
        if corpus is None:
            raise PreconditionError("tier C requires the raw corpus")
        contents = {
            "excerpts": [
                {
                    "excerpt_id": ex.excerpt_id,
                    "doc_id": ex.doc_id,
                    "text": ex.text,
                    "metadata": ex.metadata,
                }
                for ex in corpus.excerpts
            ],
        }
        return TierBundle(tier="C", contents=contents)
    raise DomainError(f"unknown tier {tier!r}")
