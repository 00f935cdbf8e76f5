"""The typed, evidence-anchored graph standard and its structural utilities.

A QualGraph is a directed typed property multigraph at one of four
modeling levels: L1 free-form relations, L2 stage/timeline graphs, L3
directed causal pathways, L4 feedback dynamics. Every node, edge, and
loop carries evidence anchors into a corpus.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

import networkx as nx

from qualgraph.claims import Claim, ClaimKind
from qualgraph.corpus import TimeKind, TimeRef
from qualgraph.errors import IntegrityError, ParseError, PreconditionError


class Level(enum.Enum):
    L1 = "L1"
    L2 = "L2"
    L3 = "L3"
    L4 = "L4"


class SupportLabel(enum.Enum):
    SUPPORTS = "SUPPORTS"
    CONTRADICTS = "CONTRADICTS"
    MENTIONS = "MENTIONS"
    IRRELEVANT = "IRRELEVANT"


class EvidenceSource(enum.Enum):
    HUMAN = "HUMAN"
    MODEL = "MODEL"
    HYBRID = "HYBRID"


class LoopSign(enum.Enum):
    REINFORCING = "REINFORCING"
    BALANCING = "BALANCING"
    UNKNOWN = "UNKNOWN"


NODE_TYPES = {
    Level.L2: {"STAGE", "EVENT", "MARKER"},
    Level.L3: {"CONSTRUCT", "ACTOR", "OUTCOME"},
    Level.L4: {"STATE_VAR", "FLOW", "REGIME"},
}
EDGE_TYPES = {
    Level.L2: {"NEXT", "CONTAINS", "OVERLAPS"},
    Level.L3: {"CAUSES", "ENABLES", "INHIBITS", "CONSTRAINS", "MEDIATES", "MODERATES"},
    Level.L4: {"INCREASES", "DECREASES", "DELAYED_INFLUENCE", "TRANSACTION"},
}


@dataclass(frozen=True)
class EvidenceItem:
    excerpt_id: str
    doc_id: str
    span: tuple[int, int]
    support_label: SupportLabel
    rationale: str
    source: EvidenceSource
    time: TimeRef | None = None
    confidence: float | None = None

    def __post_init__(self):
        start, end = self.span
        if not (0 <= start <= end):
            raise IntegrityError(f"invalid span {self.span} on evidence for {self.excerpt_id}")
        if self.confidence is not None and not (0.0 <= self.confidence <= 1.0):
            raise IntegrityError(f"confidence {self.confidence} outside [0,1]")


@dataclass(frozen=True)
class Node:
    id: str
    node_type: str
    label: str
    definition: str
    aliases: tuple[str, ...] = ()
    attributes: dict[str, str] = field(default_factory=dict)
    evidence: tuple[EvidenceItem, ...] = ()


@dataclass(frozen=True)
class Edge:
    id: str
    src: str
    dst: str
    edge_type: str
    polarity: int | None = None
    qualifiers: dict[str, str] = field(default_factory=dict)
    evidence: tuple[EvidenceItem, ...] = ()

    def __post_init__(self):
        if self.polarity is not None and self.polarity not in (-1, 1):
            raise IntegrityError(f"edge {self.id}: polarity must be -1 or +1")


@dataclass(frozen=True)
class Loop:
    loop_id: str
    node_ids: tuple[str, ...]
    loop_sign: LoopSign = LoopSign.UNKNOWN
    evidence: tuple[EvidenceItem, ...] = ()


@dataclass(frozen=True)
class QualGraph:
    graph_id: str
    level: Level
    nodes: tuple[Node, ...] = ()
    edges: tuple[Edge, ...] = ()
    loops: tuple[Loop, ...] = ()
    recurrent_flag: bool = False
    provenance: dict[str, str] = field(default_factory=dict)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    def node_ids(self) -> set[str]:
        return {n.id for n in self.nodes}


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple[tuple[str, str, str], ...]  # (rule_id, subject_id, message)


def _edge_selection(graph: QualGraph, src: str, dst: str) -> Edge | None:
    """Deterministic representative among parallel edges: smallest edge id."""
    candidates = [e for e in graph.edges if e.src == src and e.dst == dst]
    if not candidates:
        return None
    return min(candidates, key=lambda e: e.id)


def _next_digraph(graph: QualGraph) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(n.id for n in graph.nodes)
    g.add_edges_from((e.src, e.dst) for e in graph.edges if e.edge_type == "NEXT")
    return g


def validate(graph: QualGraph) -> ValidationReport:
    """Run the minimum validators R1-R5 and report every violation.

    R1 evidence presence, R2 L2 NEXT acyclicity (unless recurrent), R3 L4
    polarity presence/consistency, R4 referential integrity, R5 level
    type vocabulary.
    """
    violations: list[tuple[str, str, str]] = []
    ids = set()
    for n in graph.nodes:
        if n.id in ids:
            violations.append(("R4", n.id, "duplicate node id"))
        ids.add(n.id)
        if not n.label or not n.definition:
            violations.append(("R4", n.id, "node label and definition must be non-empty"))
        if not n.evidence:
            violations.append(("R1", n.id, "node has no evidence items"))
        allowed = NODE_TYPES.get(graph.level)
        if allowed is not None and n.node_type not in allowed:
            violations.append(
                ("R5", n.id, f"node_type {n.node_type!r} not permitted at {graph.level.value}")
            )

    node_ids = {n.id for n in graph.nodes}
    edge_ids = set()
    for e in graph.edges:
        if e.id in edge_ids:
            violations.append(("R4", e.id, "duplicate edge id"))
        edge_ids.add(e.id)
        if e.src not in node_ids or e.dst not in node_ids:
            violations.append(("R4", e.id, "edge endpoints must reference existing nodes"))
        if not e.evidence:
            violations.append(("R1", e.id, "edge has no evidence items"))
        allowed = EDGE_TYPES.get(graph.level)
        if allowed is not None and e.edge_type not in allowed:
            violations.append(
                ("R5", e.id, f"edge_type {e.edge_type!r} not permitted at {graph.level.value}")
            )
        if e.edge_type == "INCREASES" and e.polarity != 1:
            violations.append(("R3", e.id, "INCREASES edge must have polarity +1"))
        if e.edge_type == "DECREASES" and e.polarity != -1:
            violations.append(("R3", e.id, "DECREASES edge must have polarity -1"))

    if graph.level is Level.L2 and not graph.recurrent_flag:
        next_g = _next_digraph(graph)
        try:
            cycle = nx.find_cycle(next_g)
            violations.append(
                ("R2", "->".join(u for u, _ in cycle),
                 "NEXT edges form a cycle and recurrent_flag is false")
            )
        except nx.NetworkXNoCycle:
            pass

    loop_member_edges: set[str] = set()
    for loop in graph.loops:
        missing = [nid for nid in loop.node_ids if nid not in node_ids]
        if missing:
            violations.append(
                ("R4", loop.loop_id, f"loop references unknown nodes {missing}")
            )
            continue
        cycle_edges = []
        broken = False
        n_ids = list(loop.node_ids)
        for i, src in enumerate(n_ids):
            dst = n_ids[(i + 1) % len(n_ids)]
            e = _edge_selection(graph, src, dst)
            if e is None:
                violations.append(
                    ("R4", loop.loop_id, f"loop has no edge {src}->{dst}")
                )
                broken = True
                break
            cycle_edges.append(e)
        if broken:
            continue
        if len(set(n_ids)) != len(n_ids):
            violations.append(("R4", loop.loop_id, "loop node ids are not a simple cycle"))
        loop_member_edges.update(e.id for e in cycle_edges)
        if all(e.polarity is not None for e in cycle_edges):
            expected = loop_sign_of(cycle_edges)
            if loop.loop_sign is not LoopSign.UNKNOWN and loop.loop_sign is not expected:
                violations.append(
                    ("R3", loop.loop_id,
                     f"loop sign {loop.loop_sign.value} inconsistent with member "
                     f"polarities ({expected.value})")
                )

    if graph.level is Level.L4:
        for e in graph.edges:
            needs_polarity = (
                e.edge_type in ("INCREASES", "DECREASES") or e.id in loop_member_edges
            )
            if needs_polarity and e.polarity is None:
                violations.append(
                    ("R3", e.id, "edge participates in loop/signed influence but lacks polarity")
                )

    violations.sort()
    return ValidationReport(passed=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# serialization


def _time_to_json(t: TimeRef | None):
    if t is None:
        return None
    return {"kind": t.kind.value, "value": t.value}


def _evidence_to_json(ev: EvidenceItem) -> dict:
    out = {
        "excerpt_id": ev.excerpt_id,
        "doc_id": ev.doc_id,
        "span": list(ev.span),
        "support_label": ev.support_label.value,
        "rationale": ev.rationale,
        "source": ev.source.value,
        "time": _time_to_json(ev.time),
    }
    if ev.confidence is not None:
        out["confidence"] = ev.confidence
    return out


def serialize(graph: QualGraph) -> bytes:
    """Canonical JSON bytes: sorted keys, stable separators, UTF-8."""
    doc = {
        "graph_id": graph.graph_id,
        "level": graph.level.value,
        "recurrent_flag": graph.recurrent_flag,
        "provenance": graph.provenance,
        "nodes": [
            {
                "id": n.id,
                "node_type": n.node_type,
                "label": n.label,
                "definition": n.definition,
                "aliases": list(n.aliases),
                "attributes": n.attributes,
                "evidence": [_evidence_to_json(ev) for ev in n.evidence],
            }
            for n in graph.nodes
        ],
        "edges": [
            {
                "id": e.id,
                "src": e.src,
                "dst": e.dst,
                "edge_type": e.edge_type,
                "polarity": e.polarity,
                "qualifiers": e.qualifiers,
                "evidence": [_evidence_to_json(ev) for ev in e.evidence],
            }
            for e in graph.edges
        ],
        "loops": [
            {
                "loop_id": lp.loop_id,
                "node_ids": list(lp.node_ids),
                "loop_sign": lp.loop_sign.value,
                "evidence": [_evidence_to_json(ev) for ev in lp.evidence],
            }
            for lp in graph.loops
        ],
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":")).encode("utf-8")


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ParseError(f"missing field at {path}/{key}", path=f"{path}/{key}")
    return obj[key]


def _parse_time_json(obj, path: str) -> TimeRef | None:
    if obj is None:
        return None
    try:
        return TimeRef(kind=TimeKind(obj["kind"]), value=obj["value"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"invalid time at {path}: {exc}", path=path) from None


def _parse_evidence(obj: dict, path: str) -> EvidenceItem:
    try:
        return EvidenceItem(
            excerpt_id=_require(obj, "excerpt_id", path),
            doc_id=_require(obj, "doc_id", path),
            span=tuple(_require(obj, "span", path)),
            support_label=SupportLabel(_require(obj, "support_label", path)),
            rationale=_require(obj, "rationale", path),
            source=EvidenceSource(_require(obj, "source", path)),
            time=_parse_time_json(obj.get("time"), f"{path}/time"),
            confidence=obj.get("confidence"),
        )
    except (ValueError, TypeError, IntegrityError) as exc:
        raise ParseError(f"invalid evidence at {path}: {exc}", path=path) from None


def deserialize(data: bytes | str) -> QualGraph:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path="/") from None
    if not isinstance(doc, dict):
        raise ParseError("graph document must be a JSON object", path="/")
    try:
        level = Level(_require(doc, "level", ""))
    except ValueError:
        raise ParseError(f"unknown level {doc.get('level')!r}", path="/level") from None
    nodes = []
    for i, n in enumerate(doc.get("nodes", [])):
        path = f"/nodes/{i}"
        nodes.append(
            Node(
                id=_require(n, "id", path),
                node_type=_require(n, "node_type", path),
                label=_require(n, "label", path),
                definition=_require(n, "definition", path),
                aliases=tuple(n.get("aliases", [])),
                attributes=dict(n.get("attributes", {})),
                evidence=tuple(
                    _parse_evidence(ev, f"{path}/evidence/{j}")
                    for j, ev in enumerate(n.get("evidence", []))
                ),
            )
        )
    edges = []
    for i, e in enumerate(doc.get("edges", [])):
        path = f"/edges/{i}"
        try:
            edge = Edge(
                id=_require(e, "id", path),
                src=_require(e, "src", path),
                dst=_require(e, "dst", path),
                edge_type=_require(e, "edge_type", path),
                polarity=e.get("polarity"),
                qualifiers=dict(e.get("qualifiers", {})),
                evidence=tuple(
                    _parse_evidence(ev, f"{path}/evidence/{j}")
                    for j, ev in enumerate(e.get("evidence", []))
                ),
            )
        except IntegrityError as exc:
            raise ParseError(f"invalid edge at {path}: {exc}", path=path) from None
        edges.append(edge)
    loops = []
    for i, lp in enumerate(doc.get("loops", [])):
        path = f"/loops/{i}"
        try:
            sign = LoopSign(lp.get("loop_sign", "UNKNOWN"))
        except ValueError:
            raise ParseError(
                f"unknown loop_sign {lp.get('loop_sign')!r}", path=f"{path}/loop_sign"
            ) from None
        loops.append(
            Loop(
                loop_id=_require(lp, "loop_id", path),
                node_ids=tuple(_require(lp, "node_ids", path)),
                loop_sign=sign,
                evidence=tuple(
                    _parse_evidence(ev, f"{path}/evidence/{j}")
                    for j, ev in enumerate(lp.get("evidence", []))
                ),
            )
        )
    return QualGraph(
        graph_id=_require(doc, "graph_id", ""),
        level=level,
        nodes=tuple(nodes),
        edges=tuple(edges),
        loops=tuple(loops),
        recurrent_flag=bool(doc.get("recurrent_flag", False)),
        provenance=dict(doc.get("provenance", {})),
    )


# ---------------------------------------------------------------------------
# structural utilities


def loop_sign_of(cycle_edges: list[Edge]) -> LoopSign:
    """Sign of a feedback cycle: product of member polarities.

    Any member lacking polarity makes the sign UNKNOWN. The empty
    product (and any all-positive product) is reinforcing.
    """
    product = 1
    for e in cycle_edges:
        if e.polarity is None:
            return LoopSign.UNKNOWN
        product *= e.polarity
    return LoopSign.REINFORCING if product == 1 else LoopSign.BALANCING


def _canonical_rotation(cycle: list[str]) -> tuple[str, ...]:
    pivot = cycle.index(min(cycle))
    return tuple(cycle[pivot:] + cycle[:pivot])


def detect_loops(graph: QualGraph) -> list[Loop]:
    """All simple directed cycles, canonically rotated and deduplicated.

    Parallel edges between consecutive members are collapsed to the
    smallest-id representative for sign computation.
    """
    g = nx.DiGraph()
    g.add_nodes_from(n.id for n in graph.nodes)
    g.add_edges_from((e.src, e.dst) for e in graph.edges)
    seen: set[tuple[str, ...]] = set()
    loops: list[Loop] = []
    for cycle in nx.simple_cycles(g):
        canon = _canonical_rotation(list(cycle))
        if canon in seen:
            continue
        seen.add(canon)
        member_edges = []
        for i, src in enumerate(canon):
            dst = canon[(i + 1) % len(canon)]
            member_edges.append(_edge_selection(graph, src, dst))
        sign = loop_sign_of(member_edges)
        loops.append(
            Loop(loop_id="loop_" + "_".join(canon), node_ids=canon, loop_sign=sign)
        )
    loops.sort(key=lambda lp: lp.node_ids)
    return loops


def transitive_reduction(graph: QualGraph, edge_type: str) -> QualGraph:
    """Minimal reachability-preserving edge set for one edge type.

    Other edge types are untouched. The removed edge ids are recorded in
    provenance. The typed subgraph must be acyclic.
    """
    sub = nx.DiGraph()
    sub.add_nodes_from(n.id for n in graph.nodes)
    typed = [e for e in graph.edges if e.edge_type == edge_type]
    sub.add_edges_from((e.src, e.dst) for e in typed)
    try:
        cycle = nx.find_cycle(sub)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle is not None:
        named = "->".join(u for u, _ in cycle) + "->" + cycle[-1][1]
        raise PreconditionError(
            f"{edge_type} subgraph is cyclic: {named}; transitive reduction requires a DAG"
        )
    reduced = nx.transitive_reduction(sub)
    kept_pairs = set(reduced.edges())
    kept_edges: list[Edge] = []
    removed: list[str] = []
    claimed: set[tuple[str, str]] = set()
    for e in sorted(typed, key=lambda e: e.id):
        pair = (e.src, e.dst)
        if pair in kept_pairs and pair not in claimed:
            claimed.add(pair)
            kept_edges.append(e)
        else:
            removed.append(e.id)
    kept_ids = {e.id for e in kept_edges}
    new_edges = tuple(
        e for e in graph.edges if e.edge_type != edge_type or e.id in kept_ids
    )
    provenance = dict(graph.provenance)
    provenance["transitive_reduction_removed"] = json.dumps(sorted(removed))
    return replace(graph, edges=new_edges, provenance=provenance)


def enumerate_atomic_claims(graph: QualGraph) -> list[Claim]:
    """The claim set of a graph: node, edge, and level-specific structure claims."""
    claims: list[Claim] = []
    for n in graph.nodes:
        claims.append(
            Claim(
                kind=ClaimKind.NODE_INSTANTIATION,
                subject_ids=(n.id,),
                rendered_statement=(
                    f"The excerpt instantiates {n.node_type} '{n.label}': {n.definition}"
                ),
            )
        )
    labels = {n.id: n.label for n in graph.nodes}
    for e in graph.edges:
        claims.append(
            Claim(
                kind=ClaimKind.EDGE_SUPPORT,
                subject_ids=(e.id,),
                rendered_statement=(
                    f"'{labels.get(e.src, e.src)}' {e.edge_type} "
                    f"'{labels.get(e.dst, e.dst)}'"
                ),
            )
        )
    if graph.level is Level.L2:
        for e in graph.edges:
            if e.edge_type == "NEXT":
                claims.append(
                    Claim(
                        kind=ClaimKind.ORDER_CONSTRAINT,
                        subject_ids=(e.id,),
                        rendered_statement=(
                            f"Stage '{labels.get(e.src, e.src)}' precedes stage "
                            f"'{labels.get(e.dst, e.dst)}'"
                        ),
                    )
                )
    if graph.level is Level.L4:
        loops = graph.loops or tuple(detect_loops(graph))
        for lp in loops:
            claims.append(
                Claim(
                    kind=ClaimKind.LOOP_CLOSURE,
                    subject_ids=(lp.loop_id,),
                    rendered_statement=(
                        "The cycle "
                        + " -> ".join(labels.get(nid, nid) for nid in lp.node_ids)
                        + " recurs across time"
                    ),
                )
            )
        for n in graph.nodes:
            if n.node_type == "STATE_VAR":
                claims.append(
                    Claim(
                        kind=ClaimKind.TREND,
                        subject_ids=(n.id,),
                        rendered_statement=(
                            f"The direction of change of '{n.label}' over time"
                        ),
                    )
                )
    return claims
