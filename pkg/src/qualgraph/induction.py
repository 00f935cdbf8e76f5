"""Relation induction from a coded corpus.

Step A: deterministic candidate generation from excerpt-level PMI and
windowed temporal precedence. Step B: judge-based relation typing with
support and counterevidence excerpts. Step C: sparsification (top-K
incident edges per node, transitive reduction of NEXT, loop detection).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from qualgraph.claims import Claim, ClaimKind
from qualgraph.corpus import Corpus, load_corpus, normalize_time
from qualgraph.errors import DomainError
from qualgraph.graph import (
    Edge,
    EvidenceItem,
    EvidenceSource,
    Level,
    Node,
    QualGraph,
    SupportLabel,
    detect_loops,
    transitive_reduction,
)
from qualgraph.judge import JudgeConfig, judge_with_vote
from qualgraph.fitness import FitParams, score_claim

NEG_INF = float("-inf")

_L2_TYPES = {"NEXT", "CONTAINS", "OVERLAPS"}
_L3_TYPES = {"CAUSES", "ENABLES", "INHIBITS", "CONSTRAINS", "MEDIATES", "MODERATES"}
_L4_TYPES = {"INCREASES", "DECREASES", "DELAYED_INFLUENCE", "TRANSACTION"}
_SYMMETRIC_TYPES = {"CO_OCCURS", "PART_OF", "MODERATES"}


@dataclass(frozen=True)
class Codebook:
    codes: dict[str, tuple[str, str, tuple[str, ...]]]  # id -> (label, definition, aliases)

    def __post_init__(self):
        for code_id, (label, definition, _aliases) in self.codes.items():
            if not definition:
                raise DomainError(f"code {code_id!r} has an empty definition")

    @classmethod
    def from_json(cls, data: str | bytes) -> "Codebook":
        doc = json.loads(data)
        codes = {}
        for code_id, entry in doc.items():
            codes[code_id] = (
                entry.get("label", code_id),
                entry["definition"],
                tuple(entry.get("aliases", [])),
            )
        return cls(codes=codes)


@dataclass(frozen=True)
class CodedCorpus:
    corpus: Corpus
    codes: dict[str, frozenset[str]]  # excerpt_id -> C(x)

    def code_universe(self) -> set[str]:
        return set().union(*self.codes.values()) if self.codes else set()


def load_coded_corpus(source) -> CodedCorpus:
    """Corpus JSONL extended with a "codes" string-array field per line."""
    corpus = load_corpus(source)
    codes = {}
    for ex in corpus.excerpts:
        raw = ex.metadata.get("codes", "[]")
        codes[ex.excerpt_id] = frozenset(json.loads(raw))
    return CodedCorpus(corpus=corpus, codes=codes)


@dataclass(frozen=True)
class InductionParams:
    tau_pmi: float = 0.1
    tau_prec: float = 0.7
    w: int = 5                      # precedence window, positional
    epsilon: float = 1e-9
    top_k_per_node: int = 5
    cluster_threshold: float = 0.8  # reserved
    union_survival: bool = True     # edge survives if either endpoint keeps it
    max_evidence: int = 5           # judged excerpts per candidate side

    def __post_init__(self):
        if not (0.5 < self.tau_prec <= 1.0):
            raise ValueError("tau_prec must lie in (0.5, 1]")
        if self.w < 1 or self.epsilon <= 0 or self.top_k_per_node < 1:
            raise ValueError("invalid induction parameters")


@dataclass(frozen=True)
class CandidateEdge:
    a: str
    b: str
    pmi: float
    prec_ab: float
    prec_ba: float
    co_count: int
    directional_ab: bool = False
    directional_ba: bool = False


def pmi(coded: CodedCorpus, a: str, b: str) -> float:
    """Excerpt-level pointwise mutual information, natural log.

    Zero joint probability returns the NEG_INF sentinel.
    """
    n = len(coded.corpus)
    count_a = sum(1 for c in coded.codes.values() if a in c)
    count_b = sum(1 for c in coded.codes.values() if b in c)
    if count_a == 0:
        raise DomainError(f"code {a!r} does not occur in the corpus")
    if count_b == 0:
        raise DomainError(f"code {b!r} does not occur in the corpus")
    joint = sum(1 for c in coded.codes.values() if a in c and b in c)
    if joint == 0:
        return NEG_INF
    return math.log((joint / n) / ((count_a / n) * (count_b / n)))


def precedence(coded: CodedCorpus, a: str, b: str,
               params: InductionParams) -> tuple[float, float]:
    """Windowed within-document order statistics (prec_ab, prec_ba)."""
    corpus = normalize_time(coded.corpus)
    n_ab = 0
    n_ba = 0
    for doc_id in corpus.doc_index:
        ordered = sorted(
            corpus.doc_excerpts(doc_id), key=lambda ex: (ex.time.value, ex.excerpt_id)
        )
        for i, xi in enumerate(ordered):
            for j, xj in enumerate(ordered):
                if xi.time.value >= xj.time.value or abs(j - i) > params.w:
                    continue
                ci = coded.codes.get(xi.excerpt_id, frozenset())
                cj = coded.codes.get(xj.excerpt_id, frozenset())
                if a in ci and b in cj:
                    n_ab += 1
                if b in ci and a in cj:
                    n_ba += 1
    denom = n_ab + n_ba + params.epsilon
    return n_ab / denom, n_ba / denom


def generate_candidates(coded: CodedCorpus,
                        params: InductionParams) -> list[CandidateEdge]:
    """Association candidates above the PMI threshold, with direction flags."""
    universe = sorted(coded.code_universe())
    candidates = []
    for i, a in enumerate(universe):
        for b in universe[i + 1:]:
            value = pmi(coded, a, b)
            if value <= params.tau_pmi:
                continue
            prec_ab, prec_ba = precedence(coded, a, b, params)
            co_count = sum(
                1 for c in coded.codes.values() if a in c and b in c
            )
            candidates.append(
                CandidateEdge(
                    a=a, b=b, pmi=value, prec_ab=prec_ab, prec_ba=prec_ba,
                    co_count=co_count,
                    directional_ab=prec_ab > params.tau_prec,
                    directional_ba=prec_ba > params.tau_prec,
                )
            )
    return candidates


def _relation_claim(a_label: str, b_label: str, cand: CandidateEdge) -> Claim:
    return Claim(
        kind=ClaimKind.RELATION_TYPING,
        subject_ids=(cand.a, cand.b),
        rendered_statement=(
            f"What relation holds between '{a_label}' and '{b_label}'? "
            "One of NEXT, CO_OCCURS, ENABLES, INHIBITS, CAUSES, PART_OF, "
            "MODERATES, NONE."
        ),
    )


def type_relations(candidates: list[CandidateEdge], coded: CodedCorpus,
                   codebook: Codebook, judge,
                   params: InductionParams) -> list[Edge]:
    """Judge a relation type per candidate; NONE drops it.

    The final type is the strict majority over per-excerpt verdicts
    (support excerpts first, then counterevidence); ambiguity drops the
    candidate. Direction follows the precedence flag for asymmetric
    types; symmetric types take the canonical lexicographic orientation.
    """
    config = getattr(judge, "config", None) or JudgeConfig(n_samples=1)
    corpus = normalize_time(coded.corpus)
    edges = []
    for cand in candidates:
        a_label = codebook.codes.get(cand.a, (cand.a, "", ()))[0]
        b_label = codebook.codes.get(cand.b, (cand.b, "", ()))[0]
        claim = _relation_claim(a_label, b_label, cand)

        joint = [
            ex for ex in corpus.excerpts
            if {cand.a, cand.b} <= coded.codes.get(ex.excerpt_id, frozenset())
        ][: params.max_evidence]
        a_without_b = [
            ex for ex in corpus.excerpts
            if cand.a in coded.codes.get(ex.excerpt_id, frozenset())
            and cand.b not in coded.codes.get(ex.excerpt_id, frozenset())
        ][: params.max_evidence]

        verdicts = []
        for ex in joint + a_without_b:
            verdicts.append((ex, judge_with_vote(judge, claim, ex, config).verdict))
        counts: dict[str, int] = {}
        for _, v in verdicts:
            if v.label != "NONE":
                counts[v.label] = counts.get(v.label, 0) + 1
        if not counts:
            continue
        best = max(counts.values())
        winners = sorted(t for t, c in counts.items() if c == best)
        if len(winners) != 1:
            continue
        relation = winners[0]

        if relation in _SYMMETRIC_TYPES:
            src, dst = cand.a, cand.b  # canonical lexicographic orientation
            symmetric = True
        elif cand.directional_ba and not cand.directional_ab:
            src, dst = cand.b, cand.a
            symmetric = False
        else:
            src, dst = cand.a, cand.b
            symmetric = False

        evidence = []
        for ex, v in verdicts:
            if v.label == relation:
                label = SupportLabel.SUPPORTS
            elif v.label == "NONE":
                label = SupportLabel.IRRELEVANT
            else:
                label = SupportLabel.MENTIONS
            evidence.append(
                EvidenceItem(
                    excerpt_id=ex.excerpt_id,
                    doc_id=ex.doc_id,
                    span=(0, len(ex.text)),
                    support_label=label,
                    rationale=f"{v.label}: {v.rationale}",
                    source=EvidenceSource.MODEL,
                    time=ex.time,
                    confidence=v.confidence,
                )
            )
        qualifiers = {"symmetric": "true"} if symmetric else {}
        polarity = 1 if relation in ("INCREASES",) else (
            -1 if relation in ("DECREASES",) else None
        )
        edges.append(
            Edge(
                id=f"e_{src}_{dst}_{relation}",
                src=src,
                dst=dst,
                edge_type=relation,
                polarity=polarity,
                qualifiers=qualifiers,
                evidence=tuple(evidence),
            )
        )
    return edges


def _edge_support_score(edge: Edge, fit_params: FitParams) -> float:
    supports = sum(
        1 for ev in edge.evidence if ev.support_label is SupportLabel.SUPPORTS
    )
    contradicts = sum(
        1 for ev in edge.evidence if ev.support_label is SupportLabel.CONTRADICTS
    )
    return score_claim(supports, contradicts, fit_params)


def _infer_level(edge_types: set[str]) -> tuple[Level, str]:
    if not edge_types:
        return Level.L1, "empty"
    if edge_types <= _L3_TYPES:
        return Level.L3, "causal"
    if edge_types <= _L2_TYPES:
        return Level.L2, "temporal"
    if edge_types <= _L4_TYPES:
        return Level.L4, "dynamic"
    return Level.L1, "mixed:" + ",".join(sorted(edge_types))


def sparsify(graph: QualGraph, params: InductionParams,
             fit_params: FitParams | None = None) -> QualGraph:
    """Top-K incident edges per node, NEXT reduction, loop aggregation."""
    fit_params = fit_params or FitParams()
    scores = {e.id: _edge_support_score(e, fit_params) for e in graph.edges}
    keep_by_node: dict[str, set[str]] = {n.id: set() for n in graph.nodes}
    for node_id in keep_by_node:
        incident = sorted(
            (e for e in graph.edges if node_id in (e.src, e.dst)),
            key=lambda e: (-scores[e.id], e.id),
        )
        keep_by_node[node_id] = {e.id for e in incident[: params.top_k_per_node]}
    kept = []
    for e in graph.edges:
        in_src = e.id in keep_by_node.get(e.src, set())
        in_dst = e.id in keep_by_node.get(e.dst, set())
        survives = (in_src or in_dst) if params.union_survival else (in_src and in_dst)
        if survives:
            kept.append(e)
    from dataclasses import replace
    graph = replace(graph, edges=tuple(kept))

    next_edges = [e for e in graph.edges if e.edge_type == "NEXT"]
    if next_edges:
        import networkx as nx
        sub = nx.DiGraph()
        sub.add_edges_from((e.src, e.dst) for e in next_edges)
        if nx.is_directed_acyclic_graph(sub):
            graph = transitive_reduction(graph, "NEXT")

    loops = tuple(detect_loops(graph))
    return replace(graph, loops=loops)


def induce(coded: CodedCorpus, codebook: Codebook, params: InductionParams,
           judge, fit_params: FitParams | None = None) -> QualGraph:
    """Steps A-C end to end; the output passes graph validation."""
    corpus = normalize_time(coded.corpus)
    coded = CodedCorpus(corpus=corpus, codes=coded.codes)
    candidates = generate_candidates(coded, params)
    edges = type_relations(candidates, coded, codebook, judge, params)

    node_ids = sorted({e.src for e in edges} | {e.dst for e in edges})
    nodes = []
    for code_id in node_ids:
        label, definition, aliases = codebook.codes.get(
            code_id, (code_id, f"code {code_id}", ())
        )
        first = next(
            (ex for ex in corpus.excerpts
             if code_id in coded.codes.get(ex.excerpt_id, frozenset())),
            None,
        )
        evidence = ()
        if first is not None:
            evidence = (
                EvidenceItem(
                    excerpt_id=first.excerpt_id,
                    doc_id=first.doc_id,
                    span=(0, len(first.text)),
                    support_label=SupportLabel.MENTIONS,
                    rationale=f"code {code_id} applied by annotator",
                    source=EvidenceSource.HUMAN,
                    time=first.time,
                ),
            )
        nodes.append(
            Node(
                id=code_id,
                node_type="CODE",
                label=label,
                definition=definition,
                aliases=aliases,
                evidence=evidence,
            )
        )

    level, mixture = _infer_level({e.edge_type for e in edges})
    provenance = {"induced": "true", "edge_type_mixture": mixture}
    if not edges:
        provenance["notice"] = "empty graph: no candidates survived induction"
    graph = QualGraph(
        graph_id="induced",
        level=level,
        nodes=tuple(nodes),
        edges=tuple(edges),
        provenance=provenance,
    )
    if level is not Level.L1:
        # typed vocabularies need typed nodes; relabel per level
        node_type = {"temporal": "STAGE", "causal": "CONSTRUCT",
                     "dynamic": "STATE_VAR"}[mixture]
        from dataclasses import replace
        graph = replace(
            graph,
            nodes=tuple(replace(n, node_type=node_type) for n in graph.nodes),
        )
    return sparsify(graph, params, fit_params)
