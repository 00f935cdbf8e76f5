"""Evidence-anchored goodness-of-fit scoring.

Pipeline: node checking (retrieval + judged instantiation claims), edge
checking (support plus counterevidence), level-specific structure
checking, then aggregation into a complexity-penalized fit with a
recomputable diagnostic report. Also: adaptive level selection across
candidate graphs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import networkx as nx

from qualgraph.claims import Claim, ClaimKind
from qualgraph.corpus import Corpus, Excerpt, normalize_time
from qualgraph.dynamics import (
    SystemState,
    Ordinal,
    extract_trends,
    predicted_trends,
    simulate,
    trend_agreement,
)
from qualgraph.errors import PreconditionError
from qualgraph.graph import (
    Edge,
    EvidenceItem,
    EvidenceSource,
    Level,
    Node,
    QualGraph,
    SupportLabel,
    detect_loops,
    validate,
    _edge_selection,
)
from qualgraph.judge import (
    CONTRADICTS,
    IRRELEVANT,
    SUPPORTS,
    JudgeConfig,
    judge_with_vote,
)
from qualgraph.retrieval import (
    RetrievalIndex,
    build_index,
    retrieve_counterevidence,
    retrieve_top_k,
)


@dataclass(frozen=True)
class FitParams:
    lam: float = 2.0            # contradiction penalty, > 1
    epsilon: float = 1e-9       # divide-by-zero guard, > 0
    m: int = 2                  # supports needed for coverage
    k: int = 5                  # retrieval depth per claim
    beta: float = 0.5           # coverage weight
    gamma: float = 0.01         # complexity penalty weight
    horizon: int = 10           # L4 simulation horizon
    closed_form: bool = False   # single mean over all judged claims

    def __post_init__(self):
        if self.lam <= 1:
            raise ValueError("lambda must be > 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.m < 1 or self.k < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("invalid fit parameters")

    def to_json(self) -> dict:
        return {
            "lambda": self.lam, "epsilon": self.epsilon, "m": self.m,
            "k": self.k, "beta": self.beta, "gamma": self.gamma,
            "horizon": self.horizon, "closed_form": self.closed_form,
        }


@dataclass(frozen=True)
class ClaimScore:
    claim: Claim
    supports: int
    contradicts: int
    score: float
    covered: bool
    evidence: tuple[EvidenceItem, ...] = ()
    adjudication_flag: bool = False


@dataclass(frozen=True)
class StageSequence:
    doc_id: str
    stages: tuple[str, ...]


@dataclass(frozen=True)
class FitReport:
    fit: float
    variant: str
    mean_node_score: float
    mean_edge_score: float
    struct_score: float
    struct_components: dict[str, float | None]
    coverage_fraction: float
    complexity: int
    claim_scores: tuple[ClaimScore, ...]
    diagnostics: dict
    params: FitParams
    graph: QualGraph  # evidence-augmented copy


def score_claim(supports: int, contradicts: int, params: FitParams) -> float:
    """(|S| - lambda*|C|) / (|S| + |C| + epsilon)."""
    if supports < 0 or contradicts < 0:
        raise ValueError("counts must be non-negative")
    return (supports - params.lam * contradicts) / (supports + contradicts + params.epsilon)


def coverage_of(supports: int, m: int) -> bool:
    if m < 1:
        raise ValueError("coverage threshold m must be >= 1")
    return supports >= m


def complexity_of(graph: QualGraph) -> int:
    """|V| + |E|, plus |Loops| for L4 (detected when none are declared)."""
    complexity = len(graph.nodes) + len(graph.edges)
    if graph.level is Level.L4:
        loops = graph.loops or tuple(detect_loops(graph))
        complexity += len(loops)
    return complexity


def evidence_from_verdict(excerpt: Excerpt, verdict) -> EvidenceItem:
    try:
        label = SupportLabel(verdict.label)
        rationale = verdict.rationale
    except ValueError:
        # direction/relation verdicts anchor as supporting evidence
        label = SupportLabel.SUPPORTS
        rationale = f"{verdict.label}: {verdict.rationale}"
    return EvidenceItem(
        excerpt_id=excerpt.excerpt_id,
        doc_id=excerpt.doc_id,
        span=(0, len(excerpt.text)),
        support_label=label,
        rationale=rationale,
        source=EvidenceSource.MODEL,
        time=excerpt.time,
        confidence=verdict.confidence,
    )


def _judge_config(judge) -> JudgeConfig:
    return getattr(judge, "config", None) or JudgeConfig(n_samples=1)


def _node_query(node: Node) -> str:
    return " ".join([node.label, *node.aliases, node.definition])


def _score_from_verdicts(claim: Claim, judged: list[tuple[Excerpt, object, bool]],
                         params: FitParams) -> ClaimScore:
    supports = sum(1 for _, v, _ in judged if v.label == SUPPORTS)
    contradicts = sum(1 for _, v, _ in judged if v.label == CONTRADICTS)
    evidence = tuple(evidence_from_verdict(ex, v) for ex, v, _ in judged)
    return ClaimScore(
        claim=claim,
        supports=supports,
        contradicts=contradicts,
        score=score_claim(supports, contradicts, params),
        covered=coverage_of(supports, params.m),
        evidence=evidence,
        adjudication_flag=any(flag for _, _, flag in judged),
    )


def _judge_candidates(judge, claim: Claim, candidates: list[Excerpt],
                      config: JudgeConfig) -> list[tuple[Excerpt, object, bool]]:
    judged = []
    for excerpt in candidates:
        vote = judge_with_vote(judge, claim, excerpt, config)
        judged.append((excerpt, vote.verdict, vote.needs_adjudication))
    return judged


def check_nodes(graph: QualGraph, corpus: Corpus, index: RetrievalIndex,
                judge, params: FitParams) -> list[ClaimScore]:
    """Judge instantiation claims for every node over its retrieved candidates."""
    config = _judge_config(judge)
    scores = []
    for node in graph.nodes:
        claim = Claim(
            kind=ClaimKind.NODE_INSTANTIATION,
            subject_ids=(node.id,),
            rendered_statement=(
                f"The excerpt instantiates {node.node_type} '{node.label}': "
                f"{node.definition}"
            ),
        )
        hits = retrieve_top_k(index, _node_query(node), params.k)
        judged = _judge_candidates(judge, claim, [ex for ex, _ in hits], config)
        scores.append(_score_from_verdicts(claim, judged, params))
    return scores


_SYMMETRIC_EDGE_TYPES = {"OVERLAPS", "CO_OCCURS", "PART_OF", "MODERATES"}


def check_edges(graph: QualGraph, corpus: Corpus, index: RetrievalIndex,
                judge, params: FitParams) -> tuple[list[ClaimScore], dict]:
    """Judge edge-support claims over support and counterevidence candidates.

    For L3 edges, every supporting excerpt additionally receives two
    boolean sub-judgments: directional warrant (src->dst rather than the
    reverse) and mechanism specificity against qualifiers.mechanism_sketch.
    """
    config = _judge_config(judge)
    labels = {n.id: n for n in graph.nodes}
    scores = []
    sub_rates: dict[str, dict[str, float | None]] = {}
    for edge in graph.edges:
        src = labels[edge.src]
        dst = labels[edge.dst]
        claim = Claim(
            kind=ClaimKind.EDGE_SUPPORT,
            subject_ids=(edge.id,),
            rendered_statement=f"'{src.label}' {edge.edge_type} '{dst.label}'",
        )
        query = " ".join(
            [src.label, dst.label, edge.edge_type.lower().replace("_", " ")]
            + sorted(edge.qualifiers.values())
        )
        hits = retrieve_top_k(index, query, params.k)
        candidates = {ex.excerpt_id: ex for ex, _ in hits}
        counter = retrieve_counterevidence(
            index, _node_query(src), _node_query(dst),
            directed=edge.edge_type not in _SYMMETRIC_EDGE_TYPES,
        )
        for ex in counter:
            candidates.setdefault(ex.excerpt_id, ex)
        ordered = [candidates[eid] for eid in sorted(candidates)]
        judged = _judge_candidates(judge, claim, ordered, config)
        scores.append(_score_from_verdicts(claim, judged, params))

        if graph.level is Level.L3:
            supporting = [ex for ex, v, _ in judged if v.label == SUPPORTS]
            directional_hits = 0
            mechanism_hits = 0
            for ex in supporting:
                direction_claim = Claim(
                    kind=ClaimKind.EDGE_SUPPORT,
                    subject_ids=(edge.id,),
                    aspect="direction",
                    rendered_statement=(
                        f"The excerpt warrants '{src.label}' -> '{dst.label}' "
                        f"rather than the reverse"
                    ),
                )
                sketch = edge.qualifiers.get("mechanism_sketch", "")
                mechanism_claim = Claim(
                    kind=ClaimKind.EDGE_SUPPORT,
                    subject_ids=(edge.id,),
                    aspect="mechanism",
                    rendered_statement=(
                        f"The excerpt provides (even partial) 'how' content for "
                        f"'{src.label}' -> '{dst.label}': {sketch}"
                    ),
                )
                dv = judge_with_vote(judge, direction_claim, ex, config).verdict
                mv = judge_with_vote(judge, mechanism_claim, ex, config).verdict
                directional_hits += dv.label == SUPPORTS
                mechanism_hits += mv.label == SUPPORTS
            n = len(supporting)
            sub_rates[edge.id] = {
                "directional_support": directional_hits / n if n else None,
                "mechanism_specificity": mechanism_hits / n if n else None,
            }
    return scores, sub_rates


def extract_stage_sequences(graph: QualGraph, corpus: Corpus, judge,
                            params: FitParams) -> list[StageSequence]:
    """Per-document stage sequences from judged stage membership.

    Each excerpt goes to its highest-confidence SUPPORTS stage; ties and
    no-support excerpts stay unassigned. Consecutive repeats collapse.
    """
    if graph.level is not Level.L2:
        raise PreconditionError("stage sequences require an L2 graph")
    config = _judge_config(judge)
    stages = [n for n in graph.nodes if n.node_type == "STAGE"]
    corpus = normalize_time(corpus)
    assignment: dict[str, str] = {}
    for excerpt in corpus.excerpts:
        best: list[tuple[float, str]] = []
        for stage in stages:
            claim = Claim(
                kind=ClaimKind.NODE_INSTANTIATION,
                subject_ids=(stage.id,),
                rendered_statement=(
                    f"The excerpt instantiates STAGE '{stage.label}': "
                    f"{stage.definition}"
                ),
            )
            verdict = judge_with_vote(judge, claim, excerpt, config).verdict
            if verdict.label == SUPPORTS:
                best.append((verdict.confidence, stage.id))
        if not best:
            continue
        top = max(c for c, _ in best)
        winners = [sid for c, sid in best if c == top]
        if len(winners) == 1:
            assignment[excerpt.excerpt_id] = winners[0]

    sequences = []
    for doc_id in sorted(corpus.doc_index):
        ordered = sorted(
            corpus.doc_excerpts(doc_id),
            key=lambda ex: (ex.time.value, ex.excerpt_id),
        )
        seq: list[str] = []
        for ex in ordered:
            sid = assignment.get(ex.excerpt_id)
            if sid is None:
                continue
            if not seq or seq[-1] != sid:
                seq.append(sid)
        sequences.append(StageSequence(doc_id=doc_id, stages=tuple(seq)))
    return sequences


def order_violation_rate(sequences: list[StageSequence], graph: QualGraph) -> float:
    """Fraction of adjacent stage pairs that strictly reverse NEXT reachability."""
    if graph.level is not Level.L2:
        raise PreconditionError("order violations are defined for L2 graphs")
    next_g = nx.DiGraph()
    next_g.add_nodes_from(n.id for n in graph.nodes)
    next_g.add_edges_from(
        (e.src, e.dst) for e in graph.edges if e.edge_type == "NEXT"
    )
    reach = {n: nx.descendants(next_g, n) for n in next_g.nodes}
    pairs = 0
    violations = 0
    for seq in sequences:
        for a, b in zip(seq.stages, seq.stages[1:]):
            pairs += 1
            if a in reach.get(b, set()) and b not in reach.get(a, set()):
                violations += 1
    return violations / pairs if pairs else 0.0


def boundary_clarity(graph: QualGraph, corpus: Corpus, judge, params: FitParams,
                     sequences: list[StageSequence] | None = None) -> float | None:
    """SUPPORTS fraction of boundary-cue claims at observed stage transitions.

    No observed transitions -> None (absent, not zero).
    """
    if graph.level is not Level.L2:
        raise PreconditionError("boundary clarity is defined for L2 graphs")
    config = _judge_config(judge)
    stages = {n.id: n for n in graph.nodes if n.node_type == "STAGE"}
    corpus = normalize_time(corpus)

    # reconstruct per-excerpt assignment to find adjacent transition excerpts
    assignment: dict[str, str] = {}
    for excerpt in corpus.excerpts:
        best: list[tuple[float, str]] = []
        for stage in stages.values():
            claim = Claim(
                kind=ClaimKind.NODE_INSTANTIATION,
                subject_ids=(stage.id,),
                rendered_statement=(
                    f"The excerpt instantiates STAGE '{stage.label}': "
                    f"{stage.definition}"
                ),
            )
            verdict = judge_with_vote(judge, claim, excerpt, config).verdict
            if verdict.label == SUPPORTS:
                best.append((verdict.confidence, stage.id))
        if best:
            top = max(c for c, _ in best)
            winners = [sid for c, sid in best if c == top]
            if len(winners) == 1:
                assignment[excerpt.excerpt_id] = winners[0]

    issued = 0
    supported = 0
    for doc_id in sorted(corpus.doc_index):
        ordered = sorted(
            corpus.doc_excerpts(doc_id),
            key=lambda ex: (ex.time.value, ex.excerpt_id),
        )
        assigned = [ex for ex in ordered if ex.excerpt_id in assignment]
        for prev, curr in zip(assigned, assigned[1:]):
            a = assignment[prev.excerpt_id]
            b = assignment[curr.excerpt_id]
            if a == b:
                continue
            cues = " ".join(
                filter(None, [
                    stages[a].attributes.get("boundary_cues", ""),
                    stages[b].attributes.get("boundary_cues", ""),
                ])
            )
            for excerpt in (prev, curr):
                claim = Claim(
                    kind=ClaimKind.BOUNDARY_CUE,
                    subject_ids=(a, b),
                    rendered_statement=(
                        f"The excerpt contains a boundary cue for the transition "
                        f"from '{stages[a].label}' to '{stages[b].label}'"
                        + (f" (cues: {cues})" if cues else "")
                    ),
                )
                verdict = judge_with_vote(judge, claim, excerpt, config).verdict
                issued += 1
                supported += verdict.label == SUPPORTS
    if issued == 0:
        return None
    return supported / issued


def loop_closure_score(graph: QualGraph, edge_scores: dict[str, ClaimScore],
                       corpus: Corpus, index: RetrievalIndex, judge,
                       params: FitParams) -> tuple[float | None, list[ClaimScore]]:
    """Fraction of loops that are closed; None when the graph has no loops.

    Closed means every member edge has >= m supports and at least one
    recurrence claim over retrieved excerpts is judged SUPPORTS.
    """
    config = _judge_config(judge)
    labels = {n.id: n.label for n in graph.nodes}
    loops = graph.loops or tuple(detect_loops(graph))
    if not loops:
        return None, []
    closed = 0
    closure_scores = []
    for loop in loops:
        member_ok = True
        for i, src in enumerate(loop.node_ids):
            dst = loop.node_ids[(i + 1) % len(loop.node_ids)]
            edge = _edge_selection(graph, src, dst)
            cs = edge_scores.get(edge.id) if edge is not None else None
            if cs is None or cs.supports < params.m:
                member_ok = False
        claim = Claim(
            kind=ClaimKind.LOOP_CLOSURE,
            subject_ids=(loop.loop_id,),
            rendered_statement=(
                "The cycle "
                + " -> ".join(labels.get(nid, nid) for nid in loop.node_ids)
                + " recurs across time"
            ),
        )
        query = " ".join(labels.get(nid, nid) for nid in loop.node_ids)
        hits = retrieve_top_k(index, query, params.k)
        judged = _judge_candidates(judge, claim, [ex for ex, _ in hits], config)
        cs = _score_from_verdicts(claim, judged, params)
        closure_scores.append(cs)
        if member_ok and cs.supports >= 1:
            closed += 1
    return closed / len(loops), closure_scores


def _write_back_evidence(graph: QualGraph, node_scores: list[ClaimScore],
                         edge_scores: list[ClaimScore]) -> QualGraph:
    by_node = {cs.claim.subject_ids[0]: cs.evidence for cs in node_scores}
    by_edge = {cs.claim.subject_ids[0]: cs.evidence for cs in edge_scores}
    nodes = tuple(
        replace(n, evidence=n.evidence + by_node.get(n.id, ())) for n in graph.nodes
    )
    edges = tuple(
        replace(e, evidence=e.evidence + by_edge.get(e.id, ())) for e in graph.edges
    )
    return replace(graph, nodes=nodes, edges=edges)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def fit(graph: QualGraph, corpus: Corpus, judge, params: FitParams,
        index: RetrievalIndex | None = None) -> FitReport:
    """Run node, edge, and structure checking and aggregate the fit score."""
    if not graph.nodes:
        raise PreconditionError("cannot score a graph with zero nodes")
    report = validate(graph)
    if not report.passed:
        raise PreconditionError(
            "graph fails validation: "
            + "; ".join(f"{r}:{s}" for r, s, _ in report.violations)
        )
    corpus = normalize_time(corpus)
    index = index or build_index(corpus)

    node_scores = check_nodes(graph, corpus, index, judge, params)
    edge_scores, sub_rates = check_edges(graph, corpus, index, judge, params)
    edge_by_id = {cs.claim.subject_ids[0]: cs for cs in edge_scores}

    struct_components: dict[str, float | None] = {}
    extra_scores: list[ClaimScore] = []
    diagnostics: dict = {}
    if graph.level is Level.L2:
        sequences = extract_stage_sequences(graph, corpus, judge, params)
        ovr = order_violation_rate(sequences, graph)
        struct_components["order_consistency"] = 1.0 - ovr
        clarity = boundary_clarity(graph, corpus, judge, params, sequences)
        struct_components["boundary_clarity"] = clarity
        diagnostics["stage_sequences"] = [
            {"doc_id": s.doc_id, "stages": list(s.stages)} for s in sequences
        ]
        # order consistency is the L2 struct score; clarity is diagnostic
        struct_score = 1.0 - ovr
    elif graph.level is Level.L3:
        directional = [
            r["directional_support"] for r in sub_rates.values()
            if r["directional_support"] is not None
        ]
        mechanism = [
            r["mechanism_specificity"] for r in sub_rates.values()
            if r["mechanism_specificity"] is not None
        ]
        struct_components["directional_support"] = (
            _mean(directional) if directional else None
        )
        struct_components["mechanism_specificity"] = (
            _mean(mechanism) if mechanism else None
        )
        present = [v for v in struct_components.values() if v is not None]
        struct_score = _mean(present)
        diagnostics["edge_sub_rates"] = sub_rates
    elif graph.level is Level.L4:
        closure, closure_scores = loop_closure_score(
            graph, edge_by_id, corpus, index, judge, params
        )
        extra_scores.extend(closure_scores)
        struct_components["loop_closure"] = closure
        svars = [n.id for n in graph.nodes if n.node_type == "STATE_VAR"]
        agreement = None
        if svars:
            # neutral start; keeps fit independent of any state guess
            init = SystemState(values={v: Ordinal.MID for v in svars})
            trajectory = simulate(graph, init, params.horizon)
            predicted = predicted_trends(trajectory)
            observed = extract_trends(corpus, graph, judge, params, index=index)
            agreement = trend_agreement(predicted, observed)
            diagnostics["predicted_trends"] = {
                t.var: t.direction.value for t in predicted
            }
            diagnostics["observed_trends"] = {
                t.var: t.direction.value for t in observed
            }
        struct_components["trend_agreement"] = agreement
        present = [v for v in struct_components.values() if v is not None]
        struct_score = _mean(present)
    else:
        struct_score = 0.0

    all_scores = node_scores + edge_scores + extra_scores
    counted = node_scores + edge_scores
    coverage_fraction = (
        sum(1 for cs in counted if cs.covered) / len(counted) if counted else 0.0
    )
    mean_node = _mean([cs.score for cs in node_scores])
    mean_edge = _mean([cs.score for cs in edge_scores])
    complexity = complexity_of(graph)

    if params.closed_form:
        variant = "closed_form"
        fit_value = (
            _mean([cs.score for cs in all_scores])
            + params.beta * coverage_fraction
            - params.gamma * complexity
        )
    else:
        variant = "algorithmic"
        fit_value = (
            mean_node + mean_edge + params.beta * coverage_fraction
            + struct_score - params.gamma * complexity
        )

    contradiction_list = sorted(
        cs.claim.subject_ids[0] for cs in all_scores if cs.contradicts > 0
    )
    low_coverage = sorted(
        cs.claim.subject_ids[0] for cs in counted if not cs.covered
    )
    worst_edges = [
        cs.claim.subject_ids[0]
        for cs in sorted(edge_scores, key=lambda cs: (cs.score, cs.claim.subject_ids))
    ][:5]
    adjudication_queue = sorted(
        cs.claim.subject_ids[0] for cs in all_scores if cs.adjudication_flag
    )
    diagnostics.update(
        worst_edges=worst_edges,
        contradictions=contradiction_list,
        low_coverage=low_coverage,
        adjudication_queue=adjudication_queue,
    )

    return FitReport(
        fit=fit_value,
        variant=variant,
        mean_node_score=mean_node,
        mean_edge_score=mean_edge,
        struct_score=struct_score,
        struct_components=struct_components,
        coverage_fraction=coverage_fraction,
        complexity=complexity,
        claim_scores=tuple(all_scores),
        diagnostics=diagnostics,
        params=params,
        graph=_write_back_evidence(graph, node_scores, edge_scores),
    )


_LEVEL_ORDER = {Level.L1: 1, Level.L2: 2, Level.L3: 3, Level.L4: 4}


def select_level(candidates: list[QualGraph], corpus: Corpus, judge,
                 params: FitParams) -> tuple[QualGraph, dict[str, FitReport]]:
    """Pick the candidate with the best complexity-penalized fit.

    Ties prefer the most committal (highest) level, then the
    lexicographically smallest graph_id.
    """
    if not candidates:
        raise PreconditionError("select_level requires at least one candidate")
    reports = {g.graph_id: fit(g, corpus, judge, params) for g in candidates}
    chosen = sorted(
        candidates,
        key=lambda g: (-reports[g.graph_id].fit, -_LEVEL_ORDER[g.level], g.graph_id),
    )[0]
    return chosen, reports


# ---------------------------------------------------------------------------
# report rendering


def _claim_score_json(cs: ClaimScore) -> dict:
    return {
        "kind": cs.claim.kind.value,
        "subject_ids": list(cs.claim.subject_ids),
        "aspect": cs.claim.aspect,
        "statement": cs.claim.rendered_statement,
        "supports": cs.supports,
        "contradicts": cs.contradicts,
        "score": cs.score,
        "covered": cs.covered,
        "adjudication_flag": cs.adjudication_flag,
        "evidence": [
            {
                "excerpt_id": ev.excerpt_id,
                "doc_id": ev.doc_id,
                "support_label": ev.support_label.value,
                "confidence": ev.confidence,
                "rationale": ev.rationale,
            }
            for ev in cs.evidence
        ],
    }


def report_to_json(report: FitReport) -> bytes:
    doc = {
        "fit": report.fit,
        "variant": report.variant,
        "mean_node_score": report.mean_node_score,
        "mean_edge_score": report.mean_edge_score,
        "struct_score": report.struct_score,
        "struct_components": report.struct_components,
        "coverage_fraction": report.coverage_fraction,
        "complexity": report.complexity,
        "params": report.params.to_json(),
        "claim_scores": [_claim_score_json(cs) for cs in report.claim_scores],
        "diagnostics": report.diagnostics,
        "graph_id": report.graph.graph_id,
        "level": report.graph.level.value,
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":")).encode("utf-8")


def report_to_markdown(report: FitReport) -> str:
    lines = [
        f"# Fit report: {report.graph.graph_id} ({report.graph.level.value})",
        "",
        f"- fit: {report.fit!r} (variant: {report.variant})",
        f"- mean node score: {report.mean_node_score!r}",
        f"- mean edge score: {report.mean_edge_score!r}",
        f"- struct score: {report.struct_score!r}",
        f"- coverage fraction: {report.coverage_fraction!r}",
        f"- complexity: {report.complexity}",
        "",
        "## Parameters",
        "",
    ]
    for key, value in sorted(report.params.to_json().items()):
        lines.append(f"- {key}: {value!r}")
    lines += ["", "## Structure components", ""]
    for key, value in sorted(report.struct_components.items()):
        shown = "absent" if value is None else repr(value)
        lines.append(f"- {key}: {shown}")
    lines += ["", "## Claim scores", "",
              "| kind | subject | S | C | score | covered | adjudicate |",
              "|------|---------|---|---|-------|---------|------------|"]
    for cs in report.claim_scores:
        lines.append(
            f"| {cs.claim.kind.value} | {','.join(cs.claim.subject_ids)} "
            f"| {cs.supports} | {cs.contradicts} | {cs.score!r} "
            f"| {cs.covered} | {cs.adjudication_flag} |"
        )
    lines += ["", "## Diagnostics", ""]
    for key in ("worst_edges", "contradictions", "low_coverage", "adjudication_queue"):
        lines.append(f"- {key}: {report.diagnostics.get(key, [])}")
    lines.append("")
    return "\n".join(lines)
