"""Qualitative simulation of feedback graphs.

State variables live on the ordinal lattice LOW=-1, MID=0, HIGH=+1. A
synchronous step adds the signed pressure of every incoming influence
edge and clips back into the lattice. Delayed influences read an older
snapshot (delay mapped from qualifiers.delay_type; short=1, long=3 by
default); TRANSACTION edges are inert.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from qualgraph.claims import Claim, ClaimKind
from qualgraph.errors import PreconditionError
from qualgraph.graph import EvidenceItem, Level, QualGraph
from qualgraph.judge import IRRELEVANT, JudgeConfig
from qualgraph.retrieval import RetrievalIndex, retrieve_top_k


class Ordinal(enum.Enum):
    LOW = -1
    MID = 0
    HIGH = 1


class TrendDirection(enum.Enum):
    UP = "UP"
    DOWN = "DOWN"
    NO_CHANGE = "NO_CHANGE"


DEFAULT_DELAYS = {"short": 1, "long": 3}

_INFLUENCE_TYPES = {"INCREASES", "DECREASES", "DELAYED_INFLUENCE"}


@dataclass(frozen=True)
class SystemState:
    values: dict[str, Ordinal]
    t: int = 0


@dataclass(frozen=True)
class Trajectory:
    states: tuple[SystemState, ...]

    def value(self, var: str, t: int) -> Ordinal:
        return self.states[t].values[var]


@dataclass(frozen=True)
class TrendStatement:
    var: str
    direction: TrendDirection
    evidence: tuple[EvidenceItem, ...] = ()


def _state_vars(graph: QualGraph) -> list[str]:
    return [n.id for n in graph.nodes if n.node_type == "STATE_VAR"]


def _check_preconditions(graph: QualGraph, state: SystemState) -> None:
    if graph.level is not Level.L4:
        raise PreconditionError("simulation requires an L4 graph")
    svars = set(_state_vars(graph))
    if set(state.values) != svars:
        raise PreconditionError(
            f"state must cover exactly the STATE_VAR nodes {sorted(svars)}"
        )
    for e in graph.edges:
        if e.edge_type in _INFLUENCE_TYPES and e.polarity is None:
            raise PreconditionError(f"influencing edge {e.id} lacks polarity")


def _delay_of(edge, delay_map: dict[str, int]) -> int:
    if edge.edge_type != "DELAYED_INFLUENCE":
        return 0
    return delay_map.get(edge.qualifiers.get("delay_type", "short"), 1)


def _next_values(graph: QualGraph, history: list[dict[str, int]],
                 delay_map: dict[str, int]) -> dict[str, int]:
    current = history[-1]
    new_values = {}
    for var in current:
        pressure = 0
        for e in graph.edges:
            if e.dst != var or e.edge_type not in _INFLUENCE_TYPES:
                continue
            if e.src not in current:
                continue
            d = _delay_of(e, delay_map)
            snapshot = history[max(0, len(history) - 1 - d)]
            pressure += e.polarity * snapshot[e.src]
        new_values[var] = max(-1, min(1, current[var] + pressure))
    return new_values


def step(graph: QualGraph, state: SystemState,
         delay_map: dict[str, int] | None = None) -> SystemState:
    """One synchronous update of every state variable."""
    _check_preconditions(graph, state)
    delay_map = delay_map or DEFAULT_DELAYS
    history = [{v: s.value for v, s in state.values.items()}]
    new_values = _next_values(graph, history, delay_map)
    return SystemState(
        values={v: Ordinal(x) for v, x in new_values.items()}, t=state.t + 1
    )


def simulate(graph: QualGraph, init: SystemState, T: int,
             delay_map: dict[str, int] | None = None) -> Trajectory:
    """Deterministic trajectory of length T+1 from the initial state."""
    _check_preconditions(graph, init)
    if T < 0:
        raise PreconditionError("horizon T must be non-negative")
    delay_map = delay_map or DEFAULT_DELAYS
    history = [{v: s.value for v, s in init.values.items()}]
    states = [SystemState(values=dict(init.values), t=init.t)]
    for i in range(T):
        new_values = _next_values(graph, history, delay_map)
        history.append(new_values)
        states.append(
            SystemState(values={v: Ordinal(x) for v, x in new_values.items()},
                        t=init.t + i + 1)
        )
    return Trajectory(states=tuple(states))


def predicted_trends(trajectory: Trajectory) -> list[TrendStatement]:
    """Net direction of change over the horizon, per variable."""
    first = trajectory.states[0]
    last = trajectory.states[-1]
    trends = []
    for var in sorted(first.values):
        delta = last.values[var].value - first.values[var].value
        if delta > 0:
            direction = TrendDirection.UP
        elif delta < 0:
            direction = TrendDirection.DOWN
        else:
            direction = TrendDirection.NO_CHANGE
        trends.append(TrendStatement(var=var, direction=direction))
    return trends


def extract_trends(corpus, graph: QualGraph, judge, params,
                   index: RetrievalIndex | None = None) -> list[TrendStatement]:
    """Corpus-observed trend per state variable via TREND claims.

    Per variable, the top-k retrieved excerpts are judged for a
    direction; the majority direction among non-IRRELEVANT verdicts wins
    and ties (or no verdicts) produce no statement.
    """
    from qualgraph.fitness import evidence_from_verdict  # local import: no cycle

    index = index or RetrievalIndex(corpus)
    statements = []
    for node in graph.nodes:
        if node.node_type != "STATE_VAR":
            continue
        claim = Claim(
            kind=ClaimKind.TREND,
            subject_ids=(node.id,),
            rendered_statement=f"The direction of change of '{node.label}' over time",
        )
        query = " ".join([node.label, *node.aliases, node.definition])
        hits = retrieve_top_k(index, query, params.k)
        counts: dict[str, int] = {}
        evidence = []
        for excerpt, _score in hits:
            verdict = judge.judge(claim, excerpt)
            if verdict.label == IRRELEVANT:
                continue
            counts[verdict.label] = counts.get(verdict.label, 0) + 1
            evidence.append(evidence_from_verdict(excerpt, verdict))
        if not counts:
            continue
        best = max(counts.values())
        winners = [d for d, c in counts.items() if c == best]
        if len(winners) != 1:
            continue  # ambiguous: equal votes for opposing directions
        statements.append(
            TrendStatement(
                var=node.id,
                direction=TrendDirection(winners[0]),
                evidence=tuple(evidence),
            )
        )
    return statements


def trend_agreement(predicted: list[TrendStatement],
                    observed: list[TrendStatement]) -> float | None:
    """Fraction of co-covered variables with matching direction; None if none."""
    pred = {t.var: t.direction for t in predicted}
    obs = {t.var: t.direction for t in observed}
    common = sorted(set(pred) & set(obs))
    if not common:
        return None
    matching = sum(1 for v in common if pred[v] is obs[v])
    return matching / len(common)
