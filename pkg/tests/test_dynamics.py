import random

import pytest

from qualgraph.corpus import Corpus, Excerpt
from qualgraph.dynamics import (
    DEFAULT_DELAYS,
    Ordinal,
    SystemState,
    Trajectory,
    TrendDirection,
    extract_trends,
    predicted_trends,
    simulate,
    step,
    trend_agreement,
)
from qualgraph.errors import PreconditionError
from qualgraph.fitness import FitParams
from qualgraph.graph import Level, QualGraph

from conftest import DictJudge, make_edge, make_node
from qualgraph.claims import Claim, ClaimKind


def reference_simulate(edges, init, T, delay_map):
    """Independent sum-then-clip reference with explicit full history.

    edges: list of (src, dst, polarity, delay).
    """
    history = [dict(init)]
    for _ in range(T):
        current = history[-1]
        nxt = {}
        for var, value in current.items():
            pressure = 0
            for src, dst, polarity, delay in edges:
                if dst != var:
                    continue
                snapshot = history[max(0, len(history) - 1 - delay)]
                pressure += polarity * snapshot[src]
            nxt[var] = max(-1, min(1, value + pressure))
        history.append(nxt)
    return history


def build_l4(edge_specs, n_vars):
    nodes = tuple(make_node(f"v{i}", node_type="STATE_VAR") for i in range(n_vars))
    edges = []
    for k, (src, dst, polarity, delay_type) in enumerate(edge_specs):
        if delay_type is None:
            etype = "INCREASES" if polarity == 1 else "DECREASES"
            qualifiers = {}
        else:
            etype = "DELAYED_INFLUENCE"
            qualifiers = {"delay_type": delay_type}
        edges.append(make_edge(f"f{k}", f"v{src}", f"v{dst}", edge_type=etype,
                               polarity=polarity, qualifiers=qualifiers))
    return QualGraph(graph_id="sim", level=Level.L4, nodes=nodes,
                     edges=tuple(edges))


def random_l4(rng, max_vars=4):
    n = rng.randint(1, max_vars)
    specs = []
    for src in range(n):
        for dst in range(n):
            if src == dst or rng.random() > 0.4:
                continue
            polarity = rng.choice([-1, 1])
            delay_type = rng.choice([None, None, "short", "long"])
            specs.append((src, dst, polarity, delay_type))
    return build_l4(specs, n), specs, n


def test_preconditions():
    graph, _, n = random_l4(random.Random(0))
    wrong_level = QualGraph(graph_id="g", level=Level.L3, nodes=graph.nodes,
                            edges=graph.edges)
    init = SystemState(values={f"v{i}": Ordinal.MID for i in range(n)})
    with pytest.raises(PreconditionError):
        step(wrong_level, init)
    with pytest.raises(PreconditionError):
        step(graph, SystemState(values={}))
    with pytest.raises(PreconditionError):
        simulate(graph, init, -1)


def test_missing_polarity_rejected():
    nodes = (make_node("v0", node_type="STATE_VAR"),
             make_node("v1", node_type="STATE_VAR"))
    edges = (make_edge("f0", "v0", "v1", edge_type="DELAYED_INFLUENCE",
                       polarity=None),)
    graph = QualGraph(graph_id="g", level=Level.L4, nodes=nodes, edges=edges)
    init = SystemState(values={"v0": Ordinal.MID, "v1": Ordinal.MID})
    with pytest.raises(PreconditionError):
        step(graph, init)


def test_trajectory_matches_reference(rng):
    for trial in range(100):
        graph, specs, n = random_l4(rng)
        init_values = {f"v{i}": rng.choice(list(Ordinal)) for i in range(n)}
        T = rng.randint(0, 5)
        trajectory = simulate(
            graph, SystemState(values=dict(init_values)), T
        )
        ref_edges = [
            (f"v{s}", f"v{d}", p,
             0 if dt is None else DEFAULT_DELAYS[dt])
            for s, d, p, dt in specs
        ]
        ref = reference_simulate(
            ref_edges, {v: o.value for v, o in init_values.items()}, T,
            DEFAULT_DELAYS,
        )
        assert len(trajectory.states) == T + 1
        for t, state in enumerate(trajectory.states):
            assert {v: o.value for v, o in state.values.items()} == ref[t]
            assert all(o.value in (-1, 0, 1) for o in state.values.values())


def test_all_mid_is_fixed_point(rng):
    for trial in range(100):
        graph, _, n = random_l4(rng)
        init = SystemState(values={f"v{i}": Ordinal.MID for i in range(n)})
        trajectory = simulate(graph, init, 10)
        for state in trajectory.states:
            assert all(o is Ordinal.MID for o in state.values.values())


def test_transaction_edges_are_inert():
    nodes = (make_node("v0", node_type="STATE_VAR"),
             make_node("v1", node_type="STATE_VAR"))
    edges = (make_edge("t0", "v0", "v1", edge_type="TRANSACTION"),)
    graph = QualGraph(graph_id="g", level=Level.L4, nodes=nodes, edges=edges)
    init = SystemState(values={"v0": Ordinal.HIGH, "v1": Ordinal.LOW})
    after = step(graph, init)
    assert after.values == init.values and after.t == 1


def test_delayed_influence_reads_older_snapshot():
    # v0 decays nothing; v1 reacts to v0 three steps late (long delay)
    graph = build_l4([(0, 1, 1, "long")], 2)
    init = SystemState(values={"v0": Ordinal.HIGH, "v1": Ordinal.MID})
    trajectory = simulate(graph, init, 4)
    values = [s.values["v1"].value for s in trajectory.states]
    # snapshots clamp at t=0 until enough history exists; v0 stays HIGH so
    # v1 rises to HIGH after the first step and saturates
    assert values[0] == 0 and values[-1] == 1


def test_predicted_trends_signs():
    graph = build_l4([(0, 1, 1, None)], 2)
    init = SystemState(values={"v0": Ordinal.HIGH, "v1": Ordinal.MID})
    trends = predicted_trends(simulate(graph, init, 3))
    directions = {t.var: t.direction for t in trends}
    assert directions["v0"] is TrendDirection.NO_CHANGE
    assert directions["v1"] is TrendDirection.UP


def test_extract_trends_majority_and_ties():
    corpus = Corpus(excerpts=(
        Excerpt(excerpt_id="x0", doc_id="d", text="v0 talk one"),
        Excerpt(excerpt_id="x1", doc_id="d", text="v0 talk two"),
        Excerpt(excerpt_id="x2", doc_id="d", text="v0 talk three"),
    ))
    graph = build_l4([], 1)
    claim = Claim(
        kind=ClaimKind.TREND, subject_ids=("v0",),
        rendered_statement="The direction of change of 'v0' over time",
    )
    table = {
        (claim.claim_hash, "x0"): "UP",
        (claim.claim_hash, "x1"): "UP",
        (claim.claim_hash, "x2"): "DOWN",
    }
    judge = DictJudge(table)
    trends = extract_trends(corpus, graph, judge, FitParams())
    assert [(t.var, t.direction) for t in trends] == [("v0", TrendDirection.UP)]
    assert len(trends[0].evidence) == 3

    table[(claim.claim_hash, "x2")] = "IRRELEVANT"
    table[(claim.claim_hash, "x1")] = "DOWN"
    trends = extract_trends(corpus, graph, DictJudge(table), FitParams())
    assert trends == []  # 1 UP vs 1 DOWN: ambiguous, no statement


def test_trend_agreement():
    def ts(var, d):
        from qualgraph.dynamics import TrendStatement
        return TrendStatement(var=var, direction=d)

    pred = [ts("a", TrendDirection.UP), ts("b", TrendDirection.DOWN)]
    obs = [ts("a", TrendDirection.UP), ts("b", TrendDirection.UP),
           ts("c", TrendDirection.DOWN)]
    assert trend_agreement(pred, obs) == 0.5
    assert trend_agreement(pred, []) is None
