import itertools
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from qualgraph.corpus import TimeKind, TimeRef
from qualgraph.errors import ParseError, PreconditionError
from qualgraph.graph import (
    Edge,
    EvidenceItem,
    EvidenceSource,
    Level,
    Loop,
    LoopSign,
    Node,
    QualGraph,
    SupportLabel,
    detect_loops,
    deserialize,
    enumerate_atomic_claims,
    loop_sign_of,
    serialize,
    transitive_reduction,
    validate,
)
from qualgraph.claims import ClaimKind

from conftest import make_edge, make_evidence, make_node


# ---------------------------------------------------------------------------
# independent oracles


def brute_force_simple_cycles(n_nodes, edge_pairs):
    """All simple directed cycles as canonical rotations, via path DFS."""
    adjacency = {i: set() for i in range(n_nodes)}
    for u, v in edge_pairs:
        adjacency[u].add(v)
    cycles = set()

    def walk(start, current, path, visited):
        for nxt in adjacency[current]:
            if nxt == start and len(path) >= 1:
                cycles.add(tuple(path))
            elif nxt > start and nxt not in visited:
                walk(start, nxt, path + [nxt], visited | {nxt})

    for start in range(n_nodes):
        walk(start, start, [start], {start})
    return cycles


def brute_force_transitive_reduction(n_nodes, edge_pairs):
    """Minimal reachability-preserving edge set of a DAG: an edge stays
    iff no alternative path connects its endpoints."""
    adjacency = {i: set() for i in range(n_nodes)}
    for u, v in edge_pairs:
        adjacency[u].add(v)

    def reachable(src, dst, banned_edge):
        stack, seen = [src], set()
        while stack:
            node = stack.pop()
            for nxt in adjacency[node]:
                if (node, nxt) == banned_edge:
                    continue
                if nxt == dst:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    return {(u, v) for u, v in edge_pairs if not reachable(u, v, (u, v))}


def graph_from_pairs(pairs, n_nodes, level=Level.L1, edge_type="REL"):
    nodes = tuple(make_node(f"n{i}", node_type="THEME") for i in range(n_nodes))
    edges = tuple(
        make_edge(f"e{k}", f"n{u}", f"n{v}", edge_type=edge_type)
        for k, (u, v) in enumerate(sorted(pairs))
    )
    return QualGraph(graph_id="t", level=level, nodes=nodes, edges=edges)


def random_digraph(rng, max_nodes=8):
    n = rng.randint(2, max_nodes)
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    density = rng.uniform(0.1, 0.5)
    chosen = {p for p in pairs if rng.random() < density}
    return n, chosen


def test_detect_loops_matches_bruteforce(rng):
    for trial in range(220):
        n, pairs = random_digraph(rng)
        graph = graph_from_pairs(pairs, n)
        got = {
            tuple(int(nid[1:]) for nid in lp.node_ids)
            for lp in detect_loops(graph)
        }
        assert got == brute_force_simple_cycles(n, pairs)


def test_transitive_reduction_matches_bruteforce(rng):
    for trial in range(220):
        n = rng.randint(2, 8)
        order = list(range(n))
        rng.shuffle(order)
        pairs = {
            (order[i], order[j])
            for i in range(n) for j in range(i + 1, n)
            if rng.random() < 0.4
        }
        graph = graph_from_pairs(pairs, n, edge_type="NEXT")
        reduced = transitive_reduction(graph, "NEXT")
        got = {
            (int(e.src[1:]), int(e.dst[1:]))
            for e in reduced.edges if e.edge_type == "NEXT"
        }
        assert got == brute_force_transitive_reduction(n, pairs)
        removed = json.loads(reduced.provenance["transitive_reduction_removed"])
        assert len(removed) == len(pairs) - len(got)


def test_transitive_reduction_rejects_cycles():
    graph = graph_from_pairs({(0, 1), (1, 0)}, 2, edge_type="NEXT")
    with pytest.raises(PreconditionError):
        transitive_reduction(graph, "NEXT")


def test_transitive_reduction_leaves_other_types_alone():
    nodes = tuple(make_node(f"n{i}", node_type="THEME") for i in range(3))
    edges = (
        make_edge("a", "n0", "n1", edge_type="NEXT"),
        make_edge("b", "n1", "n2", edge_type="NEXT"),
        make_edge("c", "n0", "n2", edge_type="NEXT"),   # redundant
        make_edge("d", "n0", "n2", edge_type="OTHER"),  # untouched
    )
    graph = QualGraph(graph_id="t", level=Level.L1, nodes=nodes, edges=edges)
    reduced = transitive_reduction(graph, "NEXT")
    assert {e.id for e in reduced.edges} == {"a", "b", "d"}


def test_loop_sign_product_rule(rng):
    for trial in range(200):
        k = rng.randint(0, 5)
        polarities = [rng.choice([-1, 1]) for _ in range(k)]
        edges = [
            make_edge(f"e{i}", "x", "y", edge_type="INCREASES" if p == 1
                      else "DECREASES", polarity=p)
            for i, p in enumerate(polarities)
        ]
        product = 1
        for p in polarities:
            product *= p
        want = LoopSign.REINFORCING if product == 1 else LoopSign.BALANCING
        assert loop_sign_of(edges) is want
    unknown = [make_edge("e", "x", "y", edge_type="TRANSACTION", polarity=None)]
    assert loop_sign_of(unknown) is LoopSign.UNKNOWN


def test_detect_loops_collapses_parallel_edges_by_smallest_id():
    nodes = (make_node("a", node_type="THEME"), make_node("b", node_type="THEME"))
    edges = (
        make_edge("e2", "a", "b", edge_type="DECREASES", polarity=-1),
        make_edge("e1", "a", "b", edge_type="INCREASES", polarity=1),
        make_edge("e3", "b", "a", edge_type="INCREASES", polarity=1),
    )
    graph = QualGraph(graph_id="t", level=Level.L1, nodes=nodes, edges=edges)
    loops = detect_loops(graph)
    assert len(loops) == 1
    # representative a->b edge is e1 (+1), so the loop is reinforcing
    assert loops[0].loop_sign is LoopSign.REINFORCING
    assert loops[0].node_ids == ("a", "b")


# ---------------------------------------------------------------------------
# validators


def _l4_graph(**overrides):
    nodes = (
        make_node("s1", node_type="STATE_VAR"),
        make_node("s2", node_type="STATE_VAR"),
    )
    edges = (
        make_edge("f1", "s1", "s2", edge_type="INCREASES", polarity=1),
        make_edge("f2", "s2", "s1", edge_type="DECREASES", polarity=-1),
    )
    base = dict(graph_id="g", level=Level.L4, nodes=nodes, edges=edges)
    base.update(overrides)
    return QualGraph(**base)


def test_validate_passes_well_formed_graph():
    report = validate(_l4_graph())
    assert report.passed and report.violations == ()


def test_r1_missing_evidence():
    graph = _l4_graph(nodes=(
        make_node("s1", node_type="STATE_VAR", evidence=()),
        make_node("s2", node_type="STATE_VAR"),
    ))
    rules = {r for r, _, _ in validate(graph).violations}
    assert "R1" in rules


def test_r2_next_cycle_needs_recurrent_flag():
    nodes = (make_node("a", node_type="STAGE"), make_node("b", node_type="STAGE"))
    edges = (
        make_edge("e1", "a", "b", edge_type="NEXT"),
        make_edge("e2", "b", "a", edge_type="NEXT"),
    )
    cyclic = QualGraph(graph_id="g", level=Level.L2, nodes=nodes, edges=edges)
    assert any(r == "R2" for r, _, _ in validate(cyclic).violations)
    flagged = QualGraph(graph_id="g", level=Level.L2, nodes=nodes, edges=edges,
                        recurrent_flag=True)
    assert validate(flagged).passed


def test_r3_polarity_consistency():
    graph = _l4_graph(edges=(
        make_edge("f1", "s1", "s2", edge_type="INCREASES", polarity=-1),
    ))
    assert any(r == "R3" for r, _, _ in validate(graph).violations)
    graph = _l4_graph(edges=(
        make_edge("f1", "s1", "s2", edge_type="INCREASES", polarity=None),
    ))
    assert any(r == "R3" for r, _, _ in validate(graph).violations)


def test_r3_declared_loop_sign_must_match_members():
    graph = _l4_graph(loops=(
        Loop(loop_id="lp", node_ids=("s1", "s2"),
             loop_sign=LoopSign.REINFORCING),
    ))
    # member polarities multiply to -1: declaring REINFORCING is inconsistent
    assert any(r == "R3" for r, _, _ in validate(graph).violations)
    ok = _l4_graph(loops=(
        Loop(loop_id="lp", node_ids=("s1", "s2"), loop_sign=LoopSign.BALANCING),
    ))
    assert validate(ok).passed


def test_r4_referential_integrity():
    graph = _l4_graph(edges=(
        make_edge("f1", "s1", "ghost", edge_type="INCREASES", polarity=1),
    ))
    assert any(r == "R4" for r, _, _ in validate(graph).violations)
    graph = _l4_graph(loops=(Loop(loop_id="lp", node_ids=("s1", "ghost")),))
    assert any(r == "R4" for r, _, _ in validate(graph).violations)


def test_r5_level_vocabulary():
    graph = _l4_graph(nodes=(
        make_node("s1", node_type="CONSTRUCT"),
        make_node("s2", node_type="STATE_VAR"),
    ))
    assert any(r == "R5" for r, _, _ in validate(graph).violations)
    l1 = QualGraph(graph_id="g", level=Level.L1,
                   nodes=(make_node("n", node_type="ANYTHING"),))
    assert validate(l1).passed


def test_violations_are_sorted_and_complete():
    graph = _l4_graph(
        nodes=(
            make_node("s1", node_type="CONSTRUCT", evidence=()),
            make_node("s2", node_type="STATE_VAR"),
        ),
        edges=(make_edge("f1", "s1", "ghost", edge_type="WEIRD"),),
    )
    violations = validate(graph).violations
    assert violations == tuple(sorted(violations))
    assert {r for r, _, _ in violations} == {"R1", "R4", "R5"}


# ---------------------------------------------------------------------------
# serialization


def test_round_trip_identity_and_byte_stability():
    graph = _l4_graph(provenance={"note": "café ünïcode"})
    data = serialize(graph)
    back = deserialize(data)
    assert back == graph
    assert serialize(back) == data


def test_serialize_is_canonical_utf8():
    graph = _l4_graph(provenance={"note": "café"})
    data = serialize(graph)
    assert "café" in data.decode("utf-8")
    assert b": " not in data  # compact separators


def test_deserialize_error_paths():
    with pytest.raises(ParseError) as err:
        deserialize(b"not json")
    assert err.value.path == "/"
    with pytest.raises(ParseError) as err:
        deserialize(json.dumps({"graph_id": "g", "level": "L9"}))
    assert err.value.path == "/level"
    doc = json.loads(serialize(_l4_graph()))
    del doc["nodes"][0]["label"]
    with pytest.raises(ParseError) as err:
        deserialize(json.dumps(doc))
    assert err.value.path == "/nodes/0/label"
    doc = json.loads(serialize(_l4_graph()))
    doc["edges"][0]["evidence"][0]["support_label"] = "MAYBE"
    with pytest.raises(ParseError) as err:
        deserialize(json.dumps(doc))
    assert err.value.path == "/edges/0/evidence/0"


_label_st = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=12
)
_id_st = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True)


@st.composite
def graph_st(draw):
    n_nodes = draw(st.integers(min_value=1, max_value=5))
    node_ids = [f"n{i}" for i in range(n_nodes)]
    nodes = []
    for nid in node_ids:
        evidence = EvidenceItem(
            excerpt_id=draw(_id_st),
            doc_id=draw(_id_st),
            span=(0, draw(st.integers(min_value=0, max_value=50))),
            support_label=draw(st.sampled_from(list(SupportLabel))),
            rationale=draw(_label_st),
            source=draw(st.sampled_from(list(EvidenceSource))),
            time=draw(st.one_of(
                st.none(),
                st.builds(TimeRef,
                          kind=st.just(TimeKind.NARRATIVE_INDEX),
                          value=st.integers(min_value=0, max_value=100)),
            )),
            confidence=draw(st.one_of(
                st.none(), st.floats(min_value=0.0, max_value=1.0))),
        )
        nodes.append(Node(
            id=nid,
            node_type=draw(_label_st),
            label=draw(_label_st),
            definition=draw(_label_st),
            aliases=tuple(draw(st.lists(_label_st, max_size=2))),
            attributes=draw(st.dictionaries(_id_st, _label_st, max_size=2)),
            evidence=(evidence,),
        ))
    n_edges = draw(st.integers(min_value=0, max_value=6))
    edges = []
    for k in range(n_edges):
        edges.append(Edge(
            id=f"e{k}",
            src=draw(st.sampled_from(node_ids)),
            dst=draw(st.sampled_from(node_ids)),
            edge_type=draw(_label_st),
            polarity=draw(st.sampled_from([None, -1, 1])),
            qualifiers=draw(st.dictionaries(_id_st, _label_st, max_size=2)),
        ))
    loops = []
    if draw(st.booleans()) and n_nodes >= 2:
        loops.append(Loop(
            loop_id="lp0",
            node_ids=tuple(node_ids[:2]),
            loop_sign=draw(st.sampled_from(list(LoopSign))),
        ))
    return QualGraph(
        graph_id=draw(_id_st),
        level=draw(st.sampled_from(list(Level))),
        nodes=tuple(nodes),
        edges=tuple(edges),
        loops=tuple(loops),
        recurrent_flag=draw(st.booleans()),
        provenance=draw(st.dictionaries(_id_st, _label_st, max_size=2)),
    )


@settings(max_examples=120, deadline=None)
@given(graph_st())
def test_round_trip_property(graph):
    data = serialize(graph)
    back = deserialize(data)
    assert back == graph
    assert serialize(back) == data


# ---------------------------------------------------------------------------
# claim enumeration


def test_enumerate_atomic_claims_covers_all_levels():
    l2 = QualGraph(
        graph_id="g", level=Level.L2,
        nodes=(make_node("a", node_type="STAGE"),
               make_node("b", node_type="STAGE")),
        edges=(make_edge("e", "a", "b", edge_type="NEXT"),),
    )
    kinds = [c.kind for c in enumerate_atomic_claims(l2)]
    assert kinds.count(ClaimKind.NODE_INSTANTIATION) == 2
    assert kinds.count(ClaimKind.EDGE_SUPPORT) == 1
    assert kinds.count(ClaimKind.ORDER_CONSTRAINT) == 1

    l4 = _l4_graph()
    kinds = [c.kind for c in enumerate_atomic_claims(l4)]
    assert kinds.count(ClaimKind.TREND) == 2
    assert kinds.count(ClaimKind.LOOP_CLOSURE) == 1  # detected s1<->s2 cycle


def test_claim_hash_distinguishes_aspects():
    from qualgraph.claims import Claim
    base = Claim(kind=ClaimKind.EDGE_SUPPORT, subject_ids=("e",),
                 rendered_statement="s")
    other = Claim(kind=ClaimKind.EDGE_SUPPORT, subject_ids=("e",),
                  rendered_statement="s", aspect="direction")
    assert base.claim_hash != other.claim_hash
    assert base.claim_hash == Claim(kind=ClaimKind.EDGE_SUPPORT,
                                    subject_ids=("e",),
                                    rendered_statement="s").claim_hash
