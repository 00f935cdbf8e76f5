"""Shared builders for the test suite."""

import json
import os
import random

import pytest

from qualgraph.claims import ClaimKind
from qualgraph.corpus import Corpus, Excerpt, TimeKind, TimeRef, load_corpus
from qualgraph.graph import (
    Edge,
    EvidenceItem,
    EvidenceSource,
    Level,
    Node,
    QualGraph,
    SupportLabel,
)
from qualgraph.judge import JudgeConfig, JudgeVerdict

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


def read_fixture(name: str) -> bytes:
    with open(fixture_path(name), "rb") as fh:
        return fh.read()


def load_fixture_corpus(name: str) -> Corpus:
    return load_corpus(read_fixture(name))


def make_evidence(excerpt_id="doc1_e00", doc_id="doc1",
                  label=SupportLabel.MENTIONS, t=0) -> EvidenceItem:
    return EvidenceItem(
        excerpt_id=excerpt_id,
        doc_id=doc_id,
        span=(0, 5),
        support_label=label,
        rationale="hand annotated",
        source=EvidenceSource.HUMAN,
        time=TimeRef(kind=TimeKind.NARRATIVE_INDEX, value=t),
    )


def make_node(nid, node_type="CONSTRUCT", label=None, definition=None,
              aliases=(), evidence=None) -> Node:
    return Node(
        id=nid,
        node_type=node_type,
        label=label or nid.replace("_", " "),
        definition=definition or f"definition of {nid}",
        aliases=tuple(aliases),
        evidence=evidence if evidence is not None else (make_evidence(),),
    )


def make_edge(eid, src, dst, edge_type="CAUSES", polarity=None,
              qualifiers=None, evidence=None) -> Edge:
    return Edge(
        id=eid,
        src=src,
        dst=dst,
        edge_type=edge_type,
        polarity=polarity,
        qualifiers=dict(qualifiers or {}),
        evidence=evidence if evidence is not None else (make_evidence(),),
    )


WORDS = (
    "river stone maple cedar ember harbor lantern meadow orchid quarry "
    "saddle tundra velvet willow zephyr anchor breeze copper drift"
).split()


def make_corpus(rng: random.Random, n_docs=2, n_per_doc=4) -> Corpus:
    excerpts = []
    for d in range(n_docs):
        for i in range(n_per_doc):
            text = " ".join(rng.choices(WORDS, k=6))
            excerpts.append(
                Excerpt(
                    excerpt_id=f"d{d}_x{i}",
                    doc_id=f"d{d}",
                    text=text,
                    time=TimeRef(kind=TimeKind.NARRATIVE_INDEX, value=i),
                )
            )
    return Corpus(excerpts=tuple(excerpts))


def make_random_graph(rng: random.Random, n_nodes=4, n_edges=4,
                      level=Level.L1, edge_type="RELATES") -> QualGraph:
    nodes = tuple(
        make_node(f"n{i}", node_type="THEME",
                  label=" ".join(rng.choices(WORDS, k=2)),
                  definition=" ".join(rng.choices(WORDS, k=4)))
        for i in range(n_nodes)
    )
    edges = []
    used = set()
    attempts = 0
    while len(edges) < n_edges and attempts < 50:
        attempts += 1
        src, dst = rng.sample(range(n_nodes), 2)
        if (src, dst) in used:
            continue
        used.add((src, dst))
        edges.append(make_edge(f"e{len(edges)}", f"n{src}", f"n{dst}",
                               edge_type=edge_type))
    return QualGraph(
        graph_id=f"g{rng.randint(0, 10**9)}",
        level=level,
        nodes=nodes,
        edges=tuple(edges),
    )


class DictJudge:
    """Frozen verdict table keyed by (claim hash, excerpt id); test double."""

    def __init__(self, table=None, default="IRRELEVANT", relation_default="NONE"):
        self.table = dict(table or {})
        self.default = default
        self.relation_default = relation_default
        self.config = JudgeConfig(n_samples=1, seed=0)

    def judge(self, claim, excerpt, config=None):
        key = (claim.claim_hash, excerpt.excerpt_id)
        fallback = (
            self.relation_default
            if claim.kind is ClaimKind.RELATION_TYPING else self.default
        )
        label = self.table.get(key, fallback)
        return JudgeVerdict(label=label, confidence=0.9, rationale="frozen table")


@pytest.fixture
def rng():
    return random.Random(20240817)
