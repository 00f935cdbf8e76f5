"""Regenerate the committed test fixtures. Deterministic; run from repo root."""

import json
import os

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")
os.makedirs(FIXTURES, exist_ok=True)


def write_jsonl(name, records):
    path = os.path.join(FIXTURES, name)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True))
            fh.write("\n")


def write_json(name, doc):
    path = os.path.join(FIXTURES, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


# --------------------------------------------------------------------------
# gold corpus: 5 documents x 10 excerpts about mentoring programs
SUPPORT = [
    "The mentor offered steady peer support and encouragement every week.",
    "Weekly peer support circles gave each member a mentor to lean on.",
    "Participants described the peer support from their mentor as constant.",
    "Encouragement from peers and the mentor kept the support network alive.",
]
CONFIDENCE = [
    "Afterwards her self confidence grew and she spoke with real assurance.",
    "He reported a new belief in himself and rising self confidence.",
    "Their self confidence and assurance improved month over month.",
    "The growth in confidence was visible; her belief in herself returned.",
]
ENGAGEMENT = [
    "She began volunteering and her community engagement deepened quickly.",
    "Community engagement followed: participation in local volunteering rose.",
    "His participation in community events and engagement kept expanding.",
    "Engagement with the wider community showed up as regular volunteering.",
]
BRIDGE_SC = [
    "Because the mentor gave peer support, her self confidence climbed.",
    "The peer support sessions came first and self confidence followed.",
]
BRIDGE_CE = [
    "With self confidence restored, community engagement became possible.",
    "Her new confidence enabled real participation and community engagement.",
]
FILLER = [
    "The weather that winter was unusually mild across the region.",
    "Funding paperwork took longer than anyone at the office expected.",
    "Lunch was served in the main hall before the afternoon session.",
    "The bus route to the center changed twice during the study.",
]

records = []
for d in range(5):
    doc_id = f"doc{d + 1}"
    texts = [
        SUPPORT[d % len(SUPPORT)],
        SUPPORT[(d + 1) % len(SUPPORT)],
        BRIDGE_SC[d % len(BRIDGE_SC)],
        CONFIDENCE[d % len(CONFIDENCE)],
        CONFIDENCE[(d + 1) % len(CONFIDENCE)],
        BRIDGE_CE[d % len(BRIDGE_CE)],
        ENGAGEMENT[d % len(ENGAGEMENT)],
        ENGAGEMENT[(d + 1) % len(ENGAGEMENT)],
        FILLER[d % len(FILLER)],
        FILLER[(d + 1) % len(FILLER)],
    ]
    for i, text in enumerate(texts):
        records.append(
            {
                "excerpt_id": f"{doc_id}_e{i:02d}",
                "doc_id": doc_id,
                "text": text,
                "time": {"kind": "NARRATIVE_INDEX", "value": i},
            }
        )
assert len(records) == 50
write_jsonl("gold_corpus.jsonl", records)


def ev(excerpt_id, doc_id, t):
    return {
        "excerpt_id": excerpt_id,
        "doc_id": doc_id,
        "span": [0, 10],
        "support_label": "MENTIONS",
        "rationale": "annotated by hand",
        "source": "HUMAN",
        "time": {"kind": "NARRATIVE_INDEX", "value": t},
    }


def node(nid, label, definition, aliases, eid, doc, t):
    return {
        "id": nid,
        "node_type": "CONSTRUCT",
        "label": label,
        "definition": definition,
        "aliases": aliases,
        "attributes": {},
        "evidence": [ev(eid, doc, t)],
    }


GOLD_NODES = [
    node("c_confidence", "self confidence",
         "Belief and assurance in one's own abilities.",
         ["assurance", "belief"], "doc1_e03", "doc1", 3),
    node("c_engagement", "community engagement",
         "Participation and volunteering in community life.",
         ["participation", "volunteering"], "doc1_e06", "doc1", 6),
    node("c_support", "peer support",
         "Encouragement and backing received from peers and mentors.",
         ["mentor", "encouragement"], "doc1_e00", "doc1", 0),
]


def edge(eid, src, dst, etype, sketch, anchor, doc, t):
    return {
        "id": eid,
        "src": src,
        "dst": dst,
        "edge_type": etype,
        "polarity": None,
        "qualifiers": {"mechanism_sketch": sketch},
        "evidence": [ev(anchor, doc, t)],
    }


gold_graph = {
    "graph_id": "gold",
    "level": "L3",
    "recurrent_flag": False,
    "provenance": {"author": "fixture"},
    "nodes": GOLD_NODES,
    "edges": [
        edge("e1", "c_support", "c_confidence", "CAUSES",
             "steady encouragement builds self belief",
             "doc1_e02", "doc1", 2),
        edge("e2", "c_confidence", "c_engagement", "ENABLES",
             "confidence lowers the barrier to participating",
             "doc1_e05", "doc1", 5),
    ],
    "loops": [],
}
write_json("gold_graph.json", gold_graph)

corrupted = json.loads(json.dumps(gold_graph))
corrupted["graph_id"] = "corrupted"
corrupted["edges"][0]["src"] = "c_confidence"
corrupted["edges"][0]["dst"] = "c_support"
write_json("corrupted_graph.json", corrupted)

write_json("gold_rules.json", [
    {"statement_pattern": "rather than the reverse", "label": "SUPPORTS",
     "confidence": 0.9, "rationale": "order is explicit in the excerpt"},
    {"statement_pattern": "'how' content", "label": "SUPPORTS",
     "confidence": 0.9, "rationale": "mechanism is described"},
    {"kind": "NODE_INSTANTIATION", "label": "SUPPORTS",
     "confidence": 0.9, "rationale": "construct is instantiated"},
    {"statement_pattern": "'peer support' CAUSES 'self confidence'",
     "label": "SUPPORTS", "confidence": 0.9,
     "rationale": "support precedes and produces confidence"},
    {"statement_pattern": "'self confidence' ENABLES 'community engagement'",
     "label": "SUPPORTS", "confidence": 0.9,
     "rationale": "confidence enables engagement"},
    {"statement_pattern": "CAUSES 'peer support'", "label": "CONTRADICTS",
     "confidence": 0.9, "rationale": "the order runs the other way"},
])

# --------------------------------------------------------------------------
# coded corpus for induction: codes A,B co-occur and A precedes B
coded_records = []
CODE_PATTERN = [
    (["A"], "alpha marks the opening move"),
    (["A", "B"], "alpha and beta happen side by side"),
    (["A", "B"], "beta rides along with alpha again"),
    (["B"], "beta carries the middle stretch"),
    (["C"], "gamma appears once near the end"),
    ([], "an uncoded aside closes the note"),
]
for d in range(2):
    doc_id = f"cdoc{d + 1}"
    for i, (codes, text) in enumerate(CODE_PATTERN):
        coded_records.append(
            {
                "excerpt_id": f"{doc_id}_x{i}",
                "doc_id": doc_id,
                "text": text,
                "time": {"kind": "NARRATIVE_INDEX", "value": i},
                "codes": codes,
            }
        )
write_jsonl("coded_corpus.jsonl", coded_records)

write_json("codebook.json", {
    "A": {"label": "alpha", "definition": "the alpha code", "aliases": []},
    "B": {"label": "beta", "definition": "the beta code", "aliases": []},
    "C": {"label": "gamma", "definition": "the gamma code", "aliases": []},
})

write_json("induction_rules.json", [
    {"statement_pattern": "between 'alpha' and 'beta'", "label": "CAUSES",
     "confidence": 0.9, "rationale": "alpha reliably precedes beta"},
])

# --------------------------------------------------------------------------
# PII fixtures
pii_records = [
    {"excerpt_id": "p01", "doc_id": "pdoc1",
     "text": "Reach alice.smith@example.com or call 555-0100 about the visit."},
    {"excerpt_id": "p02", "doc_id": "pdoc1",
     "text": "The intake happened on 2021-03-15 and follow-up on 2021-03-20."},
    {"excerpt_id": "p03", "doc_id": "pdoc1",
     "text": "Backup number 555-123-4567, case file AB12345 on record."},
    {"excerpt_id": "p04", "doc_id": "pdoc2",
     "text": "Call (555) 123-4567 or +1-555-123-4567; email bob_jones@mail.example.org."},
    {"excerpt_id": "p05", "doc_id": "pdoc2",
     "text": "Signed on March 15, 2021 under reference XY98765."},
    {"excerpt_id": "p06", "doc_id": "pdoc2",
     "text": "Second review noted on 2021-04-01 by the same office."},
]
write_jsonl("pii_corpus.jsonl", pii_records)

CLUSTER_NAMES = [
    "amber.quarry", "birch.lantern", "cedar.meadow", "delta.orchid",
    "ember.saddle", "fjord.tundra", "grove.velvet", "harbor.willow",
    "ivory.zephyr", "juniper.anchor", "kestrel.breeze", "larkspur.copper",
    "mosaic.drift", "nimbus.ember2", "onyx.fable", "prairie.gale",
    "quartz.haven", "russet.inlet", "sorrel.jetty", "thistle.knoll",
]
cluster_records = []
for i in range(20):
    user = CLUSTER_NAMES[i]
    cluster_records.append({
        "excerpt_id": f"c{i:02d}a", "doc_id": "cl",
        "text": f"First contact via {user}@example.com went fine.",
    })
    cluster_records.append({
        "excerpt_id": f"c{i:02d}b", "doc_id": "cl",
        "text": f"Second contact via {user.upper()}@EXAMPLE.COM as well.",
    })
write_jsonl("cluster_corpus.jsonl", cluster_records)

write_json("deid_policy.json", {
    "actions": {
        "EMAIL": "PSEUDONYMIZE",
        "PHONE": "REDACT",
        "DATE": "DATE_SHIFT",
        "ID": "PSEUDONYMIZE",
    },
    "date_granularity": "month",
    "date_shift_bounds": [-30, 30],
    "hash_doc_ids": False,
})

# --------------------------------------------------------------------------
# L4 graph + init for the simulate command
l4_graph = {
    "graph_id": "thermostat",
    "level": "L4",
    "recurrent_flag": False,
    "provenance": {},
    "nodes": [
        {"id": "s_demand", "node_type": "STATE_VAR", "label": "demand",
         "definition": "How much output the group asks for.",
         "aliases": [], "attributes": {},
         "evidence": [ev("doc1_e00", "doc1", 0)]},
        {"id": "s_supply", "node_type": "STATE_VAR", "label": "supply",
         "definition": "How much output the group produces.",
         "aliases": [], "attributes": {},
         "evidence": [ev("doc1_e01", "doc1", 1)]},
    ],
    "edges": [
        {"id": "f1", "src": "s_demand", "dst": "s_supply",
         "edge_type": "INCREASES", "polarity": 1, "qualifiers": {},
         "evidence": [ev("doc1_e02", "doc1", 2)]},
        {"id": "f2", "src": "s_supply", "dst": "s_demand",
         "edge_type": "DECREASES", "polarity": -1, "qualifiers": {},
         "evidence": [ev("doc1_e03", "doc1", 3)]},
    ],
    "loops": [],
}
write_json("l4_graph.json", l4_graph)
write_json("l4_init.json", {"s_demand": "HIGH", "s_supply": "MID"})

print("fixtures written to", os.path.abspath(FIXTURES))
