"""Claim judges: the pluggable (claim, excerpt) -> (label, confidence, rationale)
function, a deterministic rule-based mock, a remote HTTP-backed judge, majority
voting, and landscape-level classification.

The remote wire contract is one request per claim sample with body
{"template_id": ..., "rendered_prompt": ...}; the reply must contain a
structured JSON object with a label/judgement field, a rationale, and an
optional confidence.
"""

from __future__ import annotations

import json
import re
import threading
import time as _time
from dataclasses import dataclass, field
from importlib import resources

from qualgraph.claims import Claim, ClaimKind
from qualgraph.corpus import Excerpt
from qualgraph.errors import ProtocolError, TransportError
from qualgraph.graph import Level

SUPPORTS = "SUPPORTS"
CONTRADICTS = "CONTRADICTS"
IRRELEVANT = "IRRELEVANT"

TREND_DIRECTIONS = ("UP", "DOWN", "NO_CHANGE")
RELATION_TYPES = (
    "NEXT", "CO_OCCURS", "ENABLES", "INHIBITS", "CAUSES", "PART_OF",
    "MODERATES", "NONE",
)

TEMPLATE_VERSION = "v1"

_CLAIM_TEMPLATES = {
    ClaimKind.NODE_INSTANTIATION: (
        "node_claim_" + TEMPLATE_VERSION,
        "Given the node definition, does the excerpt instantiate it? "
        "Output {SUPPORTS/IRRELEVANT} and one sentence why.",
    ),
    ClaimKind.EDGE_SUPPORT: (
        "edge_claim_" + TEMPLATE_VERSION,
        "Given edge type and direction (and polarity/conditions), does the "
        "excerpt support it, contradict it, or is it irrelevant? Output label "
        "+ short rationale; do not infer beyond the excerpt.",
    ),
}
_GENERIC_TEMPLATE = (
    "generic_claim_" + TEMPLATE_VERSION,
    "Does the excerpt support the claim, contradict it, or is it irrelevant? "
    "Output label + short rationale; do not infer beyond the excerpt.",
)


def allowed_labels(kind: ClaimKind) -> tuple[str, ...]:
    if kind is ClaimKind.TREND:
        return TREND_DIRECTIONS + (IRRELEVANT,)
    if kind is ClaimKind.RELATION_TYPING:
        return RELATION_TYPES
    return (SUPPORTS, CONTRADICTS, IRRELEVANT)


@dataclass(frozen=True)
class JudgeVerdict:
    label: str
    confidence: float
    rationale: str

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ProtocolError(f"confidence {self.confidence} outside [0,1]")
        if not self.rationale:
            raise ProtocolError("rationale must be non-empty")


@dataclass(frozen=True)
class JudgeConfig:
    n_samples: int = 3
    low_agreement_threshold: float = 0.67
    seed: int = 0
    endpoint: str | None = None
    credential_env: str = "QUALGRAPH_JUDGE_TOKEN"
    max_retries: int = 3
    meaning_fixture: str | None = None   # mock classify replies
    modeling_fixture: str | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass(frozen=True)
class MockRule:
    label: str
    confidence: float
    rationale: str
    kind: ClaimKind | None = None
    excerpt_pattern: str | None = None    # case-insensitive substring
    statement_pattern: str | None = None

    def matches(self, claim: Claim, excerpt: Excerpt) -> bool:
        if self.kind is not None and self.kind is not claim.kind:
            return False
        if self.excerpt_pattern is not None and \
                self.excerpt_pattern.lower() not in excerpt.text.lower():
            return False
        if self.statement_pattern is not None and \
                self.statement_pattern.lower() not in claim.rendered_statement.lower():
            return False
        return True


@dataclass(frozen=True)
class MockRuleSet:
    """First-match-wins rule table; default verdict IRRELEVANT at 0.5."""

    rules: tuple[MockRule, ...] = ()

    @classmethod
    def from_json(cls, data: str | bytes) -> "MockRuleSet":
        doc = json.loads(data)
        rules = []
        for r in doc:
            rules.append(
                MockRule(
                    label=r["label"],
                    confidence=float(r.get("confidence", 0.9)),
                    rationale=r.get("rationale", "rule match"),
                    kind=ClaimKind(r["kind"]) if r.get("kind") else None,
                    excerpt_pattern=r.get("excerpt_pattern"),
                    statement_pattern=r.get("statement_pattern"),
                )
            )
        return cls(rules=tuple(rules))


class VerdictCache:
    """Single-writer verdict store keyed by (claim hash, excerpt, template)."""

    def __init__(self):
        self._store: dict[tuple[str, str, str], JudgeVerdict] = {}
        self._lock = threading.Lock()

    def get(self, key):
        return self._store.get(key)

    def put(self, key, verdict):
        with self._lock:
            self._store[key] = verdict


class MockJudge:
    """Deterministic rule-table judge; the test oracle for the fit pipeline."""

    def __init__(self, rules: MockRuleSet, config: JudgeConfig | None = None):
        self.rules = rules
        self.config = config or JudgeConfig()

    def judge(self, claim: Claim, excerpt: Excerpt,
              config: JudgeConfig | None = None) -> JudgeVerdict:
        for rule in self.rules.rules:
            if rule.matches(claim, excerpt):
                return JudgeVerdict(
                    label=rule.label,
                    confidence=rule.confidence,
                    rationale=rule.rationale,
                )
        return JudgeVerdict(
            label=IRRELEVANT if claim.kind is not ClaimKind.RELATION_TYPING else "NONE",
            confidence=0.5,
            rationale="no rule matched",
        )


def extract_json_object(text: str) -> dict:
    """Pull the first well-formed JSON object out of surrounding prose."""
    decoder = json.JSONDecoder()
    for match in re.finditer(r"\{", text):
        try:
            obj, _ = decoder.raw_decode(text, match.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise ProtocolError("no JSON object found in reply", raw_reply=text)


class RemoteJudge:
    """HTTP-backed judge; the transport is injectable for testing.

    transport(url, payload) must return the reply body as text. The
    default transport posts JSON via requests with the bearer token from
    the configured environment variable.
    """

    def __init__(self, config: JudgeConfig, transport=None,
                 cache: VerdictCache | None = None):
        self.config = config
        self._transport = transport or self._default_transport
        self.cache = cache or VerdictCache()

    def _default_transport(self, url: str, payload: dict) -> str:
        import os

        import requests

        headers = {}
        token = os.environ.get(self.config.credential_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=60)
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        return resp.text

    def _call(self, template_id: str, rendered_prompt: str) -> str:
        if not self.config.endpoint:
            raise TransportError("no judge endpoint configured")
        payload = {"template_id": template_id, "rendered_prompt": rendered_prompt}
        delay = 0.5
        last_exc: TransportError | None = None
        for _attempt in range(self.config.max_retries):
            try:
                return self._transport(self.config.endpoint, payload)
            except TransportError as exc:
                last_exc = exc
                _time.sleep(delay)
                delay *= 2
        raise last_exc

    def render_prompt(self, claim: Claim, excerpt: Excerpt) -> tuple[str, str]:
        template_id, template = _CLAIM_TEMPLATES.get(claim.kind, _GENERIC_TEMPLATE)
        prompt = (
            f"{template}\n\nClaim: {claim.rendered_statement}\n\n"
            f"Excerpt: {excerpt.text}"
        )
        return template_id, prompt

    def judge(self, claim: Claim, excerpt: Excerpt,
              config: JudgeConfig | None = None) -> JudgeVerdict:
        key = (claim.claim_hash, excerpt.excerpt_id, TEMPLATE_VERSION)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        template_id, prompt = self.render_prompt(claim, excerpt)
        raw = self._call(template_id, prompt)
        obj = extract_json_object(raw)
        label = obj.get("label", obj.get("judgement"))
        if label not in allowed_labels(claim.kind):
            raise ProtocolError(
                f"verdict label {label!r} outside the allowed set for "
                f"{claim.kind.value}", raw_reply=raw,
            )
        rationale = obj.get("rationale")
        if not rationale:
            raise ProtocolError("reply missing rationale", raw_reply=raw)
        confidence = obj.get("confidence")
        flagged_default = confidence is None
        if flagged_default:
            confidence = 0.5
        try:
            verdict = JudgeVerdict(
                label=label, confidence=float(confidence), rationale=rationale
            )
        except (TypeError, ValueError):
            raise ProtocolError(
                f"invalid confidence {confidence!r}", raw_reply=raw
            ) from None
        self.cache.put(key, verdict)
        return verdict


@dataclass(frozen=True)
class VoteResult:
    verdict: JudgeVerdict
    agreement: float
    tie: bool = False
    needs_adjudication: bool = False


def judge_with_vote(judge, claim: Claim, excerpt: Excerpt,
                    config: JudgeConfig) -> VoteResult:
    """Majority vote over n samples; ties resolve to IRRELEVANT, flagged."""
    verdicts = [judge.judge(claim, excerpt, config) for _ in range(config.n_samples)]
    counts: dict[str, int] = {}
    for v in verdicts:
        counts[v.label] = counts.get(v.label, 0) + 1
    best = max(counts.values())
    winners = sorted(label for label, c in counts.items() if c == best)
    tie = len(winners) > 1
    if tie:
        label = IRRELEVANT
        members = verdicts
    else:
        label = winners[0]
        members = [v for v in verdicts if v.label == label]
    confidence = sum(v.confidence for v in members) / len(members)
    agreement = best / config.n_samples
    verdict = JudgeVerdict(
        label=label,
        confidence=confidence,
        rationale="tie between " + "/".join(winners) if tie else members[0].rationale,
    )
    return VoteResult(
        verdict=verdict,
        agreement=agreement,
        tie=tie,
        needs_adjudication=agreement < config.low_agreement_threshold,
    )


# ---------------------------------------------------------------------------
# landscape-level classification

_LEVEL_RE = {
    "Level 1": Level.L1,
    "Level 2": Level.L2,
    "Level 3": Level.L3,
    "Level 4": Level.L4,
}


def load_prompt_asset(name: str) -> str:
    return (
        resources.files("qualgraph.assets.prompts").joinpath(name).read_text("utf-8")
    )


def _parse_level_reply(raw: str) -> tuple[Level, str]:
    obj = extract_json_object(raw)
    judgement = obj.get("judgement")
    if judgement not in _LEVEL_RE:
        raise ProtocolError(
            f"judgement {judgement!r} is not one of 'Level 1'..'Level 4'",
            raw_reply=raw,
        )
    return _LEVEL_RE[judgement], obj.get("rationale", "")


def classify_landscape_levels(paper_text: str, config: JudgeConfig,
                              judge=None) -> tuple[Level, Level, dict[str, str]]:
    """Classify a paper on both level axes using the shipped prompt assets.

    With mock fixtures configured, returns exactly the configured labels;
    otherwise renders each asset verbatim with the paper text appended
    and sends it through the remote judge transport.
    """
    if config.meaning_fixture is not None and config.modeling_fixture is not None:
        meaning, m_rat = _LEVEL_RE[config.meaning_fixture], "fixture"
        modeling, d_rat = _LEVEL_RE[config.modeling_fixture], "fixture"
        return meaning, modeling, {"meaning": m_rat, "modeling": d_rat}
    if judge is None or not isinstance(judge, RemoteJudge):
        raise TransportError("landscape classification requires a remote judge")
    rationales = {}
    levels = []
    for axis, asset in (("meaning", "meaning_level.txt"),
                        ("modeling", "modeling_level.txt")):
        template = load_prompt_asset(asset)
        prompt = template + "\n\nPaper:\n" + paper_text
        raw = judge._call(f"{axis}_level_{TEMPLATE_VERSION}", prompt)
        level, rationale = _parse_level_reply(raw)
        levels.append(level)
        rationales[axis] = rationale
    return levels[0], levels[1], rationales
