"""Atomic claims: single testable assertions derived from a graph or codebook."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass


class ClaimKind(enum.Enum):
    NODE_INSTANTIATION = "NODE_INSTANTIATION"
    EDGE_SUPPORT = "EDGE_SUPPORT"
    ORDER_CONSTRAINT = "ORDER_CONSTRAINT"
    LOOP_CLOSURE = "LOOP_CLOSURE"
    TREND = "TREND"
    RELATION_TYPING = "RELATION_TYPING"
    BOUNDARY_CUE = "BOUNDARY_CUE"


@dataclass(frozen=True)
class Claim:
    kind: ClaimKind
    subject_ids: tuple[str, ...]
    rendered_statement: str
    # distinguishes sub-aspects of one subject (e.g. direction vs mechanism)
    aspect: str = ""

    @property
    def claim_hash(self) -> str:
        payload = "\x1f".join(
            [self.kind.value, *self.subject_ids, self.aspect, self.rendered_statement]
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()
