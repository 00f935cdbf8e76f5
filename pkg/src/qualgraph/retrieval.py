"""Lexical retrieval over a corpus: BM25 ranking, filters, counterevidence.

Okapi BM25 with k1=1.2, b=0.75, lowercase whitespace/punctuation
tokenization, no stemming. Rankings are deterministic: ties break by
ascending excerpt_id. A dense-vector provider can be registered; scores
then become a convex combination of min-max-normalized BM25 and cosine
similarity (alpha=0 keeps the build lexical-only).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from qualgraph.corpus import Corpus, Excerpt
from qualgraph.errors import EmptyCorpusError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

BM25_K1 = 1.2
BM25_B = 0.75


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RetrievalFilter:
    """Constraints on retrieved excerpts; an empty filter admits all."""

    doc_id: str | None = None
    time_window: tuple[int, int] | None = None
    metadata_equals: dict[str, str] = field(default_factory=dict)

    def admits(self, excerpt: Excerpt) -> bool:
        if self.doc_id is not None and excerpt.doc_id != self.doc_id:
            return False
        if self.time_window is not None:
            if excerpt.time is None:
                return False
            lo, hi = self.time_window
            if not (lo <= excerpt.time.value <= hi):
                return False
        for key, value in self.metadata_equals.items():
            if excerpt.metadata.get(key) != value:
                return False
        return True


class DenseProvider:
    """Interface for pluggable dense retrieval; supplies a vector per text."""

    def embed(self, text: str) -> list[float]:  # pragma: no cover - interface
        raise NotImplementedError


class RetrievalIndex:
    """Immutable-after-build BM25 index over a corpus."""

    def __init__(self, corpus: Corpus, dense_provider: DenseProvider | None = None,
                 alpha: float = 0.0):
        if len(corpus) == 0:
            raise EmptyCorpusError("cannot build a retrieval index over an empty corpus")
        self.corpus = corpus
        self.alpha = alpha
        self._dense = dense_provider
        self._doc_terms: dict[str, Counter] = {}
        self._doc_len: dict[str, int] = {}
        self._df: Counter = Counter()
        for ex in corpus.excerpts:
            terms = Counter(tokenize(ex.text))
            self._doc_terms[ex.excerpt_id] = terms
            self._doc_len[ex.excerpt_id] = sum(terms.values())
            for term in terms:
                self._df[term] += 1
        self._n = len(corpus)
        total_len = sum(self._doc_len.values())
        self._avgdl = total_len / self._n

    def register_dense_provider(self, provider: DenseProvider, alpha: float) -> None:
        self._dense = provider
        self.alpha = alpha

    def idf(self, term: str) -> float:
        df = self._df.get(term, 0)
        return math.log((self._n - df + 0.5) / (df + 0.5) + 1.0)

    def bm25_score(self, query_terms: list[str], excerpt_id: str) -> float:
        terms = self._doc_terms[excerpt_id]
        dl = self._doc_len[excerpt_id]
        score = 0.0
        for term in query_terms:
            tf = terms.get(term, 0)
            if tf == 0:
                continue
            denom = tf + BM25_K1 * (1 - BM25_B + BM25_B * dl / self._avgdl)
            score += self.idf(term) * tf * (BM25_K1 + 1) / denom
        return score

    def contains_any(self, excerpt_id: str, terms: set[str]) -> bool:
        doc_terms = self._doc_terms[excerpt_id]
        return any(t in doc_terms for t in terms)

    def top_idf_terms(self, text: str, n: int = 3) -> set[str]:
        """The n highest-IDF distinct terms of a text (ties lexicographic)."""
        terms = sorted(set(tokenize(text)), key=lambda t: (-self.idf(t), t))
        return set(terms[:n])


def build_index(corpus: Corpus, dense_provider: DenseProvider | None = None,
                alpha: float = 0.0) -> RetrievalIndex:
    return RetrievalIndex(corpus, dense_provider=dense_provider, alpha=alpha)


def _cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def retrieve_top_k(index: RetrievalIndex, query: str, k: int,
                   filter: RetrievalFilter | None = None) -> list[tuple[Excerpt, float]]:
    """Top-k excerpts by score, descending; ties by ascending excerpt_id."""
    if k <= 0:
        return []
    filt = filter or RetrievalFilter()
    query_terms = tokenize(query)
    candidates = [ex for ex in index.corpus.excerpts if filt.admits(ex)]
    lexical = {ex.excerpt_id: index.bm25_score(query_terms, ex.excerpt_id)
               for ex in candidates}
    if index._dense is not None and index.alpha > 0.0:
        lo = min(lexical.values(), default=0.0)
        hi = max(lexical.values(), default=0.0)
        span = hi - lo
        qvec = index._dense.embed(query)
        scores = {}
        for ex in candidates:
            norm_lex = (lexical[ex.excerpt_id] - lo) / span if span > 0 else 0.0
            dense = _cosine(qvec, index._dense.embed(ex.text))
            scores[ex.excerpt_id] = (1 - index.alpha) * norm_lex + index.alpha * dense
    else:
        scores = lexical
    ranked = sorted(candidates, key=lambda ex: (-scores[ex.excerpt_id], ex.excerpt_id))
    return [(ex, scores[ex.excerpt_id]) for ex in ranked[:k]]


def retrieve_counterevidence(index: RetrievalIndex, node_a_query: str,
                             node_b_query: str, directed: bool = True,
                             top_terms: int = 3) -> list[Excerpt]:
    """Excerpts that cut against an a->b relation.

    "Matches" means lexical containment of any of the top-IDF query
    terms. Returns a-without-b excerpts plus, when directed, both sides
    of every within-document pair where a b-match precedes an a-match in
    time order. Deduplicated, ordered by excerpt_id.
    """
    a_terms = index.top_idf_terms(node_a_query, top_terms)
    b_terms = index.top_idf_terms(node_b_query, top_terms)
    result_ids: set[str] = set()
    a_matches: dict[str, list[Excerpt]] = {}
    b_matches: dict[str, list[Excerpt]] = {}
    for ex in index.corpus.excerpts:
        has_a = index.contains_any(ex.excerpt_id, a_terms)
        has_b = index.contains_any(ex.excerpt_id, b_terms)
        if has_a and not has_b:
            result_ids.add(ex.excerpt_id)
        if has_a:
            a_matches.setdefault(ex.doc_id, []).append(ex)
        if has_b:
            b_matches.setdefault(ex.doc_id, []).append(ex)

    if directed:
        positions = {
            eid: pos
            for doc, ids in index.corpus.doc_index.items()
            for pos, eid in enumerate(ids)
        }

        def order_key(ex: Excerpt):
            return ex.time.value if ex.time is not None else positions[ex.excerpt_id]

        for doc_id, bs in b_matches.items():
            for xa in a_matches.get(doc_id, []):
                for xb in bs:
                    if xb.excerpt_id != xa.excerpt_id and order_key(xb) < order_key(xa):
                        result_ids.add(xb.excerpt_id)
                        result_ids.add(xa.excerpt_id)
    return [index.corpus.get(eid) for eid in sorted(result_ids)]
