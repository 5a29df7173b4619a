"""Plain CIDEr (no length penalty, no count clipping), scaled to [0, 1000]."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .ngrams import MAX_ORDER, ScoredPair, ngrams

SCALE = 1000.0


@dataclass(frozen=True)
class CiderResult:
    per_video: dict  # video_id -> score in [0, 1000]
    mean: float


def document_frequency(pairs: Sequence[ScoredPair], max_order: int = MAX_ORDER) -> Counter:
    """Number of videos whose reference set contains each n-gram."""
    df: Counter = Counter()
    for pair in pairs:
        seen = set()
        for ref in pair.ref_tokens:
            for n in range(1, max_order + 1):
                seen.update(ngrams(ref, n))
        df.update(seen)
    return df


def tfidf_vectors(tokens: Sequence[str], df: Counter, n_docs: int, max_order: int = MAX_ORDER):
    """One sparse {ngram: weight} dict per order."""
    log_n = math.log(n_docs)
    out = []
    for n in range(1, max_order + 1):
        counts = ngrams(tokens, n)
        total = sum(counts.values())
        vec = {}
        for g, c in counts.items():
            vec[g] = (c / total) * (log_n - math.log(max(df.get(g, 0), 1)))
        out.append(vec)
    return out


def cosine(u: dict, v: dict) -> float:
    nu = math.sqrt(sum(x * x for x in u.values()))
    nv = math.sqrt(sum(x * x for x in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    if len(u) > len(v):
        u, v = v, u
    dot = sum(x * v[g] for g, x in u.items() if g in v)
    # guard against 1 + ulp on identical vectors
    return min(dot / (nu * nv), 1.0)


def cider_pair(pair: ScoredPair, df: Counter, n_docs: int, max_order: int = MAX_ORDER) -> float:
    cand_vecs = tfidf_vectors(pair.cand_tokens, df, n_docs, max_order)
    ref_vecs = [tfidf_vectors(r, df, n_docs, max_order) for r in pair.ref_tokens]
    per_order = []
    for n in range(max_order):
        sims = [cosine(cand_vecs[n], rv[n]) for rv in ref_vecs]
        per_order.append(sum(sims) / len(sims))
    return SCALE * sum(per_order) / max_order


def cider_corpus(pairs: Sequence[ScoredPair]) -> CiderResult:
    """Per-video CIDEr and the corpus mean.

    Document frequencies come from the reference sets of all pairs, one
    document per video, so video ids must be unique.
    """
    if not pairs:
        raise ValueError("cider_corpus needs at least one pair")
    ids = [p.video_id for p in pairs]
    if len(set(ids)) != len(ids):
        raise ValueError("cider_corpus needs one pair per video")
    df = document_frequency(pairs)
    scores = {p.video_id: cider_pair(p, df, len(pairs)) for p in pairs}
    return CiderResult(scores, math.fsum(scores.values()) / len(scores))
