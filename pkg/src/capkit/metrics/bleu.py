"""Corpus-level BLEU-4 with modified (clipped) n-gram precision."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .ngrams import MAX_ORDER, ScoredPair, ngrams


@dataclass(frozen=True)
class BleuStats:
    matches: tuple[int, ...]  # clipped n-gram hits per order
    totals: tuple[int, ...]  # candidate n-grams per order
    cand_len: int
    ref_len: int


def closest_ref_length(cand_len: int, ref_lens: Sequence[int]) -> int:
    # ties resolve to the shorter reference
    return min(ref_lens, key=lambda r: (abs(r - cand_len), r))


def clipped_counts(cand: Sequence[str], refs: Sequence[Sequence[str]], n: int) -> tuple[int, int]:
    """(clipped matches, candidate total) for order ``n`` of a single pair."""
    cand_counts = ngrams(cand, n)
    max_ref: Counter = Counter()
    for ref in refs:
        for g, c in ngrams(ref, n).items():
            if c > max_ref[g]:
                max_ref[g] = c
    hits = sum(min(c, max_ref[g]) for g, c in cand_counts.items())
    return hits, sum(cand_counts.values())


def corpus_stats(pairs: Sequence[ScoredPair], max_order: int = MAX_ORDER) -> BleuStats:
    matches = [0] * max_order
    totals = [0] * max_order
    c = r = 0
    for pair in pairs:
        cand, refs = pair.cand_tokens, pair.ref_tokens
        for n in range(1, max_order + 1):
            hit, tot = clipped_counts(cand, refs, n)
            matches[n - 1] += hit
            totals[n - 1] += tot
        c += len(cand)
        r += closest_ref_length(len(cand), [len(x) for x in refs])
    return BleuStats(tuple(matches), tuple(totals), c, r)


def bleu_from_stats(stats: BleuStats, smoothing: bool = False) -> float:
    if stats.cand_len == 0:
        return 0.0
    log_sum = 0.0
    for hit, tot in zip(stats.matches, stats.totals):
        if hit > 0:
            p = hit / tot
        elif smoothing:
            p = 1.0 / (2.0 * max(tot, 1))
        else:
            return 0.0
        log_sum += math.log(p)
    order = len(stats.matches)
    if stats.cand_len <= stats.ref_len:
        bp = math.exp(1.0 - stats.ref_len / stats.cand_len)
    else:
        bp = 1.0
    return 100.0 * bp * math.exp(log_sum / order)


def bleu4_corpus(pairs: Sequence[ScoredPair], smoothing: bool = False) -> float:
    """BLEU-4 over the whole corpus, scaled to [0, 100].

    Precisions and lengths are summed over all pairs before the geometric
    mean and brevity penalty are taken.
    """
    if not pairs:
        raise ValueError("bleu4_corpus needs at least one pair")
    return bleu_from_stats(corpus_stats(pairs), smoothing)


def bleu4_sentence(pair: ScoredPair, smoothing: bool = True) -> float:
    return bleu4_corpus([pair], smoothing)
