from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..text import TokenizedSentence, tokenize

MAX_ORDER = 4


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    """Counts of every run of ``n`` consecutive tokens."""
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class NgramProfile:
    """n-gram counts for orders 1..max_order, keyed by token tuple."""

    counts: dict

    @classmethod
    def of(cls, tokens: Sequence[str], max_order: int = MAX_ORDER) -> "NgramProfile":
        counts: Counter = Counter()
        for n in range(1, max_order + 1):
            counts.update(ngrams(tokens, n))
        return cls(dict(counts))

    def order(self, n: int) -> dict:
        return {g: c for g, c in self.counts.items() if len(g) == n}


@dataclass(frozen=True)
class ScoredPair:
    """One candidate caption and its reference captions for a video."""

    video_id: str
    candidate: TokenizedSentence
    references: tuple[TokenizedSentence, ...]

    def __post_init__(self):
        refs = tuple(self.references)
        object.__setattr__(self, "references", refs)
        if not refs:
            raise ValueError(f"pair {self.video_id!r} has no references")
        if self.candidate.tagged or any(r.tagged for r in refs):
            raise ValueError("scored sentences must not carry BOS/EOS tags")

    @classmethod
    def from_text(cls, video_id: str, candidate: str, references: Sequence[str]) -> "ScoredPair":
        return cls(video_id, tokenize(candidate), tuple(tokenize(r) for r in references))

    @property
    def cand_tokens(self) -> tuple[str, ...]:
        return self.candidate.tokens

    @property
    def ref_tokens(self) -> list[tuple[str, ...]]:
        return [r.tokens for r in self.references]
