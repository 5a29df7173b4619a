"""METEOR with exact / Porter-stem / synonym unigram matching.

The alignment for a (candidate, reference) pair is chosen by maximizing,
in order, the number of exact matches, stem matches, and synonym matches,
and then minimizing the number of chunks.  For exact and stem matching the
stage counts are just the per-class minimum counts, so the search only has
to resolve which duplicate occurrences pair up; it is solved exactly by a
memoized DP over candidate positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from nltk.stem.porter import PorterStemmer

from .ngrams import ScoredPair

ALPHA = 0.9  # Fmean = PR / (alpha*P + (1-alpha)*R) = 10PR / (R + 9P)
PENALTY_GAMMA = 0.5
PENALTY_BETA = 3.0

EXACT, STEM, SYNONYM = 0, 1, 2
N_STAGES = 3

_porter = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    return _porter.stem(word)


class SynonymTable:
    """Sets of interchangeable tokens; two tokens match if they share a set."""

    def __init__(self, groups: Iterable[Iterable[str]] = ()):
        self._groups: dict[str, set[int]] = {}
        for gid, group in enumerate(groups):
            for tok in group:
                self._groups.setdefault(tok.lower(), set()).add(gid)

    @classmethod
    def load(cls, path) -> "SynonymTable":
        """One synonym set per line, tokens separated by whitespace; '#' starts a comment."""
        groups = []
        with open(Path(path), "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].split()
                if len(line) > 1:
                    groups.append(line)
        return cls(groups)

    def __len__(self) -> int:
        return len(self._groups)

    def match(self, a: str, b: str) -> bool:
        ga = self._groups.get(a)
        return bool(ga) and not ga.isdisjoint(self._groups.get(b, ()))


def match_stage(a: str, b: str, use_stem: bool = True, synonyms: SynonymTable | None = None):
    """Earliest stage at which tokens ``a`` and ``b`` match, or None."""
    if a == b:
        return EXACT
    if use_stem and stem(a) == stem(b):
        return STEM
    if synonyms is not None and synonyms.match(a, b):
        return SYNONYM
    return None


@dataclass(frozen=True)
class Alignment:
    stage_counts: tuple[int, int, int]
    chunks: int
    pairs: tuple[tuple[int, int], ...]  # (candidate index, reference index), candidate order

    @property
    def matches(self) -> int:
        return sum(self.stage_counts)


def count_chunks(pairs: Sequence[tuple[int, int]]) -> int:
    """Maximal runs adjacent in both sentences, for pairs sorted by candidate index."""
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def align(
    cand: Sequence[str],
    ref: Sequence[str],
    use_stem: bool = True,
    synonyms: SynonymTable | None = None,
) -> Alignment:
    compat = []
    for a in cand:
        row = []
        for j, b in enumerate(ref):
            s = match_stage(a, b, use_stem, synonyms)
            if s is not None:
                row.append((j, s))
        compat.append(tuple(row))

    n = len(cand)
    # remaining[i]: can any position >= i still match something
    remaining = [False] * (n + 1)
    for i in range(n - 1, -1, -1):
        remaining[i] = remaining[i + 1] or bool(compat[i])

    # value tuple: (exact, stem, synonym, links); larger is better lexicographically
    zero = (0, 0, 0, 0)

    @lru_cache(maxsize=None)
    def best(i: int, used: int, prev_j: int):
        if not remaining[i]:
            return zero, ()
        top, top_pairs = best(i + 1, used, -1)
        for j, s in compat[i]:
            if used >> j & 1:
                continue
            sub, sub_pairs = best(i + 1, used | (1 << j), j)
            val = list(sub)
            val[s] += 1
            if prev_j >= 0 and j == prev_j + 1:
                val[3] += 1
            val = tuple(val)
            if val > top:
                top, top_pairs = val, ((i, j),) + sub_pairs
        return top, top_pairs

    value, pairs = best(0, 0, -1)
    best.cache_clear()
    m = value[0] + value[1] + value[2]
    return Alignment(value[:3], m - value[3], pairs)


def meteor_from_counts(matches: int, chunks: int, cand_len: int, ref_len: int) -> float:
    """METEOR in [0, 1] from alignment statistics."""
    if matches == 0:
        return 0.0
    p = matches / cand_len
    r = matches / ref_len
    fmean = p * r / (ALPHA * p + (1 - ALPHA) * r)
    penalty = PENALTY_GAMMA * (chunks / matches) ** PENALTY_BETA
    return fmean * (1.0 - penalty)


def meteor_single(
    cand: Sequence[str],
    ref: Sequence[str],
    use_stem: bool = True,
    synonyms: SynonymTable | None = None,
) -> float:
    if not cand or not ref:
        return 0.0
    a = align(cand, ref, use_stem, synonyms)
    return meteor_from_counts(a.matches, a.chunks, len(cand), len(ref))


def meteor(pair: ScoredPair, synonyms: SynonymTable | None = None, stemmer: bool = True) -> float:
    """METEOR in [0, 100], best over the pair's references."""
    cand = pair.cand_tokens
    return 100.0 * max(meteor_single(cand, ref, stemmer, synonyms) for ref in pair.ref_tokens)
