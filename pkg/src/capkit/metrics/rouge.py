from __future__ import annotations

from typing import Sequence

from .ngrams import ScoredPair

DEFAULT_BETA = 1.2


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence, O(|a|·|b|) DP with one row."""
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l_f(cand: Sequence[str], ref: Sequence[str], beta: float = DEFAULT_BETA) -> float:
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    prec = lcs / len(cand)
    rec = lcs / len(ref)
    b2 = beta * beta
    return (1 + b2) * prec * rec / (rec + b2 * prec)


def rouge_l(pair: ScoredPair, beta: float = DEFAULT_BETA) -> float:
    """ROUGE-L F-measure in [0, 100], best over the pair's references."""
    if not pair.cand_tokens:
        return 0.0
    return 100.0 * max(rouge_l_f(pair.cand_tokens, ref, beta) for ref in pair.ref_tokens)
