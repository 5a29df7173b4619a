from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

from ..errors import EmptySentence
from ..jsonl import read_jsonl
from ..text import TokenizedSentence, tokenize
from .bleu import bleu4_corpus
from .cider import cider_corpus
from .meteor import SynonymTable, meteor
from .ngrams import ScoredPair
from .rouge import DEFAULT_BETA, rouge_l


@dataclass(frozen=True)
class MetricConfig:
    smooth_bleu: bool = False
    rouge_beta: float = DEFAULT_BETA
    stemmer: bool = True
    synonyms: SynonymTable | None = None


@dataclass(frozen=True)
class MetricReport:
    bleu4: float
    rouge_l: float
    meteor: float
    cider: float

    FIELDS = ("bleu4", "rouge_l", "meteor", "cider")

    def as_dict(self) -> dict:
        return asdict(self)

    def formatted(self) -> str:
        return " ".join(f"{k}={getattr(self, k):.1f}" for k in self.FIELDS)


def evaluate(pairs: Sequence[ScoredPair], config: MetricConfig | None = None) -> MetricReport:
    """All four metrics for a corpus of pairs.

    BLEU-4 is corpus-level, ROUGE-L and METEOR are means of per-pair
    scores, CIDEr is the corpus mean of per-video scores.
    """
    config = config or MetricConfig()
    if not pairs:
        raise ValueError("evaluate needs at least one pair")
    n = len(pairs)
    return MetricReport(
        bleu4=bleu4_corpus(pairs, config.smooth_bleu),
        rouge_l=math.fsum(rouge_l(p, config.rouge_beta) for p in pairs) / n,
        meteor=math.fsum(meteor(p, config.synonyms, config.stemmer) for p in pairs) / n,
        cider=cider_corpus(pairs).mean,
    )


def load_pairs(cand_path, refs_path) -> list[ScoredPair]:
    """Join a candidates file and a references file on video_id.

    Candidates: ``{"video_id", "caption"}``; references:
    ``{"video_id", "captions": [...]}``.  Pairs follow candidate order.
    """
    refs = {}
    for row in read_jsonl(refs_path):
        refs[str(row["video_id"])] = [tokenize(c) for c in row["captions"]]
    pairs = []
    for row in read_jsonl(cand_path):
        vid = str(row["video_id"])
        if vid not in refs:
            raise ValueError(f"no references for video {vid!r}")
        try:
            cand = tokenize(row["caption"])
        except EmptySentence:
            # decoders may legitimately emit nothing; such a candidate scores zero
            cand = TokenizedSentence(())
        pairs.append(ScoredPair(vid, cand, tuple(refs[vid])))
    return pairs

