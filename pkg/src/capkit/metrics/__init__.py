"""Caption metrics: BLEU-4, ROUGE-L, METEOR and CIDEr, reported on a 0-100 scale (CIDEr 0-1000)."""

from .bleu import bleu4_corpus, bleu4_sentence
from .cider import CiderResult, cider_corpus
from .meteor import SynonymTable, meteor
from .ngrams import NgramProfile, ScoredPair
from .report import MetricConfig, MetricReport, evaluate, load_pairs
from .rouge import rouge_l

__all__ = [
    "CiderResult",
    "MetricConfig",
    "MetricReport",
    "NgramProfile",
    "ScoredPair",
    "SynonymTable",
    "bleu4_corpus",
    "bleu4_sentence",
    "cider_corpus",
    "evaluate",
    "load_pairs",
    "meteor",
    "rouge_l",
]
