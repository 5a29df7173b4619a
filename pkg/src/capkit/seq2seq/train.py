"""Minibatch SGD with validation-METEOR early stopping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError
from ..metrics import MetricConfig, ScoredPair, meteor
from ..text import TokenizedSentence
from .model import DEFAULT_MAX_LEN, batch_loss_and_grads, greedy_decode, sgd_step
from .params import Seq2SeqParams


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    batch_size: int = 64
    patience: int = 10
    seed: int = 0
    max_epochs: int = 1000
    max_len: int = DEFAULT_MAX_LEN
    metrics: MetricConfig = field(default_factory=MetricConfig)

    def __post_init__(self):
        if not (self.lr >= 0 and math.isfinite(self.lr)):
            raise ValueError("lr must be finite and >= 0")
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1 or self.max_len < 1:
            raise ValueError("batch_size, patience, max_epochs and max_len must be positive")


@dataclass(frozen=True)
class EpochLog:
    epoch: int  # 1-based
    loss: float  # mean training loss over the epoch's samples
    val_meteor: float
    improved: bool


def validation_meteor(params: Seq2SeqParams, val, config: TrainConfig) -> float:
    """Corpus-mean METEOR of greedy captions against each video's references."""
    scores = []
    for k, (features, refs) in enumerate(val):
        cand = greedy_decode(params, features, config.max_len)
        vid = getattr(features, "video_id", str(k))
        pair = ScoredPair(vid, cand, tuple(refs))
        scores.append(meteor(pair, config.metrics.synonyms, config.metrics.stemmer))
    return math.fsum(scores) / len(scores)


def sgd_train(
    params: Seq2SeqParams,
    train: list[tuple[object, TokenizedSentence]],
    val: list[tuple[object, list[TokenizedSentence]]],
    config: TrainConfig = TrainConfig(),
) -> tuple[Seq2SeqParams, list[EpochLog]]:
    """Train until validation METEOR fails to improve for ``patience`` epochs.

    Returns the parameters from the epoch with the best validation METEOR
    (earliest on ties) and the per-epoch log.
    """
    if not train:
        raise ValueError("training set is empty")
    if not val:
        raise ValueError("validation set is empty; early stopping needs it")
    rng = np.random.default_rng(config.seed)
    batch = min(config.batch_size, len(train))
    best, best_score, stale = params, -math.inf, 0
    log: list[EpochLog] = []
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train))
        weighted = 0.0
        for start in range(0, len(order), batch):
            samples = [train[j] for j in order[start : start + batch]]
            # non-finite values are caught below and reported as divergence
            with np.errstate(all="ignore"):
                loss, grads = batch_loss_and_grads(params, samples)
            if not math.isfinite(loss):
                raise DivergenceError(epoch, loss)
            try:
                with np.errstate(all="ignore"):
                    params = sgd_step(params, grads, config.lr)
            except ValueError:  # an update overflowed to a non-finite weight
                raise DivergenceError(epoch, loss) from None
            weighted += loss * len(samples)
        score = validation_meteor(params, val, config)
        improved = score > best_score
        if improved:
            best, best_score, stale = params, score, 0
        else:
            stale += 1
        log.append(EpochLog(epoch, weighted / len(train), score, improved))
        if stale >= config.patience:
            break
    return best, log
