"""Caption-corpus cleansing: error taxonomy, double-checked corrections,
error statistics and a leave-one-caption-out human performance estimate."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptySentence, InsufficientReferences, ValidationError
from .jsonl import read_jsonl, write_jsonl
from .metrics import MetricConfig, MetricReport, ScoredPair, evaluate
from .text import TokenizedSentence, tokenize


class ErrorClass(str, Enum):
    """Annotation labels, listed from harmless to most severe."""

    NONE = "none"
    PROPER_NOUN = "proper_noun"
    SYNTACTIC = "syntactic"
    HALLUCINATION = "hallucination"
    UNSUITABLE = "unsuitable"

    @property
    def severity(self) -> int:
        return list(ErrorClass).index(self)


ERROR_CLASSES = tuple(c for c in ErrorClass if c is not ErrorClass.NONE)


@dataclass(frozen=True)
class CorpusEntry:
    video_id: str
    split: str
    captions: tuple[str, ...]

    @classmethod
    def from_dict(cls, row: dict) -> "CorpusEntry":
        try:
            caps = row["captions"]
            if not isinstance(caps, list) or not all(isinstance(c, str) for c in caps):
                raise ValueError("captions must be a list of strings")
            return cls(str(row["video_id"]), str(row.get("split", "")), tuple(caps))
        except KeyError as exc:
            raise ValueError(f"corpus row missing field {exc}") from None

    def to_dict(self) -> dict:
        return {"video_id": self.video_id, "split": self.split, "captions": list(self.captions)}


def read_corpus(path) -> list[CorpusEntry]:
    entries = [CorpusEntry.from_dict(r) for r in read_jsonl(path)]
    ids = [e.video_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate video ids")
    return entries


def write_corpus(path, corpus) -> None:
    write_jsonl(path, (e.to_dict() for e in corpus))


@dataclass(frozen=True)
class AnnotationRecord:
    video_id: str
    caption_index: int
    error: ErrorClass
    reviewer: str
    correction: str | None = None
    verified_by: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "error", ErrorClass(self.error))
        if not isinstance(self.caption_index, int) or isinstance(self.caption_index, bool) or self.caption_index < 0:
            raise ValueError(f"caption_index must be a nonnegative integer, got {self.caption_index!r}")

    @classmethod
    def from_dict(cls, row: dict) -> "AnnotationRecord":
        try:
            return cls(
                video_id=str(row["video_id"]),
                caption_index=row["caption_index"],
                error=row["error"],
                reviewer=str(row["reviewer"]),
                correction=row.get("correction"),
                verified_by=row.get("verified_by"),
            )
        except KeyError as exc:
            raise ValueError(f"annotation record missing field {exc}") from None

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "caption_index": self.caption_index,
            "error": self.error.value,
            "reviewer": self.reviewer,
            "correction": self.correction,
            "verified_by": self.verified_by,
        }


def read_records(path) -> list[AnnotationRecord]:
    return [AnnotationRecord.from_dict(r) for r in read_jsonl(path)]


@dataclass(frozen=True)
class Violation:
    position: int  # index of the offending record in the input list
    kind: str
    message: str

    def __str__(self):
        return f"record {self.position}: {self.kind}: {self.message}"

    def to_dict(self) -> dict:
        return {"position": self.position, "kind": self.kind, "message": self.message}


def _same_words(a: str, b: str) -> bool:
    try:
        return tokenize(a).tokens == tokenize(b).tokens
    except EmptySentence:
        return a.strip() == b.strip()


def validate_records(records, corpus) -> list[Violation]:
    """Every rule breach, in record order.  Records labelled ``none`` need no correction or check."""
    by_id = {e.video_id: e for e in corpus}
    out: list[Violation] = []
    seen: dict[tuple[str, int], int] = {}
    for pos, rec in enumerate(records):
        entry = by_id.get(rec.video_id)
        if entry is None:
            out.append(Violation(pos, "unknown_video", f"video {rec.video_id!r} not in corpus"))
        elif rec.caption_index >= len(entry.captions):
            out.append(
                Violation(pos, "index_out_of_range", f"{rec.video_id!r} has {len(entry.captions)} captions, index {rec.caption_index}")
            )
        if rec.error is ErrorClass.NONE:
            continue
        key = (rec.video_id, rec.caption_index)
        if key in seen:
            out.append(Violation(pos, "duplicate", f"caption {key} already corrected by record {seen[key]}"))
        else:
            seen[key] = pos
        if rec.correction is None or not rec.correction.strip():
            out.append(Violation(pos, "missing_correction", f"error {rec.error.value!r} needs a correction"))
        elif (
            rec.error is ErrorClass.UNSUITABLE
            and entry is not None
            and rec.caption_index < len(entry.captions)
            and _same_words(rec.correction, entry.captions[rec.caption_index])
        ):
            out.append(Violation(pos, "unsuitable_not_replaced", "replacement equals the original caption"))
        if rec.verified_by is None:
            out.append(Violation(pos, "unverified", "correction was not double checked"))
        elif rec.verified_by == rec.reviewer:
            out.append(Violation(pos, "self_verified", f"{rec.reviewer!r} checked their own correction"))
    return out


def apply_corrections(corpus, records) -> list[CorpusEntry]:
    """Replace every corrected caption; all other captions stay byte-identical.

    Records whose correction is already in place are skipped, which makes a
    second application of the same records a no-op.
    """
    by_id = {e.video_id: e for e in corpus}

    def already_applied(rec):
        entry = by_id.get(rec.video_id)
        return (
            entry is not None
            and rec.caption_index < len(entry.captions)
            and entry.captions[rec.caption_index] == rec.correction
        )

    pending = [r for r in records if r.error is not ErrorClass.NONE and not already_applied(r)]
    violations = validate_records(pending, corpus)
    if violations:
        raise ValidationError(violations)
    fixes: dict[str, dict[int, str]] = {}
    for rec in pending:
        fixes.setdefault(rec.video_id, {})[rec.caption_index] = rec.correction
    out = []
    for entry in corpus:
        patch = fixes.get(entry.video_id)
        if patch:
            caps = tuple(patch.get(i, c) for i, c in enumerate(entry.captions))
            entry = CorpusEntry(entry.video_id, entry.split, caps)
        out.append(entry)
    return out


@dataclass(frozen=True)
class CleanseStats:
    total_captions: int
    error_captions: int
    error_rate: float
    counts: dict[str, int] = field(default_factory=dict)
    breakdown: dict[str, float] = field(default_factory=dict)  # share of error captions per class

    def as_dict(self) -> dict:
        return {
            "total_captions": self.total_captions,
            "error_captions": self.error_captions,
            "error_rate": self.error_rate,
            "counts": dict(self.counts),
            "breakdown": dict(self.breakdown),
        }


def error_stats(records, total_captions: int) -> CleanseStats:
    """Error rate and per-class shares, most severe class first."""
    errors = [r.error for r in records if r.error is not ErrorClass.NONE]
    if total_captions < len(errors) or total_captions < 0:
        raise ValueError(f"total_captions={total_captions} is below the {len(errors)} error records")
    counts = {c.value: errors.count(c) for c in sorted(ERROR_CLASSES, key=lambda c: -c.severity) if c in errors}
    n = len(errors)
    breakdown = {k: v / n for k, v in counts.items()}
    rate = n / total_captions if total_captions else 0.0
    return CleanseStats(total_captions, n, rate, counts, breakdown)


@dataclass(frozen=True)
class HumanPerformance:
    rounds: int
    mean: MetricReport
    std: MetricReport  # population standard deviation over rounds
    per_round: tuple[MetricReport, ...]

    def as_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "mean": self.mean.as_dict(),
            "std": self.std.as_dict(),
            "per_round": [r.as_dict() for r in self.per_round],
        }


def _sentence(raw: str) -> TokenizedSentence:
    try:
        return tokenize(raw)
    except EmptySentence:
        return TokenizedSentence(())


def _round_pairs(corpus, r: int) -> list[ScoredPair]:
    pairs = []
    for e in corpus:
        refs = tuple(_sentence(c) for i, c in enumerate(e.captions) if i != r)
        pairs.append(ScoredPair(e.video_id, _sentence(e.captions[r]), refs))
    return pairs


def human_performance(corpus, rounds: int, config: MetricConfig = MetricConfig(), threads: int = 1) -> HumanPerformance:
    """Score caption r of every video against that video's other captions, for r < rounds.

    Each round is a corpus-level evaluation; the result is the mean and
    population standard deviation of the per-round scores.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus is empty")
    need = max(rounds, 2)  # a candidate needs at least one reference
    for e in corpus:
        if len(e.captions) < need:
            raise InsufficientReferences(e.video_id, len(e.captions), need)

    def run(r):
        return evaluate(_round_pairs(corpus, r), config)

    if threads > 1 and rounds > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run, range(rounds)))  # map keeps round order
    else:
        reports = [run(r) for r in range(rounds)]

    means, stds = {}, {}
    for name in MetricReport.FIELDS:
        vals = [getattr(rep, name) for rep in reports]
        mu = math.fsum(vals) / rounds
        means[name] = mu
        stds[name] = math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / rounds)
    return HumanPerformance(rounds, MetricReport(**means), MetricReport(**stds), tuple(reports))
