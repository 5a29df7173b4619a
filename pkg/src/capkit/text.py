"""Caption preprocessing, vocabulary, and frozen word embeddings."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySentence, MalformedEmbeddingFile, VocabError
from .rng import derive_seed

BOS = "<bos>"
EOS = "<eos>"
DEFAULT_EMBED_DIM = 300


def _is_strippable(ch: str) -> bool:
    # Unicode punctuation (P*) and symbols (S*), apostrophes included.
    return unicodedata.category(ch)[0] in "PS"


def _clean(raw: str) -> list[str]:
    lowered = raw.lower()
    kept = "".join(ch for ch in lowered if not _is_strippable(ch))
    return kept.split()


@dataclass(frozen=True)
class TokenizedSentence:
    tokens: tuple[str, ...]
    tagged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.tagged:
            t = self.tokens
            if len(t) < 2 or t[0] != BOS or t[-1] != EOS:
                raise ValueError("tagged sentence must start with <bos> and end with <eos>")
            if BOS in t[1:] or EOS in t[:-1]:
                raise ValueError("tags may only appear at the sentence boundaries")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    @property
    def words(self) -> tuple[str, ...]:
        """Tokens without the BOS/EOS tags."""
        return self.tokens[1:-1] if self.tagged else self.tokens

    def text(self) -> str:
        return " ".join(self.words)

    def with_tags(self) -> "TokenizedSentence":
        if self.tagged:
            return self
        return TokenizedSentence((BOS, *self.tokens, EOS), tagged=True)


def tokenize(raw: str, attach_tags: bool = False) -> TokenizedSentence:
    """Lowercase, delete punctuation/symbol characters, split on whitespace.

    >>> tokenize("A man, is Running!").tokens
    ('a', 'man', 'is', 'running')
    """
    tokens = _clean(raw)
    if not tokens:
        raise EmptySentence(f"nothing left of {raw!r} after preprocessing")
    sent = TokenizedSentence(tuple(tokens))
    return sent.with_tags() if attach_tags else sent


@dataclass(frozen=True)
class Vocabulary:
    words: tuple[str, ...]
    index: dict = field(compare=False, repr=False)

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Vocabulary":
        words = tuple(words)
        index = {w: i for i, w in enumerate(words)}
        if len(index) != len(words):
            raise ValueError("vocabulary words must be unique")
        if BOS not in index or EOS not in index:
            raise ValueError("vocabulary must contain <bos> and <eos>")
        return cls(words, index)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise VocabError(token) from None

    def ids(self, tokens: Iterable[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    @property
    def bos_id(self) -> int:
        return self.index[BOS]

    @property
    def eos_id(self) -> int:
        return self.index[EOS]


def build_vocab(corpus: Sequence[TokenizedSentence]) -> Vocabulary:
    """Every distinct token gets an id, in first-occurrence order after BOS=0, EOS=1.

    No frequency cutoff is applied.
    """
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    words = {BOS: None, EOS: None}
    for sent in corpus:
        for tok in sent.tokens:
            words.setdefault(tok, None)
    return Vocabulary.from_words(words)


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: np.ndarray  # (len(vocab), dim) float64, read-only
    oov_seed: int
    oov_tokens: tuple[str, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.oov_seed == other.oov_seed
            and self.oov_tokens == other.oov_tokens
            and np.array_equal(self.vectors, other.vectors)
        )

    def __getitem__(self, token_id: int) -> np.ndarray:
        return self.vectors[token_id]


def oov_vector(token: str, dim: int, oov_seed: int) -> np.ndarray:
    """Uniform [-0.5, 0.5) vector drawn from a stream keyed by (oov_seed, token)."""
    rng = np.random.default_rng(derive_seed(oov_seed, token))
    return rng.uniform(-0.5, 0.5, size=dim)


def _read_embedding_file(path: Path, wanted: set[str]) -> tuple[int | None, dict[str, np.ndarray]]:
    dim = None
    found: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise MalformedEmbeddingFile(f"{path}:{lineno}: no vector values")
            elif len(values) != dim:
                raise MalformedEmbeddingFile(
                    f"{path}:{lineno}: expected {dim} values, found {len(values)}"
                )
            if token in wanted and token not in found:
                try:
                    found[token] = np.array([float(v) for v in values], dtype=np.float64)
                except ValueError as exc:
                    raise MalformedEmbeddingFile(f"{path}:{lineno}: {exc}") from None
    return dim, found


def load_embeddings(
    path, vocab: Vocabulary, oov_seed: int, dim: int | None = None
) -> EmbeddingTable:
    """Build the frozen embedding table for ``vocab`` from a GloVe-style text file.

    ``dim`` is inferred from the first line; it is only used when the file is
    empty (or ``path`` is None), in which case every token is out of vocabulary.
    """
    found: dict[str, np.ndarray] = {}
    file_dim = None
    if path is not None:
        file_dim, found = _read_embedding_file(Path(path), set(vocab.words))
    if file_dim is not None:
        if dim is not None and dim != file_dim:
            raise MalformedEmbeddingFile(f"file dimension {file_dim} != requested {dim}")
        dim = file_dim
    if dim is None:
        dim = DEFAULT_EMBED_DIM

    vectors = np.empty((len(vocab), dim), dtype=np.float64)
    oov = []
    for i, word in enumerate(vocab.words):
        if word in found:
            vectors[i] = found[word]
        else:
            vectors[i] = oov_vector(word, dim, oov_seed)
            oov.append(word)
    vectors.setflags(write=False)
    return EmbeddingTable(dim=dim, vectors=vectors, oov_seed=oov_seed, oov_tokens=tuple(oov))
