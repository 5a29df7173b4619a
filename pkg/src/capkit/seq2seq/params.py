from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from ..errors import ShapeError
from ..text import EmbeddingTable, Vocabulary


def _check(name, arr, shape):
    if arr.shape != shape:
        raise ShapeError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


@dataclass(frozen=True, eq=False)
class LstmParams:
    """Encoder weights.  W_*: (hidden, input), U_*: (hidden, hidden), b_*: (hidden,)."""

    W_f: np.ndarray
    W_i: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    U_f: np.ndarray
    U_i: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    def __post_init__(self):
        h, d = self.W_f.shape
        for f in fields(self):
            arr = getattr(self, f.name)
            kind = f.name[0]
            shape = {"W": (h, d), "U": (h, h), "b": (h,)}[kind]
            _check(f.name, arr, shape)

    @property
    def input_dim(self) -> int:
        return self.W_f.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W_f.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True, eq=False)
class GruParams:
    """Decoder weights.  W_*: (hidden, input), U_*: (hidden, hidden), b_*: (hidden,)."""

    W_r: np.ndarray
    W_z: np.ndarray
    W_h: np.ndarray
    U_r: np.ndarray
    U_z: np.ndarray
    U_h: np.ndarray
    b_r: np.ndarray
    b_z: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        h, d = self.W_r.shape
        for f in fields(self):
            arr = getattr(self, f.name)
            shape = {"W": (h, d), "U": (h, h), "b": (h,)}[f.name[0]]
            _check(f.name, arr, shape)

    @property
    def input_dim(self) -> int:
        return self.W_r.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W_r.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


LSTM_NAMES = tuple(f.name for f in fields(LstmParams))
GRU_NAMES = tuple(f.name for f in fields(GruParams))


@dataclass(frozen=True, eq=False)
class Seq2SeqParams:
    """Encoder, decoder, output projection W_D (|D|, hidden), frozen embeddings and vocabulary."""

    encoder: LstmParams
    decoder: GruParams
    W_D: np.ndarray
    embeddings: EmbeddingTable
    vocab: Vocabulary

    def __post_init__(self):
        if self.encoder.hidden_dim != self.decoder.hidden_dim:
            raise ShapeError("encoder and decoder hidden sizes differ; the final encoder state seeds the decoder")
        if self.decoder.input_dim != self.embeddings.dim:
            raise ShapeError("decoder input size must equal the embedding size")
        if self.embeddings.vectors.shape[0] != len(self.vocab):
            raise ShapeError("embedding table does not cover the vocabulary")
        _check("W_D", self.W_D, (len(self.vocab), self.decoder.hidden_dim))

    @property
    def hidden_dim(self) -> int:
        return self.encoder.hidden_dim

    @property
    def feature_dim(self) -> int:
        return self.encoder.input_dim

    def trainable(self) -> dict[str, np.ndarray]:
        """Every trained tensor by name: ``enc.*``, ``dec.*`` and ``W_D``."""
        out = {f"enc.{k}": v for k, v in self.encoder.tensors().items()}
        out.update({f"dec.{k}": v for k, v in self.decoder.tensors().items()})
        out["W_D"] = self.W_D
        return out

    def with_trainable(self, tensors: dict[str, np.ndarray]) -> "Seq2SeqParams":
        enc = {k[4:]: v for k, v in tensors.items() if k.startswith("enc.")}
        dec = {k[4:]: v for k, v in tensors.items() if k.startswith("dec.")}
        return replace(
            self,
            encoder=replace(self.encoder, **enc) if enc else self.encoder,
            decoder=replace(self.decoder, **dec) if dec else self.decoder,
            W_D=tensors.get("W_D", self.W_D),
        )

    def astype(self, dtype) -> "Seq2SeqParams":
        """Copy with every trainable tensor and the embeddings cast to ``dtype``."""
        emb = replace(self.embeddings, vectors=self.embeddings.vectors.astype(dtype))
        cast = {k: v.astype(dtype) for k, v in self.trainable().items()}
        return replace(self.with_trainable(cast), embeddings=emb)

    def copy(self) -> "Seq2SeqParams":
        return self.with_trainable({k: v.copy() for k, v in self.trainable().items()})

    def equals(self, other: "Seq2SeqParams") -> bool:
        a, b = self.trainable(), other.trainable()
        return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


def init_params(
    vocab: Vocabulary,
    embeddings: EmbeddingTable,
    feature_dim: int,
    hidden_dim: int,
    seed: int = 0,
) -> Seq2SeqParams:
    """Uniform(-k, k) init, k = 1/sqrt(hidden_dim), tensors drawn in a fixed order."""
    rng = np.random.default_rng(seed)
    k = 1.0 / math.sqrt(hidden_dim)

    def draw(shape):
        return rng.uniform(-k, k, size=shape)

    def block(names, in_dim):
        out = {}
        for n in names:
            shape = {"W": (hidden_dim, in_dim), "U": (hidden_dim, hidden_dim), "b": (hidden_dim,)}[n[0]]
            out[n] = draw(shape)
        return out

    enc = LstmParams(**block(LSTM_NAMES, feature_dim))
    dec = GruParams(**block(GRU_NAMES, embeddings.dim))
    w_d = draw((len(vocab), hidden_dim))
    return Seq2SeqParams(enc, dec, w_d, embeddings, vocab)
