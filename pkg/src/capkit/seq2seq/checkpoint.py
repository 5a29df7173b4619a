"""Binary model checkpoints.

Layout (all integers u32 little-endian)::

    b"S2S1"
    n_words, then per word: byte length, UTF-8 bytes
    n_tensors, then per tensor: name length, name, ndim, dims..., float64 LE data
    metadata length, metadata JSON

Tensors are the trainable ``enc.*``/``dec.*``/``W_D`` arrays plus the frozen
``embeddings`` table.  The trailing JSON keeps the OOV seed and OOV token
list so a reloaded embedding table compares equal to the saved one.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import MalformedCheckpoint
from ..text import EmbeddingTable, Vocabulary
from .params import GRU_NAMES, LSTM_NAMES, GruParams, LstmParams, Seq2SeqParams

MAGIC = b"S2S1"
_U32 = struct.Struct("<I")


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return _U32.pack(len(raw)) + raw


def save_checkpoint(path, params: Seq2SeqParams) -> None:
    tensors = dict(params.trainable())
    tensors["embeddings"] = params.embeddings.vectors
    parts = [MAGIC, _U32.pack(len(params.vocab))]
    parts += [_pack_str(w) for w in params.vocab.words]
    parts.append(_U32.pack(len(tensors)))
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f8")
        parts.append(_pack_str(name))
        parts.append(_U32.pack(data.ndim))
        parts += [_U32.pack(d) for d in data.shape]
        parts.append(data.tobytes())
    meta = {"oov_seed": params.embeddings.oov_seed, "oov_tokens": list(params.embeddings.oov_tokens)}
    parts.append(_pack_str(json.dumps(meta, sort_keys=True)))
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw, self.pos, self.path = raw, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise MalformedCheckpoint(f"{self.path}: truncated at byte {self.pos}")
        out = self.raw[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def text(self) -> str:
        try:
            return self.take(self.u32()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedCheckpoint(f"{self.path}: bad UTF-8 ({exc})") from None


def load_checkpoint(path) -> Seq2SeqParams:
    r = _Reader(Path(path).read_bytes(), path)
    if r.take(4) != MAGIC:
        raise MalformedCheckpoint(f"{path}: not an S2S1 checkpoint")
    words = [r.text() for _ in range(r.u32())]
    tensors = {}
    for _ in range(r.u32()):
        name = r.text()
        dims = tuple(r.u32() for _ in range(r.u32()))
        count = int(np.prod(dims, dtype=np.int64))
        tensors[name] = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(dims).astype(np.float64)
    try:
        meta = json.loads(r.text())
    except json.JSONDecodeError as exc:
        raise MalformedCheckpoint(f"{path}: bad metadata ({exc})") from None
    if r.pos != len(r.raw):
        raise MalformedCheckpoint(f"{path}: {len(r.raw) - r.pos} trailing bytes")

    expected = {f"enc.{n}" for n in LSTM_NAMES} | {f"dec.{n}" for n in GRU_NAMES} | {"W_D", "embeddings"}
    if set(tensors) != expected:
        raise MalformedCheckpoint(f"{path}: tensor set mismatch: {sorted(set(tensors) ^ expected)}")
    try:
        vocab = Vocabulary.from_words(words)
        vectors = tensors["embeddings"]
        vectors.flags.writeable = False
        emb = EmbeddingTable(vectors.shape[1], vectors, int(meta["oov_seed"]), tuple(meta["oov_tokens"]))
        enc = LstmParams(**{n: tensors[f"enc.{n}"] for n in LSTM_NAMES})
        dec = GruParams(**{n: tensors[f"dec.{n}"] for n in GRU_NAMES})
        return Seq2SeqParams(enc, dec, tensors["W_D"], emb, vocab)
    except (ValueError, KeyError, IndexError) as exc:
        raise MalformedCheckpoint(f"{path}: {exc}") from None
