"""Frame sampling, feature tensors on disk, and a deterministic stub extractor.

The stub stands in for the pretrained ConvNets so that training, decoding
and t-SNE can run hermetically.  Real features (e.g. 2048-d ResNet50 +
4096-d C3D per sampled frame) enter through :func:`read_features`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedTensorFile
from .frames import FrameImage, VideoFrames

MAGIC = b"FTEN"
_HEADER = struct.Struct("<4sII")
DEFAULT_STRIDE = 5
FEATURE_SUFFIX = ".ften"


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    video_id: str
    vectors: np.ndarray  # (n_vectors, dim)

    def __post_init__(self):
        v = np.asarray(self.vectors)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"feature sequence needs shape (n >= 1, dim >= 1), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FeatureSequence):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.vectors.shape == other.vectors.shape
            and np.array_equal(self.vectors, other.vectors)
        )


def sample_frame_indices(n_frames: int, stride: int = DEFAULT_STRIDE) -> list[int]:
    """Indices 0, stride, 2*stride, ... below ``n_frames``."""
    if n_frames < 1 or stride < 1:
        raise ValueError("n_frames and stride must be positive")
    return list(range(0, n_frames, stride))


def _channel_levels(bins: int) -> tuple[int, int, int]:
    """Split ``bins`` into per-channel quantization levels whose product is ``bins``.

    Prime factors are handed out largest first to the channel with the
    fewest levels so far (ties go to R, then G, then B).
    """
    factors = []
    n, p = bins, 2
    while p * p <= n:
        while n % p == 0:
            factors.append(p)
            n //= p
        p += 1
    if n > 1:
        factors.append(n)
    levels = [1, 1, 1]
    for f in sorted(factors, reverse=True):
        k = levels.index(min(levels))
        levels[k] *= f
    return tuple(levels)


def color_histogram(pixels: np.ndarray, bins: int) -> np.ndarray:
    """Joint RGB histogram with ``bins`` cells; bin 0 holds the darkest colours."""
    qr, qg, qb = _channel_levels(bins)
    px = pixels.reshape(-1, 3).astype(np.int64)
    r = px[:, 0] * qr // 256
    g = px[:, 1] * qg // 256
    b = px[:, 2] * qb // 256
    idx = (r * qg + g) * qb + b
    return np.bincount(idx, minlength=bins).astype(np.float64)


def frame_descriptor(frame: FrameImage, dim: int) -> np.ndarray:
    """2x2 grid of per-cell colour histograms, each L2-normalized, concatenated."""
    bins = dim // 4
    h, w = frame.height, frame.width
    rows = (slice(0, h // 2), slice(h // 2, h))
    cols = (slice(0, w // 2), slice(w // 2, w))
    parts = []
    for rs in rows:
        for cs in cols:
            cell = frame.pixels[rs, cs]
            hist = color_histogram(cell, bins) if cell.size else np.zeros(bins)
            norm = np.linalg.norm(hist)
            parts.append(hist / norm if norm > 0 else hist)
    return np.concatenate(parts)


def stub_extract(video: VideoFrames, stride: int = DEFAULT_STRIDE, dim: int = 64) -> FeatureSequence:
    if dim < 8 or dim % 4:
        raise ValueError("stub feature dim must be >= 8 and divisible by 4")
    idx = sample_frame_indices(len(video.frames), stride)
    vecs = np.stack([frame_descriptor(video.frames[i], dim) for i in idx])
    return FeatureSequence(video.video_id, vecs)


def write_features(path, seq: FeatureSequence) -> None:
    """Write ``seq`` as an FTEN file (float32 little-endian, row-major)."""
    data = np.ascontiguousarray(seq.vectors, dtype="<f4")
    n, dim = data.shape
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, dim))
        fh.write(data.tobytes())


def read_features(path, video_id: str | None = None) -> FeatureSequence:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise MalformedTensorFile(f"{path}: truncated header")
    magic, n, dim = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MalformedTensorFile(f"{path}: bad magic {magic!r}")
    if n == 0 or dim == 0:
        raise MalformedTensorFile(f"{path}: empty tensor ({n} x {dim})")
    expected = _HEADER.size + 4 * n * dim
    if len(raw) != expected:
        raise MalformedTensorFile(f"{path}: expected {expected} bytes, found {len(raw)}")
    vecs = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, dim).astype(np.float32)
    try:
        return FeatureSequence(video_id or path.stem, vecs)
    except ValueError as exc:
        raise MalformedTensorFile(f"{path}: {exc}") from None


def read_feature_dir(directory) -> dict[str, FeatureSequence]:
    """All ``*.ften`` files in ``directory`` keyed by video id (file stem)."""
    files = sorted(Path(directory).glob(f"*{FEATURE_SUFFIX}"))
    if not files:
        raise FileNotFoundError(f"no {FEATURE_SUFFIX} files in {directory}")
    return {f.stem: read_features(f) for f in files}
