"""RGB frames, videos as frame sequences, and binary PPM storage."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class FrameImage:
    """8-bit RGB raster stored as an (height, width, 3) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"expected a (height, width, 3) array, got shape {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255) or not np.all(px == np.round(px)):
                raise ValueError("channel values must be integers in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FrameImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    @classmethod
    def filled(cls, width: int, height: int, rgb) -> "FrameImage":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[...] = rgb
        return cls(px)

    def luma(self) -> np.ndarray:
        """Real-valued luma per pixel (0.299 R + 0.587 G + 0.114 B)."""
        return self.pixels.astype(np.float64) @ LUMA


@dataclass(frozen=True)
class VideoFrames:
    video_id: str
    frames: tuple[FrameImage, ...]

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            raise ValueError(f"video {self.video_id!r} has no frames")
        shape = frames[0].pixels.shape
        if any(f.pixels.shape != shape for f in frames):
            raise ValueError(f"video {self.video_id!r} mixes frame sizes")

    def __len__(self) -> int:
        return len(self.frames)


def read_ppm(path) -> FrameImage:
    with Image.open(Path(path)) as im:
        if im.format != "PPM" or im.mode != "RGB":
            raise ValueError(f"{path}: expected a binary RGB PPM, got {im.format}/{im.mode}")
        return FrameImage(np.array(im, dtype=np.uint8))


def write_ppm(path, frame: FrameImage) -> None:
    Image.fromarray(np.asarray(frame.pixels), mode="RGB").save(Path(path), format="PPM")


def read_video_dir(directory, video_id: str | None = None) -> VideoFrames:
    """Load every ``*.ppm`` in ``directory``, ordered by filename."""
    directory = Path(directory)
    files = sorted(directory.glob("*.ppm"))
    if not files:
        raise FileNotFoundError(f"no .ppm frames in {directory}")
    return VideoFrames(video_id or directory.name, tuple(read_ppm(f) for f in files))


def write_video_dir(directory, video: VideoFrames) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(6, len(str(len(video.frames) - 1)))
    paths = []
    for i, frame in enumerate(video.frames):
        p = directory / f"{i:0{width}d}.ppm"
        write_ppm(p, frame)
        paths.append(p)
    return paths


def iter_video_dirs(root) -> list[Path]:
    """Video directories under ``root``; ``root`` itself if it holds frames directly."""
    root = Path(root)
    if any(root.glob("*.ppm")):
        return [root]
    return sorted(d for d in root.iterdir() if d.is_dir() and any(d.glob("*.ppm")))


def frames_equal(a: Sequence[FrameImage], b: Sequence[FrameImage]) -> bool:
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))
