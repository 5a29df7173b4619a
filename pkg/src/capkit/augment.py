"""Appearance alterations for video frames and their severity grids.

Every transform maps an 8-bit frame to an 8-bit frame of the same size.
Real-valued intermediates are rounded half away from zero and clamped to
[0, 255] once per transform, so chained plans stay integer-to-integer.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import ClassVar, Sequence, Union

import numpy as np

from .frames import FrameImage, VideoFrames
from .rng import hash_counters, mix64, uniform01


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_u8(x: np.ndarray) -> np.ndarray:
    return np.clip(round_half_away(x), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------- transforms


def grayscale(img: FrameImage) -> FrameImage:
    y = to_u8(img.luma())
    return FrameImage(np.repeat(y[:, :, None], 3, axis=2))


def vertical_flip(img: FrameImage) -> FrameImage:
    """Upside-down mirror: row order reversed."""
    return FrameImage(img.pixels[::-1])


def brightness(img: FrameImage, factor: float) -> FrameImage:
    if not factor > 0:
        raise ValueError("brightness factor must be positive")
    return FrameImage(to_u8(img.pixels.astype(np.float64) * factor))


def contrast(img: FrameImage, factor: float) -> FrameImage:
    """Scale every channel's distance from the image's mean luma by ``factor``."""
    if not factor > 0:
        raise ValueError("contrast factor must be positive")
    mu = img.luma().mean()
    return FrameImage(to_u8(mu + (img.pixels.astype(np.float64) - mu) * factor))


def gaussian_kernel(rho: int) -> tuple[np.ndarray, int]:
    """Normalized 1-D kernel of length ``rho`` and its anchor tap.

    Weights are sampled at offsets i - (rho-1)/2 with
    sigma = 0.3*((rho-1)/2 - 1) + 0.8.  Tap i is applied to the pixel at
    offset i - anchor, anchor = rho // 2 (equal to (rho-1)/2 for odd rho).
    """
    if rho < 1 or int(rho) != rho:
        raise ValueError("kernel size must be a positive integer")
    rho = int(rho)
    sigma = 0.3 * ((rho - 1) / 2 - 1) + 0.8
    offsets = np.arange(rho) - (rho - 1) / 2
    w = np.exp(-(offsets**2) / (2 * sigma * sigma))
    return w / w.sum(), rho // 2


def _convolve_axis(a: np.ndarray, kernel: np.ndarray, anchor: int, axis: int) -> np.ndarray:
    n = a.shape[axis]
    out = np.zeros(a.shape, dtype=np.float64)
    for i, w in enumerate(kernel):
        idx = np.clip(np.arange(n) + i - anchor, 0, n - 1)  # replicate edges
        out += w * np.take(a, idx, axis=axis)
    return out


def gaussian_blur(img: FrameImage, rho: int) -> FrameImage:
    kernel, anchor = gaussian_kernel(rho)
    if len(kernel) == 1:
        return img
    a = img.pixels.astype(np.float64)
    a = _convolve_axis(a, kernel, anchor, axis=1)
    a = _convolve_axis(a, kernel, anchor, axis=0)
    return FrameImage(to_u8(a))


def keystone_corners(width: int, height: int, ratio) -> np.ndarray:
    """Destination trapezoid (TL, TR, BR, BL) in pixel-centre coordinates."""
    ratio = Fraction(ratio)
    if ratio <= 0:
        raise ValueError("keystone ratio must be positive")
    top, bottom = (1.0, float(1 / ratio)) if ratio >= 1 else (float(ratio), 1.0)
    half = (width - 1) / 2
    cx = half
    ymax = height - 1
    return np.array(
        [
            [cx - top * half, 0.0],
            [cx + top * half, 0.0],
            [cx + bottom * half, ymax],
            [cx - bottom * half, ymax],
        ]
    )


def homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """3x3 projective map (h33 = 1) sending four ``src`` points onto ``dst``."""
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for k, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        a[2 * k] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        a[2 * k + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * k], b[2 * k + 1] = u, v
    h = np.linalg.solve(a, b)
    return np.append(h, 1.0).reshape(3, 3)


def bilinear_sample(px: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    h, w = px.shape[:2]
    u = np.clip(u, 0, w - 1)
    v = np.clip(v, 0, h - 1)
    x0 = np.floor(u).astype(int)
    y0 = np.floor(v).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (u - x0)[..., None]
    fy = (v - y0)[..., None]
    p = px.astype(np.float64)
    top = p[y0, x0] * (1 - fx) + p[y0, x1] * fx
    bot = p[y1, x0] * (1 - fx) + p[y1, x1] * fx
    return top * (1 - fy) + bot * fy


_INSIDE_EPS = 1e-9


def keystone(img: FrameImage, ratio) -> FrameImage:
    """Warp the frame onto a centred trapezoid with top/bottom width ratio ``ratio``.

    Output pixels are inverse-mapped into the source and sampled bilinearly;
    pixels outside the trapezoid are black.  Frames narrower or shorter than
    two pixels have no room for a trapezoid and are returned unchanged.
    """
    w, h = img.width, img.height
    dst = keystone_corners(w, h, ratio)
    if w < 2 or h < 2:
        return img
    src = np.array([[0.0, 0.0], [w - 1.0, 0.0], [w - 1.0, h - 1.0], [0.0, h - 1.0]])
    inv = np.linalg.inv(homography(src, dst))
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    q = inv @ np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)])
    u = (q[0] / q[2]).reshape(h, w)
    v = (q[1] / q[2]).reshape(h, w)
    inside = (
        (u >= -_INSIDE_EPS) & (u <= w - 1 + _INSIDE_EPS) & (v >= -_INSIDE_EPS) & (v <= h - 1 + _INSIDE_EPS)
    )
    out = np.zeros((h, w, 3), dtype=np.uint8)
    out[inside] = to_u8(bilinear_sample(img.pixels, u[inside], v[inside]))
    return FrameImage(out)


def salt_pepper_mask(height: int, width: int, p: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(altered, salt) boolean masks; each pixel's fate depends only on (seed, row, col)."""
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    words = hash_counters(seed, rows, cols)
    altered = uniform01(words) < p
    salt = (mix64(words) >> np.uint64(63)) == 1
    return altered, salt


def salt_pepper(img: FrameImage, p: float, seed: int) -> FrameImage:
    if not 0.0 <= p <= 1.0:
        raise ValueError("salt & pepper probability must lie in [0, 1]")
    altered, salt = salt_pepper_mask(img.height, img.width, p, seed)
    out = img.pixels.copy()
    out[altered & salt] = 255
    out[altered & ~salt] = 0
    return FrameImage(out)


# ---------------------------------------------------------------- plans


@dataclass(frozen=True)
class Grayscale:
    op: ClassVar[str] = "grayscale"

    def __call__(self, img):
        return grayscale(img)

    def params(self):
        return {}


@dataclass(frozen=True)
class VerticalFlip:
    op: ClassVar[str] = "vertical_flip"

    def __call__(self, img):
        return vertical_flip(img)

    def params(self):
        return {}


@dataclass(frozen=True)
class GaussianBlur:
    rho: int
    op: ClassVar[str] = "gaussian_blur"

    def __post_init__(self):
        if int(self.rho) != self.rho or self.rho < 1:
            raise ValueError("rho must be an integer >= 1")

    def __call__(self, img):
        return gaussian_blur(img, self.rho)

    def params(self):
        return {"rho": int(self.rho)}


@dataclass(frozen=True)
class Keystone:
    ratio: Fraction
    op: ClassVar[str] = "keystone"

    def __post_init__(self):
        # floats go through their decimal repr so 0.4 becomes 2/5
        r = Fraction(repr(self.ratio)) if isinstance(self.ratio, float) else Fraction(self.ratio)
        if r <= 0:
            raise ValueError("keystone ratio must be positive")
        object.__setattr__(self, "ratio", r)

    def __call__(self, img):
        return keystone(img, self.ratio)

    def params(self):
        return {"ratio": str(self.ratio)}


@dataclass(frozen=True)
class Brightness:
    factor: float
    op: ClassVar[str] = "brightness"

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("brightness factor must be positive")

    def __call__(self, img):
        return brightness(img, self.factor)

    def params(self):
        return {"factor": self.factor}


@dataclass(frozen=True)
class Contrast:
    factor: float
    op: ClassVar[str] = "contrast"

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("contrast factor must be positive")

    def __call__(self, img):
        return contrast(img, self.factor)

    def params(self):
        return {"factor": self.factor}


@dataclass(frozen=True)
class SaltPepper:
    p: float
    seed: int = 0
    op: ClassVar[str] = "salt_pepper"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    def __call__(self, img):
        return salt_pepper(img, self.p, self.seed)

    def params(self):
        return {"p": self.p, "seed": self.seed}


Transform = Union[Grayscale, VerticalFlip, GaussianBlur, Keystone, Brightness, Contrast, SaltPepper]
_OPS = {cls.op: cls for cls in (Grayscale, VerticalFlip, GaussianBlur, Keystone, Brightness, Contrast, SaltPepper)}


def transform_from_dict(d: dict) -> Transform:
    d = dict(d)
    try:
        cls = _OPS[d.pop("op")]
    except KeyError as exc:
        raise ValueError(f"unknown or missing augmentation op: {exc}") from None
    try:
        return cls(**d)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {cls.op}: {exc}") from None


def transform_to_dict(t: Transform) -> dict:
    return {"op": t.op, **t.params()}


def transform_name(t: Transform) -> str:
    parts = [t.op] + [f"{k}{v}".replace("/", "-") for k, v in t.params().items() if k != "seed"]
    return "_".join(parts)


@dataclass(frozen=True)
class AugmentationPlan:
    transforms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "transforms", tuple(self.transforms))

    def __call__(self, img: FrameImage) -> FrameImage:
        for t in self.transforms:
            img = t(img)
        return img

    def __len__(self):
        return len(self.transforms)

    @property
    def name(self) -> str:
        return "+".join(transform_name(t) for t in self.transforms) or "identity"

    def to_json(self) -> list[dict]:
        return [transform_to_dict(t) for t in self.transforms]

    @classmethod
    def from_json(cls, data: Sequence[dict]) -> "AugmentationPlan":
        if not isinstance(data, list):
            raise ValueError("a plan is a JSON list of transform objects")
        return cls(tuple(transform_from_dict(d) for d in data))

    @classmethod
    def load(cls, path) -> "AugmentationPlan":
        with open(Path(path), "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def dump(self, path) -> None:
        with open(Path(path), "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")


def apply_plan(video: VideoFrames, plan: AugmentationPlan, threads: int = 1) -> VideoFrames:
    """Apply ``plan`` to every frame, preserving frame order."""
    if threads > 1 and len(video.frames) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            frames = tuple(pool.map(plan, video.frames))
    else:
        frames = tuple(plan(f) for f in video.frames)
    return VideoFrames(video.video_id, frames)


# ---------------------------------------------------------------- grids

TRAIN_GRID = {
    "grayscale": [Grayscale()],
    "gaussian_blur": [GaussianBlur(r) for r in (12, 15, 17)],
    "keystone": [Keystone(Fraction(r)) for r in ("5/2", "3", "2/5", "1/3")],
    "brightness": [Brightness(f) for f in (2.0, 0.2)],
    "salt_pepper": [SaltPepper(p) for p in (0.01, 0.05, 0.1)],
}

TEST_ONLY_GRID = {
    "gaussian_blur": [GaussianBlur(r) for r in (5, 7, 10, 20)],
    "keystone": [Keystone(Fraction(r)) for r in ("3/2", "2", "2/3", "1/2")],
    "brightness": [Brightness(f) for f in (5.0, 7.0, 0.5, 0.7)],
    "salt_pepper": [SaltPepper(p) for p in (0.5, 0.7)],
    "contrast": [Contrast(f) for f in (2.0, 0.5)],
    "vertical_flip": [VerticalFlip()],
}

GRIDS = {"train": TRAIN_GRID, "test-only": TEST_ONLY_GRID}


def grid_plans(name: str, seed: int = 0) -> list[AugmentationPlan]:
    """One single-transform plan per severity level of the named grid."""
    try:
        grid = GRIDS[name]
    except KeyError:
        raise ValueError(f"unknown grid {name!r}; choose from {sorted(GRIDS)}") from None
    plans = []
    for transforms in grid.values():
        for t in transforms:
            if isinstance(t, SaltPepper):
                t = SaltPepper(t.p, seed)
            plans.append(AugmentationPlan((t,)))
    return plans
