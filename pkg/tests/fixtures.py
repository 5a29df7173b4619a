"""Shared builders for the unit tests and the acceptance suite."""

import numpy as np

from capkit.features import stub_extract
from capkit.frames import FrameImage, VideoFrames
from capkit.seq2seq import init_params
from capkit.text import build_vocab, load_embeddings, tokenize

MEMO_CAPTIONS = [
    "a man is playing a guitar",
    "a woman is slicing an onion",
    "a cat is jumping",
    "two dogs are running on the grass",
    "a boy rides a bike",
]
_BASE_COLOURS = [(200, 30, 30), (30, 200, 30), (30, 30, 200), (200, 200, 30), (30, 200, 200)]


def synthetic_video(k: int, rng, n_frames: int = 10, size: int = 8) -> VideoFrames:
    """Frames jittered around a colour unique to video ``k``."""
    base = np.array(_BASE_COLOURS[k % len(_BASE_COLOURS)])
    frames = []
    for _ in range(n_frames):
        px = np.clip(base + rng.integers(-25, 26, (size, size, 3)), 0, 255).astype(np.uint8)
        frames.append(FrameImage(px))
    return VideoFrames(f"v{k}", tuple(frames))


def memorization_setup(dim: int = 32, seed: int = 0):
    rng = np.random.default_rng(7)
    feats = [stub_extract(synthetic_video(k, rng), dim=dim) for k in range(len(MEMO_CAPTIONS))]
    tagged = [tokenize(c, attach_tags=True) for c in MEMO_CAPTIONS]
    vocab = build_vocab(tagged)
    emb = load_embeddings(None, vocab, oov_seed=1, dim=dim)
    params = init_params(vocab, emb, feature_dim=dim, hidden_dim=dim, seed=seed)
    train = list(zip(feats, tagged))
    val = [(f, [tokenize(c)]) for f, c in zip(feats, MEMO_CAPTIONS)]
    return params, train, val


def tiny_model(seed: int, feature_dim=4, hidden=5, embed=3, words=("red", "cat", "runs", "fast")):
    rng = np.random.default_rng(seed)
    vocab = build_vocab([tokenize(" ".join(words), attach_tags=True)])
    emb = load_embeddings(None, vocab, oov_seed=seed, dim=embed)
    params = init_params(vocab, emb, feature_dim, hidden, seed=seed)
    # scale up so gates leave the linear regime
    params = params.with_trainable({k: 2.0 * v for k, v in params.trainable().items()})
    return params, rng


def finite_difference_grads(params, features, target, h=1e-4):
    """Central differences of the loss evaluated in extended precision."""
    from capkit.seq2seq import forward_loss

    wide = params.astype(np.longdouble)
    feats = np.asarray(features, dtype=np.longdouble)
    out = {}
    for name, arr in wide.trainable().items():
        grad = np.zeros(arr.shape, dtype=np.float64)
        for idx in np.ndindex(arr.shape):
            plus, minus = arr.copy(), arr.copy()
            plus[idx] += h
            minus[idx] -= h
            lp, _ = forward_loss(wide.with_trainable({name: plus}), feats, target)
            lm, _ = forward_loss(wide.with_trainable({name: minus}), feats, target)
            grad[idx] = float((lp - lm) / (2 * h))
        out[name] = grad
    return out


def max_relative_error(analytic, numeric, floor=1e-8):
    worst = 0.0
    for k in analytic:
        a, n = analytic[k], numeric[k]
        rel = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor)
        worst = max(worst, float(rel.max()))
    return worst


def two_blobs(seed: int = 0, n: int = 20, dim: int = 10, separation: float = 10.0):
    """Two unit-variance Gaussian blobs whose means differ by ``separation`` sigma."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, dim))
    b = rng.normal(size=(n, dim))
    b[:, 0] += separation
    return np.vstack([a, b]), ["original"] * n + ["shifted"] * n
