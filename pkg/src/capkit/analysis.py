"""Exact t-SNE and a nearest-neighbour separation score for altered features.

The separation score asks, for every alteration label, how often a point's
nearest neighbours in the original feature space carry the same label.  A
label whose points cluster apart from the rest shifts the feature
distribution, which is the signal for including that alteration in training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ORIGINAL = "original"
DEFAULT_PERPLEXITY = 30.0
DEFAULT_ITERS = 1000
DEFAULT_LEARNING_RATE = 200.0
EXAGGERATION = 4.0
EXAGGERATION_ITERS = 100
MOMENTUM_SWITCH = 250
PERPLEXITY_TOL = 1e-3
MAX_SEARCH_STEPS = 100
MAX_HALVINGS = 20

INTERPRETATION = (
    "High purity means points with this alteration sit among themselves in feature space: "
    "the alteration shifts the feature distribution, so augmenting training data with it is "
    "likely to matter. Purity near the label's share of the data means it blends in."
)


@dataclass(frozen=True, eq=False)
class LabeledPoints:
    points: np.ndarray  # (N, dim)
    labels: tuple[str, ...]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        labels = tuple(self.labels)
        if pts.ndim != 2 or pts.shape[0] != len(labels):
            raise ValueError("points must be (N, dim) with one label per point")
        if pts.shape[0] < 4:
            raise ValueError("need at least 4 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class Affinities:
    P: np.ndarray  # row-stochastic conditional P(j|i), zero diagonal
    perplexity: np.ndarray  # achieved 2**H per row
    degenerate: np.ndarray  # rows whose neighbour distances are all equal


@dataclass(frozen=True, eq=False)
class Embedding2D:
    coords: np.ndarray  # (N, 2)
    kl_trace: np.ndarray  # KL(p || q) after every iteration


def squared_distances(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def _row_distribution(d: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Gaussian neighbour distribution for distances ``d`` and its entropy in bits."""
    w = np.exp(-beta * (d - d.min()))
    p = w / w.sum()
    nz = p > 0
    entropy = -float(np.sum(p[nz] * np.log2(p[nz])))
    return p, entropy


def _calibrate_row(d: np.ndarray, perplexity: float) -> tuple[np.ndarray, float]:
    """Bisect the precision beta = 1/(2 sigma^2) until 2**H matches ``perplexity``."""
    lo, hi = 0.0, math.inf
    beta = 1.0 / max(float(np.mean(d)), 1e-300)
    best_p, best_perp = None, None
    for _ in range(MAX_SEARCH_STEPS):
        p, h = _row_distribution(d, beta)
        perp = 2.0**h
        if best_perp is None or abs(perp - perplexity) < abs(best_perp - perplexity):
            best_p, best_perp = p, perp
        if abs(perp - perplexity) <= PERPLEXITY_TOL:
            break
        if perp > perplexity:  # too flat: sharpen
            lo = beta
            beta = beta * 2.0 if math.isinf(hi) else 0.5 * (beta + hi)
        else:
            hi = beta
            beta = 0.5 * (beta + lo)
    return best_p, best_perp


def conditional_affinities(points, perplexity: float) -> Affinities:
    x = np.asarray(points, dtype=np.float64)
    n = x.shape[0]
    if not (1.0 < perplexity < n):
        raise ValueError(f"perplexity must lie in (1, N={n})")
    dist = squared_distances(x)
    P = np.zeros((n, n))
    achieved = np.empty(n)
    degenerate = np.zeros(n, dtype=bool)
    for i in range(n):
        d = np.delete(dist[i], i)
        if np.all(d == d[0]):
            # bandwidth has no effect: every neighbour is equally likely
            row, perp = np.full(n - 1, 1.0 / (n - 1)), float(n - 1)
            degenerate[i] = True
        else:
            row, perp = _calibrate_row(d, perplexity)
        P[i, np.arange(n) != i] = row
        achieved[i] = perp
    return Affinities(P, achieved, degenerate)


def joint_affinities(P: np.ndarray) -> np.ndarray:
    return (P + P.T) / (2.0 * P.shape[0])


def _student_weights(y: np.ndarray) -> np.ndarray:
    w = 1.0 / (1.0 + squared_distances(y))
    np.fill_diagonal(w, 0.0)
    return w


def _objective(p_scaled: np.ndarray, plogp: float, y: np.ndarray) -> float:
    """sum a*p log(a*p / q) with q = w / Z; equals KL(p || q) when a = 1."""
    w = _student_weights(y)
    off = ~np.eye(len(y), dtype=bool)
    cross = float(np.sum(p_scaled[off] * np.log(w[off])))
    return plogp - cross + float(p_scaled.sum()) * math.log(w.sum())


def _gradient(p_scaled: np.ndarray, y: np.ndarray) -> np.ndarray:
    w = _student_weights(y)
    q = w / w.sum()
    m = (p_scaled - q) * w
    return 4.0 * (np.sum(m, axis=1)[:, None] * y - m @ y)


def _plogp(p: np.ndarray) -> float:
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz])))


def tsne(
    points,
    perplexity: float = DEFAULT_PERPLEXITY,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
    learning_rate: float = DEFAULT_LEARNING_RATE,
) -> Embedding2D:
    """Exact t-SNE by momentum gradient descent with a backtracking step rule.

    A proposed step that raises the current objective is halved up to 20
    times; if none of those lowers it, the iterate stays put and the
    momentum is cleared.  After the exaggeration phase the objective is the
    KL divergence itself, so the recorded trace cannot increase.
    """
    x = np.asarray(points, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        raise ValueError("t-SNE needs at least 4 points")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    p = joint_affinities(conditional_affinities(x, perplexity).P)
    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(y)
    trace = np.empty(iters)
    for t in range(iters):
        alpha = EXAGGERATION if t < EXAGGERATION_ITERS else 1.0
        momentum = 0.5 if t < MOMENTUM_SWITCH else 0.8
        p_scaled = alpha * p
        plogp = _plogp(p_scaled)
        current = _objective(p_scaled, plogp, y)
        step = momentum * velocity - learning_rate * _gradient(p_scaled, y)
        for _ in range(MAX_HALVINGS + 1):
            if _objective(p_scaled, plogp, y + step) <= current:
                y = y + step
                velocity = step
                break
            step = 0.5 * step
        else:
            velocity = np.zeros_like(y)
        trace[t] = max(_objective(p, _plogp(p), y), 0.0)
    return Embedding2D(y, trace)


def nearest_neighbors(x: np.ndarray, k: int) -> np.ndarray:
    """Indices of each point's ``k`` nearest other points; ties go to the smaller index."""
    n = x.shape[0]
    if not (1 <= k < n):
        raise ValueError(f"k must lie in [1, N={n})")
    d = squared_distances(x)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        order = np.argsort(d[i], kind="stable")
        out[i] = order[order != i][:k]
    return out


def label_purity(x: np.ndarray, labels, k: int) -> dict[str, float]:
    """Per label, the mean fraction of a point's k neighbours sharing its label."""
    labels = np.asarray(labels, dtype=object)
    same = labels[nearest_neighbors(np.asarray(x, dtype=np.float64), k)] == labels[:, None]
    frac = same.mean(axis=1)
    return {lab: float(frac[labels == lab].mean()) for lab in dict.fromkeys(labels.tolist())}


@dataclass(frozen=True)
class SeparationReport:
    k: int
    purity: tuple[tuple[str, float], ...]  # non-original labels, highest first
    note: str = INTERPRETATION

    def as_dict(self) -> dict:
        return {"k": self.k, "purity": [{"label": l, "purity": v} for l, v in self.purity], "note": self.note}


def separation_report(data: LabeledPoints, k: int = 10) -> SeparationReport:
    """Feature-space neighbour purity for every label other than ``original``."""
    purity = label_purity(data.points, data.labels, k)
    ranked = sorted(((l, v) for l, v in purity.items() if l != ORIGINAL), key=lambda lv: (-lv[1], lv[0]))
    return SeparationReport(k, tuple(ranked))


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def render_svg(coords: np.ndarray, labels, size: int = 640, margin: int = 40) -> str:
    """Scatter plot of 2-D ``coords`` coloured by label, with a legend."""
    coords = np.asarray(coords, dtype=np.float64)
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    inner = size - 2 * margin
    px = margin + (coords - lo) / span * inner
    colours = {lab: _PALETTE[i % len(_PALETTE)] for i, lab in enumerate(dict.fromkeys(labels))}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for (x, y), lab in zip(px, labels):
        out.append(f'<circle cx="{x:.2f}" cy="{size - y:.2f}" r="3" fill="{colours[lab]}" fill-opacity="0.8"/>')
    for i, (lab, col) in enumerate(colours.items()):
        y = 16 + 16 * i
        out.append(f'<rect x="8" y="{y - 9}" width="10" height="10" fill="{col}"/>')
        out.append(f'<text x="24" y="{y}" font-family="sans-serif" font-size="12">{_xml_escape(lab)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, coords, labels) -> None:
    Path(path).write_text(render_svg(coords, labels), encoding="utf-8")
