"""LSTM encoder, GRU decoder, softmax word model, loss, gradients and greedy decoding.

Every routine computes in the dtype of the parameter arrays, so the same
code evaluates in float64 for training and in ``np.longdouble`` for
finite-difference checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..features import FeatureSequence
from ..text import BOS, EOS, TokenizedSentence
from .params import GruParams, LstmParams, Seq2SeqParams

DEFAULT_MAX_LEN = 30


@dataclass(frozen=True, eq=False)
class EncoderState:
    c: np.ndarray
    h: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int, dtype=np.float64) -> "EncoderState":
        return cls(np.zeros(hidden_dim, dtype), np.zeros(hidden_dim, dtype))


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form avoids overflow in exp for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def _vec(x, dim: int, what: str) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (dim,):
        raise ShapeError(f"{what}: expected shape ({dim},), got {x.shape}")
    return x


def _lstm_gates(p: LstmParams, x, h_prev):
    f = sigmoid(p.W_f @ x + p.U_f @ h_prev + p.b_f)
    i = sigmoid(p.W_i @ x + p.U_i @ h_prev + p.b_i)
    o = sigmoid(p.W_o @ x + p.U_o @ h_prev + p.b_o)
    c_tilde = np.tanh(p.W_c @ x + p.U_c @ h_prev + p.b_c)
    return f, i, o, c_tilde


def lstm_step(params: LstmParams, x, prev: EncoderState) -> EncoderState:
    x = _vec(x, params.input_dim, "encoder input")
    h_prev = _vec(prev.h, params.hidden_dim, "encoder h")
    c_prev = _vec(prev.c, params.hidden_dim, "encoder c")
    f, i, o, c_tilde = _lstm_gates(params, x, h_prev)
    c = f * c_prev + i * c_tilde
    return EncoderState(c, o * np.tanh(c))


def _gru_parts(p: GruParams, y, h_prev):
    r = sigmoid(p.W_r @ y + p.U_r @ h_prev + p.b_r)
    z = sigmoid(p.W_z @ y + p.U_z @ h_prev + p.b_z)
    h_tilde = np.tanh(p.W_h @ y + p.U_h @ (r * h_prev) + p.b_h)
    return r, z, h_tilde


def gru_step(params: GruParams, y, h_prev) -> np.ndarray:
    y = _vec(y, params.input_dim, "decoder input")
    h_prev = _vec(h_prev, params.hidden_dim, "decoder h")
    r, z, h_tilde = _gru_parts(params, y, h_prev)
    return (1.0 - z) * h_prev + z * h_tilde


def _features(params: Seq2SeqParams, features) -> np.ndarray:
    x = features.vectors if isinstance(features, FeatureSequence) else np.asarray(features)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] != params.feature_dim:
        raise ShapeError(f"features: expected shape (n >= 1, {params.feature_dim}), got {x.shape}")
    return x.astype(params.W_D.dtype, copy=False)


def encode(params: Seq2SeqParams, features) -> np.ndarray:
    """Run the encoder over every frame vector and return v = h_N."""
    x = _features(params, features)
    state = EncoderState.zeros(params.hidden_dim, params.W_D.dtype)
    for x_n in x:
        state = lstm_step(params.encoder, x_n, state)
    return state.h


@dataclass
class ForwardCache:
    """Everything :func:`backward` needs; one entry per time step."""

    x: np.ndarray
    enc: list  # (h_prev, c_prev, f, i, o, c_tilde, c)
    inputs: np.ndarray  # decoder input token ids
    targets: np.ndarray  # predicted token ids
    dec: list  # (h_prev, r, z, h_tilde, h, probs)


def _target_ids(params: Seq2SeqParams, target: TokenizedSentence) -> list[int]:
    if not target.tagged:
        raise ValueError("target caption must be tagged with <bos>/<eos>")
    return params.vocab.ids(target.tokens)


def forward_loss(params: Seq2SeqParams, features, target: TokenizedSentence) -> tuple[float, ForwardCache]:
    """Mean negative log-likelihood of the target words under teacher forcing.

    The decoder reads ``target[0..L-1]`` and predicts ``target[1..L]``; the
    final ``<eos>`` prediction is counted among the L terms.
    """
    ids = _target_ids(params, target)
    x = _features(params, features)
    enc_p, dec_p = params.encoder, params.decoder
    dtype = params.W_D.dtype

    h = np.zeros(params.hidden_dim, dtype)
    c = np.zeros(params.hidden_dim, dtype)
    enc = []
    for x_n in x:
        f, i, o, c_tilde = _lstm_gates(enc_p, x_n, h)
        c_new = f * c + i * c_tilde
        enc.append((h, c, f, i, o, c_tilde, c_new))
        c = c_new
        h = o * np.tanh(c)

    emb = params.embeddings.vectors
    inputs, targets = np.array(ids[:-1]), np.array(ids[1:])
    dec = []
    loss = dtype.type(0)
    for tok_in, tok_out in zip(inputs, targets):
        y = emb[tok_in].astype(dtype, copy=False)
        r, z, h_tilde = _gru_parts(dec_p, y, h)
        h_new = (1.0 - z) * h + z * h_tilde
        probs = softmax(params.W_D @ h_new)
        dec.append((h, r, z, h_tilde, h_new, probs))
        loss -= np.log(probs[tok_out])
        h = h_new
    loss = loss / len(targets)
    return loss, ForwardCache(x, enc, inputs, targets, dec)


def zero_grads(params: Seq2SeqParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.trainable().items()}


def backward(params: Seq2SeqParams, cache: ForwardCache) -> dict[str, np.ndarray]:
    """Analytic gradients of the mean loss, by backpropagation through time."""
    g = zero_grads(params)
    ep, dp = params.encoder, params.decoder
    emb = params.embeddings.vectors
    dtype = params.W_D.dtype
    n_pred = len(cache.targets)

    dh = np.zeros(params.hidden_dim, dtype)
    for step in range(n_pred - 1, -1, -1):
        h_prev, r, z, h_tilde, h, probs = cache.dec[step]
        y = emb[cache.inputs[step]].astype(dtype, copy=False)
        dlogits = probs.copy()
        dlogits[cache.targets[step]] -= 1.0
        dlogits /= n_pred
        g["W_D"] += np.outer(dlogits, h)
        dh = dh + params.W_D.T @ dlogits

        dz = dh * (h_tilde - h_prev)
        da_h = dh * z * (1.0 - h_tilde**2)
        dh_prev = dh * (1.0 - z)
        rh = r * h_prev
        g["dec.W_h"] += np.outer(da_h, y)
        g["dec.U_h"] += np.outer(da_h, rh)
        g["dec.b_h"] += da_h
        d_rh = dp.U_h.T @ da_h
        da_r = d_rh * h_prev * r * (1.0 - r)
        dh_prev += d_rh * r
        da_z = dz * z * (1.0 - z)
        for gate, da in (("r", da_r), ("z", da_z)):
            g[f"dec.W_{gate}"] += np.outer(da, y)
            g[f"dec.U_{gate}"] += np.outer(da, h_prev)
            g[f"dec.b_{gate}"] += da
        dh = dh_prev + dp.U_r.T @ da_r + dp.U_z.T @ da_z

    # v = h^e_N seeds the decoder; no gradient flows into the final cell state
    dc = np.zeros(params.hidden_dim, dtype)
    for step in range(len(cache.enc) - 1, -1, -1):
        h_prev, c_prev, f, i, o, c_tilde, c = cache.enc[step]
        x = cache.x[step]
        tc = np.tanh(c)
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc**2)
        da = {
            "f": dc * c_prev * f * (1.0 - f),
            "i": dc * c_tilde * i * (1.0 - i),
            "o": do * o * (1.0 - o),
            "c": dc * i * (1.0 - c_tilde**2),
        }
        dh = np.zeros_like(dh)
        for gate, d in da.items():
            g[f"enc.W_{gate}"] += np.outer(d, x)
            g[f"enc.U_{gate}"] += np.outer(d, h_prev)
            g[f"enc.b_{gate}"] += d
            dh += getattr(ep, f"U_{gate}").T @ d
        dc = dc * f
    return g


def batch_loss_and_grads(params: Seq2SeqParams, samples) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss and mean gradients over ``samples`` of (features, tagged caption).

    Per-sample gradients are summed in sample order so the result does not
    depend on how the work is scheduled.
    """
    if not samples:
        raise ValueError("empty batch")
    total = zero_grads(params)
    losses = []
    for features, caption in samples:
        loss, cache = forward_loss(params, features, caption)
        losses.append(loss)
        for k, v in backward(params, cache).items():
            total[k] += v
    n = len(samples)
    return float(np.mean(losses)), {k: v / n for k, v in total.items()}


def sgd_step(params: Seq2SeqParams, grads: dict[str, np.ndarray], lr: float) -> Seq2SeqParams:
    if lr == 0:
        return params
    return params.with_trainable({k: v - lr * grads[k] for k, v in params.trainable().items()})


def greedy_decode_ids(params: Seq2SeqParams, features, max_len: int = DEFAULT_MAX_LEN) -> list[int]:
    """Raw argmax ids, at most ``max_len`` of them, ending early after ``<eos>``.

    ``np.argmax`` returns the first maximum, so ties go to the smallest id.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    h = encode(params, features)
    emb = params.embeddings.vectors
    eos = params.vocab.eos_id
    tok = params.vocab.bos_id
    out = []
    for _ in range(max_len):
        y = emb[tok].astype(h.dtype, copy=False)
        h = gru_step(params.decoder, y, h)
        tok = int(np.argmax(params.W_D @ h))
        out.append(tok)
        if tok == eos:
            break
    return out


def greedy_decode(params: Seq2SeqParams, features, max_len: int = DEFAULT_MAX_LEN) -> TokenizedSentence:
    """Greedy caption with ``<bos>``/``<eos>`` markers removed."""
    words = [params.vocab.words[i] for i in greedy_decode_ids(params, features, max_len)]
    return TokenizedSentence(tuple(w for w in words if w not in (BOS, EOS)))
