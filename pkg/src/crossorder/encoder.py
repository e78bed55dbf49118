"""Set encoder: pre-norm multi-head self-attention + feed-forward blocks.

No positional encoding is used, so the encoder is permutation-equivariant
over the input set. Everything is plain numpy in float64 with hand-written
backward passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN_EPS = 1e-5
_GELU_C = np.sqrt(2.0 / np.pi)

BLOCK_KEYS = ("ln1_g", "ln1_b", "wq", "wk", "wv", "wo", "bo", "ln2_g", "ln2_b", "w1", "b1", "w2", "b2")


@dataclass
class EncoderParams:
    width: int
    heads: int
    blocks: list[dict[str, np.ndarray]]

    @property
    def head_dim(self) -> int:
        return self.width // self.heads

    @property
    def ff_width(self) -> int:
        return int(self.blocks[0]["w1"].shape[1]) if self.blocks else 0

    def named_arrays(self, prefix: str = "encoder") -> dict[str, np.ndarray]:
        return {f"{prefix}.{i}.{k}": blk[k] for i, blk in enumerate(self.blocks) for k in BLOCK_KEYS}

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.width, self.heads, [{k: v.copy() for k, v in b.items()} for b in self.blocks])


def init_params(d: int, h: int, seed: int, n_blocks: int = 1, ff_mult: int = 2) -> EncoderParams:
    if h <= 0 or d % h != 0:
        raise ValueError(f"width not divisible by heads (d={d}, h={h})")
    if n_blocks < 0:
        raise ValueError("n_blocks must be >= 0")
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(d)
    f = ff_mult * d
    blocks = []
    for _ in range(n_blocks):
        blocks.append({
            "ln1_g": np.ones(d),
            "ln1_b": np.zeros(d),
            "wq": rng.normal(0.0, scale, (d, d)),
            "wk": rng.normal(0.0, scale, (d, d)),
            "wv": rng.normal(0.0, scale, (d, d)),
            "wo": rng.normal(0.0, scale, (d, d)),
            "bo": np.zeros(d),
            "ln2_g": np.ones(d),
            "ln2_b": np.zeros(d),
            "w1": rng.normal(0.0, scale, (d, f)),
            "b1": np.zeros(f),
            "w2": rng.normal(0.0, scale, (f, d)),
            "b2": np.zeros(d),
        })
    return EncoderParams(d, h, blocks)


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    rstd = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + LN_EPS)
    xhat = xc * rstd
    return xhat * g + b, (xhat, rstd, g)


def _layer_norm_backward(dy, cache):
    xhat, rstd, g = cache
    dg = (dy * xhat).sum(axis=0)
    db = dy.sum(axis=0)
    dxhat = dy * g
    dx = rstd * (dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, dg, db


def _gelu(z):
    t = np.tanh(_GELU_C * (z + 0.044715 * z**3))
    return 0.5 * z * (1.0 + t), t


def _gelu_grad(z, t):
    return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * z * z)


def _softmax(s):
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def _split_heads(x, h):
    n, d = x.shape
    return x.reshape(n, h, d // h).transpose(1, 0, 2)


def _merge_heads(x):
    h, n, dk = x.shape
    return x.transpose(1, 0, 2).reshape(n, h * dk)


def _block_forward(x, p, h):
    cache = {}
    hn, cache["ln1"] = _layer_norm(x, p["ln1_g"], p["ln1_b"])
    q = _split_heads(hn @ p["wq"], h)
    k = _split_heads(hn @ p["wk"], h)
    v = _split_heads(hn @ p["wv"], h)
    scale = 1.0 / np.sqrt(q.shape[-1])
    att = _softmax(q @ k.transpose(0, 2, 1) * scale)
    o = _merge_heads(att @ v)
    x1 = x + o @ p["wo"] + p["bo"]

    h2, cache["ln2"] = _layer_norm(x1, p["ln2_g"], p["ln2_b"])
    z = h2 @ p["w1"] + p["b1"]
    g, t = _gelu(z)
    y = x1 + g @ p["w2"] + p["b2"]
    cache.update(hn=hn, q=q, k=k, v=v, att=att, o=o, scale=scale, h2=h2, z=z, t=t, g=g)
    return y, cache


def _block_backward(dy, p, c, h):
    gr = {}
    # feed-forward sublayer
    gr["w2"] = c["g"].T @ dy
    gr["b2"] = dy.sum(axis=0)
    dz = (dy @ p["w2"].T) * _gelu_grad(c["z"], c["t"])
    gr["w1"] = c["h2"].T @ dz
    gr["b1"] = dz.sum(axis=0)
    dx1_ln, gr["ln2_g"], gr["ln2_b"] = _layer_norm_backward(dz @ p["w1"].T, c["ln2"])
    dx1 = dy + dx1_ln

    # attention sublayer
    gr["wo"] = c["o"].T @ dx1
    gr["bo"] = dx1.sum(axis=0)
    do = _split_heads(dx1 @ p["wo"].T, h)
    att, q, k, v, scale = c["att"], c["q"], c["k"], c["v"], c["scale"]
    datt = do @ v.transpose(0, 2, 1)
    dv = att.transpose(0, 2, 1) @ do
    ds = att * (datt - (datt * att).sum(axis=-1, keepdims=True)) * scale
    dq = _merge_heads(ds @ k)
    dk = _merge_heads(ds.transpose(0, 2, 1) @ q)
    dv = _merge_heads(dv)
    hn = c["hn"]
    gr["wq"] = hn.T @ dq
    gr["wk"] = hn.T @ dk
    gr["wv"] = hn.T @ dv
    dhn = dq @ p["wq"].T + dk @ p["wk"].T + dv @ p["wv"].T
    dx_ln, gr["ln1_g"], gr["ln1_b"] = _layer_norm_backward(dhn, c["ln1"])
    return dx1 + dx_ln, gr


def _check_inputs(inputs, params: EncoderParams) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError(f"expected a non-empty (n, d) array, got shape {x.shape}")
    if x.shape[1] != params.width:
        raise ValueError(f"width mismatch: inputs have d={x.shape[1]}, encoder expects d={params.width}")
    return x


def _forward(x, params: EncoderParams):
    caches = []
    for blk in params.blocks:
        x, c = _block_forward(x, blk, params.heads)
        caches.append(c)
    return x, caches


def encode_set(inputs, params: EncoderParams) -> np.ndarray:
    """Context-aware representations for one set, shape ``(n, d)``."""
    y, _ = _forward(_check_inputs(inputs, params), params)
    return y


def attention_weights(inputs, params: EncoderParams, block: int = 0) -> np.ndarray:
    """Attention maps ``(heads, n, n)`` of one block (diagnostics only)."""
    x = _check_inputs(inputs, params)
    for i, blk in enumerate(params.blocks):
        y, c = _block_forward(x, blk, params.heads)
        if i == block:
            return c["att"]
        x = y
    raise IndexError(f"block {block} out of range")


def encode_set_backward(inputs, params: EncoderParams, upstream) -> tuple[list[dict[str, np.ndarray]], np.ndarray]:
    """Gradients of ``sum(upstream * encode_set(inputs))``.

    Returns per-block parameter gradients (same keys as ``params.blocks``)
    and the gradient with respect to the inputs.
    """
    x = _check_inputs(inputs, params)
    dy = np.asarray(upstream, dtype=np.float64)
    if dy.shape != x.shape:
        raise ValueError(f"shape mismatch: upstream {dy.shape} vs inputs {x.shape}")
    _, caches = _forward(x, params)
    grads: list[dict[str, np.ndarray]] = [None] * len(params.blocks)
    for i in reversed(range(len(params.blocks))):
        dy, grads[i] = _block_backward(dy, params.blocks[i], caches[i], params.heads)
    return grads, dy
