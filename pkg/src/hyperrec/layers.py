"""Multi-head attention and the named parameter store."""
from __future__ import annotations

import json

import numpy as np

from . import tensor as tn
from .tensor import ShapeError, Tensor


class AttentionParams:
    """Projection weights for one attention module: W^Q, W^K, W^V, W^O."""

    def __init__(self, wq: Tensor, wk: Tensor, wv: Tensor, wo: Tensor):
        self.wq, self.wk, self.wv, self.wo = wq, wk, wv, wo

    def tensors(self):
        return [self.wq, self.wk, self.wv, self.wo]


def _split_heads(x: Tensor, heads: int) -> Tensor:
    # (G, R, d) -> (G, P, R, d/P)
    g, r, d = x.shape
    x = tn.reshape(x, (g, r, heads, d // heads))
    return tn.transpose(x, (0, 2, 1, 3))


def attention(q_in: Tensor, k_in: Tensor, v_in: Tensor, bias, heads: int,
              params: AttentionParams, key_mask=None) -> Tensor:
    """Scaled dot-product multi-head attention with optional additive bias.

    Inputs may be 2-d (rows, d) for a single group or 3-d (groups, rows, d)
    for a batch of independent groups. `bias`, when present, is a Tensor or
    array broadcastable to (groups, heads, rows_q, rows_k). `key_mask` is a
    bool array (groups, rows_k); False keys are excluded from the softmax.
    """
    squeeze = q_in.ndim == 2
    if squeeze:
        q_in = tn.reshape(q_in, (1,) + q_in.shape)
        k_in = tn.reshape(k_in, (1,) + k_in.shape)
        v_in = tn.reshape(v_in, (1,) + v_in.shape)
    if not (q_in.ndim == k_in.ndim == v_in.ndim == 3):
        raise ShapeError("attention: inputs must be 2-d or 3-d")
    if k_in.shape[:2] != v_in.shape[:2] or q_in.shape[0] != k_in.shape[0]:
        raise ShapeError(
            f"attention: group/row mismatch {q_in.shape} {k_in.shape} {v_in.shape}")
    d = q_in.shape[2]
    if d % heads != 0:
        raise ShapeError(f"attention: {heads} heads do not divide width {d}")
    d_head = d // heads

    q = _split_heads(tn.matmul(q_in, params.wq), heads)
    k = _split_heads(tn.matmul(k_in, params.wk), heads)
    v = _split_heads(tn.matmul(v_in, params.wv), heads)

    scores = tn.scale(tn.matmul(q, tn.transpose(k, (0, 1, 3, 2))),
                      1.0 / np.sqrt(d_head))
    if bias is not None:
        if not isinstance(bias, Tensor):
            bias = tn.parameter(bias)
        if bias.ndim == 2:
            bias = tn.reshape(bias, (1, 1) + bias.shape)
        elif bias.ndim == 3:
            bias = tn.reshape(bias, (bias.shape[0], 1) + bias.shape[1:])
        scores = tn.add(scores, bias)
    if key_mask is not None:
        key_mask = np.asarray(key_mask, dtype=bool)
        scores = tn.masked_fill(scores, ~key_mask[:, None, None, :], -1e30)
    attn = tn.softmax_last(scores)
    out = tn.matmul(attn, v)
    g, p, r, _ = out.shape
    out = tn.reshape(tn.transpose(out, (0, 2, 1, 3)), (g, r, d))
    out = tn.matmul(out, params.wo)
    if squeeze:
        out = tn.reshape(out, out.shape[1:])
    return out


class ParamStore:
    """Named learnable parameter matrices with seeded init and checkpointing."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}

    def add(self, name: str, shape, rng: np.random.Generator, fan_in=None) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        fan = fan_in if fan_in is not None else shape[-1] if len(shape) == 1 else shape[0]
        bound = 1.0 / np.sqrt(max(fan, 1))
        t = tn.parameter(rng.uniform(-bound, bound, size=shape), name=name)
        self.params[name] = t
        return t

    def add_identity(self, name: str, n: int) -> Tensor:
        """Square matrix initialized at the identity.

        Used for attention value/output projections so a freshly built
        refinement module starts out as a pass-through instead of scrambling
        its inputs; training moves it away only as far as the data warrants.
        """
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = tn.parameter(np.eye(n), name=name)
        self.params[name] = t
        return t

    def add_zeros(self, name: str, shape) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = tn.parameter(np.zeros(shape), name=name)
        self.params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self):
        return list(self.params)

    def items(self):
        return self.params.items()

    def attention_params(self, prefix: str) -> AttentionParams:
        p = self.params
        return AttentionParams(p[f"{prefix}.wq"], p[f"{prefix}.wk"],
                               p[f"{prefix}.wv"], p[f"{prefix}.wo"])

    def gradients(self, loss: Tensor) -> dict[str, np.ndarray]:
        """Gradient per parameter name; unreachable parameters get zeros."""
        leaf = tn.backward(loss)
        out = {}
        for name, t in self.params.items():
            g = leaf.get(t)
            out[name] = g if g is not None else np.zeros(t.shape, dtype=t.data.dtype)
        return out

    def copy(self) -> "ParamStore":
        other = ParamStore()
        for name, t in self.params.items():
            other.params[name] = tn.parameter(t.data.copy(), name=name)
        return other

    # -- checkpoint container ------------------------------------------------

    def save(self, path, meta: dict | None = None, extra: dict | None = None) -> None:
        """Write parameters (and optional named extra arrays) to an npz file.

        Round-trips bitwise for float64 values. `meta` is a JSON-serializable
        header stored alongside the arrays.
        """
        arrays = {f"param.{k}": v.data for k, v in self.params.items()}
        if extra:
            for k, v in extra.items():
                arrays[f"extra.{k}"] = np.asarray(v)
        arrays["meta"] = np.frombuffer(
            json.dumps(meta or {}, sort_keys=True).encode(), dtype=np.uint8)
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> tuple["ParamStore", dict, dict]:
        with np.load(path) as z:
            store = cls()
            extra = {}
            meta = {}
            for key in z.files:
                if key == "meta":
                    meta = json.loads(bytes(z[key]).decode() or "{}")
                elif key.startswith("param."):
                    store.params[key[6:]] = tn.parameter(z[key], name=key[6:])
                elif key.startswith("extra."):
                    extra[key[6:]] = z[key]
        return store, meta, extra
