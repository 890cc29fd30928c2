"""Feature reuse: lift frozen instruction features and cross-attend them
against the multi-modal token sequence at several temporal scales.

Per head ``i`` with down-sampling rate ``r_i``::

    Q_i = E' Wq_i
    S_i = MSC(M, r_i)                # windowed linear-ReLU aggregation
    K_i = S_i Wk_i,  V_i = S_i Wv_i
    V_i = V_i + P_i(V_i)             # depthwise conv along the sequence
    h_i = softmax(Q_i K_i^T / sqrt(d_h)) V_i

Heads are concatenated, projected back to D' and added to E'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .augmenter import RenderConfig, TaskSpec, augment
from .autodiff import Param, Tensor
from .geometry import Scene, SectorConfig


class FrmConfigError(ValueError):
    pass


class CacheConflictError(ValueError):
    pass


@dataclass(frozen=True)
class FrmConfig:
    D: int = 32
    D_prime: int = 16
    n_heads: int = 4
    rates: tuple[int, ...] = (1, 2, 2, 4)
    d_h: Optional[int] = None
    conv_kernel: int = 3

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(int(r) for r in self.rates))
        if self.d_h is None:
            object.__setattr__(self, "d_h", self.D_prime // max(self.n_heads, 1))
        if self.n_heads < 1:
            raise FrmConfigError("n_heads must be >= 1")
        if len(self.rates) != self.n_heads:
            raise FrmConfigError(f"need one rate per head: {self.n_heads} heads, rates {self.rates}")
        if any(r < 1 for r in self.rates):
            raise FrmConfigError(f"rates must be >= 1, got {self.rates}")
        if self.d_h * self.n_heads != self.D_prime:
            raise FrmConfigError(f"d_h * n_heads must equal D_prime ({self.d_h} * {self.n_heads} != {self.D_prime})")
        if self.conv_kernel % 2 == 0 or self.conv_kernel < 1:
            raise FrmConfigError(f"conv_kernel must be odd, got {self.conv_kernel}")


@dataclass
class HeadParams:
    wq: Param
    wk: Param
    wv: Param
    msc_w: Param
    msc_b: Param
    conv: Param

    def params(self) -> list[Param]:
        return [self.wq, self.wk, self.wv, self.msc_w, self.msc_b, self.conv]


@dataclass
class FrmParams:
    ln_gain: Param
    ln_bias: Param
    w1: Param
    b1: Param
    w2: Param
    b2: Param
    heads: list[HeadParams]
    wo: Param
    bo: Param

    @classmethod
    def init(cls, cfg: FrmConfig, rng: np.random.Generator, prefix: str = "frm") -> "FrmParams":
        D, Dp, dh = cfg.D, cfg.D_prime, cfg.d_h
        heads = []
        for i, r in enumerate(cfg.rates):
            p = f"{prefix}.head{i}"
            conv = np.zeros((cfg.conv_kernel, dh))
            conv[:] = ad.glorot(rng, cfg.conv_kernel, cfg.conv_kernel, (cfg.conv_kernel, dh))
            heads.append(HeadParams(
                wq=Param(ad.glorot(rng, Dp, dh), f"{p}.wq"),
                wk=Param(ad.glorot(rng, Dp, dh), f"{p}.wk"),
                wv=Param(ad.glorot(rng, Dp, dh), f"{p}.wv"),
                msc_w=Param(ad.glorot(rng, r * Dp, Dp), f"{p}.msc_w"),
                msc_b=Param(np.zeros(Dp), f"{p}.msc_b"),
                conv=Param(conv, f"{p}.conv"),
            ))
        return cls(
            ln_gain=Param(np.ones(D), f"{prefix}.ln.gain"),
            ln_bias=Param(np.zeros(D), f"{prefix}.ln.bias"),
            w1=Param(ad.glorot(rng, D, D), f"{prefix}.mlp.w1"),
            b1=Param(np.zeros(D), f"{prefix}.mlp.b1"),
            w2=Param(ad.glorot(rng, D, Dp), f"{prefix}.mlp.w2"),
            b2=Param(np.zeros(Dp), f"{prefix}.mlp.b2"),
            heads=heads,
            wo=Param(ad.glorot(rng, cfg.n_heads * dh, Dp), f"{prefix}.out.w"),
            bo=Param(np.zeros(Dp), f"{prefix}.out.b"),
        )

    def ln_mlp_params(self) -> list[Param]:
        return [self.ln_gain, self.ln_bias, self.w1, self.b1, self.w2, self.b2]

    def attention_params(self) -> list[Param]:
        out = []
        for h in self.heads:
            out.extend(h.params())
        return out + [self.wo, self.bo]

    def params(self) -> list[Param]:
        return self.ln_mlp_params() + self.attention_params()


def ln_mlp(E: Tensor, params: FrmParams) -> Tensor:
    """[.., L_E, D] -> [.., L_E, D']: layer norm, linear, ReLU, linear."""
    if E.shape[-1] != params.ln_gain.shape[0]:
        raise FrmConfigError(f"ln_mlp expects width {params.ln_gain.shape[0]}, got {E.shape}")
    h = ad.layer_norm(E, params.ln_gain, params.ln_bias)
    h = ad.relu(ad.linear(h, params.w1, params.b1))
    return ad.linear(h, params.w2, params.b2)


def msc_downsample(M: Tensor, r: int, w: Param, b: Param) -> Tensor:
    """Aggregate non-overlapping windows of ``r`` tokens: [.., L, D'] -> [.., ceil(L/r), D'].

    The last window is zero-padded; each window is flattened and passed
    through a linear-ReLU layer.
    """
    if r < 1:
        raise FrmConfigError(f"down-sampling rate must be >= 1, got {r}")
    L, Dp = M.shape[-2], M.shape[-1]
    if L < 1:
        raise FrmConfigError("msc_downsample needs at least one token")
    n = -(-L // r)
    x = ad.pad_rows(M, n * r)
    if r > 1:
        x = ad.reshape(x, M.shape[:-2] + (n, r * Dp))
    return ad.relu(ad.linear(x, w, b))


def attention_head(E_prime: Tensor, M: Tensor, hp: HeadParams, r: int, d_h: int):
    q = ad.linear(E_prime, hp.wq)
    s = msc_downsample(M, r, hp.msc_w, hp.msc_b)
    k = ad.linear(s, hp.wk)
    v = ad.linear(s, hp.wv)
    v = ad.add(v, ad.depthwise_conv1d(v, hp.conv))
    scores = ad.scale(ad.matmul(q, ad.transpose(k)), 1.0 / math.sqrt(d_h))
    attn = ad.softmax_rows(scores)
    return ad.matmul(attn, v), attn


def frm_forward(E_prime: Tensor, M: Tensor, params: FrmParams, cfg: FrmConfig,
                return_attention: bool = False):
    """Cross-attend ``E_prime`` [.., L_E, D'] over ``M`` [.., L, D']; returns [.., L_E, D']."""
    if E_prime.shape[-1] != cfg.D_prime or M.shape[-1] != cfg.D_prime:
        raise FrmConfigError(f"widths must equal D_prime={cfg.D_prime}: E' {E_prime.shape}, M {M.shape}")
    if M.shape[-2] == 0:
        raise FrmConfigError("empty multi-modal sequence: no keys to attend over")
    heads, maps = [], []
    for hp, r in zip(params.heads, cfg.rates):
        h, a = attention_head(E_prime, M, hp, r, cfg.d_h)
        heads.append(h)
        maps.append(a)
    joined = heads[0] if len(heads) == 1 else ad.concat(heads, axis=-1)
    out = ad.add(ad.linear(joined, params.wo, params.bo), E_prime)
    if return_attention:
        return out, [a.data for a in maps]
    return out


def _lead(t: Tensor, batch: tuple[int, ...]) -> Tensor:
    want = batch + t.shape[-2:]
    return t if t.shape == want else ad.broadcast_to(t, want)


def frm_forward_split(E_prime: Tensor, M_img: Tensor, M_txt: Tensor, params: FrmParams,
                      cfg: FrmConfig) -> Tensor:
    """Same result as ``frm_forward(E_prime, concat(M_img, M_txt))``, cheaper.

    ``M_img`` is batched [B, L_img, D'] while ``M_txt`` (and ``E_prime``) may be
    shared across the batch. When ``L_img`` is a multiple of a head's rate no
    down-sampling window straddles the image/text boundary, so the text side
    of that head is computed once instead of once per sample.
    """
    batch = M_img.shape[:-2]
    L_img, L_txt = M_img.shape[-2], M_txt.shape[-2]
    if L_img + L_txt == 0:
        raise FrmConfigError("empty multi-modal sequence: no keys to attend over")
    half = cfg.conv_kernel // 2
    shared_query = E_prime.data.ndim == 2 and M_txt.data.ndim == 2
    full = None
    heads = []
    for hp, r in zip(params.heads, cfg.rates):
        q = ad.scale(ad.linear(E_prime, hp.wq), 1.0 / math.sqrt(cfg.d_h))
        if L_txt == 0 or L_img == 0 or L_img % r:
            if full is None:
                full = M_img if L_txt == 0 else _lead(M_txt, batch) if L_img == 0 else \
                    ad.concat([M_img, _lead(M_txt, batch)], axis=-2)
            s_k = msc_downsample(full, r, hp.msc_w, hp.msc_b)
            k = ad.linear(s_k, hp.wk)
            v = ad.linear(s_k, hp.wv)
            v = ad.add(v, ad.depthwise_conv1d(v, hp.conv))
            heads.append(ad.attention(q, k, v))
            continue
        s_i = msc_downsample(M_img, r, hp.msc_w, hp.msc_b)
        s_t = msc_downsample(M_txt, r, hp.msc_w, hp.msc_b)
        k_i, k_t = ad.linear(s_i, hp.wk), ad.linear(s_t, hp.wk)
        v_i, v_t = ad.linear(s_i, hp.wv), ad.linear(s_t, hp.wv)
        v = ad.concat([v_i, _lead(v_t, batch)], axis=-2)
        v = ad.add(v, ad.depthwise_conv1d(v, hp.conv))
        n_i, n_t = v_i.shape[-2], v_t.shape[-2]
        if shared_query and len(batch) == 1 and n_t > half:
            # text rows past the convolution's reach are identical for every
            # sample, so their scores and values are shared across the batch
            v_t = ad.add(v_t, ad.depthwise_conv1d(v_t, hp.conv))
            k1 = ad.concat([k_i, _lead(ad.rows(k_t, 0, half), batch)], axis=-2) if half else k_i
            heads.append(ad.attention_shared(q, k1, ad.rows(v, 0, n_i + half),
                                             ad.rows(k_t, half, n_t), ad.rows(v_t, half, n_t)))
        else:
            k = ad.concat([k_i, _lead(k_t, batch)], axis=-2)
            heads.append(ad.attention(q, k, v))
    joined = heads[0] if len(heads) == 1 else ad.concat(heads, axis=-1)
    return ad.add(ad.linear(joined, params.wo, params.bo), E_prime)


# --- embedding cache ---------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingCache:
    episode_id: str
    augmented_text: str
    E_mllm: np.ndarray
    created_at_step: int = 1


@dataclass
class EmbeddingCacheStore:
    """Per-episode store of the frozen instruction embedding.

    The embedder runs once, at the first step of an episode; later queries
    return the stored array unchanged.
    """

    render: RenderConfig = field(default_factory=RenderConfig)
    sector: SectorConfig = field(default_factory=SectorConfig)
    entries: dict = field(default_factory=dict)
    invocations: int = 0

    def get_or_create(self, episode_id, scene: Scene, task: TaskSpec,
                      embedder: Callable[[str], Tensor]) -> EmbeddingCache:
        key = str(episode_id)
        hit = self.entries.get(key)
        if hit is not None:
            entry, seen_scene, seen_task = hit
            if seen_scene != scene or seen_task != task:
                raise CacheConflictError(f"episode id {key!r} reused for a different scene or task")
            return entry
        if getattr(embedder, "frozen", True) is False:
            raise CacheConflictError("embedder must be frozen")
        _, text = augment(scene, task, self.render, self.sector)
        E = np.array(embedder(text).data, copy=True)
        E.setflags(write=False)
        self.invocations += 1
        entry = EmbeddingCache(key, text, E, created_at_step=1)
        self.entries[key] = (entry, scene, task)
        return entry

    def __len__(self):
        return len(self.entries)


def cache_get_or_create(store: EmbeddingCacheStore, episode_id, scene: Scene, task: TaskSpec,
                        embedder: Callable[[str], Tensor]) -> EmbeddingCache:
    return store.get_or_create(episode_id, scene, task, embedder)
