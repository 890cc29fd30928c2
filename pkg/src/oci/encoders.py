"""Toy encoders standing in for the vision backbone, the text encoder and the
frozen multi-modal embedder.

Text is tokenized over a closed vocabulary. Decimal literals become a single
NUMERIC token that carries its value, so bounding-box coordinates reach the
network as numbers instead of being shredded into sub-word pieces.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .augmenter import BANKS, FUNCTION_WORDS
from .autodiff import Param, Tensor
from .geometry import Direction

NUMERIC = "<num>"
UNK = "<unk>"

KINDS = ("cube", "box", "toy", "lid")
COLORS = ("red", "green", "blue", "yellow", "white", "brown", "gray", "orange", "purple")
# object words used by the simulator and the worked examples
NOUNS = ("cube", "box", "toy", "lid", "bear", "left", "middle", "right", "polar", "robotic", "arm")
PUNCTUATION = (".", ",", "[", "]", "-")

# channel layout of an observation cell
CH_KIND = 0
CH_COLOR = CH_KIND + len(KINDS)
CH_GRIPPER = CH_COLOR + len(COLORS)
CH_HOLDING = CH_GRIPPER + 1
N_CHANNELS = CH_HOLDING + 1

_TOKEN = re.compile(r"(?P<num>\d+(?:\.\d+)?|\.\d+)|(?P<word>[a-z][a-z0-9_']*)|(?P<punct>[^\sa-z0-9])")


class EncoderError(ValueError):
    pass


class Vocab:
    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if len(set(tokens)) != len(tokens):
            raise EncoderError("vocabulary tokens must be unique")
        if NUMERIC not in tokens or UNK not in tokens:
            raise EncoderError("vocabulary must contain NUMERIC and UNK")
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.tokens == other.tokens

    def id(self, token: str) -> int:
        return self.index.get(token, self.index[UNK])

    @property
    def numeric_id(self) -> int:
        return self.index[NUMERIC]

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    def to_json(self) -> str:
        return json.dumps(self.tokens)

    @classmethod
    def from_json(cls, text: str) -> "Vocab":
        tokens = json.loads(text)
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise EncoderError("vocabulary JSON must be an array of strings")
        return cls(tokens)

    @classmethod
    def default(cls) -> "Vocab":
        words: set[str] = set(FUNCTION_WORDS)
        for bank in BANKS.values():
            for t in bank:
                words.update(re.findall(r"[a-z]+", re.sub(r"\{[a-z_]+\}", " ", t.lower())))
        for d in Direction:
            words.update(d.word.split("-"))
        words.update(KINDS, COLORS, NOUNS)
        return cls([NUMERIC, UNK, *PUNCTUATION, *sorted(words)])


@dataclass(frozen=True)
class TokenSeq:
    ids: np.ndarray
    numeric_values: np.ndarray

    def __len__(self):
        return self.ids.shape[-1]


def tokenize_text(s: str, v: Vocab) -> TokenSeq:
    ids: list[int] = []
    values: list[float] = []
    for m in _TOKEN.finditer(s.lower()):
        if m.group("num") is not None:
            ids.append(v.numeric_id)
            values.append(float(m.group("num")))
        else:
            ids.append(v.id(m.group()))
            values.append(0.0)
    return TokenSeq(np.asarray(ids, dtype=np.int64), np.asarray(values, dtype=np.float64))


def stack_tokens(seqs: Sequence[TokenSeq]) -> TokenSeq:
    """Stack equal-length sequences into one batched [B, L] sequence."""
    if len({len(t) for t in seqs}) > 1:
        raise EncoderError("stack_tokens needs sequences of equal length")
    return TokenSeq(np.stack([t.ids for t in seqs]), np.stack([t.numeric_values for t in seqs]))


def sinusoidal(n: int, d: int, base: float = 10000.0) -> np.ndarray:
    """Standard sin/cos position table of shape [n, d]."""
    pos = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(d, dtype=np.float64)[None, :]
    angle = pos / base ** ((2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def grid_position_encoding(width: int, height: int, d: int) -> np.ndarray:
    """[width*height, d] encoding, x in the first half of channels, y in the second."""
    dx = d // 2
    ex = sinusoidal(width, dx, base=64.0)
    ey = sinusoidal(height, d - dx, base=64.0)
    xs, ys = np.meshgrid(np.arange(width), np.arange(height), indexing="ij")
    return np.concatenate([ex[xs.reshape(-1)], ey[ys.reshape(-1)]], axis=1)


@dataclass(frozen=True)
class ObsTensor:
    grid: np.ndarray  # [W, H, C]

    def __post_init__(self):
        g = self.grid
        if g.ndim != 3 or g.shape[2] != N_CHANNELS:
            raise EncoderError(f"observation must be [W, H, {N_CHANNELS}], got {g.shape}")
        if g.min(initial=0.0) < 0.0 or g.max(initial=0.0) > 1.0:
            raise EncoderError("observation channel out of range [0, 1]")
        if int((g[:, :, CH_GRIPPER] > 0).sum()) != 1:
            raise EncoderError("observation must contain exactly one gripper cell")

    @property
    def width(self) -> int:
        return self.grid.shape[0]

    @property
    def height(self) -> int:
        return self.grid.shape[1]


class TextEncoder:
    """Learned id embedding + value * value-vector + fixed sinusoidal positions."""

    def __init__(self, vocab: Vocab, width: int, rng: np.random.Generator, prefix: str = "text",
                 frozen: bool = False, max_len: int = 256):
        self.vocab = vocab
        self.width = width
        self.table = Param(ad.glorot(rng, len(vocab), width), f"{prefix}.table", frozen)
        self.value_vec = Param(ad.glorot(rng, 1, width, (width,)), f"{prefix}.value", frozen)
        self.positions = sinusoidal(max_len, width)

    def params(self) -> list[Param]:
        return [self.table, self.value_vec]

    def __call__(self, t: TokenSeq) -> Tensor:
        """[L] ids -> [L, width]; a stacked [B, L] sequence gives [B, L, width]."""
        L = t.ids.shape[-1]
        if L == 0:
            return Tensor(np.zeros(t.ids.shape + (self.width,)))
        if t.ids.max() >= len(self.vocab) or t.ids.min() < 0:
            raise EncoderError(f"token id out of vocabulary range [0, {len(self.vocab)})")
        if L > len(self.positions):
            self.positions = sinusoidal(L, self.width)
        emb = ad.embedding(self.table, t.ids)
        vals = ad.mul(Tensor(t.numeric_values[..., None]), self.value_vec)
        return ad.add(ad.add(emb, vals), Tensor(self.positions[:L]))


def encode_text(t: TokenSeq, enc: TextEncoder) -> Tensor:
    return enc(t)


class ObsEncoder:
    """Per-cell linear embedding of the channel vector + 2-D position encoding."""

    def __init__(self, width: int, grid_size: tuple[int, int], rng: np.random.Generator, prefix: str = "obs"):
        self.width = width
        self.grid_size = tuple(grid_size)
        self.w = Param(ad.glorot(rng, N_CHANNELS, width), f"{prefix}.w")
        self.b = Param(np.zeros(width), f"{prefix}.b")
        self.positions = grid_position_encoding(*self.grid_size, width)

    def params(self) -> list[Param]:
        return [self.w, self.b]

    def content(self, grids: np.ndarray) -> Tensor:
        """Per-cell channel embedding without positions: [(B,) W*H, width]."""
        g = np.asarray(grids, dtype=np.float64)
        if g.shape[-3:-1] != self.grid_size:
            raise EncoderError(f"grid size {g.shape[-3:-1]} != encoder grid {self.grid_size}")
        if g.min(initial=0.0) < 0.0 or g.max(initial=0.0) > 1.0:
            raise EncoderError("observation channel out of range [0, 1]")
        cells = g.reshape(g.shape[:-3] + (-1, N_CHANNELS))
        return ad.linear(Tensor(cells), self.w, self.b)

    def add_positions(self, content: Tensor) -> Tensor:
        return ad.add(content, Tensor(self.positions))

    def __call__(self, grids: np.ndarray) -> Tensor:
        """``grids`` is [W, H, C] or a batch [B, W, H, C]; returns [(B,) W*H, width]."""
        return self.add_positions(self.content(grids))


def encode_obs(o: ObsTensor, enc: ObsEncoder) -> Tensor:
    return enc(o.grid)


def fuse(img_tokens: Tensor, text_tokens: Tensor) -> Tensor:
    """Concatenate image tokens then text tokens along the sequence axis.

    Unbatched text is broadcast over a leading batch axis of the image tokens.
    """
    if img_tokens.shape[-1] != text_tokens.shape[-1]:
        raise EncoderError(f"token width mismatch: image {img_tokens.shape}, text {text_tokens.shape}")
    if text_tokens.shape[-2] == 0:
        return img_tokens
    if img_tokens.data.ndim == 3 and text_tokens.data.ndim == 2:
        B = img_tokens.shape[0]
        text_tokens = ad.broadcast_to(text_tokens, (B,) + text_tokens.shape)
    return ad.concat([img_tokens, text_tokens], axis=-2)


class FrozenInstructionEmbedder:
    """Seeded, never-trained encoder producing [L_E, D] instruction features.

    Stands in for the final-layer features of a frozen multi-modal model.
    ``calls`` counts invocations so caching can be audited.
    """

    def __init__(self, vocab: Vocab, width: int = 32, seed: int = 0):
        self.vocab = vocab
        self.width = width
        self.seed = seed
        rng = np.random.default_rng([seed, 7919])
        self.encoder = TextEncoder(vocab, width, rng, prefix="embedder", frozen=True)
        # larger value direction so coordinates survive the normalization
        self.encoder.value_vec.data *= 4.0
        self.gain = Param(np.ones(width), "embedder.ln.gain", frozen=True)
        self.bias = Param(np.zeros(width), "embedder.ln.bias", frozen=True)
        self.calls = 0

    def params(self) -> list[Param]:
        return self.encoder.params() + [self.gain, self.bias]

    def __call__(self, aug_text: str) -> Tensor:
        self.calls += 1
        toks = tokenize_text(aug_text, self.vocab)
        if len(toks) == 0:
            return Tensor(np.zeros((0, self.width)))
        h = self.encoder(toks)
        out = ad.layer_norm(h, self.gain, self.bias)
        # detached: nothing downstream may route gradient into the embedder
        return Tensor(out.data.copy())


_EMBEDDERS: dict[tuple[int, int], FrozenInstructionEmbedder] = {}


def frozen_instruction_embedder(aug_text: str, seed: int = 0, width: int = 32) -> Tensor:
    key = (seed, width)
    if key not in _EMBEDDERS:
        _EMBEDDERS[key] = FrozenInstructionEmbedder(Vocab.default(), width, seed)
    return _EMBEDDERS[key](aug_text)
