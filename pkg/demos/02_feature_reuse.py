"""
Reusing frozen instruction features
===================================

A frozen encoder turns the augmented instruction into a token sequence once
per episode. At every step the policy lifts those features with a small MLP
and lets them attend over the current image and text tokens, each attention
head looking at the tokens at a different temporal resolution.
"""

import numpy as np

from oci.augmenter import TaskSpec
from oci.autodiff import Tensor
from oci.encoders import FrozenInstructionEmbedder, ObsEncoder, TextEncoder, Vocab, fuse, tokenize_text
from oci.frm import EmbeddingCacheStore, FrmConfig, FrmParams, frm_forward, ln_mlp
from oci.sim import TaskFamily, observe, sample_scene

world, scene, task = sample_scene(TaskFamily.CUBE_BY_POSITION, seed=4)
print("task target:", task.target_name)

vocab = Vocab.default()
embedder = FrozenInstructionEmbedder(vocab, width=32, seed=0)

# The cache runs augmentation and the frozen embedder on the first query of
# an episode and hands back the stored array afterwards.
store = EmbeddingCacheStore()
for t in range(50):
    entry = store.get_or_create("episode-0", scene, task, embedder)
print("embedder calls over 50 steps:", embedder.calls)
print("augmented text:", entry.augmented_text)
print("E_mllm shape:", entry.E_mllm.shape)

# Multi-modal tokens: 64 grid cells followed by the instruction tokens.
rng = np.random.default_rng(0)
cfg = FrmConfig(D=32, D_prime=16, n_heads=4, rates=(1, 2, 2, 4))
img = ObsEncoder(16, (world.width, world.height), rng)(observe(world).grid)
txt = TextEncoder(vocab, 16, rng)(tokenize_text(entry.augmented_text, vocab))
M = fuse(img, txt)
print("M shape:", M.shape)

params = FrmParams.init(cfg, rng)
E_prime = ln_mlp(Tensor(entry.E_mllm), params)
out, maps = frm_forward(E_prime, M, params, cfg, return_attention=True)
print("output shape:", out.shape, "(one row per instruction token)")
for rate, a in zip(cfg.rates, maps):
    print(f"  rate {rate}: attends over {a.shape[-1]:3d} keys, rows sum to {a.sum(-1).mean():.3f}")
