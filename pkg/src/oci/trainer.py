"""Behavior cloning on the grid world and the ablation grid around it."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .augmenter import RenderConfig, TaskSpec, augment, bank_for
from .autodiff import AdamState, Param, Tape, Tensor, adam_step
from .encoders import (
    FrozenInstructionEmbedder,
    ObsEncoder,
    TextEncoder,
    TokenSeq,
    Vocab,
    fuse,
    stack_tokens,
    tokenize_text,
)
from .frm import EmbeddingCacheStore, FrmConfig, FrmParams, frm_forward, frm_forward_split, ln_mlp
from .geometry import SectorConfig
from .sim import (
    ACTIONS,
    GRID,
    HORIZON,
    Action,
    Episode,
    TaskFamily,
    expert_action,
    expert_demo,
    observe,
    sample_scene,
    step,
    success,
)

log = logging.getLogger(__name__)

NUMERIC_ID = Vocab.default().numeric_id

# Initial inverse temperature of the keypoint soft-argmax. Low values blur
# neighbouring cells together and the policy then grasps one cell off.
KEYPOINT_TEMP = 20.0

VARIANTS = {
    "full": dict(use_abs=True, use_rel=True, use_frm=True),
    "no-abs": dict(use_abs=False, use_rel=True, use_frm=True),
    "no-rel": dict(use_abs=True, use_rel=False, use_frm=True),
    "no-frm": dict(use_abs=True, use_rel=True, use_frm=False),
    "plain": dict(use_abs=False, use_rel=False, use_frm=True),
}


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    family: int = 5
    n_demos: int = 25
    epochs: int = 200
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0
    use_abs: bool = True
    use_rel: bool = True
    use_frm: bool = True
    frm: FrmConfig = field(default_factory=FrmConfig)
    hidden: int = 128
    eval_episodes: int = 50
    eval_seeds: int = 5
    embedder_seed: int = 0
    sector: SectorConfig = field(default_factory=SectorConfig)
    decimals: int = 3

    def render(self) -> RenderConfig:
        return RenderConfig(decimals=self.decimals, canonical=True,
                            ablate_abs=not self.use_abs, ablate_rel=not self.use_rel)

    def variant(self, name: str) -> "TrainConfig":
        return replace(self, **VARIANTS[name])


# --- model -------------------------------------------------------------------


def soft_argmax(tokens: Tensor, coords: Tensor, temperature: Optional[Tensor] = None) -> Tensor:
    """Per feature channel, a softmax over tokens weights the tokens' coordinates.

    ``tokens`` is [.., L, C] and ``coords`` is [.., L, k]; the result is
    [.., C*k]. Over image cells this is the usual spatial soft-argmax
    keypoint; over text tokens with their numeric values it reads numbers.
    """
    if temperature is not None:
        tokens = ad.mul(tokens, temperature)
    weights = ad.softmax_rows(ad.transpose(tokens))
    out = ad.matmul(weights, coords)
    return ad.reshape(out, out.shape[:-2] + (out.shape[-2] * out.shape[-1],))


def ordinal_numbers(toks: TokenSeq, k: int) -> np.ndarray:
    """Values of the first ``k`` numeric tokens in reading order, zero-padded: [.., k]."""
    ids = np.atleast_2d(toks.ids)
    vals = np.atleast_2d(toks.numeric_values)
    out = np.zeros((ids.shape[0], k))
    for row in range(ids.shape[0]):
        v = vals[row][ids[row] == NUMERIC_ID][:k]
        out[row, :len(v)] = v
    return out if toks.ids.ndim > 1 else out[0]


class PolicyModel:
    """Encoders + feature reuse + a three-layer action head over 6 actions."""

    def __init__(self, vocab: Vocab, frm_cfg: FrmConfig, use_frm: bool = True, hidden: int = 128,
                 seed: int = 0, grid: tuple[int, int] = GRID, n_numbers: int = 8):
        rng = np.random.default_rng([seed, 104729])
        Dp = frm_cfg.D_prime
        self.vocab = vocab
        self.cfg = frm_cfg
        self.use_frm = use_frm
        self.text = TextEncoder(vocab, Dp, rng, prefix="text")
        self.obs = ObsEncoder(Dp, grid, rng, prefix="obs")
        self.frm = FrmParams.init(frm_cfg, rng)
        W, H = grid
        xs, ys = np.meshgrid(np.arange(W) + 0.5, np.arange(H) + 0.5, indexing="ij")
        # cell centers in grid units, in the encoder's token order; the head
        # separates neighbouring cells far more easily at this scale
        self.number_scale = np.array([W, H] * (n_numbers // 2 + 1), dtype=float)[:n_numbers]
        self.cell_xy = np.stack([xs.reshape(-1), ys.reshape(-1)], axis=1)
        self.kp_temp = Param(np.full(Dp, KEYPOINT_TEMP), "pool.kp_temp")
        self.n_numbers = n_numbers
        n_in = 5 * Dp + n_numbers
        self.head = [
            (Param(ad.glorot(rng, n_in, hidden), "head.w1"), Param(np.zeros(hidden), "head.b1")),
            (Param(ad.glorot(rng, hidden, hidden), "head.w2"), Param(np.zeros(hidden), "head.b2")),
            # zero output layer: every action starts equally likely
            (Param(np.zeros((hidden, len(ACTIONS))), "head.w3"), Param(np.zeros(len(ACTIONS)), "head.b3")),
        ]

    def parameters(self) -> list[Param]:
        """Trainable parameters; attention weights are left out when FRM is bypassed."""
        ps = self.text.params() + self.obs.params() + [self.kp_temp] + self.frm.ln_mlp_params()
        if self.use_frm:
            ps += self.frm.attention_params()
        for w, b in self.head:
            ps += [w, b]
        return ps

    def all_parameters(self) -> list[Param]:
        ps = self.text.params() + self.obs.params() + [self.kp_temp] + self.frm.params()
        for w, b in self.head:
            ps += [w, b]
        return ps

    def features(self, E: np.ndarray, toks: TokenSeq, grids: np.ndarray) -> Tensor:
        """Pooled features [B, 3*D'] for a batch of grids sharing one instruction."""
        B = grids.shape[0]
        Ep = ln_mlp(Tensor(E), self.frm)
        content = self.obs.content(grids)
        img = self.obs.add_positions(content)
        txt = self.text(toks)
        if self.use_frm:
            pooled = ad.mean(frm_forward_split(Ep, img, txt, self.frm, self.cfg), axis=-2)
        else:
            pooled = ad.mean(Ep, axis=-2)
        n_img, n_txt = img.shape[-2], txt.shape[-2]
        m_mean = ad.scale(ad.mean(img, axis=-2), n_img / (n_img + n_txt))
        if n_txt:
            m_mean = ad.add(m_mean, ad.scale(ad.mean(txt, axis=-2), n_txt / (n_img + n_txt)))
        keypoints = soft_argmax(content, Tensor(self.cell_xy), self.kp_temp)
        m_max = ad.max_pool(img, axis=-2)
        if n_txt:
            m_max = ad.maximum(m_max, ad.max_pool(txt, axis=-2))
        numbers = Tensor(np.broadcast_to(ordinal_numbers(toks, self.n_numbers) * self.number_scale, (B, self.n_numbers)))
        pooled = ad.broadcast_to(pooled, (B, self.cfg.D_prime)) if pooled.data.ndim == 1 else pooled
        return ad.concat([pooled, m_mean, m_max, keypoints, numbers], axis=-1)

    def logits(self, E: np.ndarray, toks: TokenSeq, grids: np.ndarray) -> Tensor:
        h = self.features(E, toks, grids)
        (w1, b1), (w2, b2), (w3, b3) = self.head
        h = ad.relu(ad.linear(h, w1, b1))
        h = ad.relu(ad.linear(h, w2, b2))
        return ad.linear(h, w3, b3)

    def act(self, E: np.ndarray, toks: TokenSeq, grid: np.ndarray) -> Action:
        z = self.logits(E, toks, grid[None]).data[0]
        return ACTIONS[int(np.argmax(z))]

    def save(self, path) -> None:
        ad.save_checkpoint(path, self.all_parameters())

    def load(self, path) -> None:
        ad.load_checkpoint(path, self.all_parameters())


def build_model(cfg: TrainConfig, vocab: Optional[Vocab] = None) -> PolicyModel:
    return PolicyModel(vocab or Vocab.default(), cfg.frm, cfg.use_frm, cfg.hidden, cfg.seed)


def build_embedder(cfg: TrainConfig, vocab: Optional[Vocab] = None) -> FrozenInstructionEmbedder:
    return FrozenInstructionEmbedder(vocab or Vocab.default(), cfg.frm.D, cfg.embedder_seed)


def check_frozen_exclusion(params: Sequence[Param], embedder: FrozenInstructionEmbedder) -> None:
    frozen = {id(p) for p in embedder.params()}
    bad = [p.name for p in params if id(p) in frozen or p.frozen]
    if bad:
        raise TrainingError(f"frozen embedder parameters in the optimizer: {bad}")


# --- data ----------------------------------------------------------------------


def _instance_seed(cfg: TrainConfig, i: int, split: str) -> list[int]:
    return [cfg.family, cfg.seed, {"train": 1, "eval": 2}[split], i]


def paraphrased_task(task: TaskSpec, seed) -> TaskSpec:
    """Swap the task's template for a seeded pick from its paraphrase bank."""
    bank = bank_for(task)
    template = bank.select(len(bank), seed)[0]
    return task.with_template(template)


def gen_dataset(cfg: TrainConfig, path=None) -> list[Episode]:
    """Expert demonstrations with augmented text rendered under the config's flags."""
    render = cfg.render()
    episodes = []
    for i in range(cfg.n_demos):
        seed = _instance_seed(cfg, i, "train")
        world, scene, task = sample_scene(cfg.family, int(np.random.SeedSequence(seed).generate_state(1)[0]))
        task = paraphrased_task(task, int(np.random.SeedSequence(seed + [7]).generate_state(1)[0]))
        ep = expert_demo(world, task)
        _, ep.aug_text = augment(scene, task, render, cfg.sector)
        episodes.append(ep)
    if path is not None:
        from .sim import write_jsonl

        try:
            write_jsonl(path, episodes)
        except OSError as e:
            raise TrainingError(f"cannot write dataset {path}: {e.strerror}") from None
    return episodes


@dataclass
class _Prepared:
    E: np.ndarray
    toks: TokenSeq
    grids: np.ndarray
    actions: np.ndarray


def _prepare(dataset: Sequence[Episode], embedder, vocab: Vocab) -> list[_Prepared]:
    out = []
    for ep in dataset:
        out.append(_Prepared(
            E=embedder(ep.aug_text).data,
            toks=tokenize_text(ep.aug_text, vocab),
            grids=np.stack([o.grid for o, _ in ep.trajectory]),
            actions=np.array([a.index for _, a in ep.trajectory]),
        ))
    return out


def _batches(prepared: Sequence[_Prepared], batch_size: int, rng: np.random.Generator):
    chunks = []
    for ep_i, p in enumerate(prepared):
        n = len(p.actions)
        for s in range(0, n, batch_size):
            chunks.append((ep_i, s, min(s + batch_size, n)))
    order = rng.permutation(len(chunks))
    return [chunks[i] for i in order]


@dataclass
class TrainResult:
    model: PolicyModel
    losses: list[float]
    accuracy: float


def train_bc(dataset: Sequence[Episode], cfg: TrainConfig, checkpoint=None,
             embedder: Optional[FrozenInstructionEmbedder] = None) -> TrainResult:
    """Minimize cross-entropy of the expert's actions.

    Batches never mix episodes, so every batch shares one instruction.
    """
    if not dataset:
        raise TrainingError("empty dataset")
    vocab = Vocab.default()
    embedder = embedder or build_embedder(cfg, vocab)
    model = build_model(cfg, vocab)
    params = model.parameters()
    check_frozen_exclusion(params, embedder)
    opt = AdamState(params, lr=cfg.lr)
    prepared = _prepare(dataset, embedder, vocab)
    rng = np.random.default_rng([cfg.seed, 15485863])
    n_steps = sum(len(p.actions) for p in prepared)

    losses = []
    for epoch in range(cfg.epochs):
        total = 0.0
        for ep_i, s, e in _batches(prepared, cfg.batch_size, rng):
            p = prepared[ep_i]
            try:
                with Tape() as tape:
                    z = model.logits(p.E, p.toks, p.grids[s:e])
                    loss = ad.cross_entropy(z, p.actions[s:e])
                    tape.backward(loss)
            except ad.NumericError as err:
                raise TrainingError(f"training diverged at epoch {epoch}: {err}") from None
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingError(f"loss diverged at epoch {epoch}: {value}")
            total += value * (e - s)
            try:
                adam_step(params, opt)
            except ad.NumericError as err:
                raise TrainingError(f"training diverged at epoch {epoch}: {err}") from None
        losses.append(total / n_steps)
        log.debug("epoch %d loss %.4f", epoch, losses[-1])

    correct = 0
    for p in prepared:
        z = model.logits(p.E, p.toks, p.grids).data
        correct += int((z.argmax(axis=1) == p.actions).sum())
    if checkpoint is not None:
        model.save(checkpoint)
    return TrainResult(model, losses, correct / n_steps)


# --- evaluation ------------------------------------------------------------------


@dataclass
class Metrics:
    family: int
    regime: int
    variant: str
    seed: int
    success_rate: float
    mean_episode_length: float
    final_loss: float
    episodes: int
    embedder_calls: int


def eval_instance(cfg: TrainConfig, i: int):
    seed = _instance_seed(cfg, i, "eval")
    world, scene, task = sample_scene(cfg.family, int(np.random.SeedSequence(seed).generate_state(1)[0]))
    task = paraphrased_task(task, int(np.random.SeedSequence(seed + [7]).generate_state(1)[0]))
    return world, scene, task


@dataclass
class _Rollout:
    episode_id: str
    world: object
    scene: object
    task: TaskSpec
    entry: object = None
    toks: Optional[TokenSeq] = None
    done: bool = False
    steps: int = 0


def _batched_actions(model: PolicyModel, active: list) -> list[Action]:
    """Greedy actions for every active rollout, batching equal-length instructions."""
    groups: dict[int, list[int]] = {}
    for j, r in enumerate(active):
        groups.setdefault(len(r.toks), []).append(j)
    acts: list = [None] * len(active)
    for idx in groups.values():
        rs = [active[j] for j in idx]
        E = np.stack([r.entry.E_mllm for r in rs])
        toks = stack_tokens([r.toks for r in rs])
        grids = np.stack([observe(r.world).grid for r in rs])
        z = model.logits(E, toks, grids).data
        for j, k in zip(idx, z.argmax(axis=-1)):
            acts[j] = ACTIONS[int(k)]
    return acts


def evaluate(model: Optional[PolicyModel], cfg: TrainConfig, variant: str = "custom",
             final_loss: float = float("nan"), expert: bool = False,
             embedder: Optional[FrozenInstructionEmbedder] = None) -> Metrics:
    """Greedy rollouts on fresh seeded instances.

    The augmented instruction and its frozen embedding are computed at the
    first step of each episode and reused for the rest of it.
    """
    vocab = model.vocab if model is not None else Vocab.default()
    embedder = embedder or build_embedder(cfg, vocab)
    calls_before = embedder.calls
    store = EmbeddingCacheStore(render=cfg.render(), sector=cfg.sector)
    runs = [_Rollout(f"{cfg.family}-{cfg.seed}-{i}", *eval_instance(cfg, i))
            for i in range(cfg.eval_episodes)]
    for t in range(1, HORIZON + 1):
        active = [r for r in runs if not r.done]
        if not active:
            break
        for r in active:
            r.entry = store.get_or_create(r.episode_id, r.scene, r.task, embedder)
            if r.toks is None:
                r.toks = tokenize_text(r.entry.augmented_text, vocab)
        if expert:
            acts = [expert_action(r.world, r.task) for r in active]
        else:
            acts = _batched_actions(model, active)
        for r, a in zip(active, acts):
            r.world = step(r.world, a)
            r.steps = t
            r.done = success(r.world, r.task)
    wins = sum(r.done for r in runs)
    lengths = [r.steps for r in runs]
    return Metrics(
        family=cfg.family, regime=cfg.n_demos, variant=variant, seed=cfg.seed,
        success_rate=wins / cfg.eval_episodes,
        mean_episode_length=float(np.mean(lengths)) if lengths else 0.0,
        final_loss=final_loss, episodes=cfg.eval_episodes,
        embedder_calls=embedder.calls - calls_before,
    )


def run_cell(cfg: TrainConfig, variant: str) -> Metrics:
    vcfg = cfg.variant(variant)
    data = gen_dataset(vcfg)
    embedder = build_embedder(vcfg)
    result = train_bc(data, vcfg, embedder=embedder)
    return evaluate(result.model, vcfg, variant, final_loss=result.losses[-1] if result.losses else float("nan"),
                    embedder=embedder)


# --- ablation grid -----------------------------------------------------------------

CSV_COLUMNS = ("family", "regime", "variant", "seed", "success_rate")


@dataclass
class GridResult:
    rows: list[Metrics]
    failures: list[tuple[tuple, str]]
    elapsed: float

    def aggregate(self) -> list[dict]:
        groups: dict = {}
        for m in self.rows:
            groups.setdefault((m.family, m.regime, m.variant), []).append(m.success_rate)
            groups.setdefault(("all", m.regime, m.variant), []).append(m.success_rate)
        out = []
        for (fam, reg, var), vals in groups.items():
            out.append({"family": fam, "regime": reg, "variant": var, "seed": "mean",
                        "success_rate": float(np.mean(vals))})
        return out

    def mean(self, variant: str, regime: Optional[int] = None, family: Optional[int] = None) -> float:
        vals = [m.success_rate for m in self.rows if m.variant == variant
                and (regime is None or m.regime == regime) and (family is None or m.family == family)]
        return float(np.mean(vals)) if vals else float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for m in self.rows:
            w.writerow([m.family, m.regime, m.variant, m.seed, repr(m.success_rate)])
        for a in self.aggregate():
            w.writerow([a["family"], a["regime"], a["variant"], a["seed"], repr(a["success_rate"])])
        return buf.getvalue()

    def audit_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("family", "regime", "variant", "seed", "episodes", "embedder_calls"))
        for m in self.rows:
            w.writerow([m.family, m.regime, m.variant, m.seed, m.episodes, m.embedder_calls])
        return buf.getvalue()


@dataclass(frozen=True)
class GridSpec:
    families: tuple[int, ...] = (1, 2, 3, 4, 5)
    regimes: tuple[int, ...] = (10, 25)
    variants: tuple[str, ...] = tuple(VARIANTS)
    seeds: Optional[tuple[int, ...]] = None  # default: range(base.eval_seeds)


def grid_cells(base: TrainConfig, spec: GridSpec = GridSpec()):
    seeds = spec.seeds if spec.seeds is not None else tuple(range(base.eval_seeds))
    for fam in spec.families:
        for reg in spec.regimes:
            for var in spec.variants:
                for s in seeds:
                    yield replace(base, family=fam, n_demos=reg, seed=s), var


def _run_grid_cell(cell):
    cfg, var = cell
    try:
        return run_cell(cfg, var), None
    except Exception as e:  # recorded per cell
        return None, ((cfg.family, cfg.n_demos, var, cfg.seed), f"{type(e).__name__}: {e}")


def run_ablation_grid(base: TrainConfig, spec: GridSpec = GridSpec(), jobs: int = 1,
                      progress: Optional[Callable[[Metrics], None]] = None) -> GridResult:
    """Train and evaluate every (family, regime, variant, seed) cell.

    A failing cell is recorded and the grid continues.
    """
    t0 = time.perf_counter()
    cells = list(grid_cells(base, spec))
    rows: list[Metrics] = []
    failures = []

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run_grid_cell, cells))
    else:
        results = []
        for c in cells:
            results.append(_run_grid_cell(c))
            if progress and results[-1][0] is not None:
                progress(results[-1][0])
    for m, fail in results:
        if m is not None:
            rows.append(m)
        else:
            failures.append(fail)
    return GridResult(rows, failures, time.perf_counter() - t0)
