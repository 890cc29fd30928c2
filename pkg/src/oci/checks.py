"""Self-test suites shared by the ``selftest`` command and the test-suite.

Each suite returns a :class:`SuiteResult` with a case count, the failures it
found and the largest error it measured.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autodiff as ad
from .augmenter import BANKS, FUNCTION_WORDS, RenderConfig, TaskSpec, augment, parse_augmented
from .autodiff import Param, Tensor
from .encoders import COLORS
from .frm import FrmConfig, FrmParams, frm_forward, frm_forward_split, ln_mlp, msc_downsample
from .geometry import BBox, Direction, Scene, SceneObject, SectorConfig, classify_direction

GRAD_TOLERANCE = 1e-4


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)
    max_error: float = 0.0
    detail: dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "cases": self.cases,
                "failures": len(self.failures), "max_error": self.max_error,
                "seconds": round(self.seconds, 3)}


# --- gradient checks -----------------------------------------------------------


def _p(rng: np.random.Generator, *shape, name: str = "x") -> Param:
    return Param(rng.normal(size=shape), name)


def _away_from_zero(rng: np.random.Generator, *shape) -> np.ndarray:
    """Values with |x| >= 0.1 so kinks sit far outside the finite-difference step."""
    return rng.choice([-1.0, 1.0], size=shape) * rng.uniform(0.1, 1.0, size=shape)


def _separated(rng: np.random.Generator, *shape) -> np.ndarray:
    """Distinct values at least 0.05 apart, so max selections cannot flip."""
    n = int(np.prod(shape))
    return (rng.permutation(n) * 0.05 + rng.uniform(-0.01, 0.01, size=n)).reshape(shape) - n * 0.025


def _weighted(f: Callable[[], Tensor], rng: np.random.Generator) -> Callable[[], Tensor]:
    """Scalarize ``f`` with a fixed random weighted sum so every output entry matters."""
    out = f()
    if out.data.ndim == 0:
        return f
    w = Tensor(rng.normal(size=out.shape))
    return lambda: ad.total(ad.mul(f(), w))


def _toy_frm(rng: np.random.Generator):
    cfg = FrmConfig(D=8, D_prime=8, n_heads=2, rates=(1, 2), conv_kernel=3)
    return cfg, FrmParams.init(cfg, rng)


def _op_cases() -> dict[str, Callable[[np.random.Generator], tuple[Callable[[], Tensor], list[Tensor]]]]:
    """Op name -> builder(rng) returning (function of the params, params to check)."""

    def elementwise(op):
        def build(rng):
            a, b = _p(rng, 3, 4), _p(rng, 3, 4)
            return (lambda: op(a, b)), [a, b]
        return build

    def unary(op, make=_p):
        def build(rng):
            x = Param(make(rng, 3, 5) if make is not _p else rng.normal(size=(3, 5)), "x")
            return (lambda: op(x)), [x]
        return build

    def matmul(rng):
        a, b = _p(rng, 2, 3, 4), _p(rng, 4, 5)
        return (lambda: ad.matmul(a, b)), [a, b]

    def linear(rng):
        x, w, b = _p(rng, 2, 3, 4), _p(rng, 4, 5), _p(rng, 5)
        return (lambda: ad.linear(x, w, b)), [x, w, b]

    def layer_norm(rng):
        x, g, b = _p(rng, 3, 6), _p(rng, 6), _p(rng, 6)
        return (lambda: ad.layer_norm(x, g, b)), [x, g, b]

    def attention(rng):
        q, k, v = _p(rng, 2, 3, 4), _p(rng, 2, 5, 4), _p(rng, 2, 5, 3)
        return (lambda: ad.attention(q, k, v)), [q, k, v]

    def attention_shared(rng):
        q, k1, v1 = _p(rng, 3, 4), _p(rng, 2, 4, 4), _p(rng, 2, 4, 3)
        k2, v2 = _p(rng, 5, 4), _p(rng, 5, 3)
        return (lambda: ad.attention_shared(q, k1, v1, k2, v2)), [q, k1, v1, k2, v2]

    def conv(rng):
        x, k = _p(rng, 2, 7, 3), _p(rng, 3, 3)
        return (lambda: ad.depthwise_conv1d(x, k)), [x, k]

    def concat(rng):
        a, b = _p(rng, 2, 3), _p(rng, 4, 3)
        return (lambda: ad.concat([a, b], axis=0)), [a, b]

    def rows(rng):
        x = _p(rng, 2, 6, 3)
        return (lambda: ad.rows(x, 1, 4)), [x]

    def reshape(rng):
        x = _p(rng, 2, 6)
        return (lambda: ad.reshape(x, (3, 4))), [x]

    def broadcast(rng):
        x = _p(rng, 4, 3)
        return (lambda: ad.broadcast_to(x, (2, 4, 3))), [x]

    def pad_rows(rng):
        x = _p(rng, 3, 2)
        return (lambda: ad.pad_rows(x, 5)), [x]

    def max_pool(rng):
        x = Param(_separated(rng, 2, 5, 3), "x")
        return (lambda: ad.max_pool(x, axis=-2)), [x]

    def maximum(rng):
        v = _separated(rng, 2, 3, 4)
        a, b = Param(v[0], "a"), Param(v[1], "b")
        return (lambda: ad.maximum(a, b)), [a, b]

    def mean(rng):
        x = _p(rng, 3, 4)
        return (lambda: ad.mean(x, axis=0)), [x]

    def embedding(rng):
        table = _p(rng, 6, 3)
        ids = rng.integers(0, 6, size=(2, 4))
        return (lambda: ad.embedding(table, ids)), [table]

    def cross_entropy(rng):
        z = _p(rng, 5, 6)
        t = rng.integers(0, 6, size=5)
        return (lambda: ad.cross_entropy(z, t)), [z]

    def msc(rng):
        M, w, b = _p(rng, 7, 3), _p(rng, 6, 3), _p(rng, 3)
        return (lambda: msc_downsample(M, 2, w, b)), [M, w, b]

    def ln_mlp_case(rng):
        cfg, params = _toy_frm(rng)
        E = _p(rng, 2, 8)
        return (lambda: ln_mlp(E, params)), [E] + params.ln_mlp_params()

    def frm_case(rng):
        cfg, params = _toy_frm(rng)
        E, M = _p(rng, 2, 8), _p(rng, 4, 8)
        return (lambda: frm_forward(E, M, params, cfg)), [E, M] + params.attention_params()

    def frm_split_case(rng):
        cfg, params = _toy_frm(rng)
        E, Mi, Mt = _p(rng, 2, 8), _p(rng, 2, 4, 8), _p(rng, 3, 8)
        return (lambda: frm_forward_split(E, Mi, Mt, params, cfg)), \
            [E, Mi, Mt] + params.attention_params()

    def policy_loss(rng):
        # frozen features -> ln_mlp -> FRM -> pooled -> three-layer head -> cross-entropy
        cfg, params = _toy_frm(rng)
        E = Tensor(rng.normal(size=(2, 8)))
        M = _p(rng, 3, 4, 8, name="M")
        hidden = 8
        w1, b1 = Param(ad.glorot(rng, 16, hidden), "w1"), Param(rng.uniform(0.1, 0.3, hidden), "b1")
        w2, b2 = Param(ad.glorot(rng, hidden, hidden), "w2"), Param(rng.uniform(0.1, 0.3, hidden), "b2")
        w3, b3 = Param(ad.glorot(rng, hidden, 6), "w3"), Param(np.zeros(6), "b3")
        targets = rng.integers(0, 6, size=3)

        def f():
            Ep = ln_mlp(E, params)
            fused = ad.mean(frm_forward(ad.broadcast_to(Ep, (3, 2, 8)), M, params, cfg), axis=-2)
            feat = ad.concat([fused, ad.mean(M, axis=-2)], axis=-1)
            h = ad.relu(ad.linear(feat, w1, b1))
            h = ad.relu(ad.linear(h, w2, b2))
            return ad.cross_entropy(ad.linear(h, w3, b3), targets)

        return f, [M, w1, b1, w2, b2, w3, b3] + params.params()

    return {
        "add": elementwise(ad.add),
        "sub": elementwise(ad.sub),
        "mul": elementwise(ad.mul),
        "scale": unary(lambda x: ad.scale(x, -1.7)),
        "square": unary(ad.square),
        "relu": unary(ad.relu, make=_away_from_zero),
        "transpose": unary(ad.transpose),
        "softmax_rows": unary(ad.softmax_rows),
        "total": unary(ad.total),
        "matmul": matmul,
        "linear": linear,
        "layer_norm": layer_norm,
        "attention": attention,
        "attention_shared": attention_shared,
        "depthwise_conv1d": conv,
        "concat": concat,
        "rows": rows,
        "reshape": reshape,
        "broadcast_to": broadcast,
        "pad_rows": pad_rows,
        "max_pool": max_pool,
        "maximum": maximum,
        "mean": mean,
        "embedding": embedding,
        "cross_entropy": cross_entropy,
        "msc_downsample": msc,
        "ln_mlp": ln_mlp_case,
        "frm_forward": frm_case,
        "frm_forward_split": frm_split_case,
        "policy_loss": policy_loss,
    }


GRAD_CASES = tuple(_op_cases())


def grad_suite(n_inputs: int = 10, seed: int = 0, ops=None) -> SuiteResult:
    """Central-difference check of every differentiable op on seeded inputs."""
    t0 = time.perf_counter()
    res = SuiteResult("grad_check")
    cases = _op_cases()
    for i, name in enumerate(ops or cases):
        worst = 0.0
        for k in range(n_inputs):
            rng = np.random.default_rng([seed, i, k])
            f, params = cases[name](rng)
            err = ad.grad_check(_weighted(f, rng), params)
            worst = max(worst, err)
            res.cases += 1
            if not err < GRAD_TOLERANCE:
                res.failures.append(f"{name} input {k}: relative error {err:.3g}")
        res.detail[name] = worst
        res.max_error = max(res.max_error, worst)
    res.seconds = time.perf_counter() - t0
    return res


# --- augmentation round trip -----------------------------------------------------

_ADJECTIVES = ("", "", "polar", "small", "large", "wooden", "striped", "middle", "round")
_NOUNS = ("bear", "cube", "box", "toy", "lid", "block", "bowl", "cup", "plate", "drawer")


def _random_box(rng: np.random.Generator) -> BBox:
    x0, x1 = np.sort(rng.uniform(0.0, 1.0, 2))
    y0, y1 = np.sort(rng.uniform(0.0, 1.0, 2))
    if rng.random() < 0.1:
        # touch the image border to exercise the 0 and 1 literals
        x0, y1 = 0.0, 1.0
    return BBox(float(x0), float(y0), float(max(x1, x0 + 1e-3)), float(max(y1, y0 + 1e-3)))


def random_case(rng: np.random.Generator) -> tuple[Scene, TaskSpec, RenderConfig]:
    """A valid scene, a task naming one or two of its objects and a render config."""
    n = int(rng.integers(2, 5))
    names: list[str] = []
    while len(names) < n:
        adj, noun = _ADJECTIVES[rng.integers(len(_ADJECTIVES))], _NOUNS[rng.integers(len(_NOUNS))]
        name = f"{adj} {noun}".strip()
        if name not in names and not set(name.split()) & FUNCTION_WORDS:
            names.append(name)
    objects = []
    for name in names:
        color = COLORS[rng.integers(len(COLORS))] if rng.random() < 0.7 else ""
        objects.append(SceneObject(name, _random_box(rng), kind=name.split()[-1], color=color))
    robot = _random_box(rng)
    scene = Scene(tuple(objects), robot, (int(rng.integers(64, 2000)), int(rng.integers(64, 2000))))
    if rng.random() < 0.5:
        bank = BANKS["pick_place"]
        target, dest = rng.choice(n, size=2, replace=False)
        task = TaskSpec(bank[rng.integers(len(bank))], names[target], names[dest])
    else:
        bank = BANKS["open"]
        task = TaskSpec(bank[rng.integers(len(bank))], names[rng.integers(n)])
    cfg = RenderConfig(decimals=int(rng.integers(1, 7)), canonical=bool(rng.random() < 0.5),
                       ablate_abs=bool(rng.random() < 0.25), ablate_rel=bool(rng.random() < 0.25))
    return scene, task, cfg


def roundtrip_suite(n: int = 1000, seed: int = 0) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("roundtrip")
    rng = np.random.default_rng([seed, 31337])
    for i in range(n):
        scene, task, cfg = random_case(rng)
        structured, text = augment(scene, task, cfg)
        res.cases += 1
        try:
            parsed = parse_augmented(text)
        except ValueError as e:
            res.failures.append(f"case {i}: parse error {e} on {text!r}")
            continue
        if parsed != structured:
            res.failures.append(f"case {i}: mismatch on {text!r}")
        res.max_error = max(res.max_error, _box_error(parsed, structured))
    res.seconds = time.perf_counter() - t0
    return res


def _box_error(a, b) -> float:
    if len(a.mentions) != len(b.mentions):
        return math.inf
    errs = [abs(u - v) for ma, mb in zip(a.mentions, b.mentions) for u, v in zip(ma.bbox, mb.bbox)]
    return max(errs, default=0.0)


# --- direction oracle ------------------------------------------------------------

_SECTOR_CENTERS = {
    Direction.Right: 0.0, Direction.UpperRight: 45.0, Direction.Top: 90.0, Direction.UpperLeft: 135.0,
    Direction.Left: 180.0, Direction.BottomLeft: 225.0, Direction.Bottom: 270.0, Direction.BottomRight: 315.0,
}


def oracle_direction(dx: float, dy: float, cfg: SectorConfig = SectorConfig()) -> Direction:
    """Brute force: test each sector predicate on the atan2 angle.

    A sector around center c with half-width w holds the angles
    c - w < theta <= c + w (mod 360), with y flipped so up is positive.
    """
    theta = math.degrees(math.atan2(-dy, dx)) % 360.0
    h = cfg.cardinal_half_angle_deg
    hits = []
    for d, c in _SECTOR_CENTERS.items():
        w = h if c % 90.0 == 0.0 else 45.0 - h
        lo, hi = c - w, c + w
        for t in (theta, theta - 360.0, theta + 360.0):
            if lo < t <= hi:
                hits.append(d)
                break
    if len(hits) != 1:
        raise AssertionError(f"oracle found {len(hits)} sectors for angle {theta}")
    return hits[0]


def direction_suite(n_pairs: int = 10_000, n_angles: int = 3600, seed: int = 0) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("direction_oracle")
    cfg = SectorConfig()
    rng = np.random.default_rng([seed, 4242])
    for i in range(n_pairs):
        obj, robot = _random_box(rng), _random_box(rng)
        cx = (obj.x_min + obj.x_max) / 2 - (robot.x_min + robot.x_max) / 2
        cy = (obj.y_min + obj.y_max) / 2 - (robot.y_min + robot.y_max) / 2
        got, want = classify_direction(obj, robot, cfg), oracle_direction(cx, cy, cfg)
        res.cases += 1
        if got != want:
            res.failures.append(f"pair {i}: {got.word} != oracle {want.word}")
    for k in range(n_angles):
        a = math.radians(k * 360.0 / n_angles)
        dx, dy = 0.1 * math.cos(a), -0.1 * math.sin(a)
        robot = BBox(0.4, 0.4, 0.6, 0.6)
        obj = BBox(0.5 + dx - 0.05, 0.5 + dy - 0.05, 0.5 + dx + 0.05, 0.5 + dy + 0.05)
        cx = (obj.x_min + obj.x_max) / 2 - 0.5
        cy = (obj.y_min + obj.y_max) / 2 - 0.5
        got, want = classify_direction(obj, robot, cfg), oracle_direction(cx, cy, cfg)
        res.cases += 1
        if got != want:
            res.failures.append(f"angle {k * 360.0 / n_angles:.1f}: {got.word} != oracle {want.word}")
    res.max_error = float(len(res.failures))
    res.seconds = time.perf_counter() - t0
    return res


# --- expert optimality ------------------------------------------------------------


def _grid_bfs(width: int, height: int, start: tuple[int, int]) -> dict[tuple[int, int], int]:
    """Plain single-source BFS over the 4-connected grid."""
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for x, y in frontier:
            for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                if 0 <= nb[0] < width and 0 <= nb[1] < height and nb not in dist:
                    dist[nb] = dist[(x, y)] + 1
                    nxt.append(nb)
        frontier = nxt
    return dist


def oracle_demo_length(world, task) -> int:
    """Steps to reach the target, grasp it, reach the nearest valid free cell and release."""
    target = world.cell_of(task.target_name)
    to_target = _grid_bfs(world.width, world.height, world.gripper)[target]
    others = {c for it, c in zip(world.items, world.cells) if it.name != task.target_name and c is not None}
    if task.destination_name is None:
        goals = [(x, y) for x in range(world.width) for y in range(world.height)
                 if not any(b.contains((x, y)) for b in world.containers)]
    else:
        goals = world.container(task.destination_name).cells()
    from_target = _grid_bfs(world.width, world.height, target)
    to_goal = min(from_target[g] for g in goals if g not in others)
    return to_target + 1 + to_goal + 1


def expert_suite(n_per_family: int = 1000, seed: int = 0) -> SuiteResult:
    from .sim import HORIZON, TaskFamily, expert_demo, sample_scene, step, success

    t0 = time.perf_counter()
    res = SuiteResult("expert_optimality")
    longest = 0
    for fam in TaskFamily:
        for i in range(n_per_family):
            s = seed * 1_000_003 + i
            world, _, task = sample_scene(fam, s)
            demo = expert_demo(world, task)
            res.cases += 1
            want = oracle_demo_length(world, task)
            longest = max(longest, len(demo))
            if len(demo) != want:
                res.failures.append(f"family {int(fam)} seed {s}: demo {len(demo)} != oracle {want}")
            if len(demo) > HORIZON:
                res.failures.append(f"family {int(fam)} seed {s}: {len(demo)} steps exceeds horizon")
            if success(world, task):
                res.failures.append(f"family {int(fam)} seed {s}: solved at the initial state")
            cur = world
            for a in demo.actions():
                cur = step(cur, a)
            if not success(cur, task):
                res.failures.append(f"family {int(fam)} seed {s}: replay does not succeed")
    res.detail["longest_demo"] = float(longest)
    res.max_error = float(len(res.failures))
    res.seconds = time.perf_counter() - t0
    return res


def run_all(quick: bool = False) -> list[SuiteResult]:
    if quick:
        return [grad_suite(n_inputs=2), roundtrip_suite(n=100), direction_suite(n_pairs=1000, n_angles=360),
                expert_suite(n_per_family=50)]
    return [grad_suite(), roundtrip_suite(), direction_suite(), expert_suite()]
