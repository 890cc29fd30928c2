"""Deterministic tabletop grid world with pick-and-place tasks.

The gripper moves over an 8x8 grid; objects never block movement. Boxes are
container regions, not movable objects. A fixed gripper-home region at the
top-center is the robot reference for direction words.
"""
from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .augmenter import OPEN_TEMPLATES, PICK_PLACE_TEMPLATES, TaskSpec
from .encoders import CH_COLOR, CH_GRIPPER, CH_HOLDING, CH_KIND, COLORS, KINDS, N_CHANNELS, ObsTensor
from .geometry import BBox, Scene, SceneObject, normalize_bbox, scene_to_dict

HORIZON = 50
GRID = (8, 8)
CELL_PX = (80, 60)
HOME = (3, 0)
# robot reference: the two top-center cells
ROBOT_CELLS = (3, 0, 4, 0)

PICK_TEMPLATE = PICK_PLACE_TEMPLATES[3]
OPEN_TEMPLATE = OPEN_TEMPLATES[0]


class SimError(RuntimeError):
    pass


class Action(enum.Enum):
    MoveUp = "MoveUp"
    MoveDown = "MoveDown"
    MoveLeft = "MoveLeft"
    MoveRight = "MoveRight"
    Grasp = "Grasp"
    Release = "Release"

    @property
    def index(self) -> int:
        return ACTIONS.index(self)


ACTIONS = tuple(Action)
_MOVES = {
    Action.MoveUp: (0, -1),
    Action.MoveDown: (0, 1),
    Action.MoveLeft: (-1, 0),
    Action.MoveRight: (1, 0),
}
# expert tie-break: horizontal moves before vertical ones
_EXPERT_ORDER = (Action.MoveLeft, Action.MoveRight, Action.MoveUp, Action.MoveDown)


class TaskFamily(enum.IntEnum):
    CUBE_TO_SIDE_BOX = 1
    CUBE_BY_COLOR = 2
    OPEN_LID = 3
    TOY_AMONG_DISTRACTORS = 4
    CUBE_BY_POSITION = 5


@dataclass(frozen=True)
class Item:
    name: str
    kind: str
    color: str = ""


@dataclass(frozen=True)
class Container:
    name: str
    region: tuple[int, int, int, int]  # inclusive cell range x0, y0, x1, y1
    color: str = ""

    def contains(self, cell: tuple[int, int]) -> bool:
        x0, y0, x1, y1 = self.region
        return x0 <= cell[0] <= x1 and y0 <= cell[1] <= y1

    def cells(self) -> list[tuple[int, int]]:
        x0, y0, x1, y1 = self.region
        return [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)]


@dataclass(frozen=True)
class GridWorld:
    items: tuple[Item, ...]
    cells: tuple[Optional[tuple[int, int]], ...]  # aligned with items; None while held
    containers: tuple[Container, ...] = ()
    gripper: tuple[int, int] = HOME
    holding: Optional[str] = None
    width: int = GRID[0]
    height: int = GRID[1]

    def item_index(self, name: str) -> int:
        for i, it in enumerate(self.items):
            if it.name == name:
                return i
        raise KeyError(name)

    def cell_of(self, name: str) -> Optional[tuple[int, int]]:
        return self.cells[self.item_index(name)]

    def occupant(self, cell: tuple[int, int]) -> Optional[str]:
        for it, c in zip(self.items, self.cells):
            if c == cell:
                return it.name
        return None

    def container(self, name: str) -> Container:
        for c in self.containers:
            if c.name == name:
                return c
        raise KeyError(name)

    def in_container(self, cell: tuple[int, int]) -> bool:
        return any(c.contains(cell) for c in self.containers)

    def check(self) -> None:
        placed = [c for c in self.cells if c is not None]
        if len(set(placed)) != len(placed):
            raise SimError("two objects share a cell")
        if not (0 <= self.gripper[0] < self.width and 0 <= self.gripper[1] < self.height):
            raise SimError("gripper out of bounds")
        held = [it.name for it, c in zip(self.items, self.cells) if c is None]
        if held != ([self.holding] if self.holding else []):
            raise SimError("held object bookkeeping is inconsistent")


def step(w: GridWorld, a: Action) -> GridWorld:
    """Apply one action. Illegal actions leave the world unchanged."""
    if a in _MOVES:
        dx, dy = _MOVES[a]
        x = min(max(w.gripper[0] + dx, 0), w.width - 1)
        y = min(max(w.gripper[1] + dy, 0), w.height - 1)
        return w if (x, y) == w.gripper else replace(w, gripper=(x, y))
    if a is Action.Grasp:
        if w.holding is not None:
            return w
        name = w.occupant(w.gripper)
        if name is None:
            return w
        i = w.item_index(name)
        cells = w.cells[:i] + (None,) + w.cells[i + 1:]
        return replace(w, cells=cells, holding=name)
    if a is Action.Release:
        if w.holding is None or w.occupant(w.gripper) is not None:
            return w
        i = w.item_index(w.holding)
        cells = w.cells[:i] + (w.gripper,) + w.cells[i + 1:]
        return replace(w, cells=cells, holding=None)
    raise SimError(f"unknown action {a!r}")


def success(w: GridWorld, t: TaskSpec) -> bool:
    if w.holding == t.target_name:
        return False
    cell = w.cell_of(t.target_name)
    if t.destination_name is None:
        # lid family: the lid must sit outside every box
        return not w.in_container(cell)
    return w.container(t.destination_name).contains(cell)


# --- observation / scene -----------------------------------------------------


def observe(w: GridWorld) -> ObsTensor:
    g = np.zeros((w.width, w.height, N_CHANNELS))
    for c in w.containers:
        for x, y in c.cells():
            g[x, y, CH_KIND + KINDS.index("box")] = 1.0
            if c.color:
                g[x, y, CH_COLOR + COLORS.index(c.color)] = 1.0
    for it, cell in zip(w.items, w.cells):
        if cell is None:
            continue
        g[cell[0], cell[1], CH_KIND + KINDS.index(it.kind)] = 1.0
        if it.color:
            g[cell[0], cell[1], CH_COLOR + COLORS.index(it.color)] = 1.0
    g[w.gripper[0], w.gripper[1], CH_GRIPPER] = 1.0
    if w.holding is not None:
        g[:, :, CH_HOLDING] = 1.0
    return ObsTensor(g)


def image_size(w: GridWorld) -> tuple[int, int]:
    return (w.width * CELL_PX[0], w.height * CELL_PX[1])


def cells_bbox(x0: int, y0: int, x1: int, y1: int, w: GridWorld) -> BBox:
    cw, ch = CELL_PX
    return normalize_bbox((x0 * cw, y0 * ch, (x1 + 1) * cw, (y1 + 1) * ch), image_size(w))


def robot_bbox(w: GridWorld) -> BBox:
    return cells_bbox(*ROBOT_CELLS, w)


def world_scene(w: GridWorld) -> Scene:
    """Scene view of the world: placed objects first, then boxes."""
    objs = []
    for it, cell in zip(w.items, w.cells):
        if cell is not None:
            objs.append(SceneObject(it.name, cells_bbox(cell[0], cell[1], cell[0], cell[1], w), it.kind, it.color))
    for c in w.containers:
        objs.append(SceneObject(c.name, cells_bbox(*c.region, w), "box", c.color))
    return Scene(tuple(objs), robot_bbox(w), image_size(w))


# --- sampling ----------------------------------------------------------------


def _free_cells(rng, w_h, taken: set, rows=range(2, 8)) -> list[tuple[int, int]]:
    return [(x, y) for x in range(w_h[0]) for y in rows if (x, y) not in taken]


def _box_cells(x0, y0, size=2):
    return {(x, y) for x in range(x0, x0 + size) for y in range(y0, y0 + size)}


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _layout(family: TaskFamily, rng: np.random.Generator):
    items: list[Item] = []
    cells: list[tuple[int, int]] = []
    boxes: list[Container] = []
    taken: set = set()

    def place(item: Item, rows=range(2, 8)):
        cell = _pick(rng, _free_cells(rng, GRID, taken, rows))
        taken.add(cell)
        items.append(item)
        cells.append(cell)

    def add_box(name, x0, y0, size=2, color=""):
        region = (x0, y0, x0 + size - 1, y0 + size - 1)
        boxes.append(Container(name, region, color))
        taken.update(_box_cells(x0, y0, size))

    if family is TaskFamily.CUBE_TO_SIDE_BOX:
        add_box("left box", int(rng.integers(0, 2)), int(rng.integers(2, 7)))
        add_box("right box", int(rng.integers(5, 7)), int(rng.integers(2, 7)))
        color = _pick(rng, COLORS)
        place(Item(f"{color} cube", "cube", color))
        task = TaskSpec(PICK_TEMPLATE, f"{color} cube", _pick(rng, ["left box", "right box"]))
    elif family is TaskFamily.CUBE_BY_COLOR:
        add_box("box", int(rng.integers(0, 7)), int(rng.integers(2, 7)))
        colors = rng.choice(len(COLORS), size=3, replace=False)
        for ci in colors:
            c = COLORS[int(ci)]
            place(Item(f"{c} cube", "cube", c))
        task = TaskSpec(PICK_TEMPLATE, _pick(rng, [it.name for it in items]), "box")
    elif family is TaskFamily.OPEN_LID:
        bx, by = int(rng.integers(0, 8)), int(rng.integers(2, 8))
        add_box("box", bx, by, size=1)
        color = _pick(rng, COLORS)
        items.append(Item(f"{color} lid", "lid", color))
        cells.append((bx, by))
        other = _pick(rng, [c for c in COLORS if c != color])
        place(Item(f"{other} cube", "cube", other))
        task = TaskSpec(OPEN_TEMPLATE, f"{color} lid")
    elif family is TaskFamily.TOY_AMONG_DISTRACTORS:
        add_box("box", int(rng.integers(0, 7)), int(rng.integers(2, 7)))
        colors = rng.choice(len(COLORS), size=3, replace=False)
        toy_color = COLORS[int(colors[0])]
        place(Item("toy bear", "toy", toy_color))
        for ci in colors[1:]:
            c = COLORS[int(ci)]
            place(Item(f"{c} cube", "cube", c))
        task = TaskSpec(PICK_TEMPLATE, "toy bear", "box")
    elif family is TaskFamily.CUBE_BY_POSITION:
        add_box("box", int(rng.integers(0, 7)), 6)
        row = int(rng.integers(2, 6))
        cols = sorted(int(c) for c in rng.choice(8, size=3, replace=False))
        for label, col in zip(("left", "middle", "right"), cols):
            items.append(Item(f"{label} cube", "cube", ""))
            cells.append((col, row))
            taken.add((col, row))
        task = TaskSpec(PICK_TEMPLATE, _pick(rng, [it.name for it in items]), "box")
    else:  # pragma: no cover
        raise SimError(f"unknown family {family}")
    world = GridWorld(tuple(items), tuple(cells), tuple(boxes))
    return world, task


def sample_scene(family, seed, max_tries: int = 100) -> tuple[GridWorld, Scene, TaskSpec]:
    """Sample a solvable instance of ``family``; deterministic per seed."""
    family = TaskFamily(int(family))
    rng = np.random.default_rng([int(family), int(seed)])
    for _ in range(max_tries):
        world, task = _layout(family, rng)
        world.check()
        try:
            demo = expert_demo(world, task)
        except SimError:
            continue
        if demo.outcome and len(demo) <= HORIZON and not success(world, task):
            return world, world_scene(world), task
    raise SimError(f"no solvable instance of family {int(family)} after {max_tries} tries (seed {seed})")


# --- expert ------------------------------------------------------------------


def bfs_distances(width: int, height: int, goals: Iterable[tuple[int, int]]) -> np.ndarray:
    """Multi-source breadth-first distances to the nearest goal cell (-1 if unreachable)."""
    dist = -np.ones((width, height), dtype=np.int64)
    q = deque()
    for g in goals:
        if dist[g] < 0:
            dist[g] = 0
            q.append(g)
    while q:
        x, y = q.popleft()
        for dx, dy in _MOVES.values():
            nx, ny = x + dx, y + dy
            if 0 <= nx < width and 0 <= ny < height and dist[nx, ny] < 0:
                dist[nx, ny] = dist[x, y] + 1
                q.append((nx, ny))
    return dist


def target_goals(w: GridWorld, t: TaskSpec) -> list[tuple[int, int]]:
    cell = w.cell_of(t.target_name)
    if cell is None:
        raise SimError(f"target {t.target_name!r} is not on the table")
    return [cell]


def release_goals(w: GridWorld, t: TaskSpec) -> list[tuple[int, int]]:
    """Free cells where releasing the target completes the task."""
    if t.destination_name is None:
        cand = [(x, y) for x in range(w.width) for y in range(w.height) if not w.in_container((x, y))]
    else:
        cand = w.container(t.destination_name).cells()
    return [c for c in cand if w.occupant(c) is None]


@dataclass
class Episode:
    task: TaskSpec
    scene: Scene
    trajectory: list[tuple[ObsTensor, Action]] = field(default_factory=list)
    outcome: bool = False
    horizon: int = HORIZON
    aug_text: str = ""

    def __len__(self):
        return len(self.trajectory)

    def actions(self) -> list[Action]:
        return [a for _, a in self.trajectory]


def _walk(w: GridWorld, goals: list[tuple[int, int]]) -> list[Action]:
    if not goals:
        raise SimError("no reachable goal cell")
    dist = bfs_distances(w.width, w.height, goals)
    x, y = w.gripper
    if dist[x, y] < 0:
        raise SimError("goal unreachable")
    out = []
    while dist[x, y] > 0:
        for a in _EXPERT_ORDER:
            dx, dy = _MOVES[a]
            nx, ny = x + dx, y + dy
            if 0 <= nx < w.width and 0 <= ny < w.height and dist[nx, ny] == dist[x, y] - 1:
                out.append(a)
                x, y = nx, ny
                break
    return out


def expert_plan(w: GridWorld, t: TaskSpec) -> list[Action]:
    """Shortest route to the target, Grasp, shortest route to a free goal cell, Release."""
    if w.holding is not None and w.holding != t.target_name:
        raise SimError("expert cannot recover while holding a different object")
    plan: list[Action] = []
    if w.holding is None:
        plan += _walk(w, target_goals(w, t))
        plan.append(Action.Grasp)
        w_grasp = w
        for a in plan:
            w_grasp = step(w_grasp, a)
    else:
        w_grasp = w
    goals = release_goals(w_grasp, t)
    plan += _walk(w_grasp, goals)
    plan.append(Action.Release)
    return plan


def expert_action(w: GridWorld, t: TaskSpec) -> Action:
    return expert_plan(w, t)[0]


def expert_demo(w: GridWorld, t: TaskSpec, horizon: int = HORIZON) -> Episode:
    plan = expert_plan(w, t)
    if len(plan) > horizon:
        raise SimError(f"expert needs {len(plan)} steps, horizon is {horizon}")
    ep = Episode(task=t, scene=world_scene(w), horizon=horizon)
    cur = w
    for a in plan:
        ep.trajectory.append((observe(cur), a))
        cur = step(cur, a)
    ep.outcome = success(cur, t)
    if not ep.outcome:
        raise SimError("expert plan did not solve the task")
    return ep


# --- JSON lines ----------------------------------------------------------------


def episode_to_json(ep: Episode) -> str:
    return json.dumps({
        "task": ep.task.to_dict(),
        "scene": scene_to_dict(ep.scene),
        "aug_text": ep.aug_text,
        "steps": [{"obs": o.grid.astype(np.int64).tolist(), "action": a.value} for o, a in ep.trajectory],
        "success": bool(ep.outcome),
    })


def episode_from_json(line: str) -> Episode:
    from .geometry import scene_from_dict

    d = json.loads(line)
    unknown = set(d) - {"task", "scene", "aug_text", "steps", "success"}
    if unknown:
        raise SimError(f"unknown episode fields: {sorted(unknown)}")
    ep = Episode(task=TaskSpec.from_dict(d["task"]), scene=scene_from_dict(d["scene"]),
                 aug_text=d["aug_text"], outcome=bool(d["success"]))
    for s in d["steps"]:
        ep.trajectory.append((ObsTensor(np.asarray(s["obs"], dtype=np.float64)), Action(s["action"])))
    return ep


def write_jsonl(path, episodes: Iterable[Episode]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ep in episodes:
            f.write(episode_to_json(ep) + "\n")


def read_jsonl(path) -> list[Episode]:
    with open(path, encoding="utf-8") as f:
        return [episode_from_json(line) for line in f if line.strip()]
