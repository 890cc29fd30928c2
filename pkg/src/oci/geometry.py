"""Normalized boxes, scenes and the eight-way direction classifier.

Coordinates follow the image convention: x grows to the right, y grows
downward, both normalized to [0, 1] by the image size.
"""
from __future__ import annotations

import bisect
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence


class GeometryError(ValueError):
    pass


class AmbiguousDirectionError(GeometryError):
    """Object and reference centers coincide, so no direction exists."""


class SceneFormatError(GeometryError):
    pass


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __iter__(self):
        return iter((self.x_min, self.y_min, self.x_max, self.y_max))

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def problems(self) -> list[str]:
        """Names of the fields that break the box invariants."""
        bad = []
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                bad.append(name)
        if not bad:
            if self.x_min > self.x_max:
                bad.append("x_min>x_max")
            if self.y_min > self.y_max:
                bad.append("y_min>y_max")
        return bad

    def is_valid(self) -> bool:
        return not self.problems()

    def has_area(self) -> bool:
        return self.x_max > self.x_min and self.y_max > self.y_min

    @classmethod
    def checked(cls, x_min, y_min, x_max, y_max) -> "BBox":
        b = cls(float(x_min), float(y_min), float(x_max), float(y_max))
        bad = b.problems()
        if bad:
            raise GeometryError(f"invalid bbox {b.as_list()}: {', '.join(bad)}")
        return b


@dataclass(frozen=True)
class Point:
    x: float
    y: float


class Direction(enum.Enum):
    """Eight directions, valued by the word used in instruction text."""

    Left = "left"
    Right = "right"
    Top = "top"
    Bottom = "bottom"
    UpperLeft = "upper-left"
    UpperRight = "upper-right"
    BottomLeft = "bottom-left"
    BottomRight = "bottom-right"

    @property
    def word(self) -> str:
        return self.value

    @classmethod
    def from_word(cls, word: str) -> "Direction":
        try:
            return cls(word.lower())
        except ValueError:
            valid = ", ".join(d.value for d in cls)
            raise GeometryError(f"unknown direction {word!r}; expected one of: {valid}") from None

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITE[self]


_OPPOSITE = {
    Direction.Left: Direction.Right,
    Direction.Right: Direction.Left,
    Direction.Top: Direction.Bottom,
    Direction.Bottom: Direction.Top,
    Direction.UpperLeft: Direction.BottomRight,
    Direction.BottomRight: Direction.UpperLeft,
    Direction.UpperRight: Direction.BottomLeft,
    Direction.BottomLeft: Direction.UpperRight,
}

# counterclockwise from +x with y pointing up on screen
_CCW_ORDER = (
    Direction.Right,
    Direction.UpperRight,
    Direction.Top,
    Direction.UpperLeft,
    Direction.Left,
    Direction.BottomLeft,
    Direction.Bottom,
    Direction.BottomRight,
)


@dataclass(frozen=True)
class SectorConfig:
    cardinal_half_angle_deg: float = 22.5
    tie_epsilon: float = 1e-12

    def __post_init__(self):
        h = self.cardinal_half_angle_deg
        if not (0.0 < h <= 45.0):
            raise GeometryError(f"cardinal_half_angle_deg must be in (0, 45], got {h}")
        if not self.tie_epsilon >= 0.0:
            raise GeometryError("tie_epsilon must be non-negative")

    def sector_ends(self) -> list[float]:
        """Upper (inclusive) ends in degrees of Right, UpperRight, ..., BottomRight.

        Right wraps through 0, so its end is the half-angle itself and the
        last sector, BottomRight, ends at 360 minus the half-angle.
        """
        h = self.cardinal_half_angle_deg
        ends = []
        for k in range(4):
            ends.append(90.0 * k + h)
            ends.append(90.0 * (k + 1) - h)
        return ends


@dataclass(frozen=True)
class SceneObject:
    name: str
    bbox: BBox
    kind: str = "cube"
    color: str = ""


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    robot_ref: BBox
    image_size: tuple[int, int] = (640, 480)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "image_size", tuple(self.image_size))

    def get(self, name: str) -> SceneObject:
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise KeyError(name)

    def names(self) -> list[str]:
        return [o.name for o in self.objects]


def bbox_center(b: BBox) -> Point:
    return Point((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)


def normalize_bbox(pixel_box: Sequence[int], image_size: Sequence[int]) -> BBox:
    """Divide a pixel box by the image width/height."""
    w, h = image_size
    if w <= 0 or h <= 0:
        raise GeometryError(f"image_size must be positive, got {tuple(image_size)}")
    x0, y0, x1, y1 = pixel_box
    checks = (
        ("x_min", 0 <= x0 <= w),
        ("y_min", 0 <= y0 <= h),
        ("x_max", 0 <= x1 <= w and x0 <= x1),
        ("y_max", 0 <= y1 <= h and y0 <= y1),
    )
    for fname, ok in checks:
        if not ok:
            raise GeometryError(
                f"pixel box {tuple(pixel_box)} out of range for image {tuple(image_size)}: {fname}"
            )
    return BBox(x0 / w, y0 / h, x1 / w, y1 / h)


def direction_angle(dx: float, dy: float) -> float:
    """Angle in degrees [0, 360) of an image-space offset, counterclockwise on screen."""
    deg = math.degrees(math.atan2(-dy, dx))
    return deg % 360.0


def classify_offset(dx: float, dy: float, cfg: SectorConfig = SectorConfig()) -> Direction:
    if abs(dx) <= cfg.tie_epsilon and abs(dy) <= cfg.tie_epsilon:
        raise AmbiguousDirectionError(f"ambiguous direction: offset ({dx}, {dy}) within tie_epsilon")
    # sectors are (start, end]; angles past the last end wrap back into Right
    idx = bisect.bisect_left(cfg.sector_ends(), direction_angle(dx, dy))
    return _CCW_ORDER[idx % 8]


def classify_direction(obj: BBox, robot: BBox, cfg: SectorConfig = SectorConfig()) -> Direction:
    """Direction of ``obj``'s center as seen from ``robot``'s center."""
    c_obj = bbox_center(obj)
    c_ref = bbox_center(robot)
    return classify_offset(c_obj.x - c_ref.x, c_obj.y - c_ref.y, cfg)


# --- scene validation -------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str = field(init=False, default="violation")
    name: str = ""


@dataclass(frozen=True)
class DuplicateName(Violation):
    code: str = field(init=False, default="duplicate_name")


@dataclass(frozen=True)
class InvalidBox(Violation):
    code: str = field(init=False, default="invalid_box")


@dataclass(frozen=True)
class DegenerateBox(Violation):
    code: str = field(init=False, default="degenerate_box")


@dataclass(frozen=True)
class EmptyName(Violation):
    code: str = field(init=False, default="empty_name")


@dataclass(frozen=True)
class InvalidRobotRef(Violation):
    code: str = field(init=False, default="invalid_robot_ref")


@dataclass(frozen=True)
class InvalidImageSize(Violation):
    code: str = field(init=False, default="invalid_image_size")


def validate_scene(s: Scene) -> list[Violation]:
    out: list[Violation] = []
    w_h = s.image_size
    if len(w_h) != 2 or not all(isinstance(v, int) and v > 0 for v in w_h):
        out.append(InvalidImageSize(str(w_h)))
    if not s.robot_ref.is_valid():
        out.append(InvalidRobotRef("robot_ref"))
    seen: set[str] = set()
    reported: set[str] = set()
    for obj in s.objects:
        if not obj.name.strip():
            out.append(EmptyName(obj.name))
        elif obj.name in seen and obj.name not in reported:
            out.append(DuplicateName(obj.name))
            reported.add(obj.name)
        seen.add(obj.name)
        if not obj.bbox.is_valid():
            out.append(InvalidBox(obj.name))
        elif not obj.bbox.has_area():
            out.append(DegenerateBox(obj.name))
    return out


# --- JSON ------------------------------------------------------------------

_SCENE_KEYS = ("image_size", "robot_ref", "objects")
_OBJECT_KEYS = ("name", "kind", "color", "bbox")


def _bbox_from_json(raw: Any, where: str) -> BBox:
    if not isinstance(raw, list) or len(raw) != 4:
        raise SceneFormatError(f"{where}: bbox must be a list of 4 numbers")
    try:
        return BBox(*(float(v) for v in raw))
    except (TypeError, ValueError):
        raise SceneFormatError(f"{where}: bbox entries must be numbers") from None


def scene_to_dict(s: Scene) -> dict:
    return {
        "image_size": list(s.image_size),
        "robot_ref": s.robot_ref.as_list(),
        "objects": [
            {"name": o.name, "kind": o.kind, "color": o.color, "bbox": o.bbox.as_list()}
            for o in s.objects
        ],
    }


def scene_from_dict(d: Any) -> Scene:
    if not isinstance(d, dict):
        raise SceneFormatError("scene must be a JSON object")
    unknown = set(d) - set(_SCENE_KEYS)
    if unknown:
        raise SceneFormatError(f"unknown scene fields: {sorted(unknown)}")
    missing = [k for k in _SCENE_KEYS if k not in d]
    if missing:
        raise SceneFormatError(f"missing scene fields: {missing}")
    size = d["image_size"]
    if not (isinstance(size, list) and len(size) == 2 and all(isinstance(v, int) for v in size)):
        raise SceneFormatError("image_size must be [width, height] integers")
    objects = []
    for i, raw in enumerate(d["objects"]):
        if not isinstance(raw, dict):
            raise SceneFormatError(f"objects[{i}] must be an object")
        unknown = set(raw) - set(_OBJECT_KEYS)
        if unknown:
            raise SceneFormatError(f"objects[{i}]: unknown fields {sorted(unknown)}")
        if "name" not in raw or "bbox" not in raw:
            raise SceneFormatError(f"objects[{i}]: 'name' and 'bbox' are required")
        objects.append(
            SceneObject(
                name=str(raw["name"]),
                bbox=_bbox_from_json(raw["bbox"], f"objects[{i}]"),
                kind=str(raw.get("kind", "")),
                color=str(raw.get("color", "")),
            )
        )
    return Scene(tuple(objects), _bbox_from_json(d["robot_ref"], "robot_ref"), tuple(size))


def scene_to_json(s: Scene) -> str:
    return json.dumps(scene_to_dict(s))


def scene_from_json(text: str) -> Scene:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneFormatError(f"malformed scene JSON: {e}") from None
    return scene_from_dict(d)


def opposite_pairs() -> Iterable[tuple[Direction, Direction]]:
    return _OPPOSITE.items()
