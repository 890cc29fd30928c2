"""Position-aware instruction augmentation and its inverse parser.

An augmented instruction keeps the user's command verbatim, inserts the
bounding box of every referenced object right after its name, and appends
one sentence per object giving its direction from the robot::

    Pick up the polar bear [0.396, 0.682, 0.516, 0.786] to the blue box
    [0.641, 0.302, 1.000, 0.646]. The white polar bear is on the bottom of
    the robotic arm [0.052, 0.000, 0.552, 0.342]. ...
"""
from __future__ import annotations

import random
import re
import string
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Optional, Sequence

from .geometry import (
    BBox,
    Direction,
    GeometryError,
    Scene,
    SectorConfig,
    classify_direction,
    validate_scene,
)


class AugmentError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class ParaphraseError(ValueError):
    pass


# --- templates ---------------------------------------------------------------

PICK_PLACE_TEMPLATES: tuple[str, ...] = (
    "Grab {target} and set it on {destination}.",
    "Take {target} and position it on {destination}.",
    "Lift {target} and put it onto {destination}.",
    "pick up the {target} and place it on the {destination}.",
    "Move the {target} onto the {destination}.",
    "Put the {target} on the {destination}.",
    "Place the {target} on top of the {destination}.",
    "Carry the {target} over to the {destination}.",
    "Transfer the {target} to the {destination}.",
    "Set the {target} down on the {destination}.",
    "Bring the {target} to the {destination}.",
    "Drop the {target} into the {destination}.",
)

OPEN_TEMPLATES: tuple[str, ...] = (
    "Open the {target}.",
    "Lift the {target} off.",
    "Remove the {target}.",
    "Take off the {target}.",
    "Pull the {target} open.",
    "Raise the {target} and set it aside.",
    "Pick up the {target} and put it aside.",
    "Slide the {target} away.",
    "Get the {target} out of the way.",
    "Clear the {target} away.",
    "Uncover it by moving the {target} away.",
)

BANKS = {"pick_place": PICK_PLACE_TEMPLATES, "open": OPEN_TEMPLATES}


def _template_words(templates: Sequence[str]) -> set[str]:
    words = set()
    for t in templates:
        literal = re.sub(r"\{[a-z_]+\}", " ", t)
        words.update(w.lower() for w in re.findall(r"[A-Za-z]+", literal))
    return words


# Words that can never be part of an object name. A bracket tuple binds to the
# longest run of other words right before it.
FUNCTION_WORDS = frozenset(
    {"a", "an", "the", "to", "on", "onto", "in", "into", "at", "of", "from", "and",
     "it", "up", "with", "by", "off", "then", "is", "please", "robotic", "arm"}
    | _template_words(PICK_PLACE_TEMPLATES)
    | _template_words(OPEN_TEMPLATES)
)


@dataclass(frozen=True)
class TaskSpec:
    verb_template: str
    target_name: str
    destination_name: Optional[str] = None

    def __post_init__(self):
        fields = [f for _, f, _, _ in string.Formatter().parse(self.verb_template) if f is not None]
        want = ["target"] + (["destination"] if self.destination_name is not None else [])
        for slot in want:
            if fields.count(slot) != 1:
                raise AugmentError(f"template must contain {{{slot}}} exactly once: {self.verb_template!r}")
        extra = set(fields) - set(want)
        if extra:
            raise AugmentError(f"template has undeclared slots {sorted(extra)}: {self.verb_template!r}")

    @property
    def bank(self) -> str:
        return "pick_place" if self.destination_name is not None else "open"

    def slot_values(self) -> dict[str, str]:
        d = {"target": self.target_name}
        if self.destination_name is not None:
            d["destination"] = self.destination_name
        return d

    def referenced(self) -> list[str]:
        """Object names in order of first appearance in the instruction."""
        order = [f for _, f, _, _ in string.Formatter().parse(self.verb_template) if f]
        values = self.slot_values()
        return [values[f] for f in order]

    def instruction(self) -> str:
        return self.verb_template.format(**self.slot_values())

    def with_template(self, template: str) -> "TaskSpec":
        return TaskSpec(template, self.target_name, self.destination_name)

    def to_dict(self) -> dict:
        return {
            "verb_template": self.verb_template,
            "target_name": self.target_name,
            "destination_name": self.destination_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        unknown = set(d) - {"verb_template", "target_name", "destination_name"}
        if unknown:
            raise AugmentError(f"unknown task fields: {sorted(unknown)}")
        try:
            return cls(d["verb_template"], d["target_name"], d.get("destination_name"))
        except KeyError as e:
            raise AugmentError(f"missing task field: {e.args[0]}") from None


@dataclass(frozen=True)
class Mention:
    name: str
    bbox: BBox


@dataclass(frozen=True)
class RelativeClause:
    name: str
    direction: Direction
    robot_bbox: Optional[BBox]


@dataclass(frozen=True)
class AugmentedInstruction:
    original: str
    mentions: tuple[Mention, ...] = ()
    relative_clauses: tuple[RelativeClause, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mentions", tuple(self.mentions))
        object.__setattr__(self, "relative_clauses", tuple(self.relative_clauses))


@dataclass(frozen=True)
class RenderConfig:
    decimals: int = 3
    canonical: bool = True
    ablate_abs: bool = False
    ablate_rel: bool = False

    def __post_init__(self):
        if self.decimals < 1:
            raise AugmentError("decimals must be >= 1")

    @property
    def places(self) -> int:
        return 3 if self.canonical else self.decimals


# --- rendering ---------------------------------------------------------------


def _quantum(places: int) -> Decimal:
    return Decimal(1).scaleb(-places)


def quantize(x: float, places: int = 3) -> float:
    """Round half-even at ``places`` decimals, on the shortest decimal repr of x."""
    return float(Decimal(repr(float(x))).quantize(_quantum(places), rounding=ROUND_HALF_EVEN))


def quantize_bbox(b: BBox, places: int = 3) -> BBox:
    return BBox(*(quantize(v, places) for v in b))


def render_number(x: float, cfg: RenderConfig = RenderConfig()) -> str:
    d = Decimal(repr(float(x))).quantize(_quantum(cfg.places), rounding=ROUND_HALF_EVEN)
    s = f"{d:f}"
    if s.startswith("-") and d == 0:
        s = s[1:]
    if not cfg.canonical:
        s = s.rstrip("0").rstrip(".") if "." in s else s
    return s


def render_bbox(b: BBox, cfg: RenderConfig = RenderConfig()) -> str:
    return "[" + ", ".join(render_number(v, cfg) for v in b) + "]"


def describe(name: str, color: str) -> str:
    """Noun phrase for a relative sentence: the color is prefixed unless already named."""
    if not color or color.lower() in name.lower().split():
        return name
    return f"{color} {name}"


def relative_sentence(phrase: str, direction: Direction, robot_text: Optional[str]) -> str:
    tail = f" {robot_text}" if robot_text else ""
    return f"The {phrase} is on the {direction.word} of the robotic arm{tail}."


def augment(
    scene: Scene,
    task: TaskSpec,
    cfg: RenderConfig = RenderConfig(),
    sector: SectorConfig = SectorConfig(),
) -> tuple[AugmentedInstruction, str]:
    """Return the structured augmentation and its rendered text.

    Boxes in the structured form are stored at the rendered precision so
    that parsing the text reproduces it exactly.
    """
    problems = validate_scene(scene)
    if problems:
        raise AugmentError("invalid scene: " + ", ".join(f"{p.code}({p.name})" for p in problems))
    names = task.referenced()
    objs = {}
    for n in names:
        try:
            objs[n] = scene.get(n)
        except KeyError:
            raise AugmentError(f"task references unknown object {n!r}") from None

    original = task.instruction()
    places = cfg.places
    robot_q = quantize_bbox(scene.robot_ref, places)

    mentions: list[Mention] = []
    clauses: list[RelativeClause] = []
    sentences: list[str] = []
    if not cfg.ablate_abs:
        mentions = [Mention(n, quantize_bbox(objs[n].bbox, places)) for n in names]
        slots = {
            slot: f"{name} {render_bbox(objs[name].bbox, cfg)}"
            for slot, name in task.slot_values().items()
        }
        body = task.verb_template.format(**slots)
    else:
        body = original
    if not cfg.ablate_rel:
        robot_text = None if cfg.ablate_abs else render_bbox(scene.robot_ref, cfg)
        for n in names:
            # GeometryError (ambiguous direction) propagates to the caller
            d = classify_direction(objs[n].bbox, scene.robot_ref, sector)
            clauses.append(RelativeClause(n, d, None if cfg.ablate_abs else robot_q))
            sentences.append(relative_sentence(describe(n, objs[n].color), d, robot_text))

    text = " ".join([body] + sentences)
    return AugmentedInstruction(original, tuple(mentions), tuple(clauses)), text


# --- parsing -----------------------------------------------------------------

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)\Z")
_BRACKET = re.compile(r"\[([^\[\]]*)\]")
_CLAUSE = re.compile(
    r"The (?P<phrase>[^.\[\]]+?) is on the (?P<dir>[A-Za-z-]+) of the robotic arm"
    r"(?: (?P<box>\[[^\[\]]*\]))?\.\Z"
)
_WORD = re.compile(r"[A-Za-z0-9_'-]+")


def _byte_offset(text: str, idx: int) -> int:
    return len(text[:idx].encode("utf-8"))


def _parse_tuple(text: str, start: int, inner: str) -> BBox:
    parts = [p.strip() for p in inner.split(",")]
    off = _byte_offset(text, start)
    if len(parts) != 4 or not all(parts):
        raise ParseError(f"bracket tuple must hold 4 numbers, got {len(parts) if any(parts) else 0}", off)
    vals = []
    for p in parts:
        if not _NUMBER.match(p):
            raise ParseError(f"not a decimal literal: {p!r}", off)
        v = float(p)
        if not 0.0 <= v <= 1.0:
            raise ParseError(f"coordinate {p} outside [0, 1]", off)
        vals.append(v)
    return BBox(*vals)


def _phrase_before(text: str, end: int) -> str:
    """Longest run of non-function words ending at ``end``."""
    words = list(_WORD.finditer(text, 0, end))
    start = None
    prev_start = end
    for m in reversed(words):
        gap = text[m.end():prev_start]
        if gap.strip() or m.group().lower() in FUNCTION_WORDS:
            break
        start = m.start()
        prev_start = m.start()
    if start is None:
        return ""
    return text[start:end].strip()


def _resolve_name(phrase: str, mention_names: Sequence[str], original: str) -> str:
    words = phrase.split(" ")
    for i in range(len(words)):
        cand = " ".join(words[i:])
        if cand in mention_names:
            return cand
    for i in range(len(words)):
        cand = " ".join(words[i:])
        if re.search(r"(?<![\w-])" + re.escape(cand) + r"(?![\w-])", original):
            return cand
    return phrase


def _split_clauses(text: str) -> tuple[str, list[tuple[int, re.Match]]]:
    """Peel relative sentences off the end of ``text``; returns (body, clauses)."""
    found = []
    rest = text
    while True:
        match = None
        for m in reversed(list(re.finditer(r"(?:^| )The ", rest))):
            s = m.start() + (1 if rest[m.start()] == " " else 0)
            cm = _CLAUSE.match(rest, s)
            if cm:
                match = (s, cm)
                break
        if match is None:
            break
        found.append(match)
        rest = rest[: max(match[0] - 1, 0)] if match[0] > 0 else ""
    found.reverse()
    return rest, found


def parse_augmented(text: str) -> AugmentedInstruction:
    """Recover the structured form from augmented text.

    Accepts any decimal precision, including trimmed literals such as
    ``1`` or ``0.0``.
    """
    body, clause_matches = _split_clauses(text)

    mentions: list[Mention] = []
    pieces: list[str] = []
    pos = 0
    for m in _BRACKET.finditer(body):
        bbox = _parse_tuple(text, m.start(), m.group(1))
        name = _phrase_before(body, m.start())
        if not name:
            raise ParseError("bracket tuple does not follow a noun phrase", _byte_offset(text, m.start()))
        mentions.append(Mention(name, bbox))
        cut = m.start() - 1 if m.start() > 0 and body[m.start() - 1] == " " else m.start()
        pieces.append(body[pos:cut])
        pos = m.end()
    pieces.append(body[pos:])
    original = "".join(pieces)
    for ch in "[]":
        i = original.find(ch)
        if i >= 0:
            raise ParseError(f"unbalanced {ch!r}", _byte_offset(text, body.find(ch)))

    names = [mn.name for mn in mentions]
    clauses: list[RelativeClause] = []
    # clause matches were taken on prefixes of ``text``, so indices are absolute
    for _, cm in clause_matches:
        try:
            direction = Direction.from_word(cm.group("dir"))
        except GeometryError as e:
            raise ParseError(str(e), _byte_offset(text, cm.start("dir"))) from None
        robot = None
        if cm.group("box"):
            robot = _parse_tuple(text, cm.start("box"), cm.group("box")[1:-1])
        name = _resolve_name(cm.group("phrase"), names, original)
        clauses.append(RelativeClause(name, direction, robot))
    return AugmentedInstruction(original, tuple(mentions), tuple(clauses))


# --- paraphrasing ------------------------------------------------------------


@dataclass(frozen=True)
class ParaphraseBank:
    templates: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.templates)) != len(self.templates):
            raise ParaphraseError("templates must be pairwise distinct")
        if len(self.templates) < 10:
            raise ParaphraseError("a bank needs at least 10 templates")

    def __len__(self) -> int:
        return len(self.templates)

    def select(self, k: int, seed) -> list[str]:
        """The first ``k`` templates of the bank, in a seed-determined order."""
        if k < 0 or k > len(self.templates):
            raise ParaphraseError(f"k={k} exceeds bank size {len(self.templates)}")
        chosen = list(self.templates[:k])
        random.Random(seed).shuffle(chosen)
        return chosen


def bank_for(task: TaskSpec) -> ParaphraseBank:
    return ParaphraseBank(BANKS[task.bank])


def paraphrase(task: TaskSpec, k: int, seed=0) -> list[str]:
    bank = bank_for(task)
    values = task.slot_values()
    return [t.format(**values) for t in bank.select(k, seed)]
