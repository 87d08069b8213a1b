"""Procedural scenes, tasks and templated instructions."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .action import ExpertFailed, run_expert
from .lang import Plan, Subtask
from .worldsim import (AgentState, Cell, Heading, ObjectFlags, ObjectHeld, ObjectInReceptacle,
                       ObjectInstance, ObjectState, ObjectType, Scene, TaskSpec, Temperature,
                       check_goal_conditions)

T = ObjectType

PARAPHRASE_LEVELS = ("canonical", "synonym", "distractor")
TASK_SHAPES = ("pickup", "pick_place", "toggle", "clean_place",
               "cool_place", "heat_place", "slice_place")

FIXTURES = (T.Sink, T.Microwave, T.Fridge, T.Lamp, T.Knife, T.Table, T.Cabinet)
SMALL_ITEMS = (T.Bowl, T.Cup, T.Apple, T.Potato, T.Tomato)
DISHES = frozenset({T.Bowl, T.Cup})

# (manipulated object types, destination receptacles)
SHAPE_ARGS = {
    "pickup": (SMALL_ITEMS + (T.Knife,), ()),
    "pick_place": (SMALL_ITEMS, (T.Cabinet, T.Table, T.Fridge)),
    "toggle": ((T.Lamp,), ()),
    "clean_place": ((T.Bowl, T.Cup), (T.Cabinet, T.Table)),
    "heat_place": ((T.Apple, T.Potato, T.Tomato, T.Cup), (T.Cabinet, T.Table)),
    "cool_place": ((T.Apple, T.Potato, T.Tomato, T.Cup), (T.Cabinet, T.Table)),
    "slice_place": ((T.Apple, T.Potato, T.Tomato), (T.Cabinet, T.Table)),
}

TEMPLATES = {
    "pickup": "pick up the {obj}",
    "pick_place": "put a {obj} {prep} the {recep}",
    "toggle": "turn on the {obj}",
    "clean_place": "put a clean {obj} {prep} the {recep}",
    "heat_place": "heat the {obj} and put it {prep} the {recep}",
    "cool_place": "cool the {obj} and put it {prep} the {recep}",
    "slice_place": "put a sliced {obj} {prep} the {recep}",
}

SYNONYMS = {
    "put": ("place", "set"),
    "pick up": ("grab", "take"),
    "turn on": ("switch on",),
    "clean": ("washed", "rinsed"),
    "heat": ("warm",),
    "cool": ("chill",),
    "sliced": ("chopped", "cut"),
    "bowl": ("dish",),
    "cup": ("mug",),
    "potato": ("spud",),
    "knife": ("blade",),
    "sink": ("basin",),
    "fridge": ("refrigerator",),
    "microwave": ("oven",),
    "cabinet": ("cupboard",),
    "table": ("counter", "desk"),
    "lamp": ("light",),
}

DISTRACTOR_PREFIXES = (
    "when you get a chance", "okay so", "listen", "if it is not too much trouble",
    "after you look around the kitchen", "good morning",
)
DISTRACTOR_SUFFIXES = (
    "thanks", "and then wait for me", "because guests are coming soon",
    "the window looks nice by the way", "no rush",
)
DISTRACTOR_INSERTS = ("if you can", "you know which one", "as we discussed")
# prefix, suffix, mid-sentence
DISTRACTOR_POSITION_WEIGHTS = (0.4, 0.4, 0.2)


class GenerationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    min_size: int = 8
    max_size: int = 11
    min_objects: int = 3
    max_objects: int = 6
    obstacle_density: float = 0.2
    paraphrase_level: str = "canonical"
    task_weights: tuple = field(default_factory=lambda: tuple((s, 1.0) for s in TASK_SHAPES))
    max_attempts: int = 50

    def __post_init__(self):
        if not 0.0 <= self.obstacle_density < 1.0:
            raise ValueError("obstacle_density must lie in [0, 1)")
        if not 5 <= self.min_size <= self.max_size:
            raise ValueError("grid size range must satisfy 5 <= min_size <= max_size")
        if not 0 <= self.min_objects <= self.max_objects:
            raise ValueError("object count range is invalid")
        if self.paraphrase_level not in PARAPHRASE_LEVELS:
            raise ValueError(f"paraphrase_level must be one of {PARAPHRASE_LEVELS}")
        weights = dict(self.task_weights)
        if set(weights) - set(TASK_SHAPES):
            raise ValueError(f"unknown task shapes {set(weights) - set(TASK_SHAPES)}")
        if any(w < 0 for w in weights.values()) or sum(weights.values()) <= 0:
            raise ValueError("task weights must be non-negative with a positive sum")


@dataclass(frozen=True)
class Instruction:
    text: str
    source_plan: Plan
    seed: int


def _rng(seed: int, stream: int, attempt: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, stream, attempt])


def _neighbors4(c: Cell):
    x, y = c
    return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))


def connected(cells: set) -> bool:
    """Flood fill: are ``cells`` one 4-connected region?"""
    if not cells:
        return True
    start = next(iter(cells))
    seen = {start}
    queue = deque([start])
    while queue:
        for n in _neighbors4(queue.popleft()):
            if n in cells and n not in seen:
                seen.add(n)
                queue.append(n)
    return len(seen) == len(cells)


def _has_free_neighbor(cell: Cell, free: set) -> bool:
    x, y = cell
    return any((x + dx, y + dy) in free for dx in (-1, 0, 1) for dy in (-1, 0, 1)
               if (dx, dy) != (0, 0))


def _try_scene(seed: int, config: GenConfig, attempt: int) -> Optional[Scene]:
    rng = _rng(seed, 1, attempt)
    w = int(rng.integers(config.min_size, config.max_size + 1))
    h = int(rng.integers(config.min_size, config.max_size + 1))
    walls = {(x, y) for x in range(w) for y in range(h)
             if x in (0, w - 1) or y in (0, h - 1)}
    interior = [(x, y) for y in range(1, h - 1) for x in range(1, w - 1)]
    free = set(interior)
    n_walls = int(round(config.obstacle_density * len(interior)))
    order = [interior[i] for i in rng.permutation(len(interior))]
    for cell in order:
        if n_walls == 0:
            break
        free.discard(cell)
        if connected(free):
            walls.add(cell)
            n_walls -= 1
        else:
            free.add(cell)
    if n_walls:
        return None

    types = list(FIXTURES)
    if rng.random() < 0.5:
        types.append(T.Cabinet)
    k = int(rng.integers(config.min_objects, config.max_objects + 1))
    types += [SMALL_ITEMS[i] for i in rng.integers(0, len(SMALL_ITEMS), size=k)]

    placed: list[tuple[ObjectType, Cell]] = []
    for otype in types:
        candidates = sorted(free)
        for i in rng.permutation(len(candidates)):
            cell = candidates[i]
            rest = free - {cell}
            if not connected(rest):
                continue
            if all(_has_free_neighbor(c, rest) for _, c in placed + [(otype, cell)]):
                free = rest
                placed.append((otype, cell))
                break
        else:
            return None
    if not free:
        return None
    spots = sorted(free)
    agent_cell = spots[int(rng.integers(0, len(spots)))]
    heading = (Heading.N, Heading.E, Heading.S, Heading.W)[int(rng.integers(0, 4))]
    objects = tuple(
        ObjectInstance(i + 1, otype, cell, states=ObjectFlags(dirty=otype in DISHES))
        for i, (otype, cell) in enumerate(placed))
    scene = Scene(w, h, frozenset(walls), objects, AgentState(agent_cell, heading), seed)
    scene.validate()
    return scene


def generate_scene(seed: int, config: GenConfig = GenConfig()) -> Scene:
    """Random connected household grid; deterministic in ``(seed, config)``."""
    for attempt in range(config.max_attempts):
        scene = _try_scene(seed, config, attempt)
        if scene is not None:
            return scene
    raise GenerationFailed(f"no valid scene for seed {seed} after {config.max_attempts} attempts")


def ground_truth_plan(task: TaskSpec) -> Plan:
    o, r = task.object_type, task.receptacle_type
    S = Subtask
    steps = {
        "pickup": [(S.PickUp, o)],
        "pick_place": [(S.PickUp, o), (S.Place, r)],
        "toggle": [(S.Toggle, o)],
        "clean_place": [(S.PickUp, o), (S.Clean, T.Sink), (S.Place, r)],
        "heat_place": [(S.PickUp, o), (S.Heat, T.Microwave), (S.Place, r)],
        "cool_place": [(S.PickUp, o), (S.Cool, T.Fridge), (S.Place, r)],
        "slice_place": [(S.PickUp, T.Knife), (S.Slice, o), (S.Place, r),
                        (S.PickUp, o), (S.Place, r)],
    }[task.shape]
    return Plan(tuple(steps))


def _conditions(shape: str, o: ObjectType, r: Optional[ObjectType]) -> tuple:
    inside = ObjectInReceptacle(o, r) if r is not None else None
    return {
        "pickup": (ObjectHeld(o),),
        "pick_place": (inside,),
        "toggle": (ObjectState(o, "powered", True),),
        "clean_place": (ObjectState(o, "dirty", False), inside),
        "heat_place": (ObjectState(o, "temperature", Temperature.hot), inside),
        "cool_place": (ObjectState(o, "temperature", Temperature.cold), inside),
        "slice_place": (ObjectState(o, "sliced", True), inside),
    }[shape]


def expert_path_length(scene: Scene, task: TaskSpec) -> int:
    """Step count of the privileged shortest-path expert on ``task``."""
    final, actions = run_expert(scene, ground_truth_plan(task))
    if check_goal_conditions(final, task) != 1.0:
        raise ExpertFailed("expert finished its plan without meeting every goal")
    return len(actions)


def _task_options(scene: Scene, shape: str) -> list[tuple[ObjectType, Optional[ObjectType]]]:
    counts: dict[ObjectType, int] = {}
    for o in scene.objects:
        counts[o.type] = counts.get(o.type, 0) + 1
    objs, receps = SHAPE_ARGS[shape]
    objs = [o for o in objs if counts.get(o) == 1]
    if not receps:
        return [(o, None) for o in objs]
    return [(o, r) for o in objs for r in receps if counts.get(r)]


def generate_task(seed: int, scene: Scene, config: GenConfig = GenConfig()) -> TaskSpec:
    """Pick an achievable task for ``scene`` and fill in its expert path length."""
    rng = _rng(seed, 2)
    weights = dict(config.task_weights)
    shapes = [s for s in TASK_SHAPES if weights.get(s, 0) > 0]
    p = np.array([weights[s] for s in shapes], dtype=float)
    p /= p.sum()
    for _ in range(config.max_attempts):
        shape = shapes[int(rng.choice(len(shapes), p=p))]
        options = _task_options(scene, shape)
        if not options:
            continue
        o, r = options[int(rng.integers(0, len(options)))]
        task = TaskSpec(_conditions(shape, o, r), 1, shape, o, r)
        if check_goal_conditions(scene, task) != 0.0:
            continue
        try:
            length = expert_path_length(scene, task)
        except ExpertFailed:
            continue
        return replace(task, expert_path_length=length)
    raise GenerationFailed(f"no achievable task for seed {seed}")


def _choose(rng: np.random.Generator, word: str, level: str) -> str:
    if level == "canonical" or word not in SYNONYMS:
        return word
    options = (word,) + SYNONYMS[word]
    return options[int(rng.integers(0, len(options)))]


def _fix_articles(words: list[str]) -> list[str]:
    out = list(words)
    for i, w in enumerate(out[:-1]):
        if w in ("a", "an"):
            out[i] = "an" if out[i + 1][0] in "aeiou" else "a"
    return out


def generate_instruction(task: TaskSpec, seed: int, config: GenConfig = GenConfig()) -> Instruction:
    level = config.paraphrase_level
    rng = _rng(seed, 3)
    recep = task.receptacle_type
    text = TEMPLATES[task.shape].format(
        obj=_choose(rng, task.object_type.value.lower(), level),
        recep="" if recep is None else _choose(rng, recep.value.lower(), level),
        prep="on" if recep == T.Table else "in")
    for phrase in ("pick up", "turn on", "put", "clean", "heat", "cool", "sliced"):
        if phrase in text.split() or (" " in phrase and text.startswith(phrase)):
            text = text.replace(phrase, _choose(rng, phrase, level), 1)
    words = _fix_articles(text.split())
    if level == "distractor":
        where = int(rng.choice(3, p=DISTRACTOR_POSITION_WEIGHTS))
        if where == 0:
            clause = DISTRACTOR_PREFIXES[int(rng.integers(0, len(DISTRACTOR_PREFIXES)))]
            words = clause.split() + [","] + words
        elif where == 1:
            clause = DISTRACTOR_SUFFIXES[int(rng.integers(0, len(DISTRACTOR_SUFFIXES)))]
            words = words + [","] + clause.split()
        else:
            clause = DISTRACTOR_INSERTS[int(rng.integers(0, len(DISTRACTOR_INSERTS)))]
            at = next(i for i, w in enumerate(words) if w in ("a", "an", "the"))
            words = words[:at] + [","] + clause.split() + [","] + words[at:]
    text = " ".join(words).replace(" ,", ",")
    return Instruction(text, ground_truth_plan(task), seed)
