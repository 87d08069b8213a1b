"""Deterministic grid-household simulator.

Coordinates are ``(x, y)`` with ``x`` growing east and ``y`` growing south, so
heading ``N`` moves toward smaller ``y``.  All state objects are frozen; every
transition returns a fresh :class:`Scene` and leaves its input untouched.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Optional, Union

Cell = tuple[int, int]


class ObjectType(str, enum.Enum):
    Bowl = "Bowl"
    Cup = "Cup"
    Apple = "Apple"
    Potato = "Potato"
    Tomato = "Tomato"
    Knife = "Knife"
    Sink = "Sink"
    Fridge = "Fridge"
    Microwave = "Microwave"
    Cabinet = "Cabinet"
    Table = "Table"
    Lamp = "Lamp"

    def __str__(self) -> str:
        return self.value


PICKUPABLE = frozenset({ObjectType.Bowl, ObjectType.Cup, ObjectType.Apple,
                        ObjectType.Potato, ObjectType.Tomato, ObjectType.Knife})
SLICEABLE = frozenset({ObjectType.Apple, ObjectType.Potato, ObjectType.Tomato})
RECEPTACLES = frozenset({ObjectType.Sink, ObjectType.Fridge, ObjectType.Microwave,
                         ObjectType.Cabinet, ObjectType.Table})
APPLIANCES = frozenset({ObjectType.Sink, ObjectType.Fridge, ObjectType.Microwave,
                        ObjectType.Lamp})


class Heading(str, enum.Enum):
    N = "N"
    E = "E"
    S = "S"
    W = "W"

    @property
    def vector(self) -> Cell:
        return _HEADING_VECTORS[self]

    def left(self) -> "Heading":
        return _ORDER[(_ORDER.index(self) - 1) % 4]

    def right(self) -> "Heading":
        return _ORDER[(_ORDER.index(self) + 1) % 4]

    @classmethod
    def from_vector(cls, vec: Cell) -> "Heading":
        for h, v in _HEADING_VECTORS.items():
            if v == vec:
                return h
        raise ValueError(f"not a unit grid vector: {vec}")


_ORDER = (Heading.N, Heading.E, Heading.S, Heading.W)
_HEADING_VECTORS = {Heading.N: (0, -1), Heading.E: (1, 0),
                    Heading.S: (0, 1), Heading.W: (-1, 0)}


class Temperature(str, enum.Enum):
    hot = "hot"
    cold = "cold"
    room = "room"


@dataclass(frozen=True)
class ObjectFlags:
    dirty: bool = False
    temperature: Temperature = Temperature.room
    sliced: bool = False
    powered: bool = False


@dataclass(frozen=True)
class ObjectInstance:
    id: int
    type: ObjectType
    # None while carried by the agent; contained objects share the receptacle's cell
    cell: Optional[Cell]
    contents: tuple[int, ...] = ()
    states: ObjectFlags = field(default_factory=ObjectFlags)

    @property
    def is_receptacle(self) -> bool:
        return self.type in RECEPTACLES

    @property
    def is_appliance(self) -> bool:
        return self.type in APPLIANCES


@dataclass(frozen=True)
class AgentState:
    cell: Cell
    heading: Heading = Heading.N
    inventory: Optional[int] = None


@dataclass(frozen=True)
class Scene:
    width: int
    height: int
    walls: frozenset
    objects: tuple[ObjectInstance, ...]
    agent: AgentState
    rng_seed: int = 0

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def get(self, obj_id: int) -> Optional[ObjectInstance]:
        for obj in self.objects:
            if obj.id == obj_id:
                return obj
        return None

    def of_type(self, otype: ObjectType) -> list[ObjectInstance]:
        return [o for o in self.objects if o.type == otype]

    def container_of(self, obj_id: int) -> Optional[ObjectInstance]:
        for obj in self.objects:
            if obj_id in obj.contents:
                return obj
        return None

    def occupancy(self) -> dict[Cell, ObjectInstance]:
        """Map each occupied cell to its top-level (uncontained) object."""
        contained = {i for o in self.objects for i in o.contents}
        return {o.cell: o for o in self.objects
                if o.cell is not None and o.id not in contained}

    def is_blocked(self, cell: Cell, occupancy: Optional[dict] = None) -> bool:
        if not self.in_bounds(cell) or cell in self.walls:
            return True
        occ = self.occupancy() if occupancy is None else occupancy
        return cell in occ

    def free_cells(self) -> set[Cell]:
        occ = self.occupancy()
        return {(x, y) for x in range(self.width) for y in range(self.height)
                if (x, y) not in self.walls and (x, y) not in occ}

    def validate(self) -> None:
        """Raise ``ValueError`` if a structural invariant is violated."""
        for w in self.walls:
            if not self.in_bounds(w):
                raise ValueError(f"wall out of bounds: {w}")
        if not self.in_bounds(self.agent.cell) or self.agent.cell in self.walls:
            raise ValueError("agent must stand on an in-bounds floor cell")
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate object ids")
        by_id = {o.id: o for o in self.objects}
        contained: dict[int, int] = {}
        for o in self.objects:
            if o.contents and not o.is_receptacle:
                raise ValueError(f"object {o.id} holds contents but is not a receptacle")
            if o.states.powered and not o.is_appliance:
                raise ValueError(f"object {o.id} is powered but not an appliance")
            for c in o.contents:
                if c not in by_id or c in contained:
                    raise ValueError(f"bad containment of {c}")
                contained[c] = o.id
                if by_id[c].cell != o.cell:
                    raise ValueError(f"contained object {c} not at its receptacle's cell")
        held = self.agent.inventory
        seen: dict[Cell, int] = {}
        for o in self.objects:
            if o.id == held:
                if o.cell is not None or o.id in contained:
                    raise ValueError("carried object must have no cell")
                continue
            if o.cell is None:
                raise ValueError(f"object {o.id} has no cell and is not carried")
            if not self.in_bounds(o.cell) or o.cell in self.walls:
                raise ValueError(f"object {o.id} on a wall or out of bounds")
            if o.cell == self.agent.cell:
                raise ValueError(f"object {o.id} shares the agent's cell")
            if o.id not in contained:
                if o.cell in seen:
                    raise ValueError(f"objects {seen[o.cell]} and {o.id} share a cell")
                seen[o.cell] = o.id
        if held is not None and held not in by_id:
            raise ValueError("agent holds an unknown object")


# --- actions -----------------------------------------------------------------

@dataclass(frozen=True)
class MoveAhead:
    pass


@dataclass(frozen=True)
class RotateLeft:
    pass


@dataclass(frozen=True)
class RotateRight:
    pass


@dataclass(frozen=True)
class PickUp:
    id: int


@dataclass(frozen=True)
class Put:
    id: int


@dataclass(frozen=True)
class ToggleOn:
    id: int


@dataclass(frozen=True)
class ToggleOff:
    id: int


@dataclass(frozen=True)
class Slice:
    id: int


LowLevelAction = Union[MoveAhead, RotateLeft, RotateRight, PickUp, Put,
                       ToggleOn, ToggleOff, Slice]
_ACTION_CLASSES = {cls.__name__: cls for cls in
                   (MoveAhead, RotateLeft, RotateRight, PickUp, Put,
                    ToggleOn, ToggleOff, Slice)}


def action_to_str(action: LowLevelAction) -> str:
    name = type(action).__name__
    if hasattr(action, "id"):
        return f"{name}({action.id})"
    return name


def action_from_str(text: str) -> LowLevelAction:
    text = text.strip()
    if text.endswith(")"):
        name, arg = text[:-1].split("(", 1)
        return _ACTION_CLASSES[name](int(arg))
    return _ACTION_CLASSES[text]()


class Failure(str, enum.Enum):
    Blocked = "Blocked"
    OutOfRange = "OutOfRange"
    Precondition = "Precondition"


@dataclass(frozen=True)
class ActionResult:
    failure: Optional[Failure] = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.failure is None

    def __str__(self) -> str:
        return "Ok" if self.failure is None else f"Failed({self.failure.value})"


OK = ActionResult()
INTERACTION_RANGE = 1

_TRANSFORMS = {
    ObjectType.Sink: {"dirty": False},
    ObjectType.Microwave: {"temperature": Temperature.hot},
    ObjectType.Fridge: {"temperature": Temperature.cold},
}


def _fail(kind: Failure, detail: str) -> ActionResult:
    return ActionResult(kind, detail)


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _replace_objects(scene: Scene, changed: Iterable[ObjectInstance]) -> tuple:
    new = {o.id: o for o in changed}
    return tuple(new.get(o.id, o) for o in scene.objects)


def step(scene: Scene, action: LowLevelAction) -> tuple[Scene, ActionResult]:
    """Apply one low-level action.  On any failure the input scene is returned."""
    agent = scene.agent
    if isinstance(action, RotateLeft):
        return replace(scene, agent=replace(agent, heading=agent.heading.left())), OK
    if isinstance(action, RotateRight):
        return replace(scene, agent=replace(agent, heading=agent.heading.right())), OK
    if isinstance(action, MoveAhead):
        dx, dy = agent.heading.vector
        ahead = (agent.cell[0] + dx, agent.cell[1] + dy)
        if scene.is_blocked(ahead):
            return scene, _fail(Failure.Blocked, f"cell {ahead} is not traversable")
        return replace(scene, agent=replace(agent, cell=ahead)), OK

    target = scene.get(action.id)
    if target is None:
        return scene, _fail(Failure.Precondition, f"no object {action.id}")
    if target.id == agent.inventory:
        return scene, _fail(Failure.Precondition, "target is being carried")
    if chebyshev(agent.cell, target.cell) > INTERACTION_RANGE:
        return scene, _fail(Failure.OutOfRange, f"object {target.id} at {target.cell}")

    if isinstance(action, PickUp):
        if agent.inventory is not None:
            return scene, _fail(Failure.Precondition, "inventory is full")
        if target.type not in PICKUPABLE:
            return scene, _fail(Failure.Precondition, f"{target.type} is not pickupable")
        changed = [replace(target, cell=None)]
        holder = scene.container_of(target.id)
        if holder is not None:
            changed.append(replace(holder, contents=tuple(
                c for c in holder.contents if c != target.id)))
        return replace(scene, objects=_replace_objects(scene, changed),
                       agent=replace(agent, inventory=target.id)), OK

    if isinstance(action, Put):
        if agent.inventory is None:
            return scene, _fail(Failure.Precondition, "nothing held")
        if not target.is_receptacle:
            return scene, _fail(Failure.Precondition, f"{target.type} is not a receptacle")
        held = scene.get(agent.inventory)
        changed = [replace(held, cell=target.cell),
                   replace(target, contents=target.contents + (held.id,))]
        return replace(scene, objects=_replace_objects(scene, changed),
                       agent=replace(agent, inventory=None)), OK

    if isinstance(action, ToggleOn):
        if not target.is_appliance:
            return scene, _fail(Failure.Precondition, f"{target.type} is not an appliance")
        if target.states.powered:
            return scene, _fail(Failure.Precondition, "already on")
        changed = [replace(target, states=replace(target.states, powered=True))]
        effect = _TRANSFORMS.get(target.type)
        if effect:
            for cid in target.contents:
                inner = scene.get(cid)
                changed.append(replace(inner, states=replace(inner.states, **effect)))
        return replace(scene, objects=_replace_objects(scene, changed)), OK

    if isinstance(action, ToggleOff):
        if not target.is_appliance:
            return scene, _fail(Failure.Precondition, f"{target.type} is not an appliance")
        if not target.states.powered:
            return scene, _fail(Failure.Precondition, "already off")
        changed = [replace(target, states=replace(target.states, powered=False))]
        return replace(scene, objects=_replace_objects(scene, changed)), OK

    if isinstance(action, Slice):
        held = scene.get(agent.inventory) if agent.inventory is not None else None
        if held is None or held.type != ObjectType.Knife:
            return scene, _fail(Failure.Precondition, "slicing needs a knife in hand")
        if target.type not in SLICEABLE:
            return scene, _fail(Failure.Precondition, f"{target.type} is not sliceable")
        if target.states.sliced:
            return scene, _fail(Failure.Precondition, "already sliced")
        changed = [replace(target, states=replace(target.states, sliced=True))]
        return replace(scene, objects=_replace_objects(scene, changed)), OK

    raise TypeError(f"unknown action {action!r}")


# --- goal conditions ------------------------------------------------------------

class InvalidTask(ValueError):
    pass


@dataclass(frozen=True)
class ObjectInReceptacle:
    type: ObjectType
    receptacle: ObjectType

    def holds(self, scene: Scene) -> bool:
        for r in scene.objects:
            if r.type == self.receptacle:
                for cid in r.contents:
                    inner = scene.get(cid)
                    if inner is not None and inner.type == self.type:
                        return True
        return False

    def __str__(self) -> str:
        return f"ObjectInReceptacle({self.type},{self.receptacle})"


@dataclass(frozen=True)
class ObjectState:
    type: ObjectType
    field: str
    value: Union[bool, Temperature]

    def holds(self, scene: Scene) -> bool:
        return any(getattr(o.states, self.field) == self.value
                   for o in scene.objects if o.type == self.type)

    def __str__(self) -> str:
        value = self.value.value if isinstance(self.value, Temperature) else str(self.value).lower()
        return f"ObjectState({self.type},{self.field},{value})"


@dataclass(frozen=True)
class ObjectHeld:
    type: ObjectType

    def holds(self, scene: Scene) -> bool:
        held = scene.agent.inventory
        return held is not None and scene.get(held).type == self.type

    def __str__(self) -> str:
        return f"ObjectHeld({self.type})"


GoalCondition = Union[ObjectInReceptacle, ObjectState, ObjectHeld]


@dataclass(frozen=True)
class TaskSpec:
    goal_conditions: tuple
    expert_path_length: int = 1
    shape: str = ""
    object_type: Optional[ObjectType] = None
    receptacle_type: Optional[ObjectType] = None


def check_goal_conditions(scene: Scene, task: TaskSpec) -> float:
    conds = task.goal_conditions
    if not conds:
        raise InvalidTask("task has no goal conditions")
    return sum(1 for c in conds if c.holds(scene)) / len(conds)


# --- observation ----------------------------------------------------------------

@dataclass(frozen=True)
class ObservationConfig:
    num_rays: int = 21
    fov_deg: float = 90.0
    max_depth: int = 15

    @property
    def angles(self) -> tuple[float, ...]:
        """Ray angles in degrees, negative to the agent's left."""
        if self.num_rays == 1:
            return (0.0,)
        half = self.fov_deg / 2
        stepsize = self.fov_deg / (self.num_rays - 1)
        return tuple(-half + i * stepsize for i in range(self.num_rays))


@dataclass(frozen=True)
class Ray:
    depth: int
    label: Optional[ObjectType]  # None is the empty label
    obstacle: bool


@dataclass(frozen=True)
class Observation:
    rays: tuple[Ray, ...]
    config: ObservationConfig


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@lru_cache(maxsize=None)
def ray_lateral_offsets(config: ObservationConfig) -> tuple[tuple[int, ...], ...]:
    """Per ray, the lateral cell offset at each forward distance 1..max_depth.

    Each ray visits exactly one cell per forward row; positive lateral is to
    the agent's right.
    """
    table = []
    for angle in config.angles:
        t = math.tan(math.radians(angle))
        table.append(tuple(round_half_away(f * t) for f in range(1, config.max_depth + 1)))
    return tuple(table)


def to_world(agent_heading: Heading, forward: int, lateral: int) -> Cell:
    """Rotate an (forward, right) offset into a world-axis offset."""
    fx, fy = agent_heading.vector
    rx, ry = -fy, fx  # right-hand side of the heading
    return (forward * fx + lateral * rx, forward * fy + lateral * ry)


@lru_cache(maxsize=None)
def _ray_world_offsets(config: ObservationConfig, heading: Heading):
    return tuple(
        tuple(to_world(heading, f + 1, lat) for f, lat in enumerate(lats))
        for lats in ray_lateral_offsets(config))


def render_observation(scene: Scene, config: ObservationConfig = ObservationConfig()) -> Observation:
    ax, ay = scene.agent.cell
    occ = scene.occupancy()
    walls = scene.walls
    w, h = scene.width, scene.height
    rays = []
    for offsets in _ray_world_offsets(config, scene.agent.heading):
        ray = None
        for depth, (dx, dy) in enumerate(offsets, start=1):
            cell = (ax + dx, ay + dy)
            if not (0 <= cell[0] < w and 0 <= cell[1] < h) or cell in walls:
                ray = Ray(depth, None, depth == 1)
                break
            obj = occ.get(cell)
            if obj is not None:
                ray = Ray(depth, obj.type, depth == 1)
                break
        rays.append(ray if ray is not None else Ray(config.max_depth, None, False))
    return Observation(tuple(rays), config)
