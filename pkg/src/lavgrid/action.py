"""Action module: DFS navigation, interaction range, subtask macros, and the
privileged shortest-path expert."""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from .lang import Plan, Subtask
from .vision import PerceptionFrame, TargetEstimate
from .worldsim import (AgentState, Cell, Heading, LowLevelAction, MoveAhead, ObjectType,
                       PickUp, Put, RotateLeft, RotateRight, Scene, Slice, ToggleOff,
                       ToggleOn, chebyshev, ray_lateral_offsets, step, to_world)


class Stuck(Exception):
    """DFS exhausted its stack without reaching the target."""


class MissingHeldObject(Exception):
    pass


class ExpertFailed(Exception):
    pass


def _add(a: Cell, b: Cell) -> Cell:
    return (a[0] + b[0], a[1] + b[1])


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def in_interaction_range(estimate: Optional[TargetEstimate]) -> bool:
    if estimate is None or estimate.relative is None:
        return False
    dx, dy = estimate.relative
    return max(abs(dx), abs(dy)) <= 1


@dataclass
class NavState:
    visited: set = field(default_factory=set)
    path_stack: list = field(default_factory=list)
    current_target: Optional[TargetEstimate] = None
    blocked: set = field(default_factory=set)
    bumped: set = field(default_factory=set)
    target_cell: Optional[Cell] = None
    pending: Optional[Cell] = None
    absent_rotations: int = 0

    def retarget(self) -> None:
        """Forget the remembered target; visited cells and the stack are kept."""
        self.current_target = None
        self.target_cell = None
        self.absent_rotations = 0


def _relative_dirs(agent: AgentState) -> list[tuple[str, Cell]]:
    h = agent.heading
    return [("ahead", _add(agent.cell, h.vector)),
            ("left", _add(agent.cell, h.left().vector)),
            ("right", _add(agent.cell, h.right().vector)),
            ("behind", _add(agent.cell, h.left().left().vector))]


def _turn_toward(agent: AgentState, cell: Cell) -> LowLevelAction:
    fx, fy = agent.heading.vector
    dx, dy = cell[0] - agent.cell[0], cell[1] - agent.cell[1]
    right = -fy * dx + fx * dy
    return RotateRight() if right > 0 else RotateLeft()


def _in_view(agent: AgentState, cell: Cell) -> bool:
    fx, fy = agent.heading.vector
    dx, dy = cell[0] - agent.cell[0], cell[1] - agent.cell[1]
    forward = fx * dx + fy * dy
    right = -fy * dx + fx * dy
    return forward >= 1 and abs(right) <= forward


def _sync(nav: NavState, frame: PerceptionFrame, agent: AgentState) -> None:
    cell = agent.cell
    stack = nav.path_stack
    if not stack:
        stack.append(cell)
        nav.visited.add(cell)
    elif cell != stack[-1]:
        if len(stack) >= 2 and cell == stack[-2]:
            stack.pop()
        else:
            stack.append(cell)
            nav.visited.add(cell)
    elif nav.pending is not None:
        nav.bumped.add(nav.pending)
    nav.pending = None
    # perceived occupancy is revisable: cells a ray passed through are free
    lateral = ray_lateral_offsets(frame.config)
    for i, ray in enumerate(frame.rays):
        lats = lateral[i]
        for f in range(1, ray.depth):
            nav.blocked.discard(_add(cell, to_world(agent.heading, f, lats[f - 1])))
        if ray.obstacle:
            nav.blocked.add(_add(cell, to_world(agent.heading, 1, lats[0])))


def navigate_step(nav: NavState, frame: PerceptionFrame, agent: AgentState) -> LowLevelAction:
    """Emit one navigation action toward ``nav.current_target``.

    The caller refreshes ``nav.current_target`` from the newest frame before
    each call.  Raises :class:`Stuck` once every reachable cell has been
    explored and backtracked.
    """
    _sync(nav, frame, agent)
    cell = agent.cell
    est = nav.current_target
    visible = est is not None and est.relative is not None
    if visible:
        nav.target_cell = _add(cell, est.relative)
        nav.absent_rotations = 0
    target = nav.target_cell

    if target is not None and not visible and chebyshev(cell, target) <= 1:
        if _in_view(agent, target):
            # looked straight at the remembered cell and saw nothing there
            nav.target_cell = target = None
        else:
            return _turn_toward(agent, target)
    if target is None and nav.absent_rotations < 3:
        nav.absent_rotations += 1
        return RotateLeft()

    options = [(name, c) for name, c in _relative_dirs(agent)
               if c not in nav.visited and c not in nav.blocked
               and c not in nav.bumped and c != target]
    if target is not None:
        options.sort(key=lambda nc: manhattan(nc[1], target))
    if options:
        name, best = options[0]
        if name == "ahead":
            nav.pending = best
            return MoveAhead()
        return RotateRight() if name == "right" else RotateLeft()

    stack = nav.path_stack
    if len(stack) < 2:
        if target is None:
            # swept everything without a sighting: start a fresh sweep from here
            nav.visited = {cell}
            nav.absent_rotations = 0
            return RotateLeft()
        raise Stuck(f"explored everything reachable from {stack[0]}")
    back = stack[-2]
    if _add(cell, agent.heading.vector) == back:
        nav.pending = back
        return MoveAhead()
    return _turn_toward(agent, back)


_MACROS = {
    Subtask.PickUp: lambda t, h: [PickUp(t)],
    Subtask.Place: lambda t, h: [Put(t)],
    Subtask.Toggle: lambda t, h: [ToggleOn(t)],
    Subtask.Slice: lambda t, h: [Slice(t)],
    Subtask.Clean: lambda t, h: [Put(t), ToggleOn(t), ToggleOff(t), PickUp(h)],
    Subtask.Heat: lambda t, h: [Put(t), ToggleOn(t), ToggleOff(t), PickUp(h)],
    Subtask.Cool: lambda t, h: [Put(t), ToggleOn(t), ToggleOff(t), PickUp(h)],
}
NEEDS_HELD = frozenset({Subtask.Place, Subtask.Clean, Subtask.Heat, Subtask.Cool})


def execute_macro(subtask: Subtask, target_id: int,
                  held_id: Optional[int] = None) -> list[LowLevelAction]:
    if subtask in NEEDS_HELD and held_id is None:
        raise MissingHeldObject(f"{subtask} needs an object in hand")
    return _MACROS[Subtask(subtask)](target_id, held_id)


# --- privileged shortest-path navigation ---------------------------------------

Pose = tuple[Cell, Heading]


def _pose_search(scene: Scene, targets: dict) -> tuple[list[LowLevelAction], int]:
    """Breadth-first search over poses until some target cell is within range.

    ``targets`` maps object id to cell.  Rotations and moves each cost one step.
    """
    occ = scene.occupancy()

    def reached(cell: Cell) -> Optional[int]:
        hits = [oid for oid, tc in targets.items() if chebyshev(cell, tc) <= 1]
        return min(hits) if hits else None

    start: Pose = (scene.agent.cell, scene.agent.heading)
    hit = reached(start[0])
    if hit is not None:
        return [], hit
    parent: dict[Pose, tuple[Optional[Pose], Optional[LowLevelAction]]] = {start: (None, None)}
    queue = deque([start])
    while queue:
        pose = queue.popleft()
        cell, heading = pose
        ahead = _add(cell, heading.vector)
        succ = [((cell, heading.left()), RotateLeft()),
                ((cell, heading.right()), RotateRight())]
        if not scene.is_blocked(ahead, occ):
            succ.insert(0, ((ahead, heading), MoveAhead()))
        for nxt, act in succ:
            if nxt in parent:
                continue
            parent[nxt] = (pose, act)
            hit = reached(nxt[0])
            if hit is not None:
                actions = []
                p = nxt
                while parent[p][0] is not None:
                    actions.append(parent[p][1])
                    p = parent[p][0]
                return actions[::-1], hit
            queue.append(nxt)
    raise ExpertFailed(f"none of objects {sorted(targets)} is reachable")


def _instances(scene: Scene, otype: ObjectType) -> dict:
    return {o.id: o.cell for o in scene.objects if o.type == otype and o.cell is not None}


def shortest_path(scene: Scene, otype: ObjectType) -> tuple[list[LowLevelAction], int]:
    """Shortest pose path to the nearest ``otype`` instance and that instance's id."""
    targets = _instances(scene, otype)
    if not targets:
        raise ExpertFailed(f"no {otype} in the scene")
    return _pose_search(scene, targets)


def _apply(scene: Scene, actions: list[LowLevelAction]) -> Optional[Scene]:
    for act in actions:
        scene, result = step(scene, act)
        if not result.ok:
            return None
    return scene


def _pose_distances(scene: Scene, sources: dict) -> tuple[dict, dict]:
    """Multi-source shortest pose distances; ``sources`` maps pose to start cost."""
    occ = scene.occupancy()
    dist = dict(sources)
    parent: dict = {p: None for p in sources}
    counter = itertools.count()
    heap = [(c, next(counter), p) for p, c in sources.items()]
    heapq.heapify(heap)
    while heap:
        d, _, pose = heapq.heappop(heap)
        if d > dist[pose]:
            continue
        cell, heading = pose
        ahead = _add(cell, heading.vector)
        succ = [((cell, heading.left()), RotateLeft()),
                ((cell, heading.right()), RotateRight())]
        if not scene.is_blocked(ahead, occ):
            succ.insert(0, ((ahead, heading), MoveAhead()))
        for nxt, act in succ:
            if d + 1 < dist.get(nxt, math.inf):
                dist[nxt] = d + 1
                parent[nxt] = (pose, act)
                heapq.heappush(heap, (d + 1, next(counter), nxt))
    return dist, parent


def _with_agent_at(scene: Scene, pose: Pose) -> Scene:
    return replace(scene, agent=replace(scene.agent, cell=pose[0], heading=pose[1]))


def expert_plan_actions(scene: Scene, steps) -> list[list[LowLevelAction]]:
    """Per-step action lists (navigation plus macro) minimising the total length.

    Every instance choice is tried for each step, and navigation is planned
    jointly over the whole plan: the pose where one step's macro runs is picked
    with the following steps in mind.  Ties go to lower object ids.
    """
    steps = list(steps)
    start: Pose = (scene.agent.cell, scene.agent.heading)
    best: list = [math.inf, None]  # cost, layers

    def search(scene: Scene, i: int, sources: dict, layers: list) -> None:
        if i == len(steps):
            pose = min(sources, key=lambda p: sources[p])
            if sources[pose] < best[0]:
                best[0], best[1] = sources[pose], list(layers) + [pose]
            return
        if min(sources.values()) >= best[0]:
            return
        dist, parent = _pose_distances(scene, sources)
        subtask, otype = steps[i]
        for oid, cell in sorted(_instances(scene, otype).items()):
            in_range = {p: d for p, d in dist.items() if chebyshev(p[0], cell) <= 1}
            if not in_range:
                continue
            try:
                macro = execute_macro(subtask, oid, scene.agent.inventory)
            except MissingHeldObject:
                continue
            after = _apply(_with_agent_at(scene, next(iter(in_range))), macro)
            if after is None:
                continue
            nxt = {p: d + len(macro) for p, d in in_range.items()}
            layers.append((parent, macro))
            search(after, i + 1, nxt, layers)
            layers.pop()

    search(scene, 0, {start: 0}, [])
    if best[1] is None:
        raise ExpertFailed(f"no executable instance choice for {steps}")
    *layers, pose = best[1]
    chunks = []
    for parent, macro in reversed(layers):
        path = []
        while parent[pose] is not None:
            pose, act = parent[pose]
            path.append(act)
        chunks.append(path[::-1] + list(macro))
    chunks.reverse()
    return chunks


def run_expert(scene: Scene, plan: Plan) -> tuple[Scene, list[LowLevelAction]]:
    """Execute ``plan`` with ground-truth perception and shortest paths."""
    actions = [a for chunk in expert_plan_actions(scene, plan.steps) for a in chunk]
    final = _apply(scene, actions)
    if final is None:
        raise ExpertFailed("expert actions failed on replay")
    return final, actions
