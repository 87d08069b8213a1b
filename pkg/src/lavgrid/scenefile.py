"""Plain-text scene maps.

Layout::

    scene <width> <height> seed=<n>
    agent <x> <y> <heading> inv=<id|->
    object <id> <Type> <x|-> <y|-> dirty=0 temperature=room sliced=0 powered=0 contents=<ids|->
    ...
    map
    #######
    #.@..b#
    #######

``#`` is a wall, ``.`` floor, ``@`` the agent and one letter per object type
(the top-level object when several share a cell).
"""

from __future__ import annotations

from .worldsim import (AgentState, Heading, ObjectFlags, ObjectInstance, ObjectType,
                       Scene, Temperature)

TYPE_CHARS = {
    ObjectType.Bowl: "b", ObjectType.Cup: "c", ObjectType.Apple: "a",
    ObjectType.Potato: "p", ObjectType.Tomato: "t", ObjectType.Knife: "k",
    ObjectType.Sink: "S", ObjectType.Fridge: "F", ObjectType.Microwave: "M",
    ObjectType.Cabinet: "C", ObjectType.Table: "T", ObjectType.Lamp: "L",
}
CHAR_TYPES = {v: k for k, v in TYPE_CHARS.items()}


def dump_scene(scene: Scene) -> str:
    lines = [f"scene {scene.width} {scene.height} seed={scene.rng_seed}"]
    a = scene.agent
    inv = "-" if a.inventory is None else str(a.inventory)
    lines.append(f"agent {a.cell[0]} {a.cell[1]} {a.heading.value} inv={inv}")
    for o in scene.objects:
        x, y = ("-", "-") if o.cell is None else o.cell
        s = o.states
        contents = ",".join(map(str, o.contents)) or "-"
        lines.append(
            f"object {o.id} {o.type.value} {x} {y} dirty={int(s.dirty)} "
            f"temperature={s.temperature.value} sliced={int(s.sliced)} "
            f"powered={int(s.powered)} contents={contents}")
    lines.append("map")
    grid = [["." for _ in range(scene.width)] for _ in range(scene.height)]
    for (x, y) in scene.walls:
        grid[y][x] = "#"
    for cell, obj in scene.occupancy().items():
        grid[cell[1]][cell[0]] = TYPE_CHARS[obj.type]
    grid[a.cell[1]][a.cell[0]] = "@"
    lines.extend("".join(row) for row in grid)
    return "\n".join(lines) + "\n"


def load_scene(text: str) -> Scene:
    lines = [ln.rstrip("\n") for ln in text.splitlines()]
    header = lines[0].split()
    if header[0] != "scene":
        raise ValueError("scene file must start with a 'scene' line")
    width, height = int(header[1]), int(header[2])
    seed = int(header[3].split("=", 1)[1]) if len(header) > 3 else 0
    agent = None
    objects = []
    i = 1
    while lines[i] != "map":
        parts = lines[i].split()
        if parts[0] == "agent":
            inv = parts[4].split("=", 1)[1]
            agent = AgentState((int(parts[1]), int(parts[2])), Heading(parts[3]),
                               None if inv == "-" else int(inv))
        elif parts[0] == "object":
            fields = dict(p.split("=", 1) for p in parts[5:])
            cell = None if parts[3] == "-" else (int(parts[3]), int(parts[4]))
            contents = () if fields["contents"] == "-" else tuple(
                int(c) for c in fields["contents"].split(","))
            objects.append(ObjectInstance(
                int(parts[1]), ObjectType(parts[2]), cell, contents,
                ObjectFlags(dirty=fields["dirty"] == "1",
                            temperature=Temperature(fields["temperature"]),
                            sliced=fields["sliced"] == "1",
                            powered=fields["powered"] == "1")))
        i += 1
    rows = lines[i + 1:i + 1 + height]
    walls = set()
    for y, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"map row {y} has width {len(row)}, expected {width}")
        for x, ch in enumerate(row):
            if ch == "#":
                walls.add((x, y))
    if agent is None:
        raise ValueError("scene file has no agent record")
    scene = Scene(width, height, frozenset(walls), tuple(objects), agent, seed)
    scene.validate()
    return scene


def parse_map(rows: list[str], heading: Heading = Heading.N) -> Scene:
    """Build a scene from a bare character map (handy for fixtures).

    Objects get ids in reading order, default states, and no contents.
    """
    walls, objects = set(), []
    agent_cell = None
    for y, row in enumerate(rows):
        for x, ch in enumerate(row):
            if ch == "#":
                walls.add((x, y))
            elif ch == "@":
                agent_cell = (x, y)
            elif ch in CHAR_TYPES:
                objects.append(ObjectInstance(len(objects) + 1, CHAR_TYPES[ch], (x, y)))
            elif ch != ".":
                raise ValueError(f"unknown map character {ch!r}")
    if agent_cell is None:
        raise ValueError("map has no agent")
    scene = Scene(len(rows[0]), len(rows), frozenset(walls), tuple(objects),
                  AgentState(agent_cell, heading))
    scene.validate()
    return scene
