import pytest

from lavgrid.action import (MissingHeldObject, NavState, Stuck, execute_macro,
                            in_interaction_range, navigate_step, run_expert, shortest_path)
from lavgrid.lang import Plan, Subtask
from lavgrid.scenefile import parse_map
from lavgrid.vision import TargetEstimate, perceive
from lavgrid.worldsim import (Heading, MoveAhead, ObjectType as T, PickUp, Put, RotateLeft,
                              RotateRight, Slice, ToggleOff, ToggleOn, chebyshev,
                              render_observation, step)


def _oracle_target(scene, otype):
    obj = scene.of_type(otype)[0]
    ax, ay = scene.agent.cell
    return TargetEstimate(otype, (obj.cell[0] - ax, obj.cell[1] - ay))


def _nav(nav, scene, otype):
    nav.current_target = _oracle_target(scene, otype)
    return navigate_step(nav, perceive(render_observation(scene)), scene.agent)


def test_straight_line_moves_ahead():
    scene = parse_map(["b", ".", ".", "@"])
    assert _nav(NavState(), scene, T.Bowl) == MoveAhead()


def test_blocked_front_turns_toward_target_side():
    scene = parse_map(["#b...",
                       "..#..",
                       "..@..",
                       ".....",
                       "....."])
    assert _nav(NavState(), scene, T.Bowl) == RotateLeft()


def test_dead_end_backtracks_along_stack():
    scene = parse_map(["########",
                       "#@...#b#",
                       "#.####.#",
                       "#......#",
                       "########"], heading=Heading.E)
    nav = NavState()
    stacks = []
    for _ in range(60):
        if chebyshev(scene.agent.cell, (6, 1)) <= 1:
            break
        action = _nav(nav, scene, T.Bowl)
        if not stacks or stacks[-1] != nav.path_stack:
            stacks.append(list(nav.path_stack))
        scene, res = step(scene, action)
        assert res.ok
    else:
        pytest.fail("never reached the bowl")
    assert scene.agent.cell == (6, 2)
    corridor = [(1, 1), (2, 1), (3, 1), (4, 1)]
    # forward into the dead end, then strictly retrace the stack to the start
    assert stacks[:7] == [corridor[:1], corridor[:2], corridor[:3], corridor,
                          corridor[:3], corridor[:2], corridor[:1]]
    assert stacks[7] == [(1, 1), (1, 2)]


def test_stuck_when_target_walled_off():
    scene = parse_map(["b#.", "##.", "..@"])
    nav = NavState()
    with pytest.raises(Stuck):
        for _ in range(100):
            scene, _ = step(scene, _nav(nav, scene, T.Bowl))


@pytest.mark.parametrize("rel,expected", [((0, -1), True), ((0, -3), False),
                                          ((1, 1), True), ((-2, 1), False)])
def test_interaction_range(rel, expected):
    assert in_interaction_range(TargetEstimate(T.Bowl, rel)) is expected


def test_absent_not_in_range():
    assert not in_interaction_range(TargetEstimate(T.Bowl, None))
    assert not in_interaction_range(None)


def test_macro_table():
    assert execute_macro(Subtask.Clean, 1, 2) == [Put(1), ToggleOn(1), ToggleOff(1), PickUp(2)]
    assert execute_macro(Subtask.PickUp, 2, None) == [PickUp(2)]
    assert execute_macro(Subtask.Heat, 3, 4) == [Put(3), ToggleOn(3), ToggleOff(3), PickUp(4)]
    assert execute_macro(Subtask.Toggle, 5) == [ToggleOn(5)]
    assert execute_macro(Subtask.Slice, 6, 7) == [Slice(6)]
    with pytest.raises(MissingHeldObject):
        execute_macro(Subtask.Place, 1, None)


@pytest.mark.parametrize("subtask,appliance,field,value", [
    (Subtask.Clean, "S", "dirty", False),
    (Subtask.Heat, "M", "temperature", "hot"),
    (Subtask.Cool, "F", "temperature", "cold"),
])
def test_macro_soundness(subtask, appliance, field, value):
    scene = parse_map([f"c{appliance}", ".@"])
    cup, app = scene.objects[0].id, scene.objects[1].id
    scene, _ = step(scene, PickUp(cup))
    for a in execute_macro(subtask, app, cup):
        scene, res = step(scene, a)
        assert res.ok, a
    state = getattr(scene.get(cup).states, field)
    assert getattr(state, "value", state) == value
    assert scene.agent.inventory == cup
    assert not scene.get(app).states.powered


def test_shortest_path_picks_nearest():
    scene = parse_map(["b...@..b"], heading=Heading.E)
    path, oid = shortest_path(scene, T.Bowl)
    assert oid == 2 and path == [MoveAhead(), MoveAhead()]


def test_expert_runs_plan():
    scene = parse_map(["cS.C", "....", "..@."])
    plan = Plan.of(("PickUp", "Cup"), ("Clean", "Sink"), ("Place", "Cabinet"))
    final, actions = run_expert(scene, plan)
    cabinet = final.of_type(T.Cabinet)[0]
    assert final.of_type(T.Cup)[0].id in cabinet.contents
    assert RotateRight() in actions or RotateLeft() in actions or MoveAhead() in actions
