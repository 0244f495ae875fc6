import random

import pytest

from gridshield.arena import gridworld_from_ascii, tasks_at
from gridshield.behavior import uniform_behavior
from gridshield.errors import (
    HorizonZero,
    NotPostDecisionState,
    TaskNotAvailable,
)
from gridshield.mdp import MOVE, DecideTask, initial_state, is_decision_state
from gridshield.submdp import (
    build_submdp,
    export_dot,
    restrict_first_decision,
    tasks_of_first_decision,
)

from oracle import reachable_bruteforce


def never_unsafe(state):
    return False


def collision(state):
    return any(p == state.positions[0] for p in state.positions[1:])


def post_decision(arena, avatar, task_index, *adversaries):
    state = initial_state((avatar, *adversaries))
    task = tasks_at(arena, avatar)[task_index]
    return state._replace(queues=(task.edges(),) + state.queues[1:]), task


def test_corridor_with_adversary_matches_bruteforce(corridor3):
    behaviors = [uniform_behavior(corridor3)]
    root, task = post_decision(corridor3, "1,1", 0, "3,1")
    model = build_submdp(corridor3, behaviors, root, 1, collision)
    assert model.bound == task.length + 1 == 3
    expected = reachable_bruteforce(corridor3, behaviors, root, 3, collision)
    assert set(model.keys) == expected


def test_maze_matches_bruteforce(maze):
    behaviors = [uniform_behavior(maze)]
    root, task = post_decision(maze, "1,3", 0, "5,5")
    model = build_submdp(maze, behaviors, root, 2, collision)
    expected = reachable_bruteforce(maze, behaviors, root, task.length + 2, collision)
    assert set(model.keys) == expected


def test_no_adversary_singleton_first_decision(corridor3):
    root, task = post_decision(corridor3, "1,1", 0)
    model = build_submdp(corridor3, [], root, 2, never_unsafe)
    assert task.length == 2
    fd = model.first_decision_states
    assert len(fd) == 1
    ((state, d),) = fd
    assert d == 2 and is_decision_state(state)
    # All branching sits at the avatar's decisions; everything else is linear.
    for node, rows in enumerate(model.transitions):
        if node in model.first_decision:
            continue
        assert len(rows) <= 1


def test_topological_sort_succeeds(maze):
    behaviors = [uniform_behavior(maze)]
    root, _ = post_decision(maze, "1,3", 0, "5,5")
    model = build_submdp(maze, behaviors, root, 2, collision)
    order = model.topological_order()
    assert sorted(order) == list(range(model.node_count()))


def test_distance_monotone_and_round_based(maze):
    behaviors = [uniform_behavior(maze)]
    root, _ = post_decision(maze, "1,3", 1, "5,5")
    model = build_submdp(maze, behaviors, root, 2, collision)
    last = len(root.positions) - 1
    for node, rows in enumerate(model.transitions):
        state, d = model.keys[node]
        for action, dist in rows:
            for _, succ in dist:
                succ_d = model.keys[succ][1]
                if action is MOVE and state.turn == last:
                    assert succ_d == d + 1
                else:
                    assert succ_d == d


def test_no_decision_before_first_decision_distance(maze):
    behaviors = [uniform_behavior(maze)]
    root, task = post_decision(maze, "1,3", 0, "5,5")
    model = build_submdp(maze, behaviors, root, 2, collision)
    for state, d in model.keys:
        if d < task.length:
            assert not is_decision_state(state)


def test_frontier_and_unsafe_are_sinks(maze):
    behaviors = [uniform_behavior(maze)]
    root, _ = post_decision(maze, "1,3", 0, "1,1")
    model = build_submdp(maze, behaviors, root, 2, collision)
    assert model.unsafe, "expected reachable collisions with a nearby adversary"
    for node, (state, d) in enumerate(model.keys):
        if d == model.bound or node in model.unsafe:
            assert model.transitions[node] == ()
        else:
            assert len(model.transitions[node]) >= 1


def test_horizon_zero_rejected(corridor3):
    root, _ = post_decision(corridor3, "1,1", 0)
    with pytest.raises(HorizonZero):
        build_submdp(corridor3, [], root, 0, never_unsafe)


def test_non_post_decision_root_rejected(corridor3):
    with pytest.raises(NotPostDecisionState):
        build_submdp(corridor3, [], initial_state(("1,1",)), 2, never_unsafe)


def test_tasks_of_first_decision_maze(maze):
    behaviors = [uniform_behavior(maze)]
    # Task from 5,3 to 1,3: next decision offers the three tasks at 1,3.
    start_tasks = tasks_at(maze, "5,3")
    idx = next(i for i, t in enumerate(start_tasks) if t.end == "1,3")
    root, _ = post_decision(maze, "5,3", idx, "5,5")
    model = build_submdp(maze, behaviors, root, 1, collision)
    assert set(tasks_of_first_decision(model)) == set(tasks_at(maze, "1,3"))


def test_restriction_has_single_action(maze):
    behaviors = [uniform_behavior(maze)]
    root, _ = post_decision(maze, "1,3", 0, "5,5")
    model = build_submdp(maze, behaviors, root, 1, collision)
    tasks = tasks_of_first_decision(model)
    views = [restrict_first_decision(model, t) for t in tasks]
    assert len({v.task for v in views}) == len(tasks)
    for view in views:
        for node in model.first_decision:
            rows = [
                (a, d)
                for a, d in model.transitions[node]
                if isinstance(a, DecideTask) and a.task == view.task
            ]
            assert len(rows) == 1


def test_restriction_unavailable_task(maze, corridor3):
    behaviors = [uniform_behavior(maze)]
    root, _ = post_decision(maze, "1,3", 0, "5,5")
    model = build_submdp(maze, behaviors, root, 1, collision)
    foreign = tasks_at(corridor3, "1,1")[0]
    with pytest.raises(TaskNotAvailable):
        restrict_first_decision(model, foreign)


def test_far_away_map_growth_leaves_model_unchanged():
    # The far map grows beyond the ring's right corners, which lie outside
    # the horizon ball of the agents starting on the left side.
    near = gridworld_from_ascii("...........\n.#########.\n...........")
    far = gridworld_from_ascii(
        "...........####\n.#########.####\n..............."
    )
    behaviors_near = [uniform_behavior(near)]
    behaviors_far = [uniform_behavior(far)]
    down = next(
        i for i, t in enumerate(tasks_at(near, "1,1")) if t.end == "1,3"
    )
    root, _ = post_decision(near, "1,1", down, "1,3")
    far_root, _ = post_decision(far, "1,1", down, "1,3")
    assert root == far_root
    a = build_submdp(near, behaviors_near, root, 1, collision)
    b = build_submdp(far, behaviors_far, far_root, 1, collision)
    assert set(a.keys) == set(b.keys)


def test_export_dot_mentions_every_node(maze):
    behaviors = [uniform_behavior(maze)]
    root, _ = post_decision(maze, "1,3", 1, "5,5")
    model = build_submdp(maze, behaviors, root, 1, collision)
    dot = export_dot(model)
    assert dot.startswith("digraph")
    assert dot.count("\n  n") >= model.node_count()
