import random

import pytest

from gridshield.arena import Task, gridworld_from_ascii, tasks_at
from gridshield.behavior import uniform_behavior, weighted_behavior
from gridshield.errors import ActionNotEnabled, PolicyReturnedBlockedTask
from gridshield.mdp import (
    ADV_DECIDE,
    MOVE,
    DecideTask,
    advance_turn,
    enabled_actions,
    initial_state,
    is_decision_state,
    successors,
)


def decision_state(*positions):
    return initial_state(positions)


def test_is_decision_state_cases(maze):
    at_decision = decision_state("1,3", "5,5")
    assert is_decision_state(at_decision)
    assert not is_decision_state(at_decision._replace(turn=1))
    task = tasks_at(maze, "1,3")[0]
    assert not is_decision_state(at_decision._replace(queues=(task.edges(), ())))


def test_enabled_actions_at_decision(maze):
    actions = enabled_actions(maze, decision_state("1,3", "5,5"))
    assert len(actions) == 3
    assert {a.task for a in actions} == set(tasks_at(maze, "1,3"))


def test_enabled_actions_adversary_turn(maze):
    task = tasks_at(maze, "1,3")[0]
    state = initial_state(("1,3", "5,5"), (task.edges(), ()))._replace(turn=1)
    assert enabled_actions(maze, state) == (ADV_DECIDE,)


def test_enabled_actions_mid_task(maze):
    task = tasks_at(maze, "1,3")[0]
    state = initial_state(("1,3", "5,5"), (task.edges(), ()))
    assert enabled_actions(maze, state) == (MOVE,)


def test_decide_task_sets_queue_only():
    corridor4 = gridworld_from_ascii("....")
    task = Task(("1,1", "2,1", "3,1", "4,1"))
    state = decision_state("1,1")
    ((p, succ),) = successors(corridor4, [], state, DecideTask(task))
    assert p == 1.0
    assert succ.positions == state.positions
    assert succ.turn == 0
    assert len(succ.queues[0]) == 3


def test_adv_decide_uniform_three_successors(maze):
    behaviors = [uniform_behavior(maze)]
    task = tasks_at(maze, "5,5")[0]
    state = initial_state(("5,5", "1,3"), (task.edges(), ()))._replace(turn=1)
    dist = successors(maze, behaviors, state, ADV_DECIDE)
    assert len(dist) == 3
    assert all(p == pytest.approx(1 / 3) for p, _ in dist)
    assert sum(p for p, _ in dist) == pytest.approx(1.0, abs=1e-9)


def test_adv_decide_skips_zero_probability_tasks(maze):
    behaviors = [weighted_behavior(maze, {"1,3": {0: 1.0}})]
    task = tasks_at(maze, "5,5")[0]
    state = initial_state(("5,5", "1,3"), (task.edges(), ()))._replace(turn=1)
    dist = successors(maze, behaviors, state, ADV_DECIDE)
    assert len(dist) == 1
    assert dist[0][0] == 1.0


def test_move_pops_and_wraps_turn(corridor3):
    task = tasks_at(corridor3, "1,1")[0]
    state = initial_state(
        ("3,1", "1,1", "1,1"), ((), (), task.edges())
    )._replace(turn=2)
    ((p, succ),) = successors(corridor3, [], state, MOVE)
    assert p == 1.0
    assert succ.turn == 0
    assert succ.positions[2] == task.path[1]
    assert succ.queues[2] == task.edges()[1:]


def test_move_without_queue_raises(corridor3):
    with pytest.raises(ActionNotEnabled):
        successors(corridor3, [], decision_state("1,1"), MOVE)


def test_decide_unavailable_task_raises(maze):
    foreign = Task(("1,1", "1,2", "1,3"))
    with pytest.raises(ActionNotEnabled):
        successors(maze, [], decision_state("1,3"), DecideTask(foreign))


def test_avatar_oscillates_on_corridor(corridor3):
    # Single agent, single task each way: four steps bounce 1,1 -> 3,1 -> 1,1.
    state = decision_state("1,1")
    policy = lambda s: tasks_at(corridor3, s.positions[0])[0]
    rng = random.Random(0)
    trace = []
    for _ in range(4):
        state = advance_turn(corridor3, [], state, policy, rng)
        trace.append(state.positions[0])
    assert trace == ["2,1", "3,1", "2,1", "1,1"]


def test_advance_turn_deterministic_adversary(maze):
    behaviors = [weighted_behavior(maze, {v: {0: 1.0} for v in maze.decision_locations})]
    policy = lambda s: tasks_at(maze, s.positions[0])[0]

    def run(seed):
        state = decision_state("1,3", "5,3")
        rng = random.Random(seed)
        return [
            (state := advance_turn(maze, behaviors, state, policy, rng)).positions
            for _ in range(8)
        ]

    assert run(1) == run(999)


def test_advance_turn_rejects_blocked_policy(corridor3):
    policy = lambda s: Task(("1,1", "1,1"))
    with pytest.raises(PolicyReturnedBlockedTask):
        advance_turn(corridor3, [], decision_state("1,1"), policy, random.Random(0))


def test_probabilities_sum_to_one_randomized():
    rng = random.Random(42)
    maps = ["...\n.#.\n...", ".....", "..\n..", "....\n#..#"]
    for _ in range(200):
        arena = gridworld_from_ascii(rng.choice(maps))
        decisions = sorted(arena.decision_locations)
        if not decisions:
            continue
        m = rng.randint(0, 2)
        behaviors = [uniform_behavior(arena) for _ in range(m)]
        positions = tuple(rng.choice(decisions) for _ in range(m + 1))
        state = initial_state(positions)
        # Random short walk through the dynamics, checking every distribution.
        for _ in range(6):
            actions = enabled_actions(arena, state)
            assert actions
            action = rng.choice(actions)
            dist = successors(arena, behaviors, state, action)
            assert abs(sum(p for p, _ in dist) - 1.0) < 1e-9
            state = dist[rng.randrange(len(dist))][1]


def test_move_lands_on_edge_target(maze):
    behaviors = [uniform_behavior(maze)]
    task = tasks_at(maze, "1,3")[0]
    state = initial_state(("1,3", "5,5"), (task.edges(), ()))
    expected_target = state.queues[0][0][1]
    ((_, succ),) = successors(maze, behaviors, state, MOVE)
    assert succ.positions[0] == expected_target
