"""Acceptance suite: one test per release criterion, printed pass lines.

Run with `pytest -s tests/test_acceptance.py` to see the lines live.
"""

import random
import time

import pytest

from gridshield.arena import Task, gridworld_from_ascii, tasks_at
from gridshield.behavior import deterministic_behavior
from gridshield.errors import NoFirstDecisionState
from gridshield.harness import (
    LearnerConfig,
    bench_horizon,
    play_plain_episode,
    train_compare,
)
from gridshield.maps import MAZE_5X5, PILLARS_7X7, SNAKE_BENCH, SNAKE_SMALL, SNAKE_SMALL_HORIZON
from gridshield.mdp import MOVE, is_decision_state
from gridshield.shield import TaskValuation, make_shield, update_shield, valuations
from gridshield.submdp import expand

from generators import collision, random_instance
from oracle import min_reach_bruteforce

PASS = "[PASS]"


def report(name: str, detail: str = "") -> None:
    print(f"{PASS} {name}" + (f" — {detail}" if detail else ""))


def test_oracle_equivalence_on_randomized_instances():
    started = time.perf_counter()
    rng = random.Random(20240601)
    instances = 0
    comparisons = 0
    while instances < 200:
        instance = random_instance(rng, max_adversaries=2, max_horizon=3, max_tiles=25)
        model = expand(
            instance.arena, instance.behaviors, instance.root,
            instance.horizon, collision,
        )
        vals = valuations(model)
        bound = instance.task.length + instance.horizon
        for task, value in vals.values.items():
            expected = min_reach_bruteforce(
                instance.arena, instance.behaviors, instance.root,
                instance.task.length, bound, collision, task,
            )
            assert abs(value - expected) <= 1e-9, (
                f"task {task.path}: engine {value} vs brute force {expected}"
            )
            comparisons += 1
        instances += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"oracle comparison took {elapsed:.1f}s"
    report(
        "oracle equivalence",
        f"{instances} instances, {comparisons} task values, {elapsed:.1f}s",
    )


def test_paper_gridworld_fidelity():
    arena = gridworld_from_ascii(MAZE_5X5)
    expected_decisions = {"1,1", "1,3", "1,5", "5,1", "5,3", "5,5"}
    assert set(arena.decision_locations) == expected_decisions
    expected_tasks = {
        Task(("1,3", "2,3", "3,3", "4,3", "5,3")),
        Task(("1,3", "1,2", "1,1")),
        Task(("1,3", "1,4", "1,5")),
    }
    assert set(tasks_at(arena, "1,3")) == expected_tasks
    report("paper gridworld fidelity", "decision set and task set match exactly")


def test_dag_and_structure_invariants():
    rng = random.Random(77)
    builds = 0
    while builds < 1000:
        instance = random_instance(rng, max_adversaries=2, max_horizon=3, max_tiles=25)
        model = expand(
            instance.arena, instance.behaviors, instance.root,
            instance.horizon, collision,
        )
        order = model.topological_order()
        assert sorted(order) == list(range(model.node_count()))
        d_fd = model.first_decision_distance
        last = len(instance.root.positions) - 1
        for node, (state, d) in enumerate(model.keys):
            if is_decision_state(state):
                assert d >= d_fd
            if d == model.bound or node in model.unsafe:
                assert model.transitions[node] == ()
            else:
                assert len(model.transitions[node]) >= 1
            for action, dist in model.transitions[node]:
                total = sum(p for p, _ in dist)
                assert abs(total - 1.0) <= 1e-9
                expected_d = d + (1 if action is MOVE and state.turn == last else 0)
                for _, succ in dist:
                    assert model.keys[succ][1] == expected_d
        builds += 1
    report("DAG and structure invariants", f"{builds} randomized builds")


def test_shield_algebra():
    rng = random.Random(4242)
    for _ in range(2000):
        n = rng.randint(1, 6)
        tasks = [Task((f"v{i}", "w")) for i in range(n)]
        values = {t: rng.choice([0.0, rng.random(), 1.0]) for t in tasks}
        valuation = TaskValuation(values=values, optimal=min(values.values()))
        assert set(make_shield(valuation, 0.0).allowed) == set(tasks)
        assert set(make_shield(valuation, 1.0).allowed) == set(valuation.argmin_tasks())
        d1, d2 = sorted((rng.random(), rng.random()))
        wide, narrow = make_shield(valuation, d1), make_shield(valuation, d2)
        assert set(narrow.allowed) <= set(wide.allowed)
        assert narrow.allowed and wide.allowed
    # Ground the same algebra on engine-produced valuations.
    rng = random.Random(999)
    for _ in range(50):
        instance = random_instance(rng)
        model = expand(
            instance.arena, instance.behaviors, instance.root,
            instance.horizon, collision,
        )
        valuation = valuations(model)
        assert set(make_shield(valuation, 0.0).allowed) == set(valuation.values)
        assert set(make_shield(valuation, 1.0).allowed) == set(valuation.argmin_tasks())
        assert make_shield(valuation, rng.random()).allowed
    report("shield algebra", "2000 synthetic + 50 engine valuations")


def _observe_adversary_resolution(instance, rng):
    from gridshield.mdp import ADV_DECIDE, successors

    state = instance.root
    for _ in range(60):
        if collision(state):
            return None
        agent = state.turn
        if agent == 0 and not state.queues[0]:
            return None
        if not state.queues[agent]:
            dist = successors(instance.arena, instance.behaviors, state, ADV_DECIDE)
            return rng.choice(dist)[1]
        state = successors(instance.arena, instance.behaviors, state, MOVE)[0][1]
    return None


def test_update_correctness():
    rng = random.Random(31337)
    resolutions = 0
    zero_checks = 0
    while resolutions < 200:
        instance = random_instance(rng)
        previous = expand(
            instance.arena, instance.behaviors, instance.root,
            instance.horizon, collision,
        )
        before = valuations(previous)
        observed = _observe_adversary_resolution(instance, rng)
        if observed is None:
            continue

        def shield_or_doomed(prev):
            try:
                return update_shield(
                    instance.arena, instance.behaviors, observed,
                    instance.horizon, 0.8, collision, prev,
                )
            except NoFirstDecisionState:
                return None

        reused = shield_or_doomed(previous)
        scratch = shield_or_doomed(None)
        if reused is None or scratch is None:
            assert reused is None and scratch is None
        else:
            assert set(reused.allowed) == set(scratch.allowed)
            for task, value in before.values.items():
                if value == 0.0:
                    assert reused.valuation.values[task] == 0.0
                    zero_checks += 1
        resolutions += 1
    report(
        "update correctness",
        f"{resolutions} adversary resolutions, {zero_checks} zero-value checks",
    )


def test_safety_at_delta_one():
    started = time.perf_counter()
    arena = gridworld_from_ascii(PILLARS_7X7)
    behaviors = [deterministic_behavior(arena)]
    rng = random.Random(60)
    shielded_collisions = 0
    for _ in range(1000):
        outcome = play_plain_episode(
            arena, behaviors, ("7,7", "1,1"), horizon=4, delta=1.0,
            shielded=True, rng=rng, max_rounds=40,
        )
        shielded_collisions += outcome == "collision"
    assert shielded_collisions == 0
    unshielded_collisions = 0
    for _ in range(1000):
        outcome = play_plain_episode(
            arena, behaviors, ("7,7", "1,1"), horizon=4, delta=1.0,
            shielded=False, rng=rng, max_rounds=40,
        )
        unshielded_collisions += outcome == "collision"
    assert unshielded_collisions >= 1
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0, f"safety runs took {elapsed:.1f}s"
    report(
        "safety at delta=1",
        f"0/1000 shielded vs {unshielded_collisions}/1000 unshielded collisions, "
        f"{elapsed:.1f}s",
    )


def test_timing_shape():
    horizons = list(range(10, 21))
    records = bench_horizon(
        SNAKE_BENCH, horizons=horizons, lengths=[10, 15], samples=20, seed=8,
    )
    by_cell = {(r.horizon, r.length): r for r in records}
    for length in (10, 15):
        means = [by_cell[(h, length)].mean_s for h in horizons]
        for earlier, later in zip(means, means[1:]):
            assert later > earlier, f"means not strictly increasing at l={length}: {means}"
    for h in horizons:
        ratio = by_cell[(h, 15)].mean_s / by_cell[(h, 10)].mean_s
        assert ratio < 2.0, f"length sensitivity too strong at h={h}: {ratio:.2f}"
    h15 = by_cell[(15, 10)].mean_s
    assert h15 < 1.0, f"mean at h=15 is {h15:.3f}s"
    report(
        "timing shape",
        f"means strictly increasing over h=10..20, l-ratio < 2, "
        f"mean(h=15, l=10) = {h15 * 1000:.0f} ms",
    )


def test_learning_effect():
    config = LearnerConfig(
        episodes=800, horizon=SNAKE_SMALL_HORIZON, delta=1.0,
        alpha=0.1, gamma=0.5, epsilon=0.6,
    )
    outcome = train_compare(
        SNAKE_SMALL, config, seeds=(101, 202, 303), eval_games=67,
    )
    shielded = outcome["modes"]["shielded"]
    unshielded = outcome["modes"]["unshielded"]
    assert len(shielded["records"]) == 16  # 800 episodes in 50-episode windows
    assert shielded["training_collision_losses"] == 0
    gap = shielded["win_rate"] - unshielded["win_rate"]
    assert gap >= 0.10, (
        f"win rates: shielded {shielded['win_rate']:.2f} "
        f"vs unshielded {unshielded['win_rate']:.2f}"
    )
    report(
        "learning effect",
        f"0 training collision losses; win rate {shielded['win_rate']:.0%} "
        f"vs {unshielded['win_rate']:.0%} (gap {gap:.0%}) over "
        f"{3 * 67} evaluation games per mode",
    )
