"""Stochastic adversary behavior: a task distribution per decision location."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Mapping

from .arena import Arena, Task, tasks_at
from .errors import AllZeroWeights, NotADecisionLocation, ParseError

NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class AdversaryBehavior:
    """Per decision location: (task, probability) pairs in arena task order."""

    table: Mapping[str, tuple[tuple[Task, float], ...]]

    def distribution(self, location_id: str) -> tuple[tuple[Task, float], ...]:
        if location_id not in self.table:
            raise NotADecisionLocation(f"{location_id!r} is not a decision location")
        return self.table[location_id]

    def support(self, location_id: str) -> tuple[Task, ...]:
        return tuple(t for t, p in self.distribution(location_id) if p > 0.0)


def uniform_behavior(arena: Arena) -> AdversaryBehavior:
    """Equal probability over the tasks at every decision location."""
    table = {}
    for v in arena.decision_locations:
        tasks = tasks_at(arena, v)
        p = 1.0 / len(tasks)
        table[v] = tuple((t, p) for t in tasks)
    return AdversaryBehavior(table)


def weighted_behavior(
    arena: Arena, weights: Mapping[str, Mapping[int, float]]
) -> AdversaryBehavior:
    """Normalize per-location task weights; uncovered locations fall back to uniform.

    Weights are keyed by task index in the arena's canonical task order.
    """
    table = {}
    for v in arena.decision_locations:
        tasks = tasks_at(arena, v)
        if v not in weights:
            p = 1.0 / len(tasks)
            table[v] = tuple((t, p) for t in tasks)
            continue
        per_task = [float(weights[v].get(i, 0.0)) for i in range(len(tasks))]
        if any(w < 0 for w in per_task):
            raise AllZeroWeights(f"negative weight at {v!r}")
        total = sum(per_task)
        if total <= 0.0:
            raise AllZeroWeights(f"all task weights zero at {v!r}")
        table[v] = tuple((t, w / total) for t, w in zip(tasks, per_task))
    return AdversaryBehavior(table)


def deterministic_behavior(
    arena: Arena, choice: Mapping[str, int] | None = None
) -> AdversaryBehavior:
    """Singleton-support behavior: one fixed task per decision location.

    Defaults to the task whose endpoint is lexicographically smallest, which
    yields a fixed patrol cycle on grid arenas.
    """
    picks: dict[str, Mapping[int, float]] = {}
    for v in arena.decision_locations:
        tasks = tasks_at(arena, v)
        if choice is not None and v in choice:
            idx = choice[v]
        else:
            idx = min(range(len(tasks)), key=lambda i: tasks[i].end)
        picks[v] = {idx: 1.0}
    return weighted_behavior(arena, picks)


def sample_task(behavior: AdversaryBehavior, location_id: str, rng: random.Random) -> Task:
    """Draw a task from the behavior's distribution at a decision location."""
    dist = behavior.distribution(location_id)
    r = rng.random()
    acc = 0.0
    for task, p in dist:
        acc += p
        if r < acc:
            return task
    return dist[-1][0]  # guard against accumulated rounding


def load_behaviors(data: bytes | str, arena: Arena, adversaries: int) -> list[AdversaryBehavior]:
    """Parse behavior JSON ({"agent": i, "weights": {...}} or a list of those).

    Returns one behavior per adversary 1..adversaries; agents without an
    entry get the uniform behavior.
    """
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    entries = doc if isinstance(doc, list) else [doc]
    behaviors: list[AdversaryBehavior] = [uniform_behavior(arena) for _ in range(adversaries)]
    for entry in entries:
        try:
            agent = int(entry["agent"])
            weights = {
                str(v): {int(i): float(w) for i, w in enumerate(ws)}
                for v, ws in entry.get("weights", {}).items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed behavior entry: {exc}") from exc
        if not 1 <= agent <= adversaries:
            raise ParseError(f"behavior for unknown adversary {agent}")
        behaviors[agent - 1] = weighted_behavior(arena, weights)
    return behaviors
