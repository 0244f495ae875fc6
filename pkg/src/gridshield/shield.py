"""Task valuations by minimal reachability of unsafe states, and shields.

Values are computed by one exact backward pass over the lookahead DAG:
unsafe sinks are 1, out-of-horizon frontier states are 0, avatar decisions
minimize, stochastic and deterministic steps average. A shield with
threshold delta admits every task t with delta * value(t) <= optimal value,
so the argmin tasks are always admitted and the shield can never deadlock.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .arena import Arena, Task
from .behavior import AdversaryBehavior
from .errors import DeltaOutOfRange, NoFirstDecisionState
from .mdp import DecideTask, GlobalState
from .submdp import (
    RestrictedSubMdp,
    SubMdp,
    UnsafePredicate,
    expand,
    restrict_first_decision,
    tasks_of_first_decision,
)

BAND_NAMES = ("green", "yellow", "orange", "red")
# Display-only thresholds: zero risk, then thirds.
YELLOW_MAX = 1.0 / 3.0
ORANGE_MAX = 2.0 / 3.0


@dataclass(frozen=True)
class TaskValuation:
    """Minimal unsafe-reachability probability per next-decision task."""

    values: dict[Task, float]
    optimal: float

    def argmin_tasks(self) -> tuple[Task, ...]:
        return tuple(t for t, v in self.values.items() if v == self.optimal)


@dataclass(frozen=True)
class Shield:
    """The delta-admissible task subset for the next decision."""

    allowed: tuple[Task, ...]
    delta: float
    valuation: TaskValuation

    def permits(self, task: Task) -> bool:
        return task in self.allowed


def _node_values(submdp: SubMdp, restrict: Task | None) -> list[float]:
    """Backward induction over the whole DAG; cached per restriction."""
    cached = submdp._value_cache.get(restrict)
    if cached is not None:
        return cached
    values = [0.0] * submdp.node_count()
    unsafe = submdp.unsafe
    first_decision = submdp.first_decision
    transitions = submdp.transitions
    for node in reversed(submdp.topological_order()):
        if node in unsafe:
            values[node] = 1.0
            continue
        rows = transitions[node]
        if not rows:
            continue  # beyond the horizon: counts as safe
        if restrict is not None and node in first_decision:
            rows = tuple(
                (action, dist)
                for action, dist in rows
                if isinstance(action, DecideTask) and action.task == restrict
            )
        best = None
        for _, dist in rows:
            total = 0.0
            for p, succ in dist:
                total += p * values[succ]
            if best is None or total < best:
                best = total
        values[node] = best if best is not None else 0.0
    submdp._value_cache[restrict] = values
    return values


def _reaches_first_decision(submdp: SubMdp, node: int) -> bool:
    seen = {node}
    stack = [node]
    while stack:
        current = stack.pop()
        if current in submdp.first_decision:
            return True
        for _, dist in submdp.transitions[current]:
            for _, succ in dist:
                if succ not in seen:
                    seen.add(succ)
                    stack.append(succ)
    return False


def min_reach_probability(view: SubMdp | RestrictedSubMdp) -> float:
    """Minimal probability of reaching an unsafe state from the initial state."""
    if isinstance(view, RestrictedSubMdp):
        return _node_values(view.submdp, view.task)[view.submdp.initial]
    return _node_values(view, None)[view.initial]


def valuations(submdp: SubMdp) -> TaskValuation:
    """Value every task available at the first decision."""
    values = {
        task: min_reach_probability(restrict_first_decision(submdp, task))
        for task in tasks_of_first_decision(submdp)
    }
    return TaskValuation(values=values, optimal=min(values.values()))


def make_shield(valuation: TaskValuation, delta: float) -> Shield:
    """Admit every task within the delta-relative band of the optimum."""
    if not 0.0 <= delta <= 1.0:
        raise DeltaOutOfRange(f"delta must be in [0, 1], got {delta}")
    allowed = tuple(
        t for t, v in valuation.values.items() if delta * v <= valuation.optimal
    )
    return Shield(allowed=allowed, delta=delta, valuation=valuation)


def compute_shield(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    root: GlobalState,
    horizon: int,
    delta: float,
    unsafe_predicate: UnsafePredicate,
) -> tuple[SubMdp, Shield]:
    """Build the lookahead model at root and derive the shield from it."""
    submdp = expand(arena, behaviors, root, horizon, unsafe_predicate)
    return submdp, make_shield(valuations(submdp), delta)


def update_shield(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    observed_state: GlobalState,
    horizon: int,
    delta: float,
    unsafe_predicate: UnsafePredicate,
    previous: SubMdp | None = None,
) -> Shield:
    """Recompute the shield after an adversary decision resolved.

    When the observed state is a node of the previous model, its cached
    backward-induction values are reused: the per-task value at that node is
    exactly the from-scratch value, because transitions depend only on
    (state, rounds to the decision) and the bound is unchanged.
    """
    if previous is not None:
        node = None
        for d in range(previous.first_decision_distance + 1):
            node = previous.index.get((observed_state, d))
            if node is not None:
                break
        if node is not None:
            tasks = tasks_of_first_decision(previous)
            values = {t: _node_values(previous, t)[node] for t in tasks}
            if all(v == 1.0 for v in values.values()) and not _reaches_first_decision(
                previous, node
            ):
                # Every path from here dies before the decision; mirror the
                # from-scratch behavior for such doomed branches.
                raise NoFirstDecisionState("no decision reachable from observed state")
            valuation = TaskValuation(values=values, optimal=min(values.values()))
            return make_shield(valuation, delta)
    _, shield = compute_shield(
        arena, behaviors, observed_state, horizon, delta, unsafe_predicate
    )
    return shield


def band_of(value: float) -> str:
    """Display band for a task value; monotone in the value."""
    if value <= 0.0:
        return "green"
    if value <= YELLOW_MAX:
        return "yellow"
    if value <= ORANGE_MAX:
        return "orange"
    return "red"


def risk_bands(valuation: TaskValuation) -> dict[Task, str]:
    return {task: band_of(value) for task, value in valuation.values.items()}
