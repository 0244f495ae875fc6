"""On-the-fly semantics of the multi-agent safety model.

States track every agent's position, its queue of remaining activities, and
whose turn it is (agent 0 is the avatar). The model is never materialized:
callers enumerate enabled actions and successor distributions state by state.
"""

from __future__ import annotations

import random
from typing import Any, Callable, NamedTuple, Sequence, Union

from .arena import Arena, Task, tasks_at
from .behavior import AdversaryBehavior
from .errors import ActionNotEnabled, PolicyReturnedBlockedTask

Edge = tuple[str, str]


class GlobalState(NamedTuple):
    positions: tuple[str, ...]
    queues: tuple[tuple[Edge, ...], ...]
    turn: int
    payload: Any = None

    @property
    def agents(self) -> int:
        return len(self.positions)


class DecideTask(NamedTuple):
    """The avatar commits to a task."""

    task: Task


class AdvDecide(NamedTuple):
    """An adversary selects its next task stochastically."""


class Move(NamedTuple):
    """The current agent traverses the head edge of its queue."""


Action = Union[DecideTask, AdvDecide, Move]
ADV_DECIDE = AdvDecide()
MOVE = Move()


def initial_state(
    positions: Sequence[str], queues: Sequence[Sequence[Edge]] = (), payload: Any = None
) -> GlobalState:
    qs = tuple(tuple(q) for q in queues) or tuple(() for _ in positions)
    return GlobalState(tuple(positions), qs, 0, payload)


def is_decision_state(state: GlobalState) -> bool:
    """True iff it is the avatar's turn and its task queue is empty."""
    return state.turn == 0 and not state.queues[0]


def _agent_tasks(arena: Arena, state: GlobalState, agent: int) -> tuple[Task, ...]:
    """Task choices of an agent; the payload may veto some (e.g. snake bodies)."""
    tasks = tasks_at(arena, state.positions[agent])
    payload = state.payload
    if payload is not None and hasattr(payload, "playable_tasks"):
        return payload.playable_tasks(agent, tasks)
    return tasks


def enabled_actions(arena: Arena, state: GlobalState) -> tuple:
    """The non-empty action set of a state."""
    if is_decision_state(state):
        return tuple(DecideTask(t) for t in _agent_tasks(arena, state, 0))
    if not state.queues[state.turn]:
        return (ADV_DECIDE,)
    return (MOVE,)


def _with_queue(state: GlobalState, agent: int, queue: tuple[Edge, ...]) -> GlobalState:
    queues = state.queues[:agent] + (queue,) + state.queues[agent + 1 :]
    return state._replace(queues=queues)


def adversary_distribution(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    state: GlobalState,
) -> list[tuple[Task, float]]:
    """The current adversary's effective task distribution.

    The behavior gives the per-location probabilities; tasks the payload
    vetoes are dropped and the rest renormalized, matching how environments
    actually draw the choice.
    """
    agent = state.turn
    dist = [
        (t, p)
        for t, p in behaviors[agent - 1].distribution(state.positions[agent])
        if p > 0.0
    ]
    allowed = set(_agent_tasks(arena, state, agent))
    kept = [(t, p) for t, p in dist if t in allowed]
    if kept and len(kept) < len(dist):
        total = sum(p for _, p in kept)
        kept = [(t, p / total) for t, p in kept]
    return kept or dist


def successors(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    state: GlobalState,
    action,
) -> list[tuple[float, GlobalState]]:
    """Successor distribution of one action; probabilities sum to 1."""
    if isinstance(action, DecideTask):
        if not is_decision_state(state):
            raise ActionNotEnabled("task decisions require a decision state")
        task = action.task
        if task not in _agent_tasks(arena, state, 0):
            raise ActionNotEnabled(f"task {task.path} not available here")
        return [(1.0, _with_queue(state, 0, task.edges()))]

    agent = state.turn
    if isinstance(action, AdvDecide):
        if agent == 0 or state.queues[agent]:
            raise ActionNotEnabled("adversary decision not enabled")
        return [
            (p, _with_queue(state, agent, task.edges()))
            for task, p in adversary_distribution(arena, behaviors, state)
        ]

    if isinstance(action, Move):
        queue = state.queues[agent]
        if not queue:
            raise ActionNotEnabled("agent has no pending activity")
        src, dst = queue[0]
        positions = state.positions[:agent] + (dst,) + state.positions[agent + 1 :]
        queues = state.queues[:agent] + (queue[1:],) + state.queues[agent + 1 :]
        payload = state.payload
        if payload is not None:
            payload = payload.after_move(agent, src, dst)
        turn = (state.turn + 1) % state.agents
        return [(1.0, GlobalState(positions, queues, turn, payload))]

    raise ActionNotEnabled(f"unknown action {action!r}")


def advance_turn(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    state: GlobalState,
    avatar_policy: Callable[[GlobalState], Task],
    rng: random.Random,
) -> GlobalState:
    """One agent step: select a task if the queue is empty, then move once."""
    if not state.queues[state.turn]:
        if state.turn == 0:
            task = avatar_policy(state)
            if DecideTask(task) not in enabled_actions(arena, state):
                raise PolicyReturnedBlockedTask(f"policy chose unavailable task {task}")
            state = successors(arena, behaviors, state, DecideTask(task))[0][1]
        else:
            dist = adversary_distribution(arena, behaviors, state)
            r = rng.random()
            acc = 0.0
            task = dist[-1][0]
            for candidate, p in dist:
                acc += p
                if r < acc:
                    task = candidate
                    break
            state = _with_queue(state, state.turn, task.edges())
    return successors(arena, behaviors, state, MOVE)[0][1]
