"""Two-player snake on an arena: the environment used by the demo and RL.

The game state is the shared multi-agent model itself: positions are the
snake heads, queues hold the committed corridor, and the payload carries
bodies and apples. Every game step goes through the model transitions, so
what the lookahead engine predicts is exactly what the game executes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple

from .arena import Arena, Task, shortest_path_lengths, tasks_at
from .behavior import AdversaryBehavior, weighted_behavior
from .errors import ArenaTooSmall, GameOver, InvalidMap
from .maps import load_map
from .mdp import (
    GlobalState,
    MOVE,
    DecideTask,
    adversary_distribution,
    initial_state,
    successors,
)

AVATAR = 0
ADVERSARY = 1

APPLE_SCORE = 10
WIN_SCORE = 50

RUNNING = "running"
AVATAR_WON = "avatar_won"
ADVERSARY_WON = "adversary_won"


class SnakePayload(NamedTuple):
    """Bodies (head first) and remaining apples, one entry per player."""

    bodies: tuple[tuple[str, ...], tuple[str, ...]]
    apples: tuple[frozenset[str], frozenset[str]]

    def after_move(self, agent: int, src: str, dst: str) -> "SnakePayload":
        body = self.bodies[agent]
        apples = self.apples[agent]
        if dst in apples:
            body = (dst,) + body  # grow by one segment on an apple
            apples = apples - {dst}
        else:
            body = (dst,) + body[:-1]
        bodies = tuple(
            body if i == agent else b for i, b in enumerate(self.bodies)
        )
        new_apples = tuple(
            apples if i == agent else a for i, a in enumerate(self.apples)
        )
        return SnakePayload(bodies, new_apples)

    def survives(self, agent: int, task: Task) -> bool:
        """Whether traversing the task avoids the own (evolving) body."""
        body = self.bodies[agent]
        apples = self.apples[agent]
        for _, dst in task.edges():
            if dst in apples:
                body = (dst,) + body
                apples = apples - {dst}
            else:
                body = (dst,) + body[:-1]
            if body[0] in body[1:]:
                return False
        return True

    def playable_tasks(self, agent: int, tasks: tuple[Task, ...]) -> tuple[Task, ...]:
        """Classic snake rule: self-fatal corridors may not be entered.

        Falls back to the full set when nothing survives (doomed anyway),
        keeping action sets non-empty.
        """
        playable = tuple(t for t in tasks if self.survives(agent, t))
        return playable or tasks


def unsafe(state: GlobalState) -> bool:
    """Avatar-fatal collision: its head on the adversary body, or head-on."""
    payload: SnakePayload = state.payload
    avatar_head = payload.bodies[AVATAR][0]
    return avatar_head in payload.bodies[ADVERSARY]


class RoundOutcome(NamedTuple):
    """What one full round (both players) changed."""

    apples_eaten: int  # by the avatar
    avatar_won: bool
    avatar_lost: bool
    collision: bool  # the avatar lost by a collision (not by apple count)
    adversary_decided: GlobalState | None  # state right after its task choice


def reward(outcome: RoundOutcome) -> float:
    """Avatar reward: +10 per own apple, +50 on a win, 0 otherwise."""
    return APPLE_SCORE * outcome.apples_eaten + (WIN_SCORE if outcome.avatar_won else 0.0)


@dataclass
class SnakeGame:
    arena: Arena
    state: GlobalState
    rng: random.Random
    scores: dict[str, int] = field(default_factory=lambda: {"avatar": 0, "adversary": 0})
    status: str = RUNNING

    # -- queries --------------------------------------------------------------

    @property
    def payload(self) -> SnakePayload:
        return self.state.payload

    def at_decision(self) -> bool:
        return self.status == RUNNING and not self.state.queues[AVATAR]

    def available_tasks(self) -> tuple[Task, ...]:
        """Tasks the avatar may enter; self-fatal corridors are excluded
        unless nothing else remains (then the snake is doomed anyway)."""
        tasks = tasks_at(self.arena, self.state.positions[AVATAR])
        return self.payload.playable_tasks(AVATAR, tasks)

    def current_behavior(self) -> AdversaryBehavior:
        """Apple-seeking behavior for the adversary's current apple set."""
        return apple_seeking_behavior(self.arena, self.payload.apples[ADVERSARY])

    def to_shield_state(self) -> GlobalState:
        if self.status != RUNNING:
            raise GameOver(f"game is over: {self.status}")
        return self.state

    # -- play -----------------------------------------------------------------

    def begin_task(self, task: Task) -> None:
        """Commit the avatar to a task at a decision point."""
        if not self.at_decision():
            raise GameOver("avatar is not at a decision point")
        behaviors = [self.current_behavior()]
        ((_, nxt),) = successors(self.arena, behaviors, self.state, DecideTask(task))
        self.state = nxt

    def _pick_adversary_task(self) -> Task:
        """Sample the same distribution the lookahead model branches over."""
        dist = adversary_distribution(self.arena, [self.current_behavior()], self.state)
        r = self.rng.random()
        acc = 0.0
        for task, p in dist:
            acc += p
            if r < acc:
                return task
        return dist[-1][0]

    def step_round(self) -> RoundOutcome:
        """Both players move one cell; the avatar must have a queued task."""
        if self.status != RUNNING:
            raise GameOver(f"game is over: {self.status}")
        if not self.state.queues[AVATAR]:
            raise GameOver("avatar has no committed task; call begin_task first")
        apples_before = len(self.payload.apples[AVATAR])

        # Avatar moves.
        behaviors = [self.current_behavior()]
        self.state = successors(self.arena, behaviors, self.state, MOVE)[0][1]
        eaten = apples_before - len(self.payload.apples[AVATAR])
        self.scores["avatar"] += APPLE_SCORE * eaten
        if self._avatar_collided():
            self.status = ADVERSARY_WON
            return RoundOutcome(eaten, False, True, True, None)
        if not self.payload.apples[AVATAR]:
            self.status = AVATAR_WON
            self.scores["avatar"] += WIN_SCORE
            return RoundOutcome(eaten, True, False, False, None)

        # Adversary selects a task if needed, then moves.
        observed = None
        if not self.state.queues[ADVERSARY]:
            task = self._pick_adversary_task()
            queues = (self.state.queues[AVATAR], task.edges())
            self.state = self.state._replace(queues=queues)
            observed = self.state
        adversary_apples = len(self.payload.apples[ADVERSARY])
        self.state = successors(self.arena, behaviors, self.state, MOVE)[0][1]
        self.scores["adversary"] += APPLE_SCORE * (
            adversary_apples - len(self.payload.apples[ADVERSARY])
        )
        if self._adversary_collided():
            if self.payload.bodies[ADVERSARY][0] == self.payload.bodies[AVATAR][0]:
                self.status = ADVERSARY_WON  # head-on: the avatar loses
                return RoundOutcome(eaten, False, True, True, observed)
            self.status = AVATAR_WON
            self.scores["avatar"] += WIN_SCORE
            return RoundOutcome(eaten, True, False, False, observed)
        if not self.payload.apples[ADVERSARY]:
            self.status = ADVERSARY_WON
            self.scores["adversary"] += WIN_SCORE
            return RoundOutcome(eaten, False, True, False, observed)
        return RoundOutcome(eaten, False, False, False, observed)

    def _avatar_collided(self) -> bool:
        head = self.payload.bodies[AVATAR][0]
        return head in self.payload.bodies[ADVERSARY] or head in self.payload.bodies[AVATAR][1:]

    def _adversary_collided(self) -> bool:
        head = self.payload.bodies[ADVERSARY][0]
        return head in self.payload.bodies[AVATAR] or head in self.payload.bodies[ADVERSARY][1:]


def _tail_path(arena: Arena, head: str, length: int, occupied: set[str]) -> tuple[str, ...]:
    """Self-avoiding path of the requested length starting at head (DFS)."""

    def extend(path: list[str]) -> tuple[str, ...] | None:
        if len(path) == length:
            return tuple(path)
        for nxt in arena.adjacency[path[-1]]:
            if nxt in occupied or nxt in path:
                continue
            path.append(nxt)
            found = extend(path)
            if found:
                return found
            path.pop()
        return None

    found = extend([head])
    if found is None:
        raise ArenaTooSmall(f"cannot place a snake of length {length} at {head}")
    return found


def new_game(
    arena_or_map: Arena | str,
    seed: int,
    apples_per_player: int = 5,
    snake_length: int = 3,
    spawns: tuple[str, str] | None = None,
) -> SnakeGame:
    """Set up a reproducible game; spawns come from A/E markers if present."""
    if isinstance(arena_or_map, str):
        arena, markers = load_map(arena_or_map)
        if spawns is None:
            if "A" not in markers or "E" not in markers:
                raise InvalidMap("map needs A and E spawn markers")
            spawns = (markers["A"], markers["E"])
    else:
        arena = arena_or_map
        if spawns is None:
            raise ArenaTooSmall("spawns required when an arena is given directly")

    for head in spawns:
        if head not in arena.decision_locations:
            raise InvalidMap(f"spawn {head!r} must be a decision location")

    corridor = sorted(arena.locations)
    if len(corridor) < 2 * apples_per_player + 2 * snake_length:
        raise ArenaTooSmall(
            f"{len(corridor)} tiles cannot hold 2x{apples_per_player} apples "
            f"and 2 snakes of length {snake_length}"
        )

    avatar_body = _tail_path(arena, spawns[0], snake_length, set())
    adversary_body = _tail_path(arena, spawns[1], snake_length, set(avatar_body))

    rng = random.Random(seed)
    blocked = set(avatar_body) | set(adversary_body)
    free = [v for v in corridor if v not in blocked]
    if len(free) < 2 * apples_per_player:
        raise ArenaTooSmall("not enough free tiles for the apples")
    picked = rng.sample(free, 2 * apples_per_player)
    payload = SnakePayload(
        bodies=(avatar_body, adversary_body),
        apples=(frozenset(picked[:apples_per_player]), frozenset(picked[apples_per_player:])),
    )
    state = initial_state((spawns[0], spawns[1]), payload=payload)
    return SnakeGame(arena=arena, state=state, rng=rng)


def apple_seeking_behavior(arena: Arena, apples: frozenset[str]) -> AdversaryBehavior:
    """Favor (4:1) tasks whose endpoint minimizes grid distance to an apple."""
    if not apples:
        return weighted_behavior(arena, {})
    targets = [arena.coords(a) for a in sorted(apples)]

    def grid_distance(v: str) -> int:
        x, y = arena.coords(v)
        return min(abs(x - tx) + abs(y - ty) for tx, ty in targets)

    weights = {}
    for v in arena.decision_locations:
        tasks = tasks_at(arena, v)
        dists = [grid_distance(t.end) for t in tasks]
        best = min(dists)
        weights[v] = {
            i: 4.0 if d == best else 1.0 for i, d in enumerate(dists)
        }
    return weighted_behavior(arena, weights)


def nearest_apple_distance(arena: Arena, start: str, apples: frozenset[str]) -> int:
    """Shortest-path hops from start to the closest apple; 0 when none left."""
    if not apples:
        return 0
    dist = shortest_path_lengths(arena, start)
    reachable = [dist[a] for a in apples if a in dist]
    return min(reachable) if reachable else 0
