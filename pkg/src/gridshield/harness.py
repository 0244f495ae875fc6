"""Experiment drivers: shielded episodes, timing sweeps, learning runs."""

from __future__ import annotations

import csv
import io
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .arena import Arena, tasks_at
from .behavior import AdversaryBehavior, sample_task
from .errors import InvalidMap, NoFirstDecisionState
from .maps import load_map
from .mdp import GlobalState, initial_state
from .rl import LearnerConfig, QFunction, features, q_update, select_task
from .shield import Shield, compute_shield, update_shield, valuations
from .snake import SnakeGame, new_game, reward as snake_reward, unsafe as snake_unsafe
from .submdp import SubMdp, UnsafePredicate, expand

REWARD_WINDOW = 50


@dataclass(frozen=True)
class BenchRecord:
    horizon: int
    length: int
    mean_s: float
    max_s: float
    samples: int


@dataclass(frozen=True)
class RewardRecord:
    episode: int
    mode: str
    mean_reward: float


@dataclass
class ShieldState:
    """The shield in force plus the lookahead model it came from."""

    shield: Shield | None = None
    submdp: SubMdp | None = None
    seconds: float = 0.0


def plain_collision(state: GlobalState) -> bool:
    return any(p == state.positions[0] for p in state.positions[1:])


def shield_at_decision(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    decision_state: GlobalState,
    horizon: int,
    delta: float,
    unsafe_predicate: UnsafePredicate,
) -> ShieldState:
    """Shield computed directly at a decision (used to bootstrap episodes)."""
    start = time.perf_counter()
    submdp, shield = compute_shield(
        arena, behaviors, decision_state, horizon, delta, unsafe_predicate
    )
    return ShieldState(shield, submdp, time.perf_counter() - start)


def shield_after_commit(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    post_decision_state: GlobalState,
    horizon: int,
    delta: float,
    unsafe_predicate: UnsafePredicate,
) -> ShieldState:
    """Shield for the next decision, computed while the task runs.

    Returns an empty ShieldState when no next decision is reachable (the
    episode is certain to end first).
    """
    start = time.perf_counter()
    try:
        submdp, shield = compute_shield(
            arena, behaviors, post_decision_state, horizon, delta, unsafe_predicate
        )
    except NoFirstDecisionState:
        return ShieldState(None, None, time.perf_counter() - start)
    return ShieldState(shield, submdp, time.perf_counter() - start)


def refresh_after_observation(
    current: ShieldState,
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    observed: GlobalState,
    horizon: int,
    delta: float,
    unsafe_predicate: UnsafePredicate,
    budget_ms: float = 0.0,
) -> ShieldState:
    """Recompute after an adversary decision; keep the old shield when the
    recomputation exceeds the time budget (0 disables the budget)."""
    if current.shield is None:
        return current
    start = time.perf_counter()
    try:
        shield = update_shield(
            arena, behaviors, observed, horizon, delta,
            unsafe_predicate, current.submdp,
        )
    except NoFirstDecisionState:
        return current
    elapsed = time.perf_counter() - start
    if budget_ms > 0.0 and elapsed * 1000.0 > budget_ms:
        return current
    return ShieldState(shield, current.submdp, elapsed)


# -- plain-agent episodes (position collisions, no snake payload) -------------


def play_plain_episode(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    start_positions: Sequence[str],
    horizon: int,
    delta: float,
    shielded: bool,
    rng: random.Random,
    max_rounds: int = 60,
) -> str:
    """Random walk of the avatar, optionally shield-filtered.

    Returns "collision" or "survived".
    """
    state = initial_state(start_positions)
    shield_state = ShieldState()
    rounds = 0
    while rounds < max_rounds:
        if plain_collision(state):
            return "collision"
        agent = state.turn
        if not state.queues[agent]:
            if agent == 0:
                candidates = tasks_at(arena, state.positions[0])
                if shielded:
                    if shield_state.shield is None:
                        shield_state = shield_at_decision(
                            arena, behaviors, state, horizon, delta, plain_collision
                        )
                    candidates = shield_state.shield.allowed
                task = candidates[rng.randrange(len(candidates))]
                state = state._replace(queues=(task.edges(),) + state.queues[1:])
                if shielded:
                    shield_state = shield_after_commit(
                        arena, behaviors, state, horizon, delta, plain_collision
                    )
            else:
                task = sample_task(behaviors[agent - 1], state.positions[agent], rng)
                queues = (
                    state.queues[:agent] + (task.edges(),) + state.queues[agent + 1 :]
                )
                state = state._replace(queues=queues)
                if shielded:
                    shield_state = refresh_after_observation(
                        shield_state, arena, behaviors, state,
                        horizon, delta, plain_collision,
                    )
        agent = state.turn
        src, dst = state.queues[agent][0]
        positions = state.positions[:agent] + (dst,) + state.positions[agent + 1 :]
        queues = state.queues[:agent] + (state.queues[agent][1:],) + state.queues[agent + 1 :]
        if agent == len(positions) - 1:
            rounds += 1
        state = GlobalState(positions, queues, (agent + 1) % len(positions), None)
    return "collision" if plain_collision(state) else "survived"


# -- snake episodes ------------------------------------------------------------


@dataclass
class EpisodeResult:
    total_reward: float
    status: str
    rounds: int
    collision_loss: bool
    shield_seconds: list[float] = field(default_factory=list)


PostDecisionHook = Callable[[GlobalState, Sequence[AdversaryBehavior]], None]


def play_snake_episode(
    game: SnakeGame,
    config: LearnerConfig,
    rng: random.Random,
    q: QFunction | None = None,
    shielded: bool = True,
    learn: bool = False,
    epsilon: float | None = None,
    budget_ms: float = 0.0,
    on_post_decision: PostDecisionHook | None = None,
) -> tuple[EpisodeResult, QFunction]:
    """Play one game; optionally Q-learn over the decisions."""
    eps = config.epsilon if epsilon is None else epsilon
    if q is None:
        q = QFunction()
    shield_state = ShieldState()
    result = EpisodeResult(0.0, game.status, 0, False)
    pending: tuple[tuple[float, ...], float] | None = None  # features, reward since

    while game.status == "running" and result.rounds < config.max_rounds:
        if game.at_decision():
            behaviors = [game.current_behavior()]
            shield = None
            if shielded:
                if shield_state.shield is None:
                    shield_state = shield_at_decision(
                        game.arena, behaviors, game.to_shield_state(),
                        config.horizon, config.delta, snake_unsafe,
                    )
                    result.shield_seconds.append(shield_state.seconds)
                shield = shield_state.shield
            candidates = shield.allowed if shield is not None else game.available_tasks()
            if learn and pending is not None:
                best_next = max(q.value(features(game, t)) for t in candidates)
                feats, gathered = pending
                q = q_update(q, feats, gathered, best_next, config)
                pending = None
            task = select_task(q, game, shield, eps, rng)
            if learn:
                pending = (features(game, task), 0.0)
            game.begin_task(task)
            if shielded:
                shield_state = shield_after_commit(
                    game.arena, behaviors, game.to_shield_state(),
                    config.horizon, config.delta, snake_unsafe,
                )
                result.shield_seconds.append(shield_state.seconds)
            if on_post_decision is not None:
                on_post_decision(game.to_shield_state(), behaviors)
        outcome = game.step_round()
        result.rounds += 1
        step_reward = snake_reward(outcome)
        result.total_reward += step_reward
        if pending is not None:
            pending = (pending[0], pending[1] + step_reward)
        if outcome.collision:
            result.collision_loss = True
        if game.status == "running" and shielded and outcome.adversary_decided is not None:
            shield_state = refresh_after_observation(
                shield_state, game.arena, [game.current_behavior()],
                outcome.adversary_decided, config.horizon, config.delta,
                snake_unsafe, budget_ms,
            )
    if learn and pending is not None:
        feats, gathered = pending
        q = q_update(q, feats, gathered, 0.0, config)
    result.status = game.status
    return result, q


def _parse_snake_map(map_text: str) -> tuple[Arena, tuple[str, str]]:
    arena, markers = load_map(map_text)
    if "A" not in markers or "E" not in markers:
        raise InvalidMap("snake map needs A and E spawn markers")
    return arena, (markers["A"], markers["E"])


@dataclass
class TrainResult:
    mode: str
    episode_rewards: list[float]
    collision_losses: int
    q: QFunction

    def windowed(self) -> list[RewardRecord]:
        records = []
        for end in range(REWARD_WINDOW, len(self.episode_rewards) + 1, REWARD_WINDOW):
            window = self.episode_rewards[end - REWARD_WINDOW : end]
            records.append(RewardRecord(end, self.mode, sum(window) / len(window)))
        return records


def train(
    map_text: str,
    config: LearnerConfig,
    seed: int,
    shielded: bool,
    apples_per_player: int = 5,
    snake_length: int = 3,
) -> TrainResult:
    """Q-learn over full games; rewards logged per episode."""
    mode = "shielded" if shielded else "unshielded"
    arena, spawns = _parse_snake_map(map_text)
    rng = random.Random(seed)
    q = QFunction()
    rewards: list[float] = []
    collisions = 0
    for _ in range(config.episodes):
        game = new_game(
            arena, seed=rng.randrange(2**31), spawns=spawns,
            apples_per_player=apples_per_player, snake_length=snake_length,
        )
        result, q = play_snake_episode(
            game, config, rng, q=q, shielded=shielded, learn=True,
        )
        rewards.append(result.total_reward)
        if result.collision_loss:
            collisions += 1
    return TrainResult(mode, rewards, collisions, q)


def evaluate(
    map_text: str,
    config: LearnerConfig,
    q: QFunction,
    seed: int,
    shielded: bool,
    games: int,
    apples_per_player: int = 5,
    snake_length: int = 3,
) -> dict[str, int]:
    """Greedy play-outs; counts wins, losses, and collision losses."""
    arena, spawns = _parse_snake_map(map_text)
    rng = random.Random(seed)
    stats = {"wins": 0, "losses": 0, "collision_losses": 0, "draws": 0}
    for _ in range(games):
        game = new_game(
            arena, seed=rng.randrange(2**31), spawns=spawns,
            apples_per_player=apples_per_player, snake_length=snake_length,
        )
        result, _ = play_snake_episode(
            game, config, rng, q=q, shielded=shielded, learn=False, epsilon=0.0,
        )
        if result.status == "avatar_won":
            stats["wins"] += 1
        elif result.status == "adversary_won":
            stats["losses"] += 1
            if result.collision_loss:
                stats["collision_losses"] += 1
        else:
            stats["draws"] += 1
    return stats


def train_compare(
    map_text: str,
    config: LearnerConfig,
    seeds: Sequence[int],
    eval_games: int,
    apples_per_player: int = 5,
    snake_length: int = 3,
) -> dict:
    """Shielded vs unshielded training plus post-training evaluation."""
    out: dict = {"modes": {}}
    for shielded in (True, False):
        mode = "shielded" if shielded else "unshielded"
        runs: list[TrainResult] = []
        eval_totals = {"wins": 0, "losses": 0, "collision_losses": 0, "draws": 0}
        training_collisions = 0
        for seed in seeds:
            run = train(
                map_text, config, seed, shielded,
                apples_per_player=apples_per_player, snake_length=snake_length,
            )
            runs.append(run)
            training_collisions += run.collision_losses
            stats = evaluate(
                map_text, config, run.q, seed + 1, shielded, eval_games,
                apples_per_player=apples_per_player, snake_length=snake_length,
            )
            for key, val in stats.items():
                eval_totals[key] += val
        averaged = [
            RewardRecord(
                end, mode,
                sum(sum(r.episode_rewards[end - REWARD_WINDOW : end]) for r in runs)
                / (REWARD_WINDOW * len(runs)),
            )
            for end in range(REWARD_WINDOW, config.episodes + 1, REWARD_WINDOW)
        ]
        games = eval_games * len(seeds)
        out["modes"][mode] = {
            "records": averaged,
            "training_collision_losses": training_collisions,
            "evaluation": eval_totals,
            "win_rate": eval_totals["wins"] / games if games else 0.0,
        }
    return out


# -- timing sweep ---------------------------------------------------------------


Situation = tuple[GlobalState, tuple[AdversaryBehavior, ...]]


def record_decision_situations(
    map_text: str,
    snake_length: int,
    samples: int,
    seed: int,
    apples_per_player: int = 5,
    recording_horizon: int = 10,
) -> tuple[Arena, list[Situation]]:
    """Post-decision snapshots from seeded play, for timing runs.

    Play runs shielded so games stay alive and the snapshots resemble the
    situations an online shield actually faces mid-game.
    """
    arena, spawns = _parse_snake_map(map_text)
    situations: list[Situation] = []
    rng = random.Random(seed)
    config = LearnerConfig(epsilon=1.0, episodes=1, horizon=recording_horizon, delta=1.0)
    while len(situations) < samples:
        game = new_game(
            arena, seed=rng.randrange(2**31), spawns=spawns,
            apples_per_player=apples_per_player, snake_length=snake_length,
        )
        play_snake_episode(
            game, config, rng, shielded=True, learn=False, epsilon=1.0,
            on_post_decision=lambda state, behaviors: situations.append(
                (state, tuple(behaviors))
            ),
        )
    return arena, situations[:samples]


def bench_horizon(
    map_text: str,
    horizons: Sequence[int],
    lengths: Sequence[int],
    samples: int,
    seed: int,
) -> list[BenchRecord]:
    """Full shield computation time (model build + valuation) per (h, l).

    The same recorded decision situations are re-timed at every horizon so
    the workload differs only in h.
    """
    records = []
    for length in lengths:
        arena, situations = record_decision_situations(map_text, length, samples, seed)
        for horizon in horizons:
            times = []
            for state, behaviors in situations:
                start = time.perf_counter()
                try:
                    model = expand(arena, behaviors, state, horizon, snake_unsafe)
                    valuations(model)
                except NoFirstDecisionState:
                    pass
                times.append(time.perf_counter() - start)
            records.append(
                BenchRecord(
                    horizon, length,
                    sum(times) / len(times), max(times), len(times),
                )
            )
    return records


def bench_csv(records: Sequence[BenchRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["h", "l", "mean_s", "max_s", "n"])
    for r in records:
        writer.writerow([r.horizon, r.length, f"{r.mean_s:.6f}", f"{r.max_s:.6f}", r.samples])
    return out.getvalue()


def reward_csv(records: Sequence[RewardRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["episode", "mode", "mean_reward_50"])
    for r in records:
        writer.writerow([r.episode, r.mode, f"{r.mean_reward:.6f}"])
    return out.getvalue()
