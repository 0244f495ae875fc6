"""Command line entry point."""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import maps
from .arena import Task, gridworld_from_ascii, tasks_at
from .behavior import load_behaviors, uniform_behavior
from .errors import GridShieldError, ParseError
from .harness import (
    LearnerConfig,
    bench_csv,
    bench_horizon,
    plain_collision,
    play_snake_episode,
    reward_csv,
    train,
)
from .maps import load_map
from .mdp import initial_state
from .rl import QFunction
from .shield import band_of, make_shield, valuations
from .snake import new_game
from .submdp import expand, export_dot

BUILTIN_MAPS = {
    "maze5x5": maps.MAZE_5X5,
    "pillars7x7": maps.PILLARS_7X7,
    "snake-small": maps.SNAKE_SMALL,
    "snake-bench": maps.SNAKE_BENCH,
}


def resolve_map(name: str) -> str:
    if name in BUILTIN_MAPS:
        return BUILTIN_MAPS[name]
    path = Path(name)
    if not path.exists():
        raise ParseError(f"unknown map {name!r} (builtin: {', '.join(BUILTIN_MAPS)})")
    return path.read_text()


def parse_horizons(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(h) for h in spec.split(",")]


def load_state(path: str, arena):
    doc = json.loads(Path(path).read_text())
    try:
        avatar = doc["avatar"]
        positions = [str(avatar["at"])]
        queues = []
        if "task" in avatar and avatar["task"]:
            path_ids = [str(v) for v in avatar["task"]]
            queues.append(tuple(zip(path_ids, path_ids[1:])))
        else:
            queues.append(())
        for adv in doc.get("adversaries", []):
            positions.append(str(adv["at"]))
            ids = [str(v) for v in adv.get("queue", [])]
            queues.append(tuple(zip(ids, ids[1:])) if len(ids) > 1 else ())
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed state file: {exc}") from exc
    return initial_state(positions, queues)


def add_common(parser: argparse.ArgumentParser, default_map: str) -> None:
    parser.add_argument("--map", default=default_map, help="builtin name or map file")
    parser.add_argument("--horizon", type=int, default=maps.SNAKE_SMALL_HORIZON)
    parser.add_argument("--delta", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--behavior", help="behavior weights JSON file")
    parser.add_argument("--budget-ms", type=float, default=0.0,
                        help="time budget for mid-task shield updates (0 = unlimited)")


def cmd_check(args) -> int:
    arena = gridworld_from_ascii(resolve_map(args.map))
    state = load_state(args.state, arena)
    adversaries = len(state.positions) - 1
    if args.behavior:
        behaviors = load_behaviors(Path(args.behavior).read_bytes(), arena, adversaries)
    else:
        behaviors = [uniform_behavior(arena) for _ in range(adversaries)]
    model = expand(arena, behaviors, state, args.horizon, plain_collision)
    valuation = valuations(model)
    shield = make_shield(valuation, args.delta)
    order = list(valuation.values)
    doc = {
        "tasks": [
            {"path": list(t.path), "value": valuation.values[t], "band": band_of(valuation.values[t])}
            for t in order
        ],
        "optimal": valuation.optimal,
        "allowed": [i for i, t in enumerate(order) if shield.permits(t)],
        "delta": args.delta,
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_export_dot(args) -> int:
    arena = gridworld_from_ascii(resolve_map(args.map))
    state = load_state(args.state, arena)
    adversaries = len(state.positions) - 1
    if args.behavior:
        behaviors = load_behaviors(Path(args.behavior).read_bytes(), arena, adversaries)
    else:
        behaviors = [uniform_behavior(arena) for _ in range(adversaries)]
    model = expand(arena, behaviors, state, args.horizon, plain_collision)
    text = export_dot(model)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_simulate(args) -> int:
    map_text = resolve_map(args.map)
    config = LearnerConfig(
        epsilon=1.0, episodes=args.episodes, horizon=args.horizon, delta=args.delta
    )
    rng = random.Random(args.seed)
    stats = {"episodes": args.episodes, "wins": 0, "losses": 0,
             "collision_losses": 0, "draws": 0, "mean_reward": 0.0}
    total = 0.0
    for _ in range(args.episodes):
        game = new_game(map_text, seed=rng.randrange(2**31),
                        snake_length=args.snake_length)
        result, _ = play_snake_episode(
            game, config, rng, shielded=args.shield, learn=False,
            epsilon=1.0, budget_ms=args.budget_ms,
        )
        total += result.total_reward
        if result.status == "avatar_won":
            stats["wins"] += 1
        elif result.status == "adversary_won":
            stats["losses"] += 1
            if result.collision_loss:
                stats["collision_losses"] += 1
        else:
            stats["draws"] += 1
    if args.episodes:
        stats["mean_reward"] = total / args.episodes
    print(json.dumps(stats, indent=2))
    return 0


def cmd_train(args) -> int:
    map_text = resolve_map(args.map)
    config = LearnerConfig(
        episodes=args.episodes, horizon=args.horizon, delta=args.delta
    )
    result = train(map_text, config, args.seed, shielded=args.shield,
                   snake_length=args.snake_length)
    csv_text = reward_csv(result.windowed())
    if args.out_csv:
        Path(args.out_csv).write_text(csv_text)
    else:
        print(csv_text, end="")
    if args.out_weights:
        Path(args.out_weights).write_text(result.q.to_json())
    print(
        f"mode={result.mode} episodes={args.episodes} "
        f"training_collision_losses={result.collision_losses}",
        file=sys.stderr,
    )
    return 0


def cmd_bench(args) -> int:
    map_text = resolve_map(args.map)
    records = bench_horizon(
        map_text,
        parse_horizons(args.horizons),
        [int(l) for l in args.lengths.split(",")],
        args.samples,
        args.seed,
    )
    text = bench_csv(records)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config = ServiceConfig(
        map_text=resolve_map(args.map),
        horizon=args.horizon,
        delta=args.delta,
        tick_ms=args.tick_ms,
        seed=args.seed,
        port=args.port,
        host=args.host,
        mode=args.mode,
        budget_ms=args.budget_ms,
        weights_path=args.weights,
    )
    serve(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridshield",
        description="Runtime shielding of task choices in shared grid arenas",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="one-shot shield valuation for a state file")
    add_common(p, "maze5x5")
    p.add_argument("state", help="state JSON file")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("export-dot", help="lookahead model as a DOT graph")
    add_common(p, "maze5x5")
    p.add_argument("state", help="state JSON file")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_export_dot)

    p = sub.add_parser("simulate", help="play snake episodes with a random policy")
    add_common(p, "snake-small")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--snake-length", type=int, default=3)
    shield = p.add_mutually_exclusive_group()
    shield.add_argument("--shield", dest="shield", action="store_true", default=True)
    shield.add_argument("--no-shield", dest="shield", action="store_false")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("train", help="Q-learning over snake games")
    add_common(p, "snake-small")
    p.add_argument("--episodes", type=int, default=800)
    p.add_argument("--snake-length", type=int, default=3)
    p.add_argument("--out-csv")
    p.add_argument("--out-weights")
    shield = p.add_mutually_exclusive_group()
    shield.add_argument("--shield", dest="shield", action="store_true", default=True)
    shield.add_argument("--no-shield", dest="shield", action="store_false")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("bench", help="shield computation timing sweep")
    add_common(p, "snake-bench")
    p.add_argument("--horizons", default="10..20")
    p.add_argument("--lengths", default="10,15")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the demonstrator service")
    add_common(p, "snake-small")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--tick-ms", type=int, default=200)
    p.add_argument("--mode", choices=("human", "rl", "random"), default="human")
    p.add_argument("--weights", help="trained Q weights JSON")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except GridShieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
