"""Long-running game service: one shared snake game, many viewers, one driver.

The loop advances the game at a fixed tick, runs shield computations on a
worker thread, and pushes JSON frames to every connected client. In human
mode the game pauses at each avatar decision until a choose command arrives;
blocked choices are rejected and the game stays paused.
"""

from __future__ import annotations

import asyncio
import random
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .arena import Task
from .harness import (
    ShieldState,
    refresh_after_observation,
    shield_after_commit,
    shield_at_decision,
)
from .maps import SNAKE_SMALL, SNAKE_SMALL_HORIZON, strip_markers
from .rl import QFunction, select_task
from .shield import Shield, band_of, make_shield
from .snake import new_game, unsafe as snake_unsafe

MODES = ("human", "rl", "random")


@dataclass
class ServiceConfig:
    map_text: str = SNAKE_SMALL
    horizon: int = SNAKE_SMALL_HORIZON
    delta: float = 1.0
    tick_ms: int = 200
    seed: int = 1
    port: int = 8000
    host: str = "127.0.0.1"
    mode: str = "human"
    apples_per_player: int = 5
    snake_length: int = 3
    budget_ms: float = 0.0
    weights_path: str | None = None
    static_dir: str | None = None


def _coords(arena, location_id: str) -> list[int]:
    x, y = arena.coords(location_id)
    return [x, y]


@dataclass
class GameService:
    config: ServiceConfig
    clients: dict[WebSocket, None] = field(default_factory=dict)
    commands: asyncio.Queue | None = None  # created once the loop runs

    def __post_init__(self) -> None:
        self.delta = self.config.delta
        self.mode = self.config.mode
        self.paused = False
        self.tick = 0
        self.rng = random.Random(self.config.seed)
        self.q = QFunction()
        if self.config.weights_path:
            self.q = QFunction.from_json(Path(self.config.weights_path).read_text())
        self._executor = ThreadPoolExecutor(max_workers=1)
        self._reset(self.config.seed)

    def _reset(self, seed: int) -> None:
        self.game = new_game(
            self.config.map_text, seed=seed,
            apples_per_player=self.config.apples_per_player,
            snake_length=self.config.snake_length,
        )
        self.shield_state = ShieldState()
        self.tick = 0

    # -- shield plumbing -------------------------------------------------------

    async def _run(self, fn, *args):
        return await asyncio.get_running_loop().run_in_executor(self._executor, fn, *args)

    async def _ensure_decision_shield(self) -> None:
        if self.shield_state.shield is None:
            game = self.game
            self.shield_state = await self._run(
                shield_at_decision, game.arena, [game.current_behavior()],
                game.to_shield_state(), self.config.horizon, self.delta, snake_unsafe,
            )

    def _current_shield(self) -> Shield | None:
        """The shield in force, re-derived for the current delta.

        The valuation's tasks are exactly the playable tasks of the coming
        decision (the lookahead filters them with the predicted body).
        """
        if self.shield_state.shield is None:
            return None
        return make_shield(self.shield_state.shield.valuation, self.delta)

    # -- frames ----------------------------------------------------------------

    def map_message(self) -> dict:
        clean, _ = strip_markers(self.config.map_text)
        rows = clean.split("\n")
        walls = [
            [x, y]
            for y, row in enumerate(rows, start=1)
            for x, ch in enumerate(row, start=1)
            if ch == "#"
        ]
        return {
            "type": "map",
            "width": len(rows[0]),
            "height": len(rows),
            "walls": walls,
            "delta": self.delta,
            "mode": self.mode,
            "tick_ms": self.config.tick_ms,
            "horizon": self.config.horizon,
        }

    def frame(self) -> dict:
        game = self.game
        arena = game.arena
        payload = game.payload
        shield = self._current_shield()
        tasks = []
        if shield is not None:
            allowed = set(shield.allowed)
            for task, value in shield.valuation.values.items():
                tasks.append({
                    "path": [_coords(arena, v) for v in task.path],
                    "value": value,
                    "band": band_of(value),
                    "allowed": task in allowed,
                })
        return {
            "type": "frame",
            "tick": self.tick,
            "avatar": [_coords(arena, v) for v in payload.bodies[0]],
            "adversary": [_coords(arena, v) for v in payload.bodies[1]],
            "apples": {
                "avatar": sorted(_coords(arena, v) for v in payload.apples[0]),
                "adversary": sorted(_coords(arena, v) for v in payload.apples[1]),
            },
            "scores": dict(game.scores),
            "decision": game.at_decision(),
            "tasks": tasks,
            "status": game.status,
        }

    async def broadcast(self) -> None:
        frame = self.frame()
        for ws in list(self.clients):
            try:
                await ws.send_json(frame)
            except Exception:
                self.clients.pop(ws, None)

    # -- commands ----------------------------------------------------------------

    async def _reply(self, ws: WebSocket, message: dict) -> None:
        try:
            await ws.send_json(message)
        except Exception:
            self.clients.pop(ws, None)

    async def handle_command(self, ws: WebSocket, msg) -> None:
        if not isinstance(msg, dict) or "type" not in msg:
            await self._reply(ws, {"error": "malformed"})
            return
        kind = msg["type"]
        if kind == "choose":
            await self._handle_choose(ws, msg)
        elif kind == "set_delta":
            try:
                value = float(msg.get("value"))
            except (TypeError, ValueError):
                await self._reply(ws, {"error": "bad_delta"})
                return
            if not 0.0 <= value <= 1.0:
                await self._reply(ws, {"error": "bad_delta"})
                return
            self.delta = value
            await self.broadcast()
        elif kind == "set_mode":
            mode = msg.get("mode")
            if mode not in MODES:
                await self._reply(ws, {"error": "bad_mode"})
                return
            self.mode = mode
        elif kind == "reset":
            seed = msg.get("seed", self.rng.randrange(2**31))
            if not isinstance(seed, int):
                await self._reply(ws, {"error": "bad_seed"})
                return
            self._reset(seed)
            await self.broadcast()
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        else:
            await self._reply(ws, {"error": f"unknown_command:{kind}"})

    async def _handle_choose(self, ws: WebSocket, msg: dict) -> None:
        if not (self.mode == "human" and self.game.at_decision()):
            await self._reply(ws, {"error": "not_at_decision"})
            return
        await self._ensure_decision_shield()
        shield = self._current_shield()
        index = msg.get("task")
        order = list(shield.valuation.values)
        if not isinstance(index, int) or not 0 <= index < len(order):
            await self._reply(ws, {"error": "invalid_task", "task": index})
            return
        task = order[index]
        if not shield.permits(task):
            await self._reply(ws, {"error": "blocked", "task": index})
            return
        await self._commit(task)
        await self.broadcast()

    async def _commit(self, task: Task) -> None:
        game = self.game
        behaviors = [game.current_behavior()]
        game.begin_task(task)
        self.shield_state = await self._run(
            shield_after_commit, game.arena, behaviors, game.to_shield_state(),
            self.config.horizon, self.delta, snake_unsafe,
        )

    # -- the loop -----------------------------------------------------------------

    async def run(self) -> None:
        while True:
            try:
                while True:
                    ws, msg = self.commands.get_nowait()
                    await self.handle_command(ws, msg)
            except asyncio.QueueEmpty:
                pass

            self.tick += 1
            if not self.paused and self.game.status == "running":
                await self._advance()
            await self.broadcast()
            await asyncio.sleep(self.config.tick_ms / 1000.0)

    async def _advance(self) -> None:
        game = self.game
        if game.at_decision():
            await self._ensure_decision_shield()
            if self.mode == "human":
                return  # paused at the decision until a choose command
            shield = self._current_shield()
            epsilon = 1.0 if self.mode == "random" else 0.0
            task = select_task(self.q, game, shield, epsilon, self.rng)
            await self._commit(task)
        outcome = game.step_round()
        if game.status == "running" and outcome.adversary_decided is not None:
            game_behaviors = [game.current_behavior()]
            self.shield_state = await self._run(
                refresh_after_observation, self.shield_state, game.arena,
                game_behaviors, outcome.adversary_decided, self.config.horizon,
                self.delta, snake_unsafe, self.config.budget_ms,
            )


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    service = GameService(config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        service.commands = asyncio.Queue()
        loop_task = asyncio.create_task(service.run())
        yield
        loop_task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.service = service

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        service.clients[ws] = None
        try:
            await ws.send_json(service.map_message())
            await ws.send_json(service.frame())
            while True:
                try:
                    msg = await ws.receive_json()
                except ValueError:
                    await ws.send_json({"error": "malformed"})
                    continue
                await service.commands.put((ws, msg))
        except WebSocketDisconnect:
            pass
        finally:
            service.clients.pop(ws, None)

    static_dir = config.static_dir
    if static_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend"
        if (bundled / "index.html").exists():
            static_dir = str(bundled)
    if static_dir and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")
    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
