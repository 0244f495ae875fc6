"""Approximate Q-learning over task choices with optional shield filtering."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .arena import Task
from .errors import DivergenceDetected
from .shield import Shield
from .snake import SnakeGame, nearest_apple_distance

FEATURES_V1 = "v1"


@dataclass(frozen=True)
class LearnerConfig:
    alpha: float = 0.1
    gamma: float = 0.5
    epsilon: float = 0.6
    episodes: int = 800
    horizon: int = 4
    delta: float = 1.0
    max_rounds: int = 400

    def __post_init__(self) -> None:
        for name in ("alpha", "gamma", "epsilon"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass
class QFunction:
    """Linear value of (state features, task)."""

    weights: list[float] = field(default_factory=lambda: [0.0, 0.0])
    features_id: str = FEATURES_V1

    def value(self, feats: Sequence[float]) -> float:
        return sum(w * f for w, f in zip(self.weights, feats))

    def to_json(self) -> str:
        return json.dumps({"weights": self.weights, "features": self.features_id})

    @classmethod
    def from_json(cls, data: str | bytes) -> "QFunction":
        doc = json.loads(data)
        return cls(weights=[float(w) for w in doc["weights"]], features_id=doc["features"])


def features(game: SnakeGame, task: Task) -> tuple[float, ...]:
    """Bias plus the normalized distance from the task's end to the next apple."""
    apples = game.payload.apples[0]
    if not apples:
        distance = 0.0
    else:
        hops = nearest_apple_distance(game.arena, task.end, apples)
        distance = hops / max(1, len(game.arena.locations))
    return (1.0, distance)


def q_update(
    q: QFunction,
    feats: Sequence[float],
    reward: float,
    next_best_q: float,
    config: LearnerConfig,
) -> QFunction:
    """One gradient step of w <- w + alpha * (r + gamma * next - w.f) * f."""
    td_error = reward + config.gamma * next_best_q - q.value(feats)
    weights = [w + config.alpha * td_error * f for w, f in zip(q.weights, feats)]
    if not all(math.isfinite(w) for w in weights):
        raise DivergenceDetected(f"non-finite weights after update: {weights}")
    return QFunction(weights=weights, features_id=q.features_id)


def select_task(
    q: QFunction,
    game: SnakeGame,
    shield: Shield | None,
    epsilon: float,
    rng: random.Random,
) -> Task:
    """Epsilon-greedy over the allowed tasks (all tasks when unshielded)."""
    candidates = list(shield.allowed) if shield is not None else list(game.available_tasks())
    assert candidates, "a shield never empties the candidate set"
    if rng.random() < epsilon:
        return candidates[rng.randrange(len(candidates))]
    best_index = 0
    best_value = q.value(features(game, candidates[0]))
    for i, task in enumerate(candidates[1:], start=1):
        value = q.value(features(game, task))
        if value > best_value:
            best_index, best_value = i, value
    return candidates[best_index]
