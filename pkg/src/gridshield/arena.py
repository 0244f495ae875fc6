"""Static world model: locations, activities (edges), tasks, decision locations.

An arena is a directed graph of locations. Agents traverse it by committing
to tasks: edge paths that start and end at decision locations. Arenas are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .errors import InvalidArena, InvalidMap, NotADecisionLocation, ParseError

WALL = "#"
CORRIDOR = "."


class Location(NamedTuple):
    id: str
    x: int | None = None
    y: int | None = None


class Task(NamedTuple):
    """A path of >= 2 connected locations; the unit of agent commitment."""

    path: tuple[str, ...]

    @property
    def length(self) -> int:
        """Number of edges."""
        return len(self.path) - 1

    @property
    def start(self) -> str:
        return self.path[0]

    @property
    def end(self) -> str:
        return self.path[-1]

    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(zip(self.path, self.path[1:]))


@dataclass(frozen=True)
class Arena:
    """Directed location graph plus the task choices at decision locations."""

    locations: Mapping[str, Location]
    edges: frozenset[tuple[str, str]]
    decision_locations: frozenset[str]
    task_map: Mapping[str, tuple[Task, ...]]
    # Sorted outgoing neighbours per location, derived in build_arena.
    adjacency: Mapping[str, tuple[str, ...]] = field(compare=False)

    def tasks_from(self, location_id: str) -> tuple[Task, ...]:
        return tasks_at(self, location_id)

    def coords(self, location_id: str) -> tuple[int, int]:
        loc = self.locations[location_id]
        if loc.x is None or loc.y is None:
            raise KeyError(f"location {location_id!r} has no grid coordinates")
        return (loc.x, loc.y)


def build_arena(
    nodes: Iterable[Location],
    edges: Iterable[tuple[str, str]],
    decision_locations: Iterable[str],
    task_map: Mapping[str, Iterable[Task]],
) -> Arena:
    """Validate the raw pieces and assemble the immutable arena."""
    locations: dict[str, Location] = {}
    for node in nodes:
        if node.id in locations:
            raise InvalidArena(f"duplicate location id {node.id!r}")
        locations[node.id] = node

    edge_set = set()
    for src, dst in edges:
        if src not in locations or dst not in locations:
            raise InvalidArena(f"edge ({src!r}, {dst!r}) references unknown location")
        edge_set.add((src, dst))

    decisions = frozenset(decision_locations)
    unknown = decisions - locations.keys()
    if unknown:
        raise InvalidArena(f"decision locations not in arena: {sorted(unknown)}")

    tasks: dict[str, tuple[Task, ...]] = {}
    for v, raw in task_map.items():
        if v not in decisions:
            raise InvalidArena(f"task map keyed by non-decision location {v!r}")
        entry = tuple(raw)
        if not entry:
            raise InvalidArena(f"empty task set at decision location {v!r}")
        for task in entry:
            if len(task.path) < 2:
                raise InvalidArena(f"task at {v!r} has fewer than 2 locations")
            if task.start != v:
                raise InvalidArena(f"task {task.path} does not start at {v!r}")
            if task.end not in decisions:
                raise InvalidArena(
                    f"task {task.path} ends at {task.end!r}, not a decision location"
                )
            for pair in task.edges():
                if pair not in edge_set:
                    raise InvalidArena(f"task {task.path} uses missing edge {pair}")
        tasks[v] = entry

    missing = decisions - tasks.keys()
    if missing:
        raise InvalidArena(f"no tasks at decision locations: {sorted(missing)}")

    adjacency: dict[str, tuple[str, ...]] = {
        v: tuple(sorted(dst for src, dst in edge_set if src == v)) for v in locations
    }
    return Arena(
        locations=locations,
        edges=frozenset(edge_set),
        decision_locations=decisions,
        task_map=tasks,
        adjacency=adjacency,
    )


def tasks_at(arena: Arena, location_id: str) -> tuple[Task, ...]:
    """The task choices at a decision location, in the arena's canonical order."""
    if location_id not in arena.decision_locations:
        raise NotADecisionLocation(f"{location_id!r} is not a decision location")
    return arena.task_map[location_id]


def grid_id(x: int, y: int) -> str:
    return f"{x},{y}"


# Canonical direction order for task enumeration: right, left, up, down.
_DIRECTIONS = ((1, 0), (-1, 0), (0, -1), (0, 1))


def gridworld_from_ascii(map_text: str) -> Arena:
    """Build an arena from an ASCII grid ('.' corridor, '#' wall).

    Corridor tiles become locations (ids "x,y", 1-based column/row); adjacent
    corridor tiles are connected in both directions. Decision locations are
    tiles of degree != 2 and corner tiles (degree 2, non-collinear
    neighbours); isolated tiles are excluded since they admit no tasks. Each
    decision location gets one task per incident corridor, following it to
    the next decision location.
    """
    rows = map_text.strip("\n").split("\n")
    if not rows or any(not row for row in rows):
        raise InvalidMap("empty map")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise InvalidMap("map is not rectangular")

    corridor: set[tuple[int, int]] = set()
    for y, row in enumerate(rows, start=1):
        for x, ch in enumerate(row, start=1):
            if ch == CORRIDOR:
                corridor.add((x, y))
            elif ch != WALL:
                raise InvalidMap(f"unexpected character {ch!r} at ({x},{y})")
    if not corridor:
        raise InvalidMap("map has no corridor tile")

    def neighbours(tile: tuple[int, int]) -> list[tuple[int, int]]:
        x, y = tile
        return [(x + dx, y + dy) for dx, dy in _DIRECTIONS if (x + dx, y + dy) in corridor]

    def is_decision(tile: tuple[int, int]) -> bool:
        around = neighbours(tile)
        if len(around) == 0:
            return False  # isolated tile: no tasks possible
        if len(around) != 2:
            return True
        (ax, ay), (bx, by) = around
        # Collinear neighbours lie on opposite sides of the tile.
        return not (ax + bx == 2 * tile[0] and ay + by == 2 * tile[1])

    decisions = {tile for tile in corridor if is_decision(tile)}

    def follow(start: tuple[int, int], first: tuple[int, int]) -> Task:
        path = [start, first]
        prev, cur = start, first
        while cur not in decisions:
            nxt = [n for n in neighbours(cur) if n != prev]
            assert len(nxt) == 1, "corridor interior must have exactly one continuation"
            prev, cur = cur, nxt[0]
            path.append(cur)
        return Task(tuple(grid_id(*tile) for tile in path))

    nodes = [Location(grid_id(x, y), x, y) for (x, y) in sorted(corridor)]
    edges = [
        (grid_id(*a), grid_id(*b))
        for a in sorted(corridor)
        for b in neighbours(a)
    ]
    task_map = {
        grid_id(*v): tuple(
            follow(v, (v[0] + dx, v[1] + dy))
            for dx, dy in _DIRECTIONS
            if (v[0] + dx, v[1] + dy) in corridor
        )
        for v in sorted(decisions)
    }
    return build_arena(nodes, edges, (grid_id(*v) for v in sorted(decisions)), task_map)


def save_arena(arena: Arena) -> bytes:
    """Serialize to the canonical JSON schema; inverse of load_arena."""
    nodes = []
    for loc in sorted(arena.locations.values(), key=lambda l: l.id):
        node: dict = {"id": loc.id}
        if loc.x is not None:
            node["x"] = loc.x
        if loc.y is not None:
            node["y"] = loc.y
        nodes.append(node)
    doc = {
        "nodes": nodes,
        "edges": sorted([list(e) for e in arena.edges]),
        "decision_locations": sorted(arena.decision_locations),
        "tasks": {
            v: [list(t.path) for t in tasks]
            for v, tasks in sorted(arena.task_map.items())
        },
    }
    return json.dumps(doc, indent=2).encode()


def load_arena(data: bytes | str) -> Arena:
    """Parse the JSON schema produced by save_arena."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("arena document must be a JSON object")
    for key in ("nodes", "edges", "decision_locations", "tasks"):
        if key not in doc:
            raise ParseError(f"missing {key!r} key")
    try:
        nodes = [
            Location(str(n["id"]), n.get("x"), n.get("y")) for n in doc["nodes"]
        ]
        edges = [(str(a), str(b)) for a, b in doc["edges"]]
        decisions = [str(v) for v in doc["decision_locations"]]
        task_map = {
            str(v): [Task(tuple(str(p) for p in path)) for path in paths]
            for v, paths in doc["tasks"].items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed arena field: {exc}") from exc
    return build_arena(nodes, edges, decisions, task_map)


def shortest_path_lengths(arena: Arena, source: str) -> dict[str, int]:
    """BFS hop counts from source to every reachable location."""
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt: list[str] = []
        for v in frontier:
            for w in arena.adjacency[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return dist
