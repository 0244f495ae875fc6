"""Built-in ASCII maps used by the CLI, the benchmarks, and the demo game.

Snake maps may carry spawn markers: 'A' (avatar head) and 'E' (adversary
head); both must sit on decision locations.
"""

from __future__ import annotations

from .arena import Arena, gridworld_from_ascii, grid_id
from .errors import InvalidMap

# Three parallel corridors joined by two side corridors; six decision
# locations at the corners and crossings.
MAZE_5X5 = """\
.....
.###.
.....
.###.
....."""

# Open pillar grid: decision locations at every odd/odd crossing, all
# corridors two edges long. Good escape connectivity.
PILLARS_7X7 = """\
.......
.#.#.#.
.......
.#.#.#.
.......
.#.#.#.
......."""

# Reduced snake arena for learning runs: two long loops sharing a middle
# rung. Long corridors keep commitments predictable; a horizon covering the
# longest task (10 edges) plus the next window makes shielded play safe.
SNAKE_SMALL = """\
A....................
.#########.#########.
.#########.#########.
....................E"""
SNAKE_SMALL_HORIZON = 14

# Benchmark arena: a wide ladder with long corridors (6-8 edges between
# decisions) so the per-decision lookahead stays tractable at h around 20,
# with enough corridor tiles for two snakes of length 15 plus apples.
SNAKE_BENCH = """\
A........................
.#######.#######.#######.
.#######.#######.#######.
.#######.#######.#######.
.#######.#######.#######.
.#######.#######.#######.
........................E"""


def strip_markers(map_text: str) -> tuple[str, dict[str, str]]:
    """Replace A/E spawn markers by corridor; return (clean map, marker -> id)."""
    rows = map_text.strip("\n").split("\n")
    spawns: dict[str, str] = {}
    clean: list[str] = []
    for y, row in enumerate(rows, start=1):
        out = []
        for x, ch in enumerate(row, start=1):
            if ch in ("A", "E"):
                if ch in spawns:
                    raise InvalidMap(f"duplicate spawn marker {ch!r}")
                spawns[ch] = grid_id(x, y)
                out.append(".")
            else:
                out.append(ch)
        clean.append("".join(out))
    return "\n".join(clean), spawns


def load_map(map_text: str) -> tuple[Arena, dict[str, str]]:
    """Parse an ASCII map that may carry spawn markers."""
    clean, spawns = strip_markers(map_text)
    return gridworld_from_ascii(clean), spawns
