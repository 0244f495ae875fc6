"""Finite-horizon lookahead model rooted just after a task commitment.

The model is a DAG over (global state, distance) pairs. Distance counts
completed rounds of all agents: it increases exactly when the last agent
moves. Expansion stops at the distance bound and at unsafe states, which are
kept as sinks. The avatar's next decision states all sit at one distance
(the length of its in-flight task for canonical roots); restricting their
action set to a single task turns the DAG into the per-task valuation model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .arena import Arena, Task, tasks_at
from .behavior import AdversaryBehavior
from .errors import (
    HorizonZero,
    NoFirstDecisionState,
    NotPostDecisionState,
    TaskNotAvailable,
)
from .mdp import (
    MOVE,
    Action,
    DecideTask,
    GlobalState,
    enabled_actions,
    is_decision_state,
    successors,
)

NodeKey = tuple[GlobalState, int]
UnsafePredicate = Callable[[GlobalState], bool]


class SubMdp:
    """Immutable once built; valuation passes may cache per-task values."""

    def __init__(
        self,
        arena: Arena,
        behaviors: Sequence[AdversaryBehavior],
        bound: int,
        first_decision_distance: int,
    ) -> None:
        self.arena = arena
        self.behaviors = tuple(behaviors)
        self.bound = bound
        self.first_decision_distance = first_decision_distance
        self.keys: list[NodeKey] = []
        self.index: dict[NodeKey, int] = {}
        # Per node: tuple of (action, ((probability, successor id), ...)).
        self.transitions: list[tuple[tuple[Action, tuple[tuple[float, int], ...]], ...]] = []
        self.first_decision: frozenset[int] = frozenset()
        self.unsafe: frozenset[int] = frozenset()
        self.initial: int = 0
        self._topo: list[int] | None = None
        self._value_cache: dict[Task | None, list[float]] = {}

    # -- structure accessors -------------------------------------------------

    @property
    def states(self) -> tuple[NodeKey, ...]:
        return tuple(self.keys)

    @property
    def initial_state(self) -> NodeKey:
        return self.keys[self.initial]

    @property
    def first_decision_states(self) -> frozenset[NodeKey]:
        return frozenset(self.keys[i] for i in self.first_decision)

    @property
    def unsafe_states(self) -> frozenset[NodeKey]:
        return frozenset(self.keys[i] for i in self.unsafe)

    def node_count(self) -> int:
        return len(self.keys)

    def topological_order(self) -> list[int]:
        """Node ids, every node before all of its successors."""
        if self._topo is None:
            indegree = [0] * len(self.keys)
            for row in self.transitions:
                for _, dist in row:
                    for _, succ in dist:
                        indegree[succ] += 1
            order = [i for i, deg in enumerate(indegree) if deg == 0]
            head = 0
            while head < len(order):
                node = order[head]
                head += 1
                for _, dist in self.transitions[node]:
                    for _, succ in dist:
                        indegree[succ] -= 1
                        if indegree[succ] == 0:
                            order.append(succ)
            if len(order) != len(self.keys):
                raise AssertionError("lookahead model contains a cycle")
            self._topo = order
        return self._topo


@dataclass(frozen=True)
class RestrictedSubMdp:
    """View of a SubMdp with the first decision pinned to one task."""

    submdp: SubMdp
    task: Task


def first_decision_distance_of(root: GlobalState) -> int:
    """Rounds until the avatar's queue next empties at its turn.

    The avatar pops one activity per round. If it is currently an
    adversary's turn the avatar has already moved this round, so one extra
    round completes before the count starts.
    """
    remaining = len(root.queues[0])
    return remaining + (1 if root.turn != 0 else 0)


def expand(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    root: GlobalState,
    horizon: int,
    unsafe_predicate: UnsafePredicate,
) -> SubMdp:
    """Breadth-first closure from any runtime state (used by shield updates)."""
    if horizon < 1:
        raise HorizonZero(f"horizon must be >= 1, got {horizon}")
    d_fd = first_decision_distance_of(root)
    bound = d_fd + horizon
    model = SubMdp(arena, behaviors, bound, d_fd)
    last_agent = root.agents - 1

    keys = model.keys
    index = model.index
    transitions = model.transitions
    first_decision: set[int] = set()
    unsafe: set[int] = set()

    def intern(key: NodeKey) -> int:
        node = index.get(key)
        if node is None:
            node = len(keys)
            index[key] = node
            keys.append(key)
            transitions.append(())
        return node

    model.initial = intern((root, 0))
    frontier = [model.initial]
    while frontier:
        next_frontier: list[int] = []
        for node in frontier:
            state, d = keys[node]
            if is_decision_state(state):
                if d < d_fd:
                    raise AssertionError(
                        f"decision state at distance {d} < {d_fd}; model bug"
                    )
                if d == d_fd:
                    first_decision.add(node)
            if unsafe_predicate(state):
                unsafe.add(node)
                continue  # unsafe states are absorbing sinks
            if d == bound:
                continue
            rows = []
            for action in enabled_actions(arena, state):
                d_next = d + (1 if action is MOVE and state.turn == last_agent else 0)
                dist = []
                for p, succ_state in successors(arena, behaviors, state, action):
                    key = (succ_state, d_next)
                    fresh = key not in index
                    succ = intern(key)
                    if fresh:
                        next_frontier.append(succ)
                    dist.append((p, succ))
                rows.append((action, tuple(dist)))
            transitions[node] = tuple(rows)
        frontier = next_frontier

    model.first_decision = frozenset(first_decision)
    model.unsafe = frozenset(unsafe)
    return model


def build_submdp(
    arena: Arena,
    behaviors: Sequence[AdversaryBehavior],
    post_decision_state: GlobalState,
    horizon: int,
    unsafe_predicate: UnsafePredicate,
) -> SubMdp:
    """Lookahead model rooted at the state right after the avatar chose a task."""
    root = post_decision_state
    if root.turn != 0 or not root.queues[0]:
        raise NotPostDecisionState("root must carry the avatar's freshly chosen task")
    chosen = Task((root.queues[0][0][0],) + tuple(dst for _, dst in root.queues[0]))
    if root.positions[0] != chosen.start or chosen not in tasks_at(arena, chosen.start):
        raise NotPostDecisionState(f"avatar queue {chosen.path} is not an arena task")
    return expand(arena, behaviors, root, horizon, unsafe_predicate)


def tasks_of_first_decision(submdp: SubMdp) -> tuple[Task, ...]:
    """The avatar's task choices at the first decision states.

    All first decision states share the avatar's location, body, and apple
    set (its path there is fixed), so they enable the same tasks.
    """
    if not submdp.first_decision:
        raise NoFirstDecisionState("no decision state within the lookahead")
    tasks: tuple[Task, ...] | None = None
    for node in submdp.first_decision:
        state = submdp.keys[node][0]
        enabled = tuple(
            a.task for a in enabled_actions(submdp.arena, state)
            if isinstance(a, DecideTask)
        )
        if tasks is None:
            tasks = enabled
        else:
            assert tasks == enabled, "first decisions must enable equal task sets"
    return tasks


def restrict_first_decision(submdp: SubMdp, task: Task) -> RestrictedSubMdp:
    """Pin every first decision state's action set to the given task."""
    if task not in tasks_of_first_decision(submdp):
        raise TaskNotAvailable(f"task {task.path} not available at the first decision")
    return RestrictedSubMdp(submdp, task)


def export_dot(submdp: SubMdp) -> str:
    """DOT graph of the lookahead model for debugging."""
    lines = ["digraph submdp {", "  rankdir=LR;", "  node [shape=circle];"]
    for node, (state, d) in enumerate(submdp.keys):
        label = f"d={d}\\n{','.join(state.positions)}"
        attrs = [f'label="{label}"']
        if node == submdp.initial:
            attrs.append("shape=doublecircle")
        if node in submdp.unsafe:
            attrs.append('style=filled fillcolor="#f4cccc"')
        elif node in submdp.first_decision:
            attrs.append('style=filled fillcolor="#cfe2f3"')
        lines.append(f"  n{node} [{' '.join(attrs)}];")
    for node, rows in enumerate(submdp.transitions):
        for action, dist in rows:
            if isinstance(action, DecideTask):
                name = "task " + "-".join(action.task.path)
            else:
                name = type(action).__name__.lower()
            for p, succ in dist:
                lines.append(f'  n{node} -> n{succ} [label="{name} {p:g}"];')
    lines.append("}")
    return "\n".join(lines)
