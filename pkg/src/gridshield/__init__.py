"""Runtime shielding of task-level decisions in shared grid arenas.

Between an agent's decisions, a finite-horizon lookahead model of all
agents is built on the fly; minimal collision probabilities per next task
are computed by exact backward induction, and tasks whose risk exceeds a
delta-relative threshold are blocked.
"""

from .arena import Arena, Location, Task, build_arena, gridworld_from_ascii
from .behavior import AdversaryBehavior, uniform_behavior, weighted_behavior
from .mdp import GlobalState, enabled_actions, is_decision_state, successors
from .shield import Shield, TaskValuation, make_shield, risk_bands, update_shield, valuations
from .submdp import SubMdp, build_submdp

__all__ = [
    "Arena",
    "Location",
    "Task",
    "build_arena",
    "gridworld_from_ascii",
    "AdversaryBehavior",
    "uniform_behavior",
    "weighted_behavior",
    "GlobalState",
    "enabled_actions",
    "is_decision_state",
    "successors",
    "Shield",
    "TaskValuation",
    "make_shield",
    "risk_bands",
    "update_shield",
    "valuations",
    "SubMdp",
    "build_submdp",
]
