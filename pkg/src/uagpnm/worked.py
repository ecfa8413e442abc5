"""Small hand-checkable instances used by the tests, the acceptance suite
and the ``verify`` command.

``team_*`` is an eight-person collaboration graph (project managers,
software engineers, a sales person, testers and a database admin) with a
four-node pattern and four updates.  ``bridge_graph`` is a three-label
graph whose SE partition has both kinds of bridge nodes.
"""

from __future__ import annotations

from .graph import DataGraph, PatternGraph, Target, Update, UpdateBatch

TEAM_NAMES = ["PM_1", "PM_2", "SE_1", "SE_2", "S_1", "TE_1", "TE_2", "DB_1"]
TEAM_IDS = {name: i for i, name in enumerate(TEAM_NAMES)}

TEAM_EDGES = [
    ("PM_1", "SE_2"), ("PM_1", "DB_1"),
    ("PM_2", "SE_1"),
    ("SE_1", "PM_2"), ("SE_1", "SE_2"), ("SE_1", "S_1"),
    ("SE_2", "TE_1"), ("SE_2", "DB_1"),
    ("S_1", "DB_1"),
    ("TE_1", "SE_2"),
    ("TE_2", "S_1"),
    ("DB_1", "SE_1"),
]

# pattern node ids
PM, SE, S, TE = 0, 1, 2, 3
PATTERN_NAMES = {PM: "PM", SE: "SE", S: "S", TE: "TE"}


def _label(name: str) -> str:
    return name.split("_")[0]


def team_graph() -> DataGraph:
    ids = TEAM_IDS
    return DataGraph.from_edges({ids[n]: _label(n) for n in TEAM_NAMES},
                                [(ids[a], ids[b]) for a, b in TEAM_EDGES])


def team_pattern() -> PatternGraph:
    return PatternGraph.from_spec(dict(PATTERN_NAMES), [(PM, SE, 3), (PM, S, 3), (SE, TE, 2)])


def team_updates() -> dict[str, Update]:
    ids = TEAM_IDS
    return {
        "U_P1": Update.insert_edge(Target.PATTERN, PM, TE, 2),
        "U_P2": Update.insert_edge(Target.PATTERN, S, TE, 4),
        "U_D1": Update.insert_edge(Target.DATA, ids["SE_1"], ids["TE_2"]),
        "U_D2": Update.insert_edge(Target.DATA, ids["DB_1"], ids["S_1"]),
    }


def team_batch(order=("U_P1", "U_P2", "U_D1", "U_D2")) -> UpdateBatch:
    ups = team_updates()
    return UpdateBatch(ups[k] for k in order)


def name_of(update: Update) -> str:
    for key, up in team_updates().items():
        if up == update:
            return key
    return str(update)


BRIDGE_NAMES = ["SE_1", "SE_2", "SE_3", "SE_4", "TE_1", "TE_2", "TE_3", "PM_1"]
BRIDGE_IDS = {name: i for i, name in enumerate(BRIDGE_NAMES)}
BRIDGE_EDGES = [
    ("SE_1", "SE_2"), ("SE_2", "SE_3"), ("SE_3", "SE_4"),
    ("SE_1", "PM_1"), ("PM_1", "SE_4"),
    ("SE_2", "TE_1"), ("TE_1", "TE_2"), ("TE_2", "TE_3"),
]


def bridge_graph() -> DataGraph:
    ids = BRIDGE_IDS
    return DataGraph.from_edges({ids[n]: _label(n) for n in BRIDGE_NAMES},
                                [(ids[a], ids[b]) for a, b in BRIDGE_EDGES])
