"""Builds the synthetic Bexar-like fixture from the reference O-D pair lists.

Every O-D pair becomes an edge of length 3.5 to 4.5 miles, so with a usable
radius of 5 miles a station at an edge midpoint covers that pair and nothing
else. Existing stations sit at the midpoints of the covered pairs. Flows are
drawn from a fixed seed. Coordinates come from a seeded spring layout and are
used only for rendering.
"""

import json
import random
from collections import Counter
from pathlib import Path

import networkx as nx

ALL_PAIRS = [
    (1, 2), (1, 4), (1, 8), (1, 10), (2, 3), (2, 12), (2, 13), (3, 4), (3, 14), (4, 5), (4, 17),
    (5, 6), (5, 18), (5, 34), (6, 7), (6, 33), (7, 8), (7, 32), (8, 9), (8, 30), (9, 10), (9, 11),
    (9, 28), (10, 11), (11, 12), (11, 27), (12, 13), (12, 25), (13, 14), (13, 24), (14, 15),
    (14, 22), (15, 16), (15, 21), (16, 17), (16, 18), (16, 20), (17, 18), (19, 20), (19, 34),
    (19, 35), (20, 21), (20, 36), (21, 22), (21, 37), (22, 23), (22, 39), (23, 24), (23, 26),
    (23, 40), (24, 25), (25, 26), (26, 27), (26, 41), (27, 28), (27, 42), (28, 29), (28, 43),
    (29, 30), (29, 31), (29, 44), (30, 31), (31, 32), (31, 45), (32, 33), (32, 46), (33, 34),
    (33, 47), (34, 48), (35, 36), (35, 49), (36, 37), (36, 50), (37, 38),
]
COVERED = [
    (4, 5), (13, 14), (14, 15), (14, 22), (15, 16), (20, 21), (22, 23), (22, 39), (25, 26),
    (26, 41), (34, 48),
]
ZONE_ALL = {
    1: [(1, 2), (1, 4), (1, 8), (1, 10), (2, 3), (2, 12), (2, 13), (3, 4), (3, 14), (4, 5), (4, 17),
        (9, 10), (10, 11), (16, 17), (17, 18)],
    2: [(12, 13), (12, 25), (13, 14), (13, 24), (14, 22), (22, 23), (22, 39), (23, 24), (23, 26),
        (23, 40), (24, 25), (25, 26), (26, 41)],
    3: [(8, 9), (8, 30), (9, 11), (9, 28), (11, 12), (11, 27), (26, 27), (27, 28), (27, 42),
        (28, 29), (28, 43), (29, 30), (29, 44)],
    4: [(5, 6), (5, 18), (5, 34), (6, 33), (18, 19), (19, 34), (19, 35), (33, 34), (33, 47),
        (34, 48), (35, 49)],
    5: [(14, 15), (15, 16), (15, 21), (16, 18), (16, 20), (19, 20), (20, 21), (20, 36), (21, 22),
        (21, 37), (35, 36), (35, 49), (36, 37), (36, 50), (37, 38)],
    6: [(6, 7), (7, 8), (7, 32), (29, 31), (30, 31), (31, 32), (31, 45), (32, 33), (32, 46)],
}
ZONE_UNCOVERED = {
    1: [(1, 2), (1, 4), (1, 8), (1, 10), (2, 3), (2, 12), (2, 13), (3, 4), (3, 14), (4, 17),
        (9, 10), (10, 11), (16, 17), (17, 18)],
    2: [(12, 13), (12, 25), (13, 24), (23, 24), (23, 26), (23, 40), (24, 25)],
    3: ZONE_ALL[3],
    4: [(5, 6), (5, 18), (5, 34), (6, 33), (18, 19), (19, 34), (19, 35), (33, 34), (33, 47),
        (35, 49)],
    5: [(15, 21), (16, 18), (16, 20), (19, 20), (20, 36), (21, 22), (21, 37), (35, 36), (35, 49),
        (36, 37), (36, 50), (37, 38)],
    6: ZONE_ALL[6],
}


def v(i):
    return f"v{i}"


def pair(p):
    return [v(p[0]), v(p[1])]


def main():
    here = Path(__file__).parent / "bexar"
    rng = random.Random(20250)
    pairs = sorted(set(ALL_PAIRS) | {q for qs in ZONE_ALL.values() for q in qs})

    votes = {i: Counter() for i in range(1, 51)}
    for z, qs in ZONE_ALL.items():
        for a, b in qs:
            votes[a][z] += 1
            votes[b][z] += 1
    zone = {i: min(c.items(), key=lambda kv: (-kv[1], kv[0]))[0] for i, c in votes.items()}

    g = nx.Graph()
    g.add_nodes_from(range(1, 51))
    g.add_edges_from(pairs)
    assert nx.is_connected(g)
    pos = nx.spring_layout(g, seed=7, iterations=200)
    xs = [p[0] for p in pos.values()]
    ys = [p[1] for p in pos.values()]

    def scale(x, lo, hi):
        return round(40.0 * (x - lo) / (hi - lo), 3)

    lengths = {q: round(rng.uniform(3.5, 4.5), 2) for q in pairs}
    network = {
        "vertices": [
            {"id": v(i), "zone": f"z{zone[i]}", "x": scale(pos[i][0], min(xs), max(xs)),
             "y": scale(pos[i][1], min(ys), max(ys))}
            for i in range(1, 51)
        ],
        "edges": [{"a": v(a), "b": v(b), "length": lengths[(a, b)]} for a, b in pairs],
        "flows": [{"i": v(a), "j": v(b), "f": float(rng.randint(5, 60))} for a, b in pairs],
    }
    stations = {
        "stations": [
            {"id": f"E{k + 1}", "edge": pair(q), "offset": round(lengths[q] / 2, 3)}
            for k, q in enumerate(COVERED)
        ]
    }
    pair_sets = {
        "all_pairs": [pair(q) for q in ALL_PAIRS],
        "covered_by_existing": [pair(q) for q in COVERED],
        "zones": {
            f"z{z}": {"all": [pair(q) for q in ZONE_ALL[z]], "uncovered": [pair(q) for q in ZONE_UNCOVERED[z]]}
            for z in ZONE_ALL
        },
    }
    for name, doc in [("network.json", network), ("stations.json", stations), ("pair_sets.json", pair_sets)]:
        (here / name).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
