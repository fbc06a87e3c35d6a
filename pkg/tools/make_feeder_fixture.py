"""Regenerate src/commrec/data/ieee37_comm.json.

The IEEE 37-node feeder line list is laid out in the plane and communication
links join every node pair closer than a distance threshold (feeder lines
are always kept). The sensor groups mark electrically neighboring regions
and drive the synthetic data generator.
"""
import json
import sys
from pathlib import Path

import networkx as nx
import numpy as np

FEEDER_LINES = [
    ("799", "701"), ("701", "702"), ("702", "705"), ("702", "713"), ("702", "703"),
    ("703", "727"), ("703", "730"), ("704", "714"), ("704", "720"), ("705", "742"),
    ("705", "712"), ("706", "725"), ("707", "724"), ("707", "722"), ("708", "733"),
    ("708", "732"), ("709", "731"), ("709", "708"), ("710", "735"), ("710", "736"),
    ("711", "741"), ("711", "740"), ("713", "704"), ("714", "718"), ("720", "707"),
    ("720", "706"), ("727", "744"), ("730", "709"), ("733", "734"), ("734", "737"),
    ("734", "710"), ("737", "738"), ("738", "711"), ("744", "728"), ("744", "729"),
    ("709", "775"),
]

GROUPS = [
    ["701", "702", "705", "712", "742", "713"],
    ["704", "714", "718", "720", "706", "725", "707", "722", "724"],
    ["703", "727", "744", "728", "729"],
    ["709", "731", "775", "708", "732", "733"],
    ["734", "737", "738", "711", "741", "740", "710", "735", "736"],
]

ROOT = "730"


def build(radius: float, channels: int = 4) -> dict:
    feeder = nx.Graph(FEEDER_LINES)
    pos = nx.kamada_kawai_layout(feeder)
    nodes = sorted(feeder.nodes)
    links = {tuple(sorted(e)) for e in feeder.edges}
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if np.linalg.norm(pos[a] - pos[b]) <= radius:
                links.add((a, b))
    sensors = [{"id": f"v{n}", "node": n} for g in GROUPS for n in g]
    return {
        "name": "ieee37-comm",
        "nodes": nodes,
        "links": [{"a": a, "b": b, "channels": channels} for a, b in sorted(links)],
        "root": ROOT,
        "sensors": sensors,
        "groups": [[f"v{n}" for n in g] for g in GROUPS],
        "positions": {n: [round(float(x), 4) for x in pos[n]] for n in nodes},
    }


if __name__ == "__main__":
    radius = float(sys.argv[1]) if len(sys.argv) > 1 else 0.35
    doc = build(radius)
    out = Path(__file__).resolve().parents[1] / "src" / "commrec" / "data" / "ieee37_comm.json"
    out.write_text(json.dumps(doc, indent=1) + "\n")
    g = nx.Graph([(l["a"], l["b"]) for l in doc["links"]])
    print(f"{len(doc['nodes'])} nodes, {len(doc['links'])} links, root degree {g.degree(ROOT)}, "
          f"edge connectivity {nx.edge_connectivity(g)}")
