"""Writes edges_seed3.txt and prints the counts the graph_io test freezes."""
import random

rng = random.Random(3)
labels = ["alice", "bob", "carol", "dave", "7", "12", "3", "eve"]
lines = ["# twenty random weighted lines"]
for _ in range(20):
    u, v = rng.sample(labels, 2)
    w = rng.randint(1, 4)
    lines.append(f"{u} {v} {w}" if rng.random() < 0.8 else f"{u}\t{v}")
open("edges_seed3.txt", "w").write("\n".join(lines) + "\n")

edges = {}
for line in lines[1:]:
    parts = line.split()
    key = tuple(sorted(parts[:2]))
    edges[key] = edges.get(key, 0) + (int(parts[2]) if len(parts) == 3 else 1)
verts = sorted({x for e in edges for x in e})
deg = {x: sum(x in e for e in edges) for x in verts}
print("vertices", len(verts))
print("edges", len(edges))
print("max_degree", max(deg.values()))
print("total_weight", sum(edges.values()))
print("heavy_edges_ge2", sum(w >= 2 for w in edges.values()))
print("heavy_edges_ge4", sum(w >= 4 for w in edges.values()))
print("degree", deg)
