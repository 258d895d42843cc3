"""
Story graphs and node merging
=============================

Stories become a directed graph with actions as nodes and user turns as
edge labels. Nodes carrying the same action merge when the recent turns
behind them are identical, which collapses shared prefixes into one path.
"""

from pathlib import Path

from convokit import build_graph, load_domain, merge_nodes, parse_stories, to_dot

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "restaurant"

domain = load_domain(DATA / "domain.json")
stories = parse_stories((DATA / "stories.md").read_text())

graph = build_graph(stories, domain)
print(f"unmerged graph: {graph.node_count} nodes, {graph.edge_count} edges")

for window in (1, 2, None):
    merged = merge_nodes(graph, stories, domain, window)
    label = "infinity (no merging)" if window is None else f"max_history={window}"
    print(f"{label:24s} -> {merged.node_count} nodes, {merged.edge_count} edges")

merged = merge_nodes(graph, stories, domain, 1)
out = ROOT / "demos" / "story_graph.dot"
out.write_text(to_dot(merged), encoding="utf-8")
print(f"\nwrote {out.name}; render it with: dot -Tpng {out.name} -o story_graph.png")
print("\nfirst lines of the DOT output:")
for line in to_dot(merged).splitlines()[:8]:
    print("   ", line)
