"""Story graphs: actions as nodes, user utterances as edge labels, with a
similarity merge to keep the picture readable.

Two nodes merge when they carry the same action AND every dialogue
occurrence behind either node shows the identical last ``max_history``
turns, a turn being the (user label, action) pair that ends at the
occurrence. Occurrences with fewer than ``max_history`` turns of context
never satisfy the condition, so a sufficiently large window (or the
``None`` sentinel for infinity) disables merging entirely. Merging is a
readability heuristic: the graph does not capture slot state, and not
every START-to-END walk needs to be a real training story.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .domain import Domain
from .training_data import ActionStep, Story, UserStep, format_user_step

START = "START"
END = "END"

START_ID = 0
END_ID = 1


@dataclass
class StoryGraph:
    """Nodes and labeled edges, plus per-node provenance: which
    (story, turn position) occurrences each node stands for."""

    labels: dict[int, str] = field(default_factory=dict)
    edges: set[tuple[int, int, str | None]] = field(default_factory=set)
    provenance: dict[int, set[tuple[str, int]]] = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def _story_turns(story: Story) -> list[tuple[str | None, str]]:
    """Collapse steps into (user label, action) turns.

    Consecutive user steps fold into one label; an action without a
    preceding user step gets label None (its edge label is omitted).
    """
    turns: list[tuple[str | None, str]] = []
    pending: list[str] = []
    for step in story.steps:
        if isinstance(step, UserStep):
            pending.append(format_user_step(step))
        elif isinstance(step, ActionStep):
            label = ", ".join(pending) if pending else None
            turns.append((label, step.action_name))
            pending = []
    return turns


def build_graph(stories: list[Story], domain: Domain) -> StoryGraph:
    """The unmerged graph: one node per action occurrence, every story a
    START -> ... -> END path."""
    graph = StoryGraph()
    graph.labels[START_ID] = START
    graph.labels[END_ID] = END
    next_id = 2
    for story in stories:
        previous = START_ID
        for position, (label, action) in enumerate(_story_turns(story)):
            node = next_id
            next_id += 1
            graph.labels[node] = action
            graph.provenance[node] = {(story.name, position)}
            graph.edges.add((previous, node, label))
            previous = node
        if previous != START_ID:
            graph.edges.add((previous, END_ID, None))
    return graph


def _turn_windows(
    stories: list[Story], max_history: int
) -> dict[tuple[str, int], tuple | None]:
    """For every (story, position): the last ``max_history`` turns ending
    at that occurrence, or None when not enough turns exist."""
    windows: dict[tuple[str, int], tuple | None] = {}
    for story in stories:
        turns = _story_turns(story)
        for position in range(len(turns)):
            if position + 1 < max_history:
                windows[(story.name, position)] = None
            else:
                windows[(story.name, position)] = tuple(
                    turns[position + 1 - max_history : position + 1]
                )
    return windows


def merge_nodes(
    graph: StoryGraph, stories: list[Story], domain: Domain, max_history: int | None
) -> StoryGraph:
    """Merge equivalent nodes until a fixed point.

    ``max_history=None`` is the infinity sentinel: the condition is
    unsatisfiable and the graph is returned unchanged (a fresh copy).
    Merges always pick the lowest-id candidate pair first, keeping the
    result deterministic; the survivor keeps the lower id and inherits
    deduplicated edges plus the union of provenance.
    """
    merged = StoryGraph(
        labels=dict(graph.labels),
        edges=set(graph.edges),
        provenance={n: set(p) for n, p in graph.provenance.items()},
    )
    if max_history is None:
        return merged
    if max_history < 1:
        raise ValueError("max_history must be >= 1")
    windows = _turn_windows(stories, max_history)

    def node_window(node: int) -> tuple | None:
        """The shared window of every occurrence of ``node``, or None."""
        occurrence_windows = {windows[occ] for occ in merged.provenance[node]}
        if len(occurrence_windows) != 1:
            return None
        return occurrence_windows.pop()

    while True:
        candidates = sorted(n for n in merged.labels if n not in (START_ID, END_ID))
        pair = None
        for i, a in enumerate(candidates):
            window_a = node_window(a)
            if window_a is None:
                continue
            for b in candidates[i + 1 :]:
                if merged.labels[a] != merged.labels[b]:
                    continue
                if node_window(b) == window_a:
                    pair = (a, b)
                    break
            if pair:
                break
        if pair is None:
            return merged
        keep, drop = pair
        merged.provenance[keep] |= merged.provenance.pop(drop)
        del merged.labels[drop]
        rewired = set()
        for src, dst, label in merged.edges:
            src = keep if src == drop else src
            dst = keep if dst == drop else dst
            rewired.add((src, dst, label))
        merged.edges = rewired


def _node_id(node: int) -> str:
    if node == START_ID:
        return START
    if node == END_ID:
        return END
    return f"n{node}"


def to_dot(graph: StoryGraph) -> str:
    """Deterministic DOT text; START/END are drawn as distinct shapes."""
    lines = ["digraph stories {"]
    for node in sorted(graph.labels):
        label = graph.labels[node]
        if label in (START, END):
            lines.append(f"  {_node_id(node)} [shape=doublecircle, style=bold];")
        else:
            lines.append(f'  {_node_id(node)} [label="{_quote(label)}", shape=box];')
    for src, dst, label in sorted(graph.edges, key=lambda e: (e[0], e[1], e[2] or "")):
        if label is None:
            lines.append(f"  {_node_id(src)} -> {_node_id(dst)};")
        else:
            lines.append(f'  {_node_id(src)} -> {_node_id(dst)} [label="{_quote(label)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _quote(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def stories_to_dot(
    stories: list[Story], domain: Domain, max_history: int | None = 1
) -> str:
    """Convenience: build, merge, and render in one call."""
    return to_dot(merge_nodes(build_graph(stories, domain), stories, domain, max_history))
