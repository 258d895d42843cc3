from __future__ import annotations

import pytest

from convokit import Domain, SlotDefinition, build_graph, merge_nodes, to_dot
from convokit.graph import END_ID, START_ID, StoryGraph, _turn_windows
from convokit.training_data import ActionStep, Story, UserStep, parse_stories

TWO_STORY_FIXTURE = """\
## first
* greet
   - utter_ask_howcanhelp
* inform{"cuisine":"spanish"}
   - utter_on_it

## second
* greet
   - utter_ask_howcanhelp
* inform{"location":"rome"}
   - utter_on_it
"""


@pytest.fixture
def graph_domain() -> Domain:
    return Domain(
        intents=("greet", "inform"),
        entities=("cuisine", "location"),
        slots=(SlotDefinition(name="cuisine"), SlotDefinition(name="location")),
        actions=("action_listen", "utter_ask_howcanhelp", "utter_on_it", "utter_bye"),
        templates={
            "utter_ask_howcanhelp": ("?",),
            "utter_on_it": ("!",),
            "utter_bye": ("bye",),
        },
    )


@pytest.fixture
def two_stories():
    return parse_stories(TWO_STORY_FIXTURE)


class TestBuildGraph:
    def test_empty(self, graph_domain):
        graph = build_graph([], graph_domain)
        assert graph.node_count == 2
        assert graph.edge_count == 0

    def test_unmerged_duplicates_kept(self, two_stories, graph_domain):
        graph = build_graph(two_stories, graph_domain)
        labels = sorted(graph.labels.values())
        assert labels == ["END", "START", "utter_ask_howcanhelp", "utter_ask_howcanhelp", "utter_on_it", "utter_on_it"]

    def test_edge_labels_only_after_user_steps(self, graph_domain):
        story = Story(
            name="s",
            steps=(UserStep("greet", {}), ActionStep("utter_ask_howcanhelp"), ActionStep("utter_on_it")),
        )
        graph = build_graph([story], graph_domain)
        labels = {(graph.labels[src], graph.labels[dst]): label for src, dst, label in graph.edges}
        assert labels[("START", "utter_ask_howcanhelp")] == "greet"
        assert labels[("utter_ask_howcanhelp", "utter_on_it")] is None
        assert labels[("utter_on_it", "END")] is None

    def test_entity_payload_in_edge_label(self, two_stories, graph_domain):
        graph = build_graph(two_stories, graph_domain)
        edge_labels = {label for _, _, label in graph.edges if label}
        assert 'inform{"cuisine":"spanish"}' in edge_labels


class TestMergeNodes:
    def test_shared_first_interaction_merges_at_one(self, two_stories, graph_domain):
        graph = build_graph(two_stories, graph_domain)
        merged = merge_nodes(graph, two_stories, graph_domain, 1)
        assert merged.node_count == graph.node_count - 1
        # the surviving howcanhelp node carries both stories' occurrences
        (howcanhelp,) = [n for n, l in merged.labels.items() if l == "utter_ask_howcanhelp"]
        assert merged.provenance[howcanhelp] == {("first", 0), ("second", 0)}
        # the diverging second interactions stay apart
        assert sorted(merged.labels.values()).count("utter_on_it") == 2

    def test_infinity_sentinel_never_merges(self, two_stories, graph_domain):
        graph = build_graph(two_stories, graph_domain)
        merged = merge_nodes(graph, two_stories, graph_domain, None)
        assert merged.node_count == graph.node_count
        assert merged.edges == graph.edges

    def test_window_larger_than_stories_never_merges(self, two_stories, graph_domain):
        graph = build_graph(two_stories, graph_domain)
        merged = merge_nodes(graph, two_stories, graph_domain, 9999)
        assert merged.node_count == graph.node_count

    def test_monotonicity(self, two_stories, graph_domain):
        graph = build_graph(two_stories, graph_domain)
        for window in (1, 2, 3, None):
            merged = merge_nodes(graph, two_stories, graph_domain, window)
            assert merged.node_count <= graph.node_count
            assert merged.edge_count <= graph.edge_count

    def test_merge_soundness(self, two_stories, graph_domain):
        graph = build_graph(two_stories, graph_domain)
        merged = merge_nodes(graph, two_stories, graph_domain, 1)
        turns = {s.name: [(l, a) for l, a in _story_turns_for_test(s)] for s in two_stories}
        for node, occurrences in merged.provenance.items():
            actions = {turns[story][pos][1] for story, pos in occurrences}
            assert len(actions) == 1
            assert merged.labels[node] in actions

    def test_path_preservation(self, two_stories, graph_domain):
        graph = build_graph(two_stories, graph_domain)
        merged = merge_nodes(graph, two_stories, graph_domain, 1)
        for story in two_stories:
            assert _story_traceable(merged, story)


def _story_turns_for_test(story):
    from convokit.graph import _story_turns

    return _story_turns(story)


def _story_traceable(graph: StoryGraph, story) -> bool:
    """DFS: can the story's labeled turn sequence be walked START -> END?"""
    turns = _story_turns_for_test(story)

    def step(node: int, position: int) -> bool:
        if position == len(turns):
            return (node, END_ID, None) in graph.edges
        label, action = turns[position]
        for src, dst, edge_label in graph.edges:
            if src == node and edge_label == label and graph.labels.get(dst) == action:
                if step(dst, position + 1):
                    return True
        return False

    return step(START_ID, 0)


def _canonical_form(graph: StoryGraph):
    """Graph identity independent of surviving node ids: nodes become their
    provenance sets."""
    naming = {START_ID: "START", END_ID: "END"}
    for node, occs in graph.provenance.items():
        naming[node] = tuple(sorted(occs))
    return frozenset((naming[s], naming[d], label) for s, d, label in graph.edges)


class TestMergeConfluence:
    def test_any_merge_order_reaches_same_graph(self, two_stories, graph_domain):
        # oracle: exhaustively enumerate merge orders on the small fixture
        base = build_graph(two_stories, graph_domain)
        windows = _turn_windows(two_stories, 1)
        results = set()

        def node_window(graph, node):
            occurrence_windows = {windows[occ] for occ in graph.provenance[node]}
            if len(occurrence_windows) != 1:
                return None
            return occurrence_windows.pop()

        def mergeable_pairs(graph):
            nodes = sorted(n for n in graph.labels if n not in (START_ID, END_ID))
            pairs = []
            for i, a in enumerate(nodes):
                wa = node_window(graph, a)
                if wa is None:
                    continue
                for b in nodes[i + 1 :]:
                    if graph.labels[a] == graph.labels[b] and node_window(graph, b) == wa:
                        pairs.append((a, b))
            return pairs

        def apply_merge(graph, keep, drop):
            clone = StoryGraph(
                labels=dict(graph.labels),
                edges=set(graph.edges),
                provenance={n: set(p) for n, p in graph.provenance.items()},
            )
            clone.provenance[keep] |= clone.provenance.pop(drop)
            del clone.labels[drop]
            clone.edges = {
                (keep if s == drop else s, keep if d == drop else d, l) for s, d, l in clone.edges
            }
            return clone

        def explore(graph):
            pairs = mergeable_pairs(graph)
            if not pairs:
                results.add(_canonical_form(graph))
                return
            for keep, drop in pairs:
                explore(apply_merge(graph, keep, drop))

        explore(base)
        assert len(results) == 1
        library_result = merge_nodes(base, two_stories, graph_domain, 1)
        assert _canonical_form(library_result) in results


class TestToDot:
    def test_format_contract(self, two_stories, graph_domain):
        graph = build_graph(two_stories[:1], graph_domain)
        dot = to_dot(graph)
        assert dot.startswith("digraph stories {")
        assert "START -> " in dot
        assert dot.rstrip().endswith("}")

    def test_byte_stable(self, two_stories, graph_domain):
        first = to_dot(merge_nodes(build_graph(two_stories, graph_domain), two_stories, graph_domain, 1))
        second = to_dot(merge_nodes(build_graph(two_stories, graph_domain), two_stories, graph_domain, 1))
        assert first == second

    def test_every_edge_appears_once(self, two_stories, graph_domain):
        graph = merge_nodes(build_graph(two_stories, graph_domain), two_stories, graph_domain, 1)
        dot = to_dot(graph)
        assert dot.count(" -> ") == graph.edge_count

    def test_labels_quoted(self, two_stories, graph_domain):
        dot = to_dot(build_graph(two_stories, graph_domain))
        assert 'label="inform{\\"cuisine\\":\\"spanish\\"}"' in dot
