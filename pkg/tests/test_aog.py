from __future__ import annotations

import dataclasses
import json
import random

import pytest

from conftest import make_snapshot
from jointobs.aog import (
    AogNode,
    Evidence,
    Graph,
    NodeKind,
    OccupationChannel,
    Side,
    TerminalState,
    build_default_aog,
    load_graph,
    prune,
    vote_occupation,
)
from jointobs.observation import ConfigError, PhysioNeed, SENSOR_GROUPS


# ---------------------------------------------------------------------------
# Default graph shape
# ---------------------------------------------------------------------------


def test_default_graph_builds_and_validates():
    graph = build_default_aog()
    assert graph.nodes[graph.root_id].kind is NodeKind.AND


def test_default_graph_has_four_user_components():
    graph = build_default_aog()
    assert len(graph.user_components()) == 4


def test_default_graph_component_channels():
    graph = build_default_aog()
    components = graph.user_components()
    assert components == [
        "hands-occupation",
        "speaking-occupation",
        "visual-occupation",
        "auditory-occupation",
    ]


def test_every_terminal_resolves_one_registry_fact(config):
    graph = build_default_aog()
    graph.validate_against(config.registry)
    for terminal in graph.terminals():
        if terminal.evidence.mode != "physio":
            assert terminal.evidence.fact_id in config.registry.facts


def test_terminals_carry_environment_tags():
    graph = build_default_aog()
    assert all(t.env_tag is not None for t in graph.terminals())


def test_voting_terminals_are_user_side_and_tagged():
    graph = build_default_aog()
    for terminal in graph.terminals():
        if terminal.votes:
            assert terminal.side is Side.USER
            assert terminal.channel is not None


def test_cycle_detected():
    with pytest.raises(ConfigError, match="cycle"):
        Graph(
            [
                AogNode("root", NodeKind.AND, Side.USER, children=("u", "e")),
                AogNode("u", NodeKind.OR, Side.USER, children=("root",)),
                AogNode("e", NodeKind.TERMINAL, Side.ENVIRONMENT,
                        evidence=Evidence(mode="is_true", fact_id="speaking")),
            ],
            root_id="root",
        )


def test_dangling_child_detected():
    with pytest.raises(ConfigError, match="dangling"):
        Graph(
            [AogNode("root", NodeKind.AND, Side.USER, children=("u", "ghost")),
             AogNode("u", NodeKind.TERMINAL, Side.USER,
                     evidence=Evidence(mode="is_true", fact_id="speaking"))],
            root_id="root",
        )


def test_root_must_join_both_halves():
    with pytest.raises(ConfigError, match="environment"):
        Graph(
            [
                AogNode("root", NodeKind.AND, Side.USER, children=("a", "b")),
                AogNode("a", NodeKind.TERMINAL, Side.USER,
                        evidence=Evidence(mode="is_true", fact_id="speaking")),
                AogNode("b", NodeKind.TERMINAL, Side.USER,
                        evidence=Evidence(mode="is_true", fact_id="speaking")),
            ],
            root_id="root",
        )


def test_graph_round_trips_through_json(tmp_path):
    graph = build_default_aog()
    path = tmp_path / "aog.json"
    path.write_text(json.dumps(graph.to_dict()))
    reloaded = load_graph(path)
    assert reloaded.to_dict() == graph.to_dict()


# ---------------------------------------------------------------------------
# Pruning
# ---------------------------------------------------------------------------


def test_all_slots_inactive_means_all_terminals_unknown(config):
    graph = build_default_aog()
    snapshot = make_snapshot(config, {})
    tree = prune(graph, snapshot, {}, config.activity_map)
    assert all(state is TerminalState.UNKNOWN for state in tree.states.values())


def test_keyboard_pose_and_work_window_light_hands_and_visual(config):
    graph = build_default_aog()
    snapshot = make_snapshot(
        config, {"pose": "using-keyboard", "active-window": "word-processor"}
    )
    tree = prune(graph, snapshot, {}, config.activity_map)
    assert tree.states["hands-pose-using-keyboard"] is TerminalState.POSITIVE
    assert tree.states["visual-pose-using-keyboard"] is TerminalState.POSITIVE
    assert "hands-pose-using-keyboard" in tree.selected
    assert "visual-pose-using-keyboard" in tree.selected
    profile = vote_occupation(tree)
    assert OccupationChannel.HANDS in profile.channels
    assert OccupationChannel.VISUAL in profile.channels


def test_inactive_slot_with_retained_fact_is_unknown(config):
    graph = build_default_aog()
    snapshot = make_snapshot(config, {}, stale={"pose": "using-keyboard"})
    tree = prune(graph, snapshot, {}, config.activity_map)
    assert tree.states["hands-pose-using-keyboard"] is TerminalState.UNKNOWN


def test_or_node_prefers_positive_evidence_over_negative(config):
    # Resting pose makes the visual pose branch negative, but an entertainment
    # window is positive evidence and must win the visual component.
    graph = build_default_aog()
    snapshot = make_snapshot(config, {"pose": "resting", "active-window": "media-player"})
    tree = prune(graph, snapshot, {}, config.activity_map)
    assert "visual-window-view" in tree.selected
    assert tree.states["visual-window-view"] is TerminalState.POSITIVE


def test_or_node_tie_breaks_by_child_order(config):
    # Both the pose branch and the content branch are positive; the first
    # positive child in fixed order is selected.
    graph = build_default_aog()
    snapshot = make_snapshot(
        config, {"pose": "using-keyboard", "active-window": "media-player"}
    )
    tree = prune(graph, snapshot, {}, config.activity_map)
    assert "visual-pose-using-keyboard" in tree.selected
    assert "visual-window-view" not in tree.selected


def test_identical_snapshots_identical_parse_trees(config):
    graph = build_default_aog()
    snapshot = make_snapshot(config, {"pose": "reading", "speaking": False})
    t1 = prune(graph, snapshot, {}, config.activity_map)
    t2 = prune(graph, snapshot, {}, config.activity_map)
    assert t1.selected == t2.selected
    assert t1.states == t2.states


def test_prune_is_idempotent_on_restricted_evidence(config):
    # Re-pruning a snapshot reduced to the slots the tree actually resolved
    # reproduces the same selections and states for those terminals.
    graph = build_default_aog()
    values = {"pose": "using-keyboard", "active-window": "pc-game", "speaking": False}
    snapshot = make_snapshot(config, values)
    tree = prune(graph, snapshot, {}, config.activity_map)
    resolved_facts = {
        t.evidence.fact_id
        for t in graph.terminals()
        if t.node_id in tree.selected and tree.states[t.node_id] is not TerminalState.UNKNOWN
    }
    restricted = make_snapshot(config, {f: values[f] for f in resolved_facts if f in values})
    again = prune(graph, restricted, {}, config.activity_map)
    assert again.selected == tree.selected
    for node_id in tree.selected & set(tree.states):
        if tree.states[node_id] is not TerminalState.UNKNOWN:
            assert again.states[node_id] == tree.states[node_id]


def test_physio_terminal_graph_loads_and_prunes(config, tmp_path):
    # Alternative graphs may reference physiological needs as terminal evidence.
    data = {
        "root": "root",
        "nodes": [
            {"id": "root", "kind": "and", "side": "user", "children": ["user", "env"]},
            {"id": "user", "kind": "or", "side": "user", "children": ["thirsty"]},
            {"id": "thirsty", "kind": "terminal", "side": "user", "env": "physical",
             "channel": "hands", "votes": True, "evidence": {"mode": "physio", "need": "thirst"}},
            {"id": "env", "kind": "or", "side": "environment", "children": ["door"]},
            {"id": "door", "kind": "terminal", "side": "environment", "env": "physical",
             "evidence": {"mode": "is_true", "fact": "visitor-at-door"}},
        ],
    }
    path = tmp_path / "alt.json"
    path.write_text(json.dumps(data))
    graph = load_graph(path)
    graph.validate_against(config.registry)
    snapshot = make_snapshot(config, {})
    tree = prune(graph, snapshot, {PhysioNeed.THIRST: True}, config.activity_map)
    assert tree.states["thirsty"] is TerminalState.POSITIVE
    tree = prune(graph, snapshot, {PhysioNeed.THIRST: None}, config.activity_map)
    assert tree.states["thirsty"] is TerminalState.UNKNOWN


# ---------------------------------------------------------------------------
# Voting
# ---------------------------------------------------------------------------


def _tree_with_votes(config, values):
    graph = build_default_aog()
    snapshot = make_snapshot(config, values)
    return prune(graph, snapshot, {}, config.activity_map)


def test_vote_fraction_three_quarters(config):
    # O2-style evidence: hands, visual, auditory positive; speaking negative.
    tree = _tree_with_votes(
        config,
        {"pose": "using-device", "speaking": False, "active-scene": "vr-game",
         "hmd-active": True, "controller-active": True},
    )
    profile = vote_occupation(tree, weight=1.0, threshold=0.5)
    assert (profile.positives, profile.negatives) == (3, 1)
    assert profile.fraction == pytest.approx(0.75)
    assert profile.occupied


def test_all_negative_votes_not_occupied(config):
    tree = _tree_with_votes(
        config,
        {"pose": "resting", "speaking": False, "active-window": "idle-desktop",
         "active-scene": "none", "mouse-active": False, "keyboard-active": False,
         "hmd-active": False, "controller-active": False},
    )
    profile = vote_occupation(tree)
    assert profile.positives == 0
    assert profile.fraction == 0.0
    assert not profile.occupied


def test_zero_votes_defines_fraction_zero(config):
    tree = _tree_with_votes(config, {})
    profile = vote_occupation(tree)
    assert profile.fraction == 0.0
    assert not profile.occupied


def test_resting_not_occupied_under_every_group(config):
    graph = build_default_aog()
    resting = {"pose": "resting", "speaking": False, "active-window": "idle-desktop",
               "active-scene": "none", "mouse-active": False, "keyboard-active": False,
               "hmd-active": False, "controller-active": False, "battery-level": 80,
               "visitor-at-door": False, "desk-event": "none", "device-usage": 0}
    for group in SENSOR_GROUPS.values():
        visible = {
            fact_id: payload
            for fact_id, payload in resting.items()
            if config.registry.facts[fact_id].category in group.categories
        }
        tree = prune(graph, make_snapshot(config, visible), {}, config.activity_map)
        assert not vote_occupation(tree).occupied


def test_vote_weight_scales_negatives(config):
    tree = _tree_with_votes(
        config,
        {"pose": "using-device", "speaking": False, "active-scene": "vr-game",
         "hmd-active": True, "controller-active": True},
    )
    light = vote_occupation(tree, weight=0.5)
    heavy = vote_occupation(tree, weight=2.0)
    assert light.fraction > heavy.fraction


def test_vote_parameter_validation(config):
    tree = _tree_with_votes(config, {})
    with pytest.raises(ValueError):
        vote_occupation(tree, weight=0.0)
    with pytest.raises(ValueError):
        vote_occupation(tree, threshold=1.0)


def test_turning_unknown_terminal_positive_never_lowers_fraction(config):
    rng = random.Random(20240812)
    graph = build_default_aog()
    poses = ["using-device", "using-keyboard", "resting", "reading", None]
    windows = ["word-processor", "media-player", "idle-desktop", None]
    for _ in range(200):
        values = {}
        pose = rng.choice(poses)
        if pose is not None:
            values["pose"] = pose
        window = rng.choice(windows)
        if window is not None:
            values["active-window"] = window
        if rng.random() < 0.5:
            values["speaking"] = rng.random() < 0.5
        if rng.random() < 0.5:
            values["hmd-active"] = rng.random() < 0.5
        tree = prune(graph, make_snapshot(config, values), {}, config.activity_map)
        before = vote_occupation(tree, weight=1.0)
        unknown_selected = [
            t.node_id
            for t in tree.selected_terminals()
            if t.votes and tree.states[t.node_id] is TerminalState.UNKNOWN
        ]
        if not unknown_selected:
            continue
        flipped = dict(tree.states)
        flipped[rng.choice(unknown_selected)] = TerminalState.POSITIVE
        after = vote_occupation(dataclasses.replace(tree, states=flipped), weight=1.0)
        assert after.fraction >= before.fraction
