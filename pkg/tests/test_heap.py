"""States, ghost commands, region predicates, precision and locality."""

import itertools
import random

import pytest

from flowcheck.conditions import harris_structure
from flowcheck.domains import FLAT_BOTTOM, path_count_domain, product_domain, trivial_labels
from flowcheck.graphs import Undefined, attach, empty_inflowed, fg_decompose, fg_equiv, make_graph
from flowcheck.heap import (
    GhostAbort,
    State,
    abstract_region,
    dirty_region_ok,
    empty_state,
    ghost_mark,
    ghost_sync,
    ghost_unmark,
    state_compose,
    sync_interface,
    synced_region_ok,
)
from flowcheck.interfaces import interface_of, satisfies
from flowcheck.machines import harris

from _gen import rand_inflow, rand_inflowed

D = path_count_domain()
A = trivial_labels()


def _list_state(order, next_map):
    """Harris-shaped single list: records with next/fnext/marker fields."""
    heap = {n: {"next": [next_map.get(n), False], "fnext": None, "marker": None}
            for n in order}
    d = harris.DOMAIN
    edges = {(n, m): (1, 0) for n, m in next_map.items() if m is not None}
    g = make_graph(d, order, [], {n: FLAT_BOTTOM for n in order}, edges)
    graph = attach(d, g, {order[0]: (1, 0)})
    return State(heap, graph, {n: n for n in order})


def test_state_compose_cases():
    s1 = _list_state(["a"], {})
    s2 = _list_state(["b"], {})
    d = harris.DOMAIN
    both = state_compose(s1, s2, d)
    assert both and set(both.heap) == {"a", "b"}
    assert not state_compose(s1, s1, d)
    assert state_compose(s1, s1, d).reason == "heap-overlap"
    assert state_compose(s1, empty_state(), d).heap == s1.heap
    # disjoint heaps but incompatible inflows fail at the graph layer
    g = make_graph(d, ["c"], [], {"c": FLAT_BOTTOM}, {})
    sg = State({"c": {"next": [None, False], "fnext": None, "marker": None}},
               attach(d, g, {"c": (1, 0)}), {"c": "c"})
    sh = _list_state(["e"], {})
    composed = state_compose(sg, sh, d)
    assert composed  # independent singletons compose fine
    assert composed.graph.flow["c"] == (1, 0)


def test_state_separation_algebra_on_generated_states():
    rng = random.Random(3)
    d = D
    count = 0
    while count < 200:
        h = rand_inflowed(rng, d, max_nodes=5)
        heap = {n: {"v": 0} for n in h.graph.nodes}
        s = State(heap, h, {n: n for n in h.graph.nodes})
        part = [n for n in sorted(h.graph.nodes) if rng.random() < 0.5]
        h1, h2 = fg_decompose(h, part, d)
        s1 = State({n: heap[n] for n in h1.graph.nodes}, h1, {n: n for n in h1.graph.nodes})
        s2 = State({n: heap[n] for n in h2.graph.nodes}, h2, {n: n for n in h2.graph.nodes})
        ab = state_compose(s1, s2, d)
        ba = state_compose(s2, s1, d)
        assert ab and ba
        assert ab.heap == s.heap and fg_equiv(ab.graph, h) and fg_equiv(ba.graph, h)
        # identity
        assert state_compose(s1, empty_state(), d).heap == s1.heap
        count += 1


def _harris_state():
    w = harris.initial_world()
    return State(w.heap, w.graph, w.nodemap), harris.structure_for(w)


def test_abstract_region_matches_graph():
    s, st = _harris_state()
    region = set(s.graph.graph.nodes)
    fresh = abstract_region(s, region, st, dict(s.graph.inflow))
    assert not isinstance(fresh, GhostAbort)
    assert fg_equiv(fresh, s.graph)
    missing = abstract_region(s, {"nope"}, st, {})
    assert isinstance(missing, GhostAbort) and missing.reason == "region-outside-heap"
    bad = State(dict(s.heap, m1={"broken": True}), s.graph, s.nodemap)
    res = abstract_region(bad, region, st, dict(s.graph.inflow))
    assert isinstance(res, GhostAbort) and res.reason == "extract"
    assert res.detail[0] == "m1"


def test_ghost_sync_accepts_the_list_insert_region():
    s, st = _harris_state()
    d, a = harris.DOMAIN, harris.LABELS
    heap = dict(s.heap)
    heap["n"] = {"next": ["m2", False], "fnext": None, "marker": None}
    s = State(heap, s.graph, s.nodemap)
    s = ghost_mark(s, "n", "n", d, a)
    assert not isinstance(s, GhostAbort)
    # heap edit: m1.next swings to n (the insert CAS)
    heap = dict(s.heap)
    heap["m1"] = {"next": ["n", False], "fnext": None, "marker": None}
    s = State(heap, s.graph, s.nodemap)
    target = sync_interface(s, {"m1", "n"}, st, d, a)
    assert not isinstance(target, GhostAbort)
    s2 = ghost_sync(s, {"m1", "n"}, target, st, d, a)
    assert not isinstance(s2, GhostAbort)
    assert s2.graph.flow["n"] == (1, 0)
    # syncing only the edited node must abort: its flow-map row changed
    bad = ghost_sync(s, {"m1"}, sync_interface(s, {"m1"}, st, d, a), st, d, a)
    assert isinstance(bad, GhostAbort) and bad.reason == "extension"
    # a no-op sync of an untouched region succeeds
    okay = ghost_sync(s2, {"h"}, sync_interface(s2, {"h"}, st, d, a), st, d, a)
    assert not isinstance(okay, GhostAbort)


def test_ghost_mark_cases():
    s, st = _harris_state()
    d, a = harris.DOMAIN, harris.LABELS
    heap = dict(s.heap)
    heap["x"] = {"next": [None, False], "fnext": None, "marker": None}
    s = State(heap, s.graph, s.nodemap)
    fresh = ghost_mark(s, "x", "x", d, a)
    assert not isinstance(fresh, GhostAbort)
    assert "x" in fresh.graph.graph.nodes and fresh.graph.flow["x"] == (0, 0)
    assert fresh.graph.graph.labels["x"] == a.bottom
    # second cell of a composite node only touches the node map
    heap2 = dict(fresh.heap)
    heap2["x2"] = {"next": [None, False], "fnext": None, "marker": None}
    s2 = State(heap2, fresh.graph, fresh.nodemap)
    aliased = ghost_mark(s2, "x2", "x", d, a)
    assert not isinstance(aliased, GhostAbort)
    assert aliased.nodemap["x2"] == "x" and "x2" not in aliased.graph.graph.nodes
    # re-marking aborts
    again = ghost_mark(aliased, "x", "x", d, a)
    assert isinstance(again, GhostAbort) and again.reason == "already-marked"
    # marking to a non-node aborts
    assert isinstance(ghost_mark(s2, "x2", "zz", d, a), GhostAbort)


def test_ghost_unmark_cases():
    s, st = _harris_state()
    d, a = harris.DOMAIN, harris.LABELS
    heap = dict(s.heap)
    heap["x"] = {"next": [None, False], "fnext": None, "marker": None}
    s = ghost_mark(State(heap, s.graph, s.nodemap), "x", "x", d, a)
    out = ghost_unmark(s, "x", d)
    assert not isinstance(out, GhostAbort)
    assert "x" not in out.graph.graph.nodes and "x" not in out.nodemap
    # non-representative cells only shrink the node map
    heap2 = dict(s.heap)
    heap2["x2"] = {"next": [None, False], "fnext": None, "marker": None}
    s2 = ghost_mark(State(heap2, s.graph, s.nodemap), "x2", "x", d, a)
    out2 = ghost_unmark(s2, "x2", d)
    assert not isinstance(out2, GhostAbort) and "x" in out2.graph.graph.nodes
    # a node still fed by the structure cannot be dropped
    still = ghost_unmark(s, "m1", d)
    assert isinstance(still, GhostAbort) and still.reason == "nonzero-inflow"


def test_synced_and_dirty_predicates():
    s, st = _harris_state()
    d, a = harris.DOMAIN, harris.LABELS
    i = interface_of(s.graph, d, a)
    assert synced_region_ok(s, i, st, d, a)
    # edit the heap without syncing: dirty but not synced
    heap = dict(s.heap)
    heap["m1"] = {"next": [None, False], "fnext": None, "marker": None}
    s_dirty = State(heap, s.graph, s.nodemap)
    assert not synced_region_ok(s_dirty, i, st, d, a)
    assert dirty_region_ok(s_dirty, i, lambda h: h["m1"]["next"][0] is None, d, a)
    assert not dirty_region_ok(s_dirty, i, lambda h: False, d, a)
    assert synced_region_ok(empty_state(), interface_of(empty_inflowed(), d, a), st, d, a)


def test_region_predicates_are_precise():
    # for a fixed interface, at most one substate satisfies the synced predicate
    s, st = _harris_state()
    d, a = harris.DOMAIN, harris.LABELS
    nodes = sorted(s.graph.graph.nodes)
    for r in range(len(nodes) + 1):
        for region in itertools.combinations(nodes, r):
            h_r, _ = fg_decompose(s.graph, region, d)
            i = interface_of(h_r, d, a)
            matches = 0
            for r2 in range(len(nodes) + 1):
                for sub in itertools.combinations(nodes, r2):
                    h_s, _ = fg_decompose(s.graph, sub, d)
                    s_sub = State({n: s.heap[n] for n in sub}, h_s, {n: n for n in sub})
                    if synced_region_ok(s_sub, i, st, d, a):
                        matches += 1
            assert matches <= 1


def test_ghost_commands_are_local():
    # running a command on a composite state equals running it on the part
    # and composing the untouched remainder back in
    s, st = _harris_state()
    d, a = harris.DOMAIN, harris.LABELS
    part = {"h", "m1", "m2"}
    h1, h2 = fg_decompose(s.graph, part, d)
    s1 = State({n: s.heap[n] for n in part}, h1, {n: n for n in part})
    rest = set(s.heap) - part
    s2 = State({n: s.heap[n] for n in rest}, h2, {n: n for n in rest})
    whole = state_compose(s1, s2, d)
    assert whole

    # a sync of a region inside the part succeeds on both and recomposes
    part_state = State({n: whole.heap[n] for n in part}, h1, {n: n for n in part})
    target = sync_interface(part_state, {"m1", "m2"}, st, d, a)
    assert not isinstance(target, GhostAbort)
    on_part = ghost_sync(part_state, {"m1", "m2"}, target, st, d, a)
    on_whole = ghost_sync(whole, {"m1", "m2"}, target, st, d, a)
    assert not isinstance(on_part, GhostAbort) and not isinstance(on_whole, GhostAbort)
    recomposed = state_compose(on_part, s2, d)
    assert recomposed and fg_equiv(recomposed.graph, on_whole.graph)
    assert recomposed.heap == on_whole.heap

    # an edit that breaks the condition aborts on the part and on the whole
    heap = dict(whole.heap)
    heap["m1"] = {"next": [None, False], "fnext": None, "marker": None}
    dirty_whole = State(heap, whole.graph, whole.nodemap)
    dirty_part = State({n: heap[n] for n in part}, h1, {n: n for n in part})
    bad_target = sync_interface(dirty_part, {"m1", "m2"}, st, d, a)
    assert not isinstance(bad_target, GhostAbort)
    assert isinstance(ghost_sync(dirty_part, {"m1", "m2"}, bad_target, st, d, a), GhostAbort)
    assert isinstance(ghost_sync(dirty_whole, {"m1", "m2"}, bad_target, st, d, a), GhostAbort)

    # mark behaves locally as well
    heap2 = dict(whole.heap)
    heap2["y"] = {"next": [None, False], "fnext": None, "marker": None}
    sw = State(heap2, whole.graph, whole.nodemap)
    sp = State({**{n: heap2[n] for n in part}, "y": heap2["y"]}, h1,
               {n: n for n in part})
    mw = ghost_mark(sw, "y", "y", d, a)
    mp = ghost_mark(sp, "y", "y", d, a)
    assert not isinstance(mw, GhostAbort) and not isinstance(mp, GhostAbort)
    re2 = state_compose(mp, s2, d)
    assert re2 and fg_equiv(re2.graph, mw.graph)
