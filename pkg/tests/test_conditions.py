"""Structure conditions: shape predicates, global invariants, keyset analysis."""

import random

from flowcheck.conditions import (
    GlobalInvariant,
    bst_structure,
    builtin_condition,
    check_global,
    doubly_linked_structure,
    edgeset_report,
    harris_structure,
    nested_structure,
    sorted_list_structure,
    tree_structure,
)
from flowcheck.domains import FLAT_BOTTOM, INF, NEG_INF, last_edge_domain, path_count_domain, trivial_labels
from flowcheck.graphs import attach, make_graph
from flowcheck.interfaces import interface_of
from flowcheck.intervals import KeySet
from flowcheck.machines.bptree import BPTreeModel
from flowcheck.machines import bptree, harris, sortedlist

from _gen import rand_dag

D = path_count_domain()


def test_tree_condition_on_tree_and_diamond():
    st = tree_structure("n0")
    nodes = ["n0", "n1", "n2"]
    tree = attach(D, make_graph(D, nodes, [], {n: None for n in nodes},
                                {("n0", "n1"): 1, ("n0", "n2"): 1}), {"n0": 1})
    assert st.report(tree).ok
    diamond = attach(D, make_graph(D, nodes + ["n3"], [], {n: None for n in nodes + ["n3"]},
                                   {("n0", "n1"): 1, ("n0", "n2"): 1,
                                    ("n1", "n3"): 1, ("n2", "n3"): 1}), {"n0": 1})
    rep = st.report(diamond)
    assert [n for n, _ in rep.failures] == ["n3"]


def test_tree_condition_matches_brute_force():
    # pass <=> exactly one root-to-node path everywhere and no dangling edges
    rng = random.Random(17)
    st = tree_structure("x0")
    for _ in range(200):
        g = rand_dag(rng, max_nodes=6)
        h = attach(D, g, {"x0": 1})
        i = interface_of(h, D, trivial_labels())
        ok = st.report(h).ok and not check_global(i, st.global_invariant, D)
        from _gen import oracle_capacity
        brute = all(oracle_capacity(g, "x0", n) == (1 if n != "x0" else 1) for n in g.nodes) \
            and all(oracle_capacity(g, "x0", n) == 1 for n in g.nodes)
        assert ok == brute, (g.edges, ok, brute)


def test_list_conditions():
    st = builtin_condition("list", root="a")
    chain = attach(D, make_graph(D, ["a", "b"], [], {"a": None, "b": None},
                                 {("a", "b"): 1}), {"a": 1})
    assert st.report(chain).ok
    forked = attach(D, make_graph(D, ["a", "b", "c"], [], {n: None for n in "abc"},
                                  {("a", "b"): 1, ("a", "c"): 1}), {"a": 1})
    assert not st.report(forked).ok
    term = builtin_condition("list", root="a", terminator="b")
    assert term.report(chain).ok
    longer = attach(D, make_graph(D, ["a", "b", "c"], [], {n: None for n in "abc"},
                                  {("a", "b"): 1, ("b", "c"): 1}), {"a": 1})
    assert not term.report(longer).ok  # b must terminate


def test_cyclic_list_condition():
    st = builtin_condition("cyclic_list", root="a")
    ring = attach(D, make_graph(D, ["a", "b"], [], {"a": None, "b": None},
                                {("a", "b"): 1, ("b", "a"): 1}), {"a": 1})
    assert st.report(ring).ok
    chain = attach(D, make_graph(D, ["a", "b"], [], {"a": None, "b": None},
                                 {("a", "b"): 1}), {"a": 1})
    assert not st.report(chain).ok


def _sorted_chain(keys):
    st = sorted_list_structure("c0")
    d = st.domain
    nodes = ["c%d" % i for i in range(len(keys))]
    labels = {n: KeySet.points([k]) for n, k in zip(nodes, keys)}
    edges = {(nodes[i], nodes[i + 1]): (1, keys[i]) for i in range(len(keys) - 1)}
    g = make_graph(d, nodes, [], labels, edges)
    return st, attach(d, g, {"c0": (1, NEG_INF)})


def test_sorted_list_condition():
    st, good = _sorted_chain([3, 7])
    assert st.report(good).ok
    st, bad = _sorted_chain([7, 3])
    rep = st.report(bad)
    assert rep.failures and "bound" in rep.failures[0][1]
    # the bound flowing into the second node is the brute-force predecessor max
    assert bad.flow["c1"][1] == 7


def test_harris_condition_on_fixture_shape():
    w = harris.initial_world()
    st = harris.structure_for(w)
    assert st.report(w.graph).ok
    i = interface_of(w.graph, harris.DOMAIN, harris.LABELS)
    assert not check_global(i, st.global_invariant, harris.DOMAIN)
    # every path-count pair is one of (1,0), (0,1), (1,1)
    assert set(w.graph.flow.values()) <= {(1, 0), (0, 1), (1, 1)}


def test_harris_unmarked_free_node_fails():
    st = harris_structure("h", "f", "f")
    d = st.domain
    labels = {"h": FLAT_BOTTOM, "f": FLAT_BOTTOM}  # f unmarked but on the free list
    g = make_graph(d, ["h", "f"], [], labels, {})
    h = attach(d, g, {"h": (1, 0), "f": (0, 1)})
    rep = st.report(h)
    assert ("f", "free-list node is unmarked") in rep.failures


def test_harris_ft_must_be_in_free_list():
    st = harris_structure("h", "f", "h")  # claims the main head is the free tail
    d = st.domain
    g = make_graph(d, ["h", "f"], [], {"h": FLAT_BOTTOM, "f": 1}, {})
    h = attach(d, g, {"h": (1, 0), "f": (0, 1)})
    rep = st.report(h)
    assert ("h", "free-list tail is not in the free list") in rep.failures


def test_harris_extract():
    st = harris_structure("h", "f", "f")
    label, edges = st.extract("n", {"next": ["r", False], "fnext": None, "marker": None}, None)
    assert label == FLAT_BOTTOM and edges == {"r": (1, 0)}
    label, edges = st.extract("n", {"next": ["r", True], "fnext": "r", "marker": 3}, None)
    assert label == 3 and edges == {"r": (1, 1)}
    bad = st.extract("n", {"next": ["r", True], "fnext": None, "marker": None}, None)
    from flowcheck.conditions import ExtractFailure
    assert isinstance(bad, ExtractFailure)


def test_check_global_examples():
    w = bptree.initial_world()
    d, a = bptree.__dict__ and None, None
    from flowcheck.domains import keyset_domain, dictionary_labels
    d, a = keyset_domain(), dictionary_labels()
    i = interface_of(w.graph, d, a)
    inv = GlobalInvariant(inflow=(("r", KeySet.full()),))
    assert check_global(i, inv, d) == []
    # a dangling out-edge leaves a non-empty flow map
    g = make_graph(d, ["r"], ["gone"], {"r": (KeySet.empty(), frozenset(["0"]))},
                   {("r", "gone"): KeySet.full()})
    h = attach(d, g, {"r": KeySet.full()})
    bad = check_global(interface_of(h, d, a), inv, d)
    assert any("flow map" in b for b in bad)
    # wrong roots
    assert check_global(i, GlobalInvariant(inflow=(("L", KeySet.full()),)), d)
    # missing member node
    assert check_global(i, GlobalInvariant(inflow=(("r", KeySet.full()),), member_nodes=("zz",)), d)


def test_edgeset_report_on_btree_fixture():
    w = bptree.initial_world()
    rep = edgeset_report(w.graph)
    assert rep.ok
    assert rep.per_node["L"]["keyset"] == KeySet.span(NEG_INF, 3)
    assert rep.per_node["r"]["keyset"].is_empty()


def test_edgeset_violations():
    from flowcheck.domains import keyset_domain
    d = keyset_domain()
    L0 = frozenset(["0"])
    # two leaves own overlapping insets -> the shared key lands in two keysets
    g = make_graph(d, ["r", "a", "b"], [],
                   {"r": (KeySet.empty(), L0),
                    "a": (KeySet.points([5]), L0),
                    "b": (KeySet.points([5]), L0)},
                   {("r", "a"): KeySet.span(0, 9), ("r", "b"): KeySet.span(5, 9)})
    h = attach(d, g, {"r": KeySet.full()})
    rep = edgeset_report(h)
    codes = {c for c, _ in rep.violations}
    assert "GS1" in codes and "GS3" in codes
    # contents outside the keyset
    g = make_graph(d, ["r"], [], {"r": (KeySet.points([9]), L0)}, {})
    h = attach(d, g, {"r": KeySet.span(5, 7)})
    rep = edgeset_report(h)
    assert [c for c, _ in rep.violations] == ["GS2"]


def test_dictionary_condition_clauses():
    w = bptree.initial_world()
    st = builtin_condition("dictionary", model=BPTreeModel(2), root="r")
    assert st.report(w.graph).ok
    d = st.domain
    L0 = frozenset(["0"])
    g = make_graph(d, ["r", "a"], [],
                   {"r": (KeySet.points([1]), L0), "a": (KeySet.empty(), L0)},
                   {("r", "a"): KeySet.span(0, 9)})
    h = attach(d, g, {"r": KeySet.full()})
    rep = st.report(h)
    assert any("overlap the edgeset" in why for _, why in rep.failures)


def test_dictionary_extract_carряforward_variants():
    st = builtin_condition("dictionary", model=BPTreeModel(2), root="r")
    w = bptree.initial_world()
    rec = dict(w.heap["L"])
    # clean extraction
    (contents, locks), edges = st.extract("L", rec, None)
    assert contents == KeySet.points([1]) and locks == frozenset(["0"]) and edges == {}
    # out-of-sync extraction carries the graph's view and flags the lock
    rec2 = dict(rec)
    rec2["lock"], rec2["unsynced"] = 7, True
    current = ((KeySet.points([1]), frozenset(["7"])), {})
    (contents, locks), edges = st.extract("L", rec2, current)
    assert locks == frozenset(["7~"]) and contents == KeySet.points([1])


def test_heap_ok_range_vs_inset():
    model = BPTreeModel(2)
    w = bptree.initial_world()
    rec = w.heap["L"]
    assert model.heap_ok("L", rec, KeySet.span(NEG_INF, 3)) is None
    assert model.heap_ok("L", rec, KeySet.span(0, 3)) == "stored range differs from the inset"
    bad = dict(rec, len=3, keys=[2, 1, 9, None])
    assert model.heap_ok("L", bad, KeySet.span(NEG_INF, 3)) == "keys not strictly sorted"


# ---------------------------------------------------------------------------
# combinator-level builders


def test_doubly_linked_combinator():
    nodes = ["a", "b", "c"]
    st = doubly_linked_structure("a", "c", nodes)
    d = st.domain
    # labels store each node's prev pointer; edges carry (forward, backward,
    # origin-tag) products
    labels = {"a": None, "b": "a", "c": "b"}
    # forward edges carry their source as the last-edge tag; backward edges
    # carry the annihilating tag so only forward paths decide a node's prev
    edges = {
        ("a", "b"): ((1, 0), frozenset(["a"])),
        ("b", "c"): ((1, 0), frozenset(["b"])),
        ("c", "b"): ((0, 1), frozenset()),
        ("b", "a"): ((0, 1), frozenset()),
    }
    g = make_graph(d, nodes, [], labels, edges)
    h = attach(d, g, {"a": ((1, 0), d.one[1]), "c": ((0, 1), frozenset())})
    rep = st.report(h)
    assert rep.ok, rep.failures
    # break one prev pointer
    labels_bad = dict(labels, c="a")
    h2 = attach(d, make_graph(d, nodes, [], labels_bad, edges), dict(h.inflow))
    assert not st.report(h2).ok


def test_nested_combinator():
    kind = {"t0": "tree", "t1": "tree", "l0": "list", "l1": "list"}
    st = nested_structure("t0", kind.get)
    d = st.domain
    one_tag = d.one[1]
    edges = {
        ("t0", "t1"): (1, frozenset(["tree"])),
        ("t1", "l0"): (1, frozenset(["list"])),
        ("l0", "l1"): (1, frozenset(["list"])),
    }
    g = make_graph(d, list(kind), [], {n: None for n in kind}, edges)
    h = attach(d, g, {"t0": (1, one_tag)})
    assert st.report(h).ok
    # a list node pointing back at a tree node is rejected
    edges_bad = dict(edges)
    edges_bad[("l1", "t1")] = (1, frozenset(["tree"]))
    h2 = attach(d, make_graph(d, list(kind), [], {n: None for n in kind}, edges_bad),
                dict(h.inflow))
    assert not st.report(h2).ok


def test_bst_combinator():
    st = bst_structure("m")
    d = st.domain
    labels = {"m": KeySet.points([5]), "l": KeySet.points([3]), "r": KeySet.points([8])}
    edges = {
        ("m", "l"): (NEG_INF, 5),   # left child: upper bound tightens to 5
        ("m", "r"): (5, INF),       # right child: lower bound rises to 5
    }
    g = make_graph(d, ["m", "l", "r"], [], labels, edges)
    h = attach(d, g, {"m": (NEG_INF, INF)})
    assert st.report(h).ok
    labels_bad = dict(labels, l=KeySet.points([9]))
    h2 = attach(d, make_graph(d, ["m", "l", "r"], [], labels_bad, edges), dict(h.inflow))
    rep = st.report(h2)
    assert any("outside inherited bounds" in why for _, why in rep.failures)


def test_good_dictionary_states_satisfy_the_goodstate_conditions():
    # whenever the per-node dictionary condition and the global invariant
    # both hold, the keyset analysis must come back clean
    import random
    from flowcheck.domains import keyset_domain, dictionary_labels

    d, a = keyset_domain(), dictionary_labels()
    rng = random.Random(72)
    st = builtin_condition("dictionary", model=None, root="x0")
    accepted = 0
    for _ in range(600):
        n = rng.randrange(1, 5)
        nodes = ["x%d" % i for i in range(n)]
        labels = {}
        edges = {}
        for m in nodes:
            pts = [k for k in range(0, 8) if rng.random() < 0.25]
            labels[m] = (KeySet.points(pts), frozenset(["0"]))
            for other in nodes:
                if other != m and rng.random() < 0.3:
                    lo = rng.randrange(0, 8)
                    edges[(m, other)] = KeySet.span(lo, lo + rng.randrange(1, 5))
        g = make_graph(d, nodes, [], labels, edges)
        h = attach(d, g, {"x0": KeySet.full()})
        i = interface_of(h, d, a)
        if st.report(h).ok and not check_global(i, st.global_invariant, d):
            accepted += 1
            assert edgeset_report(h).ok
    assert accepted >= 20  # the implication is not vacuous
