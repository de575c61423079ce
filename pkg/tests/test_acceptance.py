"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
All tolerances are exact (discrete mathematics); the stated wall-clock
budgets are asserted as upper bounds.
"""

import itertools
import json
import random
import time

import pytest

from flowcheck import files
from flowcheck.cli import fixture_path, main
from flowcheck.domains import (
    INF,
    domain_samples,
    keyset_domain,
    last_edge_domain,
    law_check,
    lower_bound_domain,
    path_count_domain,
    product_domain,
    trivial_labels,
    upper_bound_domain,
)
from flowcheck.graphs import (
    attach,
    capacity,
    fg_compose,
    fg_decompose,
    fg_equiv,
    flow_values,
    inflow_equiv,
    make_graph,
    project_inflow,
)
from flowcheck.heap import State, state_compose
from flowcheck.interfaces import contextual_extension, int_compose, interface_equal, interface_of, satisfies
from flowcheck.intervals import KeySet
from flowcheck.monitor import Workload, explore, run

import _gen
from _gen import oracle_capacity, rand_dag, rand_graph, rand_inflow, rand_inflowed, rand_split

D = path_count_domain()
A = trivial_labels()


class budget:
    def __init__(self, name, seconds):
        self.name, self.seconds = name, seconds

    def __enter__(self):
        self.t0 = time.time()
        return self

    def __exit__(self, exc, *rest):
        took = time.time() - self.t0
        verdict = "PASS" if exc is None else "FAIL"
        print("[%s] %s (%.2fs, budget %ss)" % (self.name, verdict, took, self.seconds))
        assert took < self.seconds, "%s exceeded its %ss budget (%.2fs)" % (self.name, self.seconds, took)


def _load_fixture_graph(name):
    return files.graph_from_json(files.loads(fixture_path(name).read_text()))


def test_criterion_1_two_region_fixture():
    with budget("C1 two-region fixture", 1.0):
        gf = _load_fixture_graph("two-region.graph")
        h = gf.graph
        assert dict(h.flow) == {("n%d" % i): 1 for i in range(7)}
        boxed = {"n1", "n2", "n4"}
        assert project_inflow(dict(h.inflow), h.graph, boxed, D) == {"n1": 1, "n2": 1}
        assert project_inflow(dict(h.inflow), h.graph, h.graph.nodes - boxed, D) == \
            {"n0": 1, "n3": 1, "n5": 1, "n6": 1}
        h1, h2 = fg_decompose(h, boxed, D)
        i1 = interface_of(h1, D, A)
        assert dict(i1.flowmap) == {("n1", "n3"): 1, ("n1", "n5"): 1, ("n2", "n6"): 1}
        assert fg_equiv(fg_compose(h1, h2, D), h)


def test_criterion_2_list_insert_fixture():
    with budget("C2 list-insert fixture", 1.0):
        before = _load_fixture_graph("list-insert-before.graph").graph
        after = _load_fixture_graph("list-insert-after.graph").graph
        fm = {}
        for h, tag in ((before, "H"), (after, "H'")):
            for region in (("l",), ("l", "n")):
                part, _ = fg_decompose(h, region, D)
                fm[(tag, region)] = dict(interface_of(part, D, A).flowmap)
        assert fm[("H", ("l",))] == {("l", "r"): 1}
        assert fm[("H", ("l", "n"))] == {("l", "r"): 1}
        assert fm[("H'", ("l",))] == {("l", "n"): 1}
        assert fm[("H'", ("l", "n"))] == {("l", "r"): 1}
        import contextlib
        import io

        with contextlib.redirect_stdout(io.StringIO()):
            assert main(["extend", str(fixture_path("list-insert-before.graph")),
                         str(fixture_path("list-insert-after.graph")), "--region", "l,n"]) == 0
            assert main(["extend", str(fixture_path("list-insert-before.graph")),
                         str(fixture_path("list-insert-after.graph")), "--region", "l"]) == 1


def test_criterion_3_saturated_cycle_composition():
    with budget("C3 saturated-cycle composition", 1.0):
        left = _load_fixture_graph("inf-cycle-left.graph").graph
        right = _load_fixture_graph("inf-cycle-right.graph").graph
        h = fg_compose(left, right, D)
        assert h, "composition must be defined"
        assert inflow_equiv(dict(h.inflow), {"n1": 1}, h.graph, D)
        assert inflow_equiv(dict(h.inflow), {"n2": 1}, h.graph, D)


def test_criterion_4_oracle_suites():
    with budget("C4 oracle suites (500 instances each)", 60.0):
        rng = random.Random(12345)
        for _ in range(500):  # capacity = path count on DAGs
            g = rand_dag(rng, max_nodes=8)
            cap = capacity(g, D)
            for src in sorted(g.nodes):
                for dst in sorted(g.nodes):
                    assert cap.get((src, dst), 0) == oracle_capacity(g, src, dst)
        for _ in range(500):  # saturation to inf on cycles
            g = rand_graph(rng, D, max_nodes=5, edge_prob=0.35)
            g = make_graph(D, g.nodes, g.sinks, dict(g.labels), {e: 1 for e in g.edges})
            cap = capacity(g, D)
            for src in sorted(g.nodes):
                for dst in sorted(g.nodes | g.sinks):
                    assert cap.get((src, dst), 0) == oracle_capacity(g, src, dst)
        kd = keyset_domain()
        for _ in range(500):  # keyset flow = per-key reachability
            g = rand_graph(rng, kd, max_nodes=6, edge_prob=0.35)
            root = sorted(g.nodes)[0]
            fl = flow_values({root: KeySet.full()}, g, kd)
            for k in range(0, 11, 2):
                reach, frontier = {root}, [root]
                while frontier:
                    cur = frontier.pop()
                    for (a, b), v in g.edges.items():
                        if a == cur and k in v and b in g.nodes and b not in reach:
                            reach.add(b)
                            frontier.append(b)
                for n in g.nodes:
                    assert (k in fl[n]) == (n in reach)
        for _ in range(500):  # projection lemma
            h = rand_inflowed(rng, D, max_nodes=8)
            (h1, h2), _ = rand_split(rng, h, D)
            for hi in (h1, h2):
                for n in hi.graph.nodes:
                    assert hi.flow[n] == h.flow[n]
        for _ in range(500):  # Kleene identity
            h = rand_inflowed(rng, D, max_nodes=8)
            for n in h.graph.nodes:
                acc = dict(h.inflow).get(n, D.zero)
                for (src, dst), v in h.graph.edges.items():
                    if dst == n:
                        acc = D.plus(acc, D.times(h.flow[src], v))
                assert acc == h.flow[n]


def test_criterion_5_algebra_law_suites():
    with budget("C5 algebra law suites", 60.0):
        builtins = [path_count_domain(), keyset_domain(), lower_bound_domain(),
                    upper_bound_domain(), last_edge_domain(["t", "u"])]
        for d in builtins:
            rep = law_check(d, domain_samples(d))
            assert rep.ok, (d.name, rep.violations[:3])
        for i, j in itertools.combinations_with_replacement(range(len(builtins)), 2):
            d = product_domain(builtins[i], builtins[j])
            s1 = domain_samples(builtins[i], small=True)[:3]
            s2 = domain_samples(builtins[j], small=True)[:3]
            rep = law_check(d, [(a, b) for a in s1 for b in s2])
            assert rep.ok, (d.name, rep.violations[:3])
        # separation-algebra laws on generated composable instances
        rng = random.Random(999)
        for count in range(200):
            h = rand_inflowed(rng, D, max_nodes=6)
            nodes = sorted(h.graph.nodes)
            p1 = frozenset(n for n in nodes if rng.random() < 0.34)
            p2 = frozenset(n for n in set(nodes) - p1 if rng.random() < 0.5)
            h12, h3 = fg_decompose(h, p1 | p2, D)
            h1, h2 = fg_decompose(h12, p1, D)
            ab, ba = fg_compose(h1, h2, D), fg_compose(h2, h1, D)
            assert ab and ba and fg_equiv(ab, ba)
            left = fg_compose(ab, h3, D)
            h23 = fg_compose(h2, h3, D)
            right = fg_compose(h1, h23, D) if h23 else None
            assert left and h23 and right and fg_equiv(left, right) and fg_equiv(left, h)
            from flowcheck.graphs import empty_inflowed
            assert fg_equiv(fg_compose(h1, empty_inflowed(), D), h1)
            # cancellation: another part with the same completion is equivalent
            alt = attach(D, h1.graph, rand_inflow(rng, D, h1.graph)) if rng.random() < 0.5 else h1
            other = fg_compose(alt, h2, D)
            if other and fg_equiv(other, h12):
                assert inflow_equiv(dict(alt.inflow), dict(h1.inflow), h1.graph, D)
        for count in range(200):  # state composition inherits the laws
            h = rand_inflowed(rng, D, max_nodes=5)
            heap = {n: {"v": count} for n in h.graph.nodes}
            s = State(heap, h, {n: n for n in h.graph.nodes})
            part = [n for n in sorted(h.graph.nodes) if rng.random() < 0.5]
            h1, h2 = fg_decompose(h, part, D)
            s1 = State({n: heap[n] for n in h1.graph.nodes}, h1, {n: n for n in h1.graph.nodes})
            s2 = State({n: heap[n] for n in h2.graph.nodes}, h2, {n: n for n in h2.graph.nodes})
            ab, ba = state_compose(s1, s2, D), state_compose(s2, s1, D)
            assert ab and ba and ab.heap == s.heap == ba.heap
            assert fg_equiv(ab.graph, h) and fg_equiv(ba.graph, h)
            if s1.heap:
                assert not state_compose(s1, s1, D)


def test_criterion_6_interface_theorem_suite():
    with budget("C6 interface theorem suite", 120.0):
        import test_interfaces as ti

        ti.test_witness_independence_of_composition()
        ti.test_good_congruence_of_composition()
        ti.test_replacement_theorem()
        ti.test_decomp_rule()
        ti.test_uniq_rule()
        ti.test_addin_and_addf_rules()
        ti.test_replin_and_replf_rules()
        ti.test_step_rule()
        ti.test_compose_commutative_associative_on_interfaces()
        # Comp at the state level: dirty regions with composable interfaces
        rng = random.Random(606)
        for count in range(100):
            h = rand_inflowed(rng, D, max_nodes=5)
            heap = {n: {"v": count} for n in h.graph.nodes}
            part = [n for n in sorted(h.graph.nodes) if rng.random() < 0.5]
            h1, h2 = fg_decompose(h, part, D)
            i1, i2 = interface_of(h1, D, A), interface_of(h2, D, A)
            i = int_compose(i1, i2, D, A)
            assert i
            s1 = State({n: heap[n] for n in h1.graph.nodes}, h1, {n: n for n in h1.graph.nodes})
            s2 = State({n: heap[n] for n in h2.graph.nodes}, h2, {n: n for n in h2.graph.nodes})
            both = state_compose(s1, s2, D)
            assert both and satisfies(both.graph, i, D, A)


def test_criterion_7_harris_exhaustive():
    with budget("C7 Harris exhaustive run", 300.0):
        wl = Workload("harris", threads=((("insert", None),), (("delete", None),)))
        s = explore(wl)
        assert s.ok, s.violation.as_json()
        assert s.schedules and s.schedules > 1
        mutant = Workload("harris", threads=((("insert", None),), (("delete", None),)),
                          fault="harris_skip_mark")
        sm = explore(mutant)
        assert not sm.ok, "the skip-marking mutant must fail on some schedule"
        replay = run(mutant, [list(x) for x in sm.violation.schedule])
        assert not replay.ok
        print("  harris: %d states, %d transitions, %s schedules; mutant fails with %s"
              % (s.states, s.transitions, s.schedules, sm.violation.code))


def test_criterion_8_dictionary_exhaustive():
    with budget("C8 dictionary exhaustive runs", 600.0):
        for structure, threads, params in (
            ("giveup_sortedlist",
             ((("insert", 1), ("delete", 3)), (("member", 2), ("insert", 3))), {}),
            ("giveup_bptree",
             ((("insert", 2), ("delete", 1)), (("member", 2), ("insert", 4))), {"B": 2}),
        ):
            s = explore(Workload(structure, threads, params))
            assert s.ok, (structure, s.violation.as_json())
            assert s.histories > 0
            for res in s.lin_results:
                assert res["linearizable"]
                assert res.get("agree", True), "linearization points must match the oracle"
            print("  %s: %d states, %s schedules, %d histories, all linearizable"
                  % (structure, s.states, s.schedules, s.histories))


def test_criterion_9_cli_round_trip_and_exit_codes(tmp_path):
    import contextlib
    import io

    with budget("C9 CLI round trips and exit codes", 5.0):
        for name in ("two-region.graph", "harris.snapshot", "btree.snapshot"):
            text = fixture_path(name).read_text()
            doc = files.loads(text)
            if name.endswith(".snapshot"):
                again = files.dumps(files.snapshot_from_json(doc).to_json())
            else:
                gf = files.graph_from_json(doc)
                again = files.dumps(files.GraphFile(gf.domain, gf.labels, gf.graph).to_json())
            assert again == text
        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
            assert main(["check", str(fixture_path("btree.snapshot")), "--condition", "dictionary"]) == 0
            assert main(["lin", str(fixture_path("double-insert.history"))]) == 1
            bad = tmp_path / "bad.graph"
            bad.write_text("{")
            assert main(["flow", str(bad)]) == 2
