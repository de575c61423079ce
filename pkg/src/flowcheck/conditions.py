"""Per-node invariants and global invariants for the built-in structures.

A structure bundles a flow domain, a label domain, a per-node predicate on
(node, flow value, label, out-edges), an optional heap layer (extraction of
label and edges from a heap record, plus record well-formedness), and a
global invariant on the whole region's interface (required inflow, empty
flow map, distinguished member nodes).

The per-node predicates return None on success or the name of the violated
clause, so reports can say which conjunct failed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from .domains import (
    FLAT_BOTTOM,
    FLAT_TOP,
    FlowDomain,
    LabelDomain,
    contents_labels,
    dictionary_labels,
    harris_labels,
    keyset_domain,
    last_edge_domain,
    lock_entry,
    lockset_labels,
    lower_bound_domain,
    make_domain,
    path_count_domain,
    product_domain,
    product_labels,
    trivial_labels,
    upper_bound_domain,
    INF,
    NEG_INF,
)
from .graphs import InflowedGraph, NodeId
from .intervals import KeySet
from .interfaces import ConditionReport, FlowInterface, condition_report


@dataclass(frozen=True)
class ExtractFailure:
    node: NodeId
    reason: str


@dataclass(frozen=True)
class GlobalInvariant:
    """Requirements on the whole structure's interface."""

    inflow: Tuple[Tuple[NodeId, Any], ...]   # required representative, sparse
    flowmap_empty: bool = True
    member_nodes: Tuple[NodeId, ...] = ()    # must be inside the region

    def required_inflow(self) -> Dict[NodeId, Any]:
        return dict(self.inflow)


def check_global(i: FlowInterface, inv: GlobalInvariant, d: FlowDomain) -> List[str]:
    failures = []
    if dict(i.inflow) != inv.required_inflow():
        failures.append("inflow != required roots")
    if inv.flowmap_empty and dict(i.flowmap):
        failures.append("flow map not empty (dangling out-edges)")
    for n in inv.member_nodes:
        if n not in i.nodes:
            failures.append("required node %s not in region" % n)
    return failures


@dataclass(frozen=True)
class Structure:
    """A checkable structure: domains plus local and global invariants."""

    name: str
    domain: FlowDomain
    labels: LabelDomain
    flow_ok: Callable[[NodeId, Any, Any, Dict[NodeId, Any]], Optional[str]]
    global_invariant: Optional[GlobalInvariant] = None
    # heap layer; None for graph-only conditions
    extract: Optional[Callable[[NodeId, dict, Optional[tuple]], Any]] = None
    heap_ok: Optional[Callable[[NodeId, dict, Any], Optional[str]]] = None
    params: dict = field(default_factory=dict)

    def report(self, h: InflowedGraph) -> ConditionReport:
        return condition_report(h, self.flow_ok, self.domain)


# ---------------------------------------------------------------------------
# path-counting shapes


def tree_structure(root: NodeId) -> Structure:
    d = path_count_domain()

    def flow_ok(n, fv, lab, out):
        if fv != 1:
            return "path count %s != 1" % d.encode(fv)
        return None

    return Structure(
        name="tree",
        domain=d,
        labels=trivial_labels(),
        flow_ok=flow_ok,
        global_invariant=GlobalInvariant(inflow=((root, 1),)),
        params={"root": root},
    )


def list_structure(root: NodeId, terminator: Optional[NodeId] = None) -> Structure:
    d = path_count_domain()

    def flow_ok(n, fv, lab, out):
        if fv != 1:
            return "path count %s != 1" % d.encode(fv)
        if terminator is not None:
            if n == terminator:
                if out:
                    return "terminator has an out-edge"
                return None
            if len(out) != 1:
                return "expected exactly one successor"
        elif len(out) > 1:
            return "more than one successor"
        if any(v != 1 for v in out.values()):
            return "successor edge label != 1"
        return None

    return Structure(
        name="list",
        domain=d,
        labels=trivial_labels(),
        flow_ok=flow_ok,
        global_invariant=GlobalInvariant(inflow=((root, 1),)),
        params={"root": root, "terminator": terminator},
    )


def cyclic_list_structure(root: NodeId) -> Structure:
    d = path_count_domain()

    def flow_ok(n, fv, lab, out):
        if fv != INF:
            return "path count on a cycle must be inf"
        if len(out) != 1 or any(v != 1 for v in out.values()):
            return "expected exactly one unit successor"
        return None

    return Structure(
        name="cyclic_list",
        domain=d,
        labels=trivial_labels(),
        flow_ok=flow_ok,
        global_invariant=GlobalInvariant(inflow=((root, 1),)),
        params={"root": root},
    )


def sorted_list_structure(root: NodeId) -> Structure:
    """Ascending list: the second flow component carries the running key maximum."""
    d = product_domain(path_count_domain(), lower_bound_domain())

    def flow_ok(n, fv, lab, out):
        pc, bound = fv
        if pc != 1:
            return "path count %s != 1" % (pc,)
        keys = lab.finite_keys() if not lab.is_empty() else []
        if len(keys) != 1:
            return "node must hold exactly one key"
        k = keys[0]
        if not bound <= k:
            return "key %s below the bound %s flowing in" % (k, bound)
        if len(out) > 1:
            return "more than one successor"
        for v in out.values():
            if v != (1, k):
                return "successor edge must carry the node's key"
        return None

    return Structure(
        name="sorted_list",
        domain=d,
        labels=contents_labels(),
        flow_ok=flow_ok,
        global_invariant=GlobalInvariant(inflow=((root, (1, NEG_INF)),)),
        params={"root": root},
    )


# ---------------------------------------------------------------------------
# Harris list (two overlapping lists with marked nodes and deferred free)


def harris_structure(mh: NodeId, fh: NodeId, ft: NodeId) -> Structure:
    d = product_domain(path_count_domain(), path_count_domain())
    a = harris_labels()

    def flow_ok(n, fv, lab, out):
        main, free = fv
        if lab == FLAT_TOP:
            return "label is top"
        if fv == (0, 0):
            return "unreachable from both heads"
        if main > 1 or free > 1:
            return "path counts exceed (1,1)"
        if free >= 1 and lab == FLAT_BOTTOM:
            return "free-list node is unmarked"
        if n == ft and free < 1:
            return "free-list tail is not in the free list"
        next_edges = [t for t, v in out.items() if v[0] >= 1]
        fnext_edges = [t for t, v in out.items() if v[1] >= 1]
        if free == 0 and fnext_edges:
            return "main-only node has an fnext edge"
        if len(next_edges) > 1 or len(fnext_edges) > 1:
            return "duplicate successor edges"
        if any(v not in ((1, 0), (0, 1), (1, 1)) for v in out.values()):
            return "edge label outside {(1,0),(0,1),(1,1)}"
        return None

    def extract(n, record, current):
        try:
            to, marked = record["next"]
            fto = record["fnext"]
            marker = record["marker"]
        except (KeyError, TypeError, ValueError):
            return ExtractFailure(n, "malformed harris record")
        if marked:
            if marker is None:
                return ExtractFailure(n, "marked node without a marker thread")
            label = marker
        else:
            label = FLAT_BOTTOM
        edges: Dict[NodeId, Any] = {}
        if to is not None:
            edges[to] = (1, 0)
        if fto is not None:
            edges[fto] = d.plus(edges.get(fto, d.zero), (0, 1))
        return label, edges

    return Structure(
        name="harris",
        domain=d,
        labels=a,
        flow_ok=flow_ok,
        global_invariant=GlobalInvariant(
            inflow=((mh, (1, 0)), (fh, (0, 1))),
            member_nodes=(ft,),
        ),
        extract=extract,
        params={"mh": mh, "fh": fh, "ft": ft},
    )


# ---------------------------------------------------------------------------
# dictionaries (edgeset encoding)


class NodeModel:
    """Heap layout of one dictionary node kind (B+ tree node, list node).

    extract_clean(node, record) -> (contents: KeySet, edges: {target: KeySet})
        or ExtractFailure, for an in-sync record.
    heap_ok(node, record, inset: KeySet) -> None | str
        structural well-formedness of the record, including that the stored
        range equals the inset.
    """

    name = "abstract"

    def extract_clean(self, n, record):
        raise NotImplementedError

    def heap_ok(self, n, record, inset):
        raise NotImplementedError


def _lockset_shape(lockset) -> Optional[str]:
    if len(lockset) != 1:
        return "lock label must be a singleton"
    return None


def dictionary_structure(model: Optional[NodeModel], root: NodeId) -> Structure:
    d = keyset_domain()
    a = dictionary_labels()

    def flow_ok(n, fv, lab, out):
        contents, lockset = lab
        shape = _lockset_shape(lockset)
        if shape:
            return shape
        if not contents.issubset(fv):
            return "contents outside the inset"
        targets = sorted(out)
        for t in targets:
            if not (contents & out[t]).is_empty():
                return "contents overlap the edgeset to %s" % t
        for i, t1 in enumerate(targets):
            for t2 in targets[i + 1:]:
                if not (out[t1] & out[t2]).is_empty():
                    return "edgesets to %s and %s overlap" % (t1, t2)
        return None

    def extract(n, record, current):
        lock = record.get("lock", 0)
        if lock != 0 and record.get("unsynced"):
            # out-of-sync node: the graph keeps its last good abstraction
            if current is None:
                return ExtractFailure(n, "out-of-sync node missing from the graph")
            (contents, _), edges = current
            return (contents, frozenset([lock_entry(lock, True)])), dict(edges)
        if model is None:
            return ExtractFailure(n, "no node model for heap extraction")
        got = model.extract_clean(n, record)
        if isinstance(got, ExtractFailure):
            return got
        contents, edges = got
        locks = frozenset([lock_entry(lock)]) if lock != 0 else frozenset(["0"])
        return (contents, locks), edges

    def heap_ok(n, record, inset):
        if model is None:
            return None
        return model.heap_ok(n, record, inset)

    return Structure(
        name="dictionary" if model is None else "dictionary(%s)" % model.name,
        domain=d,
        labels=a,
        flow_ok=flow_ok,
        global_invariant=GlobalInvariant(inflow=((root, KeySet.full()),)),
        extract=extract,
        heap_ok=heap_ok,
        params={"root": root},
    )


# ---------------------------------------------------------------------------
# edgeset / keyset analysis (good-state conditions)


@dataclass
class EdgesetReport:
    per_node: Dict[NodeId, dict] = field(default_factory=dict)
    violations: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _label_contents(label) -> KeySet:
    if isinstance(label, tuple) and len(label) == 2 and isinstance(label[0], KeySet):
        return label[0]
    if isinstance(label, KeySet):
        return label
    return KeySet.empty()


def edgeset_report(h: InflowedGraph) -> EdgesetReport:
    """Per-node inset / out-edgesets / keyset / contents, with violations of:
    disjoint keysets (GS1), contents within keyset (GS2), disjoint sibling
    edgesets (GS3)."""
    rep = EdgesetReport()
    for n in sorted(h.graph.nodes):
        inset = h.flow[n]
        if not isinstance(inset, KeySet):
            raise ValueError("edgeset analysis needs the keyset flow domain")
        out = {dst: v for (src, dst), v in h.graph.edges.items() if src == n}
        union = KeySet.empty()
        for v in out.values():
            union = union | v
        keyset = inset - union
        contents = _label_contents(h.graph.labels[n])
        rep.per_node[n] = {
            "inset": inset,
            "edgesets": out,
            "keyset": keyset,
            "contents": contents,
        }
        if not contents.issubset(keyset):
            rep.violations.append(("GS2", "contents of %s leave its keyset" % n))
        targets = sorted(out)
        for i, t1 in enumerate(targets):
            for t2 in targets[i + 1:]:
                if not (out[t1] & out[t2]).is_empty():
                    rep.violations.append(("GS3", "edges %s->%s and %s->%s share keys" % (n, t1, n, t2)))
    names = sorted(rep.per_node)
    for i, n1 in enumerate(names):
        for n2 in names[i + 1:]:
            inter = rep.per_node[n1]["keyset"] & rep.per_node[n2]["keyset"]
            if not inter.is_empty():
                rep.violations.append(("GS1", "keysets of %s and %s share %r" % (n1, n2, inter)))
    return rep


# ---------------------------------------------------------------------------
# combinator-level condition builders (shape variants without full fixtures)


def raw_label_domain() -> LabelDomain:
    """Raw comparable payloads with a None bottom; join keeps the defined one."""

    def join(a, b):
        if a is None:
            return b
        if b is None:
            return a
        return a if a == b else a

    return LabelDomain(
        name="raw",
        leq=lambda a, b: a is None or a == b,
        join=join,
        bottom=None,
        encode=lambda v: v,
        decode=lambda v: v,
        descriptor="raw",
    )


def doubly_linked_structure(head: NodeId, tail: NodeId, nodes) -> Structure:
    """Product of two path counts (from head and from tail) and a last-edge
    flow carrying the predecessor's identity, so back-pointers can be checked
    against the node each path actually came through."""
    tags = sorted(nodes)
    d = product_domain(
        product_domain(path_count_domain(), path_count_domain()),
        last_edge_domain(tags),
    )

    def flow_ok(n, fv, lab, out):
        (fwd, bwd), came_from = fv
        if fwd != 1 or bwd != 1:
            return "node must lie on both traversals"
        expected_prev = lab  # label holds the stored prev pointer (or None)
        if expected_prev is None:
            return None if n == head else "only the head may lack a prev"
        if came_from != frozenset([expected_prev]):
            return "prev pointer disagrees with the incoming edge"
        return None

    return Structure(
        name="doubly_linked",
        domain=d,
        labels=raw_label_domain(),
        flow_ok=flow_ok,
        global_invariant=None,
        params={"head": head, "tail": tail},
    )


def nested_structure(root: NodeId, kind_of: Callable[[NodeId], str]) -> Structure:
    """Tree-of-lists: a path count keeps the whole shape a tree while a
    last-edge flow over {tree, list} tags checks that each node is entered
    by an edge of its own kind and list nodes never point back into the tree."""
    d = product_domain(path_count_domain(), last_edge_domain(["tree", "list"]))

    def flow_ok(n, fv, lab, out):
        pc, tag = fv
        if pc != 1:
            return "not tree-shaped"
        kind = kind_of(n)
        if n != root and tag != frozenset([kind]):
            return "entered by an edge of the wrong kind"
        if kind == "list":
            for t, v in out.items():
                if v[1] == frozenset(["tree"]):
                    return "list node points to a tree node"
        return None

    return Structure(
        name="nested",
        domain=d,
        labels=raw_label_domain(),
        flow_ok=flow_ok,
        global_invariant=GlobalInvariant(inflow=((root, (1, frozenset(["__unit__"]))),)),
        params={"root": root},
    )


def bst_structure(root: NodeId) -> Structure:
    """Search-tree bounds via a (lower, upper) product: each node passes its
    key as the upper bound to the left child and the lower bound to the right.
    A reconstruction at combinator level only."""
    d = product_domain(lower_bound_domain(), upper_bound_domain())

    def flow_ok(n, fv, lab, out):
        lo, hi = fv
        keys = lab.finite_keys() if isinstance(lab, KeySet) and not lab.is_empty() else []
        if len(keys) != 1:
            return "node must hold exactly one key"
        k = keys[0]
        if not (lo <= k <= hi):
            return "key %s outside inherited bounds (%s, %s)" % (k, lo, hi)
        for t, (elo, ehi) in out.items():
            if not (elo == k or ehi == k):
                return "child edge must carry the node's key as a bound"
        return None

    return Structure(
        name="bst",
        domain=d,
        labels=contents_labels(),
        flow_ok=flow_ok,
        global_invariant=GlobalInvariant(inflow=((root, (NEG_INF, INF)),)),
        params={"root": root},
    )


# ---------------------------------------------------------------------------
# registry used by the CLI


def builtin_condition(kind: str, **params) -> Structure:
    if kind == "tree":
        return tree_structure(params["root"])
    if kind == "list":
        return list_structure(params["root"], params.get("terminator"))
    if kind == "cyclic_list":
        return cyclic_list_structure(params["root"])
    if kind == "sorted_list":
        return sorted_list_structure(params["root"])
    if kind == "harris":
        return harris_structure(params["mh"], params["fh"], params["ft"])
    if kind == "dictionary":
        model = params.get("model")
        return dictionary_structure(model, params["root"])
    raise ValueError("unknown condition kind: %r" % kind)
