"""Program states: a heap, a ghost flow graph abstracting it, and a node map.

The graph component is ghost state tracking the heap's last good abstraction.
Plain heap mutation leaves it untouched; the sync command re-abstracts a
region after checking that its new interface contextually extends the old
one, so the surrounding context composes unchanged. mark/unmark manage which
heap cells the graph describes.

All operations return fresh states; aborts come back as GhostAbort values
naming the failed check.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

from .conditions import ExtractFailure, Structure
from .domains import FlowDomain, LabelDomain
from .graphs import (
    InflowedGraph,
    NodeId,
    Undefined,
    attach,
    empty_inflowed,
    fg_compose,
    fg_decompose,
    make_graph,
)
from .interfaces import FlowInterface, contextual_extension, interface_of, satisfies

Addr = str
Heap = Dict[Addr, dict]


class GhostAbort:
    __slots__ = ("reason", "detail")

    def __init__(self, reason: str, detail: Any = None):
        self.reason = reason
        self.detail = detail

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        return "GhostAbort(%s%s)" % (self.reason, "" if self.detail is None else ": %r" % (self.detail,))


@dataclass(frozen=True)
class State:
    heap: Mapping[Addr, dict]
    graph: InflowedGraph
    nodemap: Mapping[Addr, NodeId]

    def __post_init__(self):
        if not self.graph.graph.nodes <= set(self.heap):
            raise ValueError("graph nodes must be heap cells")
        for addr, n in self.nodemap.items():
            if addr in self.graph.graph.nodes and addr != n:
                raise ValueError("a graph node must map to itself")
            if n not in self.graph.graph.nodes:
                raise ValueError("node map target %r is not a graph node" % (n,))

    def cells_of(self, n: NodeId) -> Dict[Addr, dict]:
        return {a: self.heap[a] for a, m in self.nodemap.items() if m == n}


def empty_state() -> State:
    return State({}, empty_inflowed(), {})


def state_compose(s1: State, s2: State, d: FlowDomain):
    """Componentwise: disjoint heaps, composed graphs, united node maps."""
    if set(s1.heap) & set(s2.heap):
        return Undefined("heap-overlap", sorted(set(s1.heap) & set(s2.heap)))
    h = fg_compose(s1.graph, s2.graph, d)
    if not h:
        return Undefined("graph-compose", h.reason)
    heap = dict(s1.heap)
    heap.update(s2.heap)
    nodemap = dict(s1.nodemap)
    nodemap.update(s2.nodemap)
    return State(heap, h, nodemap)


def abstract_region(s: State, region: Iterable[NodeId], struct: Structure,
                    inflow: Mapping[NodeId, Any]):
    """Build the region's flow graph from the heap via the structure's
    extraction, with the given inflow. Fails naming the offending node."""
    if struct.extract is None:
        return GhostAbort("no-extraction", struct.name)
    region = frozenset(region)
    if not region <= set(s.heap):
        return GhostAbort("region-outside-heap", sorted(region - set(s.heap)))
    labels: Dict[NodeId, Any] = {}
    edges: Dict[Tuple[NodeId, NodeId], Any] = {}
    sinks = set()
    d = struct.domain
    for n in sorted(region):
        current = None
        if n in s.graph.graph.nodes:
            current = (
                s.graph.graph.labels[n],
                {dst: v for (src, dst), v in s.graph.graph.edges.items() if src == n},
            )
        got = struct.extract(n, s.heap[n], current)
        if isinstance(got, ExtractFailure):
            return GhostAbort("extract", (got.node, got.reason))
        labels[n], out = got
        for dst, v in out.items():
            edges[(n, dst)] = v
            if dst not in region:
                sinks.add(dst)
    g = make_graph(d, region, sinks, labels, edges)
    return attach(d, g, {n: v for n, v in inflow.items() if n in region})


def ghost_sync(s: State, region: Iterable[NodeId], target: FlowInterface,
               struct: Structure, d: FlowDomain, a: LabelDomain):
    """Replace the region's ghost graph by a fresh abstraction of the heap.

    Aborts unless the region's current interface is contextually extended by
    the target, the heap abstracts to a graph satisfying the target, and the
    abstraction passes the structure's per-node condition.
    """
    region = frozenset(region)
    if not region <= s.graph.graph.nodes:
        return GhostAbort("region-outside-graph", sorted(region - s.graph.graph.nodes))
    if region != target.nodes:
        return GhostAbort("region-mismatch", (sorted(region), sorted(target.nodes)))
    h_region, h_rest = fg_decompose(s.graph, region, d)
    current = interface_of(h_region, d, a)
    if not contextual_extension(current, target, d):
        return GhostAbort("extension", sorted(region))
    fresh = abstract_region(s, region, struct, target.inflow)
    if isinstance(fresh, GhostAbort):
        return fresh
    if not satisfies(fresh, target, d, a):
        return GhostAbort("denotation", sorted(region))
    rep = struct.report(fresh)
    if not rep.ok:
        return GhostAbort("condition", rep.failures)
    glued = fg_compose(fresh, h_rest, d)
    if not glued:
        return GhostAbort("recompose", glued.reason)
    return State(s.heap, glued, s.nodemap)


def sync_interface(s: State, region: Iterable[NodeId], struct: Structure,
                   d: FlowDomain, a: LabelDomain):
    """The target interface a sync of this region would need: re-abstract the
    heap with the region's current projected inflow (new nodes get zero).
    This plays the role of the wishful assignment that snapshots the updated
    interface before syncing."""
    region = frozenset(region)
    if not region <= s.graph.graph.nodes:
        return GhostAbort("region-outside-graph", sorted(region - s.graph.graph.nodes))
    h_region, _ = fg_decompose(s.graph, region, d)
    fresh = abstract_region(s, region, struct, h_region.inflow)
    if isinstance(fresh, GhostAbort):
        return fresh
    return interface_of(fresh, d, a)


def ghost_mark(s: State, x: Addr, y: Addr, d: FlowDomain, a: LabelDomain):
    """Associate heap cell x with the graph node abstracting it. Marking a
    fresh cell with itself adjoins a zero-inflow, bottom-labeled, edgeless
    graph node."""
    if x not in s.heap:
        return GhostAbort("mark-unallocated", x)
    if x in s.nodemap or x in s.graph.graph.nodes:
        return GhostAbort("already-marked", x)
    if x == y:
        node = attach(d, make_graph(d, [x], [], {x: a.bottom}, {}), {})
        glued = fg_compose(s.graph, node, d)
        if not glued:
            return GhostAbort("mark-compose", glued.reason)
        nodemap = dict(s.nodemap)
        nodemap[x] = x
        return State(s.heap, glued, nodemap)
    if y not in s.graph.graph.nodes:
        return GhostAbort("mark-bad-target", y)
    nodemap = dict(s.nodemap)
    nodemap[x] = y
    return State(s.heap, s.graph, nodemap)


def ghost_unmark(s: State, x: Addr, d: FlowDomain):
    """Drop x's association. If x is itself a graph node it must have zero
    inflow and no other cells mapped to it; the node is removed."""
    if x not in s.nodemap:
        return GhostAbort("not-marked", x)
    if x not in s.graph.graph.nodes:
        nodemap = dict(s.nodemap)
        del nodemap[x]
        return State(s.heap, s.graph, nodemap)
    others = [addr for addr, n in s.nodemap.items() if n == x and addr != x]
    if others:
        return GhostAbort("still-referenced", others)
    h_x, h_rest = fg_decompose(s.graph, [x], d)
    if dict(h_x.inflow):
        return GhostAbort("nonzero-inflow", dict(h_x.inflow))
    nodemap = dict(s.nodemap)
    del nodemap[x]
    return State(s.heap, h_rest, nodemap)


# ---------------------------------------------------------------------------
# region predicates


def heap_graph_mismatch(s: State, struct: Structure,
                        skip: FrozenSet[NodeId] = frozenset()) -> Optional[str]:
    """First node whose heap record does not re-abstract to its graph node
    (label and out-edges), or whose record fails the structure's record
    checks. Nodes in skip (dirty regions) are exempt."""
    if struct.extract is None:
        return None
    g = s.graph.graph
    for n in sorted(g.nodes):
        if n in skip:
            continue
        current = (g.labels[n], {dst: v for (src, dst), v in g.edges.items() if src == n})
        got = struct.extract(n, s.heap[n], current)
        if isinstance(got, ExtractFailure):
            return "%s: %s" % (got.node, got.reason)
        label, edges = got
        if label != g.labels[n] or edges != current[1]:
            return "%s: heap out of sync with the graph" % n
        if struct.heap_ok is not None and not _is_dirty_label(label):
            why = struct.heap_ok(n, s.heap[n], s.graph.flow[n])
            if why is not None:
                return "%s: %s" % (n, why)
    return None


def _is_dirty_label(label) -> bool:
    return (
        isinstance(label, tuple)
        and len(label) == 2
        and isinstance(label[1], frozenset)
        and any(isinstance(e, str) and e.endswith("~") for e in label[1])
    )


def synced_region_ok(s: State, i: FlowInterface, struct: Structure,
                     d: FlowDomain, a: LabelDomain) -> bool:
    """The in-sync predicate: every cell is mapped, the graph satisfies the
    interface, the heap re-abstracts to the graph (nodes labeled out-of-sync
    only have their lock checked, the rest of their heap is unconstrained),
    and the per-node condition holds everywhere."""
    if set(s.heap) != set(s.nodemap):
        return False
    if not satisfies(s.graph, i, d, a):
        return False
    if heap_graph_mismatch(s, struct) is not None:
        return False
    return struct.report(s.graph).ok


def dirty_region_ok(s: State, i: FlowInterface, heap_pred: Callable[[Mapping[Addr, dict]], bool],
                    d: FlowDomain, a: LabelDomain) -> bool:
    """The out-of-sync predicate: the graph still satisfies the interface
    while the heap satisfies an arbitrary predicate."""
    if set(s.heap) != set(s.nodemap):
        return False
    if not satisfies(s.graph, i, d, a):
        return False
    return bool(heap_pred(s.heap))
