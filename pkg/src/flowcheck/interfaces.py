"""Flow interfaces: composable abstractions of inflowed graphs.

An interface records what a region relies on (an inflow, kept as a canonical
representative of its equivalence class) and what it guarantees its context
(the flow map: capacity restricted to source/sink pairs), together with the
join of the region's node labels. Membership and contextual-extension checks
are made executable by retaining the originating graph as a witness; observable
results do not depend on the witness chosen (property-tested).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple

from .domains import FlowDomain, LabelDomain
from .graphs import (
    Edge,
    InflowedGraph,
    NodeId,
    Undefined,
    empty_inflowed,
    fg_compose,
    flow_values,
)


@dataclass(frozen=True)
class FlowInterface:
    inflow: Mapping[NodeId, Any]       # canonical class representative (sparse)
    sources: FrozenSet[NodeId]         # support of the representative
    label: Any                         # join of the witness's node labels
    flowmap: Mapping[Edge, Any]        # source x sink capacities (sparse)
    witness: InflowedGraph

    @property
    def nodes(self) -> FrozenSet[NodeId]:
        return self.witness.graph.nodes

    @property
    def sinks(self) -> FrozenSet[NodeId]:
        return self.witness.graph.sinks

    def row(self, n: NodeId) -> Dict[NodeId, Any]:
        return {dst: v for (src, dst), v in self.flowmap.items() if src == n}


def interface_of(h: InflowedGraph, d: FlowDomain, a: LabelDomain) -> FlowInterface:
    from .graphs import capacity

    sources = frozenset(n for n, v in h.inflow.items() if v != d.zero)
    cap = capacity(h.graph, d)
    fmap = {
        (src, dst): v
        for (src, dst), v in cap.items()
        if src in sources and dst in h.graph.sinks and v != d.zero
    }
    label = a.join_all(h.graph.labels[n] for n in sorted(h.graph.nodes))
    return FlowInterface(dict(h.inflow), sources, label, fmap, h)


def empty_interface(d: FlowDomain, a: LabelDomain) -> FlowInterface:
    return interface_of(empty_inflowed(), d, a)


def _in_class(inflow: Mapping[NodeId, Any], of: InflowedGraph, d: FlowDomain) -> bool:
    """Is inflow (zero-extended) a member of of's inflow equivalence class?"""
    if not set(k for k, v in inflow.items() if v != d.zero) <= of.graph.nodes:
        return False
    return flow_values({n: v for n, v in inflow.items() if n in of.graph.nodes},
                       of.graph, d) == dict(of.flow)


def satisfies(h: InflowedGraph, i: FlowInterface, d: FlowDomain, a: LabelDomain) -> bool:
    """Denotation membership: h abstracts to i.

    Components must agree (same nodes and sinks, equal label joins, equal
    flow maps) and the representatives must be cross-members: i's inflow
    induces h's flows on h's graph, and h's inflow lies in i's class as
    decided on i's witness.
    """
    if h.graph.nodes != i.nodes or h.graph.sinks != i.sinks:
        return False
    own = interface_of(h, d, a)
    if own.label != i.label or dict(own.flowmap) != dict(i.flowmap):
        return False
    return _in_class(i.inflow, h, d) and _in_class(h.inflow, i.witness, d)


def interface_equal(i1: FlowInterface, i2: FlowInterface, d: FlowDomain) -> bool:
    """Component equality plus representative cross-membership."""
    return (
        i1.nodes == i2.nodes
        and i1.sinks == i2.sinks
        and i1.label == i2.label
        and dict(i1.flowmap) == dict(i2.flowmap)
        and _in_class(i1.inflow, i2.witness, d)
        and _in_class(i2.inflow, i1.witness, d)
    )


def int_compose(i1: FlowInterface, i2: FlowInterface, d: FlowDomain, a: LabelDomain):
    """Lift graph composition to interfaces via the witnesses."""
    h = fg_compose(i1.witness, i2.witness, d)
    if not h:
        return h
    return interface_of(h, d, a)


def contextual_extension(i: FlowInterface, iext: FlowInterface, d: FlowDomain) -> bool:
    """i is contextually extended by iext: iext may add nodes and sources but
    keeps i's inflow (zero-lifted) in its class and preserves every existing
    source's flow-map row."""
    if not i.nodes <= iext.nodes:
        return False
    if not _in_class(i.inflow, iext.witness, d):
        return False
    for n in i.sources:
        if i.row(n) != iext.row(n):
            return False
    return True


# ---------------------------------------------------------------------------
# denotation with a per-node condition


@dataclass
class ConditionReport:
    failures: List[Tuple[NodeId, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __repr__(self):
        return "ConditionReport(ok)" if self.ok else "ConditionReport(%r)" % (self.failures,)


def condition_report(h: InflowedGraph, flow_ok, d: FlowDomain) -> ConditionReport:
    """Evaluate a per-node predicate on (node, flow value, label, out-edges).

    flow_ok returns None when the node passes, or the name of the failed
    clause. Out-edges are the node's nonzero edge function entries.
    """
    rep = ConditionReport()
    for n in sorted(h.graph.nodes):
        out = {dst: v for (src, dst), v in h.graph.edges.items() if src == n}
        why = flow_ok(n, h.flow[n], h.graph.labels[n], out)
        if why is not None:
            rep.failures.append((n, why))
    return rep
