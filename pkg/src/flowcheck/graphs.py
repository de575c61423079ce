"""Partial labeled graphs, flows as least fixpoints, and their composition algebra.

A graph has internal nodes N, sink nodes N° (targets outside the region),
node labels, and a sparse edge function into the flow domain (absent = 0).
The capacity cap(n, n') sums, over all paths from n to n' through internal
nodes, the product of the edge values; it is computed exactly by the
algebraic path algorithm (a generalized all-pairs closure that uses the
domain's star on pivot self-capacities instead of an unbounded fixpoint
iteration). The flow routes a given inflow along capacities:

    flow(in, G)(n) = sum_n' in(n') * cap(n', n)

Composition of (inflow, graph) pairs glues disjoint graphs and solves for a
composite inflow whose projections match both sides; decomposition splits a
graph and projects the inflow onto each part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

from .domains import FlowDomain, LabelDomain

NodeId = str
Edge = Tuple[NodeId, NodeId]
Inflow = Dict[NodeId, Any]


class Undefined:
    """A falsy result carrying the reason a partial operation has no value."""

    __slots__ = ("reason", "detail")

    def __init__(self, reason: str, detail: Any = None):
        self.reason = reason
        self.detail = detail

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        if self.detail is None:
            return "Undefined(%s)" % self.reason
        return "Undefined(%s: %r)" % (self.reason, self.detail)


@dataclass(frozen=True)
class FlowGraph:
    nodes: FrozenSet[NodeId]
    sinks: FrozenSet[NodeId]
    labels: Mapping[NodeId, Any]
    edges: Mapping[Edge, Any]
    _cap_cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.nodes & self.sinks:
            raise ValueError("nodes and sinks overlap: %r" % sorted(self.nodes & self.sinks))
        for (src, dst) in self.edges:
            if src not in self.nodes:
                raise ValueError("edge source %r is not a node" % (src,))
            if dst not in self.nodes and dst not in self.sinks:
                raise ValueError("edge target %r is neither node nor sink" % (dst,))
        if set(self.labels) != set(self.nodes):
            raise ValueError("labels must cover exactly the nodes")

    def out_edges(self, n: NodeId) -> Dict[NodeId, Any]:
        return {dst: v for (src, dst), v in self.edges.items() if src == n}

    def is_empty(self) -> bool:
        return not self.nodes and not self.sinks


def make_graph(d: FlowDomain, nodes: Iterable[NodeId], sinks: Iterable[NodeId],
               labels: Mapping[NodeId, Any], edges: Mapping[Edge, Any]) -> FlowGraph:
    """Canonicalize and validate: zero-valued edges are dropped, labels defaulted."""
    nodeset = frozenset(nodes)
    sparse = {e: v for e, v in edges.items() if v != d.zero}
    lab = {n: labels[n] for n in nodeset}
    return FlowGraph(nodeset, frozenset(sinks), lab, sparse)


def empty_graph() -> FlowGraph:
    return FlowGraph(frozenset(), frozenset(), {}, {})


def graph_equal(g1: FlowGraph, g2: FlowGraph) -> bool:
    return (g1.nodes == g2.nodes and g1.sinks == g2.sinks
            and dict(g1.labels) == dict(g2.labels) and dict(g1.edges) == dict(g2.edges))


def disjoint_union(g1: FlowGraph, g2: FlowGraph):
    """Union of disjoint graphs; shared internal nodes make it undefined."""
    if g1.nodes & g2.nodes:
        return Undefined("node-overlap", sorted(g1.nodes & g2.nodes))
    nodes = g1.nodes | g2.nodes
    sinks = (g1.sinks - g2.nodes) | (g2.sinks - g1.nodes)
    labels = dict(g1.labels)
    labels.update(g2.labels)
    edges = dict(g1.edges)
    edges.update(g2.edges)
    return FlowGraph(nodes, sinks, labels, edges)


def split_graph(g: FlowGraph, part: Iterable[NodeId]) -> Tuple[FlowGraph, FlowGraph]:
    """Split g into (g1 on part, g2 on the rest) with g1 ⊎ g2 = g.

    Cross edges become sink edges of their source's side. Original sinks
    that neither side targets are kept on g2 so the union restores g exactly.
    """
    p1 = frozenset(part)
    if not p1 <= g.nodes:
        raise ValueError("split part %r is not a subset of the nodes" % sorted(set(part) - g.nodes))
    p2 = g.nodes - p1
    t1 = {dst for (src, dst), _ in g.edges.items() if src in p1 and dst not in p1}
    t2 = {dst for (src, dst), _ in g.edges.items() if src in p2 and dst not in p2}
    sinks1 = t1 | (g.sinks - t2)
    sinks2 = t2 | (g.sinks - sinks1)
    g1 = FlowGraph(p1, frozenset(sinks1),
                   {n: g.labels[n] for n in p1},
                   {e: v for e, v in g.edges.items() if e[0] in p1})
    g2 = FlowGraph(p2, frozenset(sinks2),
                   {n: g.labels[n] for n in p2},
                   {e: v for e, v in g.edges.items() if e[0] in p2})
    return g1, g2


# ---------------------------------------------------------------------------
# capacity and flow


def capacity(g: FlowGraph, d: FlowDomain) -> Dict[Edge, Any]:
    """Exact least fixpoint of cap(n,n') = [n = n'] + sum_m e(n,m)*cap(m,n').

    Algebraic path computation: successively close over each internal pivot k,
    taking star(cap[k,k]) for paths that revisit k. Entries equal to 0 are
    omitted; the diagonal carries the 1 from the empty path.
    """
    key = id(d)
    cached = g._cap_cache.get(key)
    if cached is not None:
        return cached
    nodes = sorted(g.nodes)
    cols = nodes + sorted(g.sinks)
    cap: Dict[Edge, Any] = {}
    for (src, dst), v in g.edges.items():
        cur = cap.get((src, dst))
        cap[(src, dst)] = v if cur is None else d.plus(cur, v)
    for k in nodes:
        skk = d.star(cap.get((k, k), d.zero))
        rowk = {j: cap[(k, j)] for j in cols if (k, j) in cap}
        for i in nodes:
            aik = cap.get((i, k))
            if aik is None:
                continue
            lead = d.times(aik, skk)
            if lead == d.zero:
                continue
            for j, akj in rowk.items():
                add = d.times(lead, akj)
                if add == d.zero:
                    continue
                cur = cap.get((i, j))
                cap[(i, j)] = add if cur is None else d.plus(cur, add)
    for n in nodes:
        cur = cap.get((n, n))
        cap[(n, n)] = d.one if cur is None else d.plus(d.one, cur)
    cap = {e: v for e, v in cap.items() if v != d.zero}
    g._cap_cache[key] = cap
    return cap


def flow_values(inflow: Inflow, g: FlowGraph, d: FlowDomain) -> Dict[NodeId, Any]:
    """flow(in, G): total on the nodes (zeros included)."""
    cap = capacity(g, d)
    out = {}
    for n in g.nodes:
        acc = d.zero
        for src, v in inflow.items():
            if v == d.zero:
                continue
            c = cap.get((src, n))
            if c is not None:
                acc = d.plus(acc, d.times(v, c))
        out[n] = acc
    return out


def project_inflow(inflow: Inflow, g: FlowGraph, part: Iterable[NodeId], d: FlowDomain) -> Inflow:
    """The inflow the nodes in part receive inside g: their own inflow plus
    the flow routed to them from the rest of g."""
    p = frozenset(part)
    if not p <= g.nodes:
        raise ValueError("projection target is not a subset of the nodes")
    fl = flow_values(inflow, g, d)
    out: Inflow = {}
    for n in p:
        acc = inflow.get(n, d.zero)
        for (src, dst), v in g.edges.items():
            if dst == n and src not in p:
                acc = d.plus(acc, d.times(fl[src], v))
        if acc != d.zero:
            out[n] = acc
    return out


def inflow_equiv(in1: Inflow, in2: Inflow, g: FlowGraph, d: FlowDomain) -> bool:
    """True iff both inflows induce the same flow at every node of g."""
    return flow_values(in1, g, d) == flow_values(in2, g, d)


# ---------------------------------------------------------------------------
# inflowed graphs and the composition algebra


@dataclass(frozen=True)
class InflowedGraph:
    graph: FlowGraph
    inflow: Mapping[NodeId, Any]
    flow: Mapping[NodeId, Any]

    @property
    def nodes(self) -> FrozenSet[NodeId]:
        return self.graph.nodes


def attach(d: FlowDomain, g: FlowGraph, inflow: Inflow) -> InflowedGraph:
    if not set(inflow) <= g.nodes:
        raise ValueError("inflow mentions %r outside the graph" % sorted(set(inflow) - g.nodes))
    sparse = {n: v for n, v in inflow.items() if v != d.zero}
    return InflowedGraph(g, sparse, flow_values(sparse, g, d))


def empty_inflowed() -> InflowedGraph:
    return InflowedGraph(empty_graph(), {}, {})


def fg_equiv(h1: InflowedGraph, h2: InflowedGraph) -> bool:
    """Same graph, equivalent inflow (equal induced flows)."""
    return graph_equal(h1.graph, h2.graph) and dict(h1.flow) == dict(h2.flow)


_RESOLVE_ROUNDS_SLACK = 4


def fg_compose(h1: InflowedGraph, h2: InflowedGraph, d: FlowDomain):
    """Compose two inflowed graphs, gluing the graphs and solving for a
    composite inflow whose projections agree with both components.

    The target flow is the union of the component flows. A candidate inflow
    is obtained by residuating each node's target against the flow its
    neighbours route to it; because the induced least fixpoint can undershoot
    on cycles, the context is re-derived from the candidate's own flow and
    residuated again for a bounded number of rounds. The result is accepted
    only after verification: the candidate must induce the target flow and
    project back onto inflows equivalent to the inputs.
    """
    if h1.graph.is_empty():
        return h2
    if h2.graph.is_empty():
        return h1
    g = disjoint_union(h1.graph, h2.graph)
    if not g:
        return g
    target = dict(h1.flow)
    target.update(h2.flow)
    nodes = sorted(g.nodes)
    in_edges: Dict[NodeId, list] = {n: [] for n in nodes}
    for (src, dst), v in g.edges.items():
        if dst in in_edges:
            in_edges[dst].append((src, v))

    def solve(ctx_flow):
        cand: Inflow = {}
        for n in nodes:
            ctx = d.sum(d.times(ctx_flow[src], v) for src, v in in_edges[n])
            r = d.residual(target[n], ctx)
            if r is None:
                return Undefined("residual", n)
            if r != d.zero:
                cand[n] = r
        return cand

    candidate = solve(target)
    if not isinstance(candidate, Undefined):
        induced = flow_values(candidate, g, d)
        rounds = 2 * len(nodes) + _RESOLVE_ROUNDS_SLACK
        while induced != target and rounds > 0:
            nxt = solve(induced)
            if isinstance(nxt, Undefined):
                candidate = nxt
                break
            if nxt == candidate:
                break
            candidate = nxt
            induced = flow_values(candidate, g, d)
            rounds -= 1
    if isinstance(candidate, Undefined):
        return candidate
    if flow_values(candidate, g, d) != target:
        return Undefined("verify", "no composite inflow induces the glued flows")
    for h in (h1, h2):
        proj = project_inflow(candidate, g, h.graph.nodes, d)
        if not inflow_equiv(proj, dict(h.inflow), h.graph, d):
            return Undefined("verify", "projection differs on %r" % sorted(h.graph.nodes))
    return InflowedGraph(g, candidate, target)


def fg_decompose(h: InflowedGraph, part: Iterable[NodeId], d: FlowDomain) -> Tuple[InflowedGraph, InflowedGraph]:
    """Split off part, projecting the inflow onto each side; composing the
    results is defined and equivalent to h."""
    g1, g2 = split_graph(h.graph, part)
    in1 = project_inflow(dict(h.inflow), h.graph, g1.nodes, d)
    in2 = project_inflow(dict(h.inflow), h.graph, g2.nodes, d)
    return attach(d, g1, in1), attach(d, g2, in2)
