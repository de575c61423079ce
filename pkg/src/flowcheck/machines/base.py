"""Shared infrastructure for the step machines: worlds, machine states,
transitions, and the ghost-command batch helpers.

A world is the shared state (heap, ghost flow graph, node map, globals,
allocation counter); a machine is one thread's control state. Both are
immutable values so the monitor can memoize on their digests. A transition
is one atomic step: at most one shared-state action plus the ghost commands
batched with it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, Optional, Tuple

from ..conditions import Structure
from ..domains import FlowDomain, LabelDomain
from ..graphs import InflowedGraph, NodeId, fg_decompose
from ..heap import GhostAbort, State, ghost_mark, ghost_sync, sync_interface
from ..interfaces import interface_of
from ..intervals import KeySet


@dataclass(frozen=True)
class World:
    heap: Dict[str, dict]
    graph: InflowedGraph
    nodemap: Dict[str, str]
    globals: Dict[str, Any]
    alloc_n: int = 0

    def state(self) -> State:
        return State(self.heap, self.graph, self.nodemap)

    def record(self, addr: str) -> Optional[dict]:
        return self.heap.get(addr)


def heap_write(w: World, addr: str, **fields) -> World:
    heap = dict(w.heap)
    rec = dict(heap[addr])
    rec.update(fields)
    heap[addr] = rec
    return replace(w, heap=heap)


def heap_alloc(w: World, record: dict) -> Tuple[World, str]:
    addr = "a%d" % w.alloc_n
    heap = dict(w.heap)
    heap[addr] = dict(record)
    return replace(w, heap=heap, alloc_n=w.alloc_n + 1), addr


def heap_free(w: World, addr: str) -> World:
    heap = dict(w.heap)
    del heap[addr]
    return replace(w, heap=heap)


def with_state(w: World, s: State) -> World:
    return replace(w, heap=dict(s.heap), graph=s.graph, nodemap=dict(s.nodemap))


def set_global(w: World, name: str, value) -> World:
    g = dict(w.globals)
    g[name] = value
    return replace(w, globals=g)


@dataclass(frozen=True)
class Machine:
    tid: int
    ops: Tuple[Tuple[str, Any], ...]
    op_idx: int = 0
    pc: str = "init"
    vars: Tuple[Tuple[str, Any], ...] = ()
    dirty: frozenset = frozenset()
    facts: Tuple[tuple, ...] = ()
    contents_syncs: int = 0
    done: bool = False

    def var(self, name, default=None):
        for k, v in self.vars:
            if k == name:
                return v
        return default

    def op(self) -> Tuple[str, Any]:
        return self.ops[self.op_idx]

    def opid(self) -> str:
        return "t%d.%d" % (self.tid, self.op_idx)


def with_vars(ms: Machine, **kw) -> Machine:
    d = dict(ms.vars)
    d.update(kw)
    return replace(ms, vars=tuple(sorted(d.items(), key=lambda p: p[0])))


def clear_vars(ms: Machine) -> Machine:
    return replace(ms, vars=())


@dataclass
class Transition:
    label: str
    world: World
    machine: Machine
    ghost: Tuple[dict, ...] = ()
    claims: Tuple[tuple, ...] = ()
    history: Tuple[tuple, ...] = ()
    error: Optional[tuple] = None
    decisive: bool = False
    exclusion: Optional[str] = None  # bounded-workload exclusions ("node full")


# ---------------------------------------------------------------------------
# ghost batches


def iface_summary(h: InflowedGraph, d: FlowDomain, a: LabelDomain) -> dict:
    i = interface_of(h, d, a)
    labels = tuple((n, a.encode(h.graph.labels[n])) for n in sorted(h.graph.nodes))
    contents = None
    joined = i.label
    if isinstance(joined, tuple) and len(joined) == 2 and isinstance(joined[0], KeySet):
        contents = tuple(map(tuple, joined[0].ivs))
    return {
        "nodes": tuple(sorted(h.graph.nodes)),
        "inflow": tuple(sorted((n, str(d.encode(v))) for n, v in i.inflow.items())),
        "labels": labels,
        "fmap": tuple(sorted((e, str(d.encode(v))) for e, v in i.flowmap.items())),
        "contents": contents,
    }


def run_sync(w: World, region: Iterable[NodeId], struct: Structure,
             d: FlowDomain, a: LabelDomain):
    """Derive the region's post-heap interface and sync to it.

    Returns (new world, ghost event) or a GhostAbort. The event records the
    region's interfaces before and after for conformance checking.
    """
    region = frozenset(region)
    s = w.state()
    before_h, _ = fg_decompose(s.graph, region, d)
    target = sync_interface(s, region, struct, d, a)
    if isinstance(target, GhostAbort):
        return target
    s2 = ghost_sync(s, region, target, struct, d, a)
    if isinstance(s2, GhostAbort):
        return s2
    after_h, _ = fg_decompose(s2.graph, region, d)
    event = {
        "kind": "sync",
        "region": tuple(sorted(region)),
        "before": iface_summary(before_h, d, a),
        "after": iface_summary(after_h, d, a),
    }
    return with_state(w, s2), event


def run_mark_fresh(w: World, addr: str, d: FlowDomain, a: LabelDomain):
    s = ghost_mark(w.state(), addr, addr, d, a)
    if isinstance(s, GhostAbort):
        return s
    return with_state(w, s), {"kind": "mark", "node": addr}


def contents_of_event(ev: dict, which: str):
    return ev[which]["contents"]


def sync_changed_contents(ev: dict) -> bool:
    return ev["kind"] == "sync" and contents_of_event(ev, "before") != contents_of_event(ev, "after")


# ---------------------------------------------------------------------------
# digests


def freeze(x):
    if isinstance(x, dict):
        return ("d",) + tuple(sorted((k, freeze(v)) for k, v in x.items()))
    if isinstance(x, (list, tuple)):
        return tuple(freeze(v) for v in x)
    if isinstance(x, (set, frozenset)):
        return ("s",) + tuple(sorted(map(freeze, x)))
    if isinstance(x, KeySet):
        return ("ks",) + tuple(x.ivs)
    return x


def world_digest(w: World) -> tuple:
    g = w.graph
    return (
        freeze(w.heap),
        tuple(sorted(g.graph.nodes)),
        tuple(sorted(g.graph.sinks)),
        freeze(dict(g.graph.labels)),
        freeze(dict(g.graph.edges)),
        freeze(dict(g.inflow)),
        freeze(w.nodemap),
        freeze(w.globals),
        w.alloc_n,
    )


def machine_digest(ms: Machine) -> tuple:
    return (
        ms.tid,
        ms.op_idx,
        ms.pc,
        freeze(dict(ms.vars)),
        tuple(sorted(ms.dirty)),
        freeze(ms.facts),
        ms.contents_syncs,
        ms.done,
    )
