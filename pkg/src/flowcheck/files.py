"""Self-describing file formats: graphs, snapshots, runs, histories.

One format covers every flow domain: files carry their domain and label
domain descriptors, nodes with labels and sparse edge maps, the sink list,
and the inflow. Snapshots add heap records, the node map, and named globals.
Serialization is canonical: sorted keys, sparse zero omission, two-space
indent; parse -> serialize -> parse is the identity on canonical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from .domains import FlowDomain, LabelDomain, make_domain, make_label_domain
from .graphs import InflowedGraph, attach, make_graph
from .intervals import INF, NEG_INF
from .machines.base import World


class FileFormatError(ValueError):
    pass


@dataclass
class GraphFile:
    domain: FlowDomain
    labels: LabelDomain
    graph: InflowedGraph

    def to_json(self) -> dict:
        g = self.graph.graph
        nodes = []
        for n in sorted(g.nodes):
            edges = {
                dst: self.domain.encode(v)
                for (src, dst), v in g.edges.items()
                if src == n
            }
            nodes.append({
                "id": n,
                "label": self.labels.encode(g.labels[n]),
                "edges": {k: edges[k] for k in sorted(edges)},
            })
        return {
            "domain": self.domain.descriptor,
            "label_domain": self.labels.descriptor,
            "nodes": nodes,
            "sinks": sorted(g.sinks),
            "inflow": {n: self.domain.encode(v) for n, v in sorted(self.graph.inflow.items())},
        }


def _require(cond: bool, why: str):
    if not cond:
        raise FileFormatError(why)


def graph_from_json(doc: dict) -> GraphFile:
    _require(isinstance(doc, dict), "graph file must be an object")
    for key in ("domain", "label_domain", "nodes", "sinks", "inflow"):
        _require(key in doc, "missing field %r" % key)
    try:
        d = make_domain(doc["domain"])
        a = make_label_domain(doc["label_domain"])
    except ValueError as e:
        raise FileFormatError(str(e))
    _require(isinstance(doc["nodes"], list), "nodes must be a list")
    labels: Dict[str, Any] = {}
    edges: Dict[Tuple[str, str], Any] = {}
    ids = []
    for entry in doc["nodes"]:
        _require(isinstance(entry, dict) and "id" in entry, "bad node entry")
        n = entry["id"]
        _require(isinstance(n, str), "node ids must be strings")
        _require(n not in labels, "duplicate node %r" % n)
        ids.append(n)
        try:
            labels[n] = a.decode(entry.get("label"))
        except ValueError as e:
            raise FileFormatError("label of %s: %s" % (n, e))
        for dst, enc in entry.get("edges", {}).items():
            try:
                edges[(n, dst)] = d.decode(enc)
            except ValueError as e:
                raise FileFormatError("edge %s->%s: %s" % (n, dst, e))
    sinks = doc["sinks"]
    _require(isinstance(sinks, list) and all(isinstance(s, str) for s in sinks),
             "sinks must be a list of node ids")
    nodeset = set(ids)
    _require(not (nodeset & set(sinks)), "sinks overlap the nodes")
    for (src, dst) in edges:
        _require(dst in nodeset or dst in set(sinks),
                 "edge target %r is neither node nor sink" % dst)
    inflow = {}
    for n, enc in doc["inflow"].items():
        _require(n in nodeset, "inflow names unknown node %r" % n)
        try:
            inflow[n] = d.decode(enc)
        except ValueError as e:
            raise FileFormatError("inflow of %s: %s" % (n, e))
    try:
        g = make_graph(d, nodeset, sinks, labels, edges)
        h = attach(d, g, inflow)
    except ValueError as e:
        raise FileFormatError(str(e))
    return GraphFile(d, a, h)


# ---------------------------------------------------------------------------
# snapshots: graph + heap + node map + globals


_PTR_KEYS = {"to", "marked"}


def _encode_heap_value(v):
    if v == INF:
        return "inf"
    if v == NEG_INF:
        return "-inf"
    if isinstance(v, list):
        return [_encode_heap_value(x) for x in v]
    if isinstance(v, dict):
        return {k: _encode_heap_value(v[k]) for k in sorted(v)}
    return v


def _decode_heap_value(v):
    if v == "inf":
        return INF
    if v == "-inf":
        return NEG_INF
    if isinstance(v, list):
        return [_decode_heap_value(x) for x in v]
    if isinstance(v, dict):
        return {k: _decode_heap_value(x) for k, x in v.items()}
    return v


@dataclass
class SnapshotFile:
    structure: str
    params: dict
    domain: FlowDomain
    labels: LabelDomain
    world: World

    def to_json(self) -> dict:
        gf = GraphFile(self.domain, self.labels, self.world.graph)
        doc = gf.to_json()
        doc["structure"] = self.structure
        doc["params"] = _encode_heap_value(self.params)
        doc["heap"] = {
            addr: _encode_heap_value(rec) for addr, rec in sorted(self.world.heap.items())
        }
        doc["nodemap"] = {a: n for a, n in sorted(self.world.nodemap.items())}
        doc["globals"] = {k: v for k, v in sorted(self.world.globals.items())}
        return doc


def snapshot_from_json(doc: dict) -> SnapshotFile:
    gf = graph_from_json(doc)
    for key in ("structure", "heap", "nodemap"):
        _require(key in doc, "missing snapshot field %r" % key)
    heap = {}
    _require(isinstance(doc["heap"], dict), "heap must be an object")
    for addr, rec in doc["heap"].items():
        _require(isinstance(rec, dict), "heap record of %r must be an object" % addr)
        heap[addr] = _decode_heap_value(rec)
    nodemap = doc["nodemap"]
    _require(isinstance(nodemap, dict), "nodemap must be an object")
    for a_, n in nodemap.items():
        _require(a_ in heap, "nodemap names unmapped cell %r" % a_)
        _require(n in gf.graph.graph.nodes, "nodemap target %r is not a graph node" % n)
    _require(gf.graph.graph.nodes <= set(heap), "graph nodes must be heap cells")
    world = World(heap, gf.graph, dict(nodemap), dict(doc.get("globals", {})))
    return SnapshotFile(doc["structure"], _decode_heap_value(doc.get("params", {})),
                        gf.domain, gf.labels, world)


# ---------------------------------------------------------------------------
# run descriptors


@dataclass
class RunFile:
    structure: str
    params: dict
    threads: tuple
    mode: dict
    bounds: dict

    def to_json(self) -> dict:
        return {
            "structure": self.structure,
            "params": _encode_heap_value(self.params),
            "threads": [
                [{"op": op, **({"key": key} if key is not None else {})} for op, key in ops]
                for ops in self.threads
            ],
            "mode": dict(self.mode),
            "bounds": dict(self.bounds),
        }


_RUN_STRUCTURES = ("harris", "giveup_sortedlist", "giveup_bptree")
_DICT_OPS = ("member", "insert", "delete")
_HARRIS_OPS = ("insert", "delete")


def run_from_json(doc: dict) -> RunFile:
    _require(isinstance(doc, dict), "run file must be an object")
    structure = doc.get("structure")
    _require(structure in _RUN_STRUCTURES,
             "structure must be one of %s" % (_RUN_STRUCTURES,))
    raw_threads = doc.get("threads")
    _require(isinstance(raw_threads, list) and raw_threads, "threads must be a non-empty list")
    threads = []
    for entry in raw_threads:
        ops = entry if isinstance(entry, list) else [entry]
        parsed = []
        for op in ops:
            _require(isinstance(op, dict) and "op" in op, "bad op entry %r" % (op,))
            kind = op["op"]
            if structure == "harris":
                _require(kind in _HARRIS_OPS, "harris ops are insert/delete")
                _require("key" not in op, "harris ops take no key")
                parsed.append((kind, None))
            else:
                _require(kind in _DICT_OPS, "dictionary ops are member/insert/delete")
                _require(isinstance(op.get("key"), int), "dictionary ops need an integer key")
                parsed.append((kind, op["key"]))
        threads.append(tuple(parsed))
    mode = doc.get("mode", {"exhaustive": True})
    _require(isinstance(mode, dict) and ("exhaustive" in mode or "seed" in mode),
             "mode must give either exhaustive or seed")
    bounds = doc.get("bounds", {})
    params = _decode_heap_value(doc.get("params", {}))
    fault = params.get("fault")
    _require(fault in (None, "harris_skip_mark", "dict_skip_lock", "dict_skip_inrange"),
             "unknown fault switch %r" % (fault,))
    return RunFile(structure, params, tuple(threads), mode, bounds)


# ---------------------------------------------------------------------------
# histories


def history_from_json(doc: dict):
    from .monitor import HistOp

    _require(isinstance(doc, dict) and isinstance(doc.get("ops"), list),
             "history file needs an ops list")
    ops = []
    for i, entry in enumerate(doc["ops"]):
        _require(isinstance(entry, dict), "bad history entry")
        for key in ("op", "invoked"):
            _require(key in entry, "history entry missing %r" % key)
        _require(entry["op"] in _DICT_OPS, "unknown op %r" % entry.get("op"))
        ops.append(HistOp(
            opid=str(entry.get("id", "op%d" % i)),
            kind=entry["op"],
            key=entry.get("key"),
            invoked=entry["invoked"],
            responded=entry.get("responded"),
            lp=entry.get("lp"),
            result=entry.get("result"),
        ))
    initial = frozenset(doc.get("initial", []))
    return ops, initial


# ---------------------------------------------------------------------------
# canonical text


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FileFormatError("not valid JSON: %s" % e)
    _require(isinstance(doc, dict), "top level must be an object")
    return doc


def load_path(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
