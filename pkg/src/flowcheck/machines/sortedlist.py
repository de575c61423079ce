"""Sorted-list node model for the give-up template.

One key per node, ascending order, a head sentinel carrying -inf. The single
out-edge's edgeset is [successor key, inf); its lower bound is cached on the
node (gate) so heap-to-graph extraction stays local. A node's inset is
[own key, inf) while linked and empty after an unlink; the stored range
mirrors it. delete is logical (it empties the node's contents); emptied
spacer nodes can be reclaimed by an optional maintenance pass that locks the
predecessor and the spacer, splices it out, and zeroes its range - which is
what makes a stale traverser's range check fail and the give-up fire.
"""

from __future__ import annotations

from typing import Optional

from ..conditions import ExtractFailure, NodeModel
from ..intervals import INF, NEG_INF, KeySet
from .base import World, heap_write
from .giveup import GiveupModel

_ALLOWED_FIELDS = {"lock", "unsynced", "key", "present", "next", "gate", "range"}


def _range_ks(record) -> KeySet:
    rng = record.get("range")
    if not rng:
        return KeySet.empty()
    return KeySet.span(rng[0], rng[1])


class SortedListModel(NodeModel, GiveupModel):
    name = "sortedlist"

    # -- heap abstraction ---------------------------------------------------

    def extract_clean(self, n, record):
        try:
            contents = KeySet.points([record["key"]]) if record["present"] else KeySet.empty()
            nxt = record["next"]
        except (KeyError, TypeError, ValueError):
            return ExtractFailure(n, "malformed list record")
        if nxt is None:
            return contents, {}
        gate = record["gate"]
        if gate is None:
            return ExtractFailure(n, "successor without a gate key")
        return contents, {nxt: KeySet.at_least(gate)}

    def heap_ok(self, n, record, inset):
        if set(record) != _ALLOWED_FIELDS:
            return "unexpected record fields"
        if _range_ks(record) != inset:
            return "stored range differs from the inset"
        if record["present"] and record["key"] == NEG_INF:
            return "sentinel cannot hold a key"
        if record["next"] is not None and not record["gate"] > record["key"]:
            return "gate must lie beyond the node's key"
        return None

    # -- template hooks -----------------------------------------------------

    def in_range(self, record, k):
        return k in _range_ks(record)

    def find_next(self, record, k) -> Optional[str]:
        if record["next"] is not None and k >= record["gate"]:
            return record["next"]
        return None

    def decide(self, record, kind, k):
        own = record["key"] == k
        present = own and record["present"]
        if kind == "member":
            return present, ()
        if kind == "insert":
            if present:
                return False, ()
            if own:
                return True, (("refill",),)
            template = {
                "key": k,
                "present": True,
                "next": record["next"],
                "gate": record["gate"],
                "range": [k, INF],
            }
            return True, (("alloc", template), ("link", k))
        if kind == "delete":
            if not present:
                return False, ()
            return True, (("empty",),)
        raise ValueError("unknown op %r" % kind)

    def apply_step(self, w: World, c: str, step) -> World:
        if step[0] == "refill":
            return heap_write(w, c, present=True)
        if step[0] == "empty":
            return heap_write(w, c, present=False)
        if step[0] == "link":
            _, m, k = step
            w2 = heap_write(w, c, next=m, gate=k)
            return heap_write(w2, m, lock=0, unsynced=False)
        raise ValueError("unknown plan step %r" % (step,))

    def reclaimable(self, record) -> bool:
        return not record["present"] and record["key"] != NEG_INF

    def unlink(self, w: World, pred: str, node: str) -> World:
        spacer = w.heap[node]
        w2 = heap_write(w, pred, next=spacer["next"], gate=spacer["gate"])
        return heap_write(w2, node, range=None)


def _node(key, present, nxt, gate, rng):
    return {
        "lock": 0,
        "unsynced": False,
        "key": key,
        "present": present,
        "next": nxt,
        "gate": gate,
        "range": rng,
    }


def initial_world() -> World:
    """Head sentinel then keys 2 and 3."""
    from ..domains import keyset_domain
    from ..graphs import attach, make_graph

    heap = {
        "h": _node(NEG_INF, False, "n2", 2, [NEG_INF, INF]),
        "n2": _node(2, True, "n3", 3, [2, INF]),
        "n3": _node(3, True, None, None, [3, INF]),
    }
    d = keyset_domain()
    labels = {
        "h": (KeySet.empty(), frozenset(["0"])),
        "n2": (KeySet.points([2]), frozenset(["0"])),
        "n3": (KeySet.points([3]), frozenset(["0"])),
    }
    edges = {
        ("h", "n2"): KeySet.at_least(2),
        ("n2", "n3"): KeySet.at_least(3),
    }
    g = make_graph(d, list(heap), [], labels, edges)
    graph = attach(d, g, {"h": KeySet.full()})
    return World(heap, graph, {n: n for n in heap}, {"root": "h"})
