"""B+ tree node model for the give-up template.

Nodes hold a lock, a key count, the stored range (an under-approximation of
the inset that the range check validates against), 2B key slots and 2B child
slots. Internal nodes route an operation on k to the child whose key window
contains k; leaves own their range minus nothing and store the contents.
Splits are out of scope: inserting into a full leaf is reported as a
bounded-workload exclusion rather than a violation.
"""

from __future__ import annotations

import math
from typing import Optional

from ..conditions import ExtractFailure, NodeModel
from ..intervals import INF, NEG_INF, KeySet
from .base import World, heap_write
from .giveup import GiveupModel

_ALLOWED_FIELDS = {"lock", "unsynced", "len", "range", "keys", "ptrs"}


class BPTreeModel(NodeModel, GiveupModel):
    name = "bptree"

    def __init__(self, branching: int = 2):
        if branching < 2:
            raise ValueError("branching parameter must be at least 2")
        self.B = branching

    # -- heap abstraction ---------------------------------------------------

    def extract_clean(self, n, record):
        try:
            l = record["len"]
            keys = record["keys"]
            ptrs = record["ptrs"]
        except (KeyError, TypeError):
            return ExtractFailure(n, "malformed b+ tree record")
        if not (0 <= l < 2 * self.B) or len(keys) != 2 * self.B or len(ptrs) != 2 * self.B:
            return ExtractFailure(n, "bad key/pointer arrays")
        if ptrs[0] is None:
            return KeySet.points(keys[:l]), {}
        edges = {}
        for i in range(l + 1):
            if ptrs[i] is None:
                return ExtractFailure(n, "internal node missing child %d" % i)
            lo = NEG_INF if i == 0 else keys[i - 1]
            hi = INF if i == l else keys[i]
            edges[ptrs[i]] = KeySet.span(lo, hi)
        return KeySet.empty(), edges

    def heap_ok(self, n, record, inset):
        if set(record) != _ALLOWED_FIELDS:
            return "unexpected record fields"
        l = record["len"]
        keys, ptrs = record["keys"], record["ptrs"]
        if not (0 <= l < 2 * self.B):
            return "key count out of bounds"
        for i in range(2 * self.B):
            if i < l:
                if keys[i] is None or (i > 0 and keys[i - 1] >= keys[i]):
                    return "keys not strictly sorted"
            elif keys[i] is not None:
                return "stale key slot %d" % i
        children = sum(1 for p in ptrs if p is not None)
        if children and children != l + 1:
            return "internal node must have len+1 children"
        for i, p in enumerate(ptrs):
            if (p is None) != (i >= children):
                return "children must fill the leading slots"
        r0, r1 = record["range"]
        if KeySet.span(r0, r1) != inset:
            return "stored range differs from the inset"
        if l > 0 and not (r0 <= keys[0] and keys[l - 1] < r1):
            return "keys outside the stored range"
        return None

    # -- template hooks -----------------------------------------------------

    def in_range(self, record, k):
        r0, r1 = record["range"]
        return r0 <= k < r1

    def find_next(self, record, k) -> Optional[str]:
        if record["ptrs"][0] is None:
            return None
        i = 0
        while i < record["len"] and k >= record["keys"][i]:
            i += 1
        return record["ptrs"][i]

    def decide(self, record, kind, k):
        assert record["ptrs"][0] is None, "decisive op reached an internal node"
        l = record["len"]
        keys = record["keys"][:l]
        present = k in keys
        if kind == "member":
            return present, ()
        if kind == "insert":
            if present:
                return False, ()
            if l == 2 * self.B - 1:
                return "node full"
            pos = sum(1 for x in keys if x < k)
            plan = tuple(("setk", j, keys[j - 1]) for j in range(l, pos, -1))
            return True, plan + (("fin_insert", pos, k, l + 1),)
        if kind == "delete":
            if not present:
                return False, ()
            pos = keys.index(k)
            plan = tuple(("setk", j, keys[j + 1]) for j in range(pos, l - 1))
            return True, plan + (("fin_delete", l - 1),)
        raise ValueError("unknown op %r" % kind)

    def apply_step(self, w: World, c: str, step) -> World:
        rec = w.heap[c]
        keys = list(rec["keys"])
        if step[0] == "setk":
            _, j, v = step
            keys[j] = v
            return heap_write(w, c, keys=keys)
        if step[0] == "fin_insert":
            _, pos, k, newlen = step
            keys[pos] = k
            return heap_write(w, c, keys=keys, len=newlen)
        if step[0] == "fin_delete":
            (_, newlen) = step
            keys[newlen] = None
            return heap_write(w, c, keys=keys, len=newlen)
        raise ValueError("unknown plan step %r" % (step,))


def _node(lock=0, length=0, rng=(NEG_INF, INF), keys=(), ptrs=(), B=2):
    ks = list(keys) + [None] * (2 * B - len(keys))
    ps = list(ptrs) + [None] * (2 * B - len(ptrs))
    return {
        "lock": lock,
        "unsynced": False,
        "len": length,
        "range": [rng[0], rng[1]],
        "keys": ks,
        "ptrs": ps,
    }


def initial_world(B: int = 2) -> World:
    """Root over two leaves: keys {1} on the left of 3, {3} on the right."""
    from ..domains import keyset_domain
    from ..graphs import attach, make_graph

    heap = {
        "r": _node(length=1, keys=[3], ptrs=["L", "R"], B=B),
        "L": _node(length=1, keys=[1], rng=(NEG_INF, 3), B=B),
        "R": _node(length=1, keys=[3], rng=(3, INF), B=B),
    }
    d = keyset_domain()
    labels = {
        "r": (KeySet.empty(), frozenset(["0"])),
        "L": (KeySet.points([1]), frozenset(["0"])),
        "R": (KeySet.points([3]), frozenset(["0"])),
    }
    edges = {
        ("r", "L"): KeySet.span(NEG_INF, 3),
        ("r", "R"): KeySet.span(3, INF),
    }
    g = make_graph(d, list(heap), [], labels, edges)
    graph = attach(d, g, {"r": KeySet.full()})
    return World(heap, graph, {n: n for n in heap}, {"root": "r"})
