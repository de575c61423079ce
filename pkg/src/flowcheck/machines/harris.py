"""Harris-list step machines: non-blocking list with marked pointers and a
free list for deferred reclamation.

The structure is keyless: insert picks a position non-deterministically,
delete picks a victim the same way. Each CAS is one atomic step and carries
the ghost sync of the region it rewrote. The graph tracks two path-counting
flows (from the main head and from the free head); marked nodes are labeled
with the marking thread's id.

Heap record: {"next": [addr | None, marked], "fnext": addr | None,
              "marker": tid | None}.
"""

from __future__ import annotations

from dataclasses import replace
from typing import List, Optional

from ..conditions import Structure, harris_structure
from ..domains import harris_labels, path_count_domain, product_domain
from ..graphs import attach, make_graph
from ..heap import GhostAbort, ghost_unmark
from .base import (
    Machine,
    Transition,
    World,
    clear_vars,
    heap_alloc,
    heap_free,
    heap_write,
    run_mark_fresh,
    run_sync,
    set_global,
    with_state,
    with_vars,
)

DOMAIN = product_domain(path_count_domain(), path_count_domain())
LABELS = harris_labels()


def structure_for(w: World) -> Structure:
    return harris_structure(w.globals["mh"], w.globals["fh"], w.globals["ft"])


def initial_world() -> World:
    heap = {
        "h": {"next": ["m1", False], "fnext": None, "marker": None},
        "m1": {"next": ["m2", False], "fnext": None, "marker": None},
        "m2": {"next": [None, False], "fnext": None, "marker": None},
        "f1": {"next": ["m1", True], "fnext": "f2", "marker": 0},
        "f2": {"next": ["m2", True], "fnext": None, "marker": 0},
    }
    nodes = list(heap)
    labels = {
        "h": LABELS.bottom, "m1": LABELS.bottom, "m2": LABELS.bottom,
        "f1": 0, "f2": 0,
    }
    edges = {
        ("h", "m1"): (1, 0),
        ("m1", "m2"): (1, 0),
        ("f1", "m1"): (1, 0),
        ("f1", "f2"): (0, 1),
        ("f2", "m2"): (1, 0),
    }
    g = make_graph(DOMAIN, nodes, [], labels, edges)
    graph = attach(DOMAIN, g, {"h": (1, 0), "f1": (0, 1)})
    nodemap = {n: n for n in nodes}
    return World(heap, graph, nodemap, {"mh": "h", "fh": "f1", "ft": "f2"})


def new_machine(tid: int, ops) -> Machine:
    return Machine(tid=tid, ops=tuple(ops), pc="read-head")


def _read_next(w: World, addr: str):
    rec = w.record(addr)
    if rec is None:
        return None
    to, marked = rec["next"]
    return to, marked


def _abort(ms: Machine, label: str, w: World, why: GhostAbort) -> Transition:
    return Transition(label, w, ms, error=("ghost-abort", (why.reason, why.detail)))


def _fact_zero_inflow(ms: Machine, n: str) -> tuple:
    return ("zero-inflow", n)


def _fact_marked_by(ms: Machine, n: str) -> tuple:
    return ("marked-by", n, ms.tid)


def transitions(w: World, ms: Machine, fault: Optional[str] = None) -> List[Transition]:
    if ms.done:
        return []
    kind = ms.op()[0]
    if kind == "insert":
        return _insert_steps(w, ms, fault)
    if kind == "delete":
        return _delete_steps(w, ms, fault)
    raise ValueError("harris op must be insert or delete: %r" % kind)


def _finish(ms: Machine, result) -> Machine:
    nxt = clear_vars(ms)
    if ms.op_idx + 1 < len(ms.ops):
        return replace(nxt, op_idx=ms.op_idx + 1, pc="read-head", facts=(), contents_syncs=0)
    return replace(nxt, done=True, pc="done", facts=())


def _insert_steps(w: World, ms: Machine, fault) -> List[Transition]:
    pc = ms.pc
    out: List[Transition] = []
    if pc == "read-head":
        l = w.globals["mh"]
        got = _read_next(w, l)
        if got is None:
            return [Transition("read-head", w, ms, error=("memory-safety", l))]
        to, marked = got
        return [Transition("read-head", w, with_vars(replace(ms, pc="traverse"),
                                                     l=l, r=to, lmarked=marked))]
    if pc == "traverse":
        l, r, lmarked = ms.var("l"), ms.var("r"), ms.var("lmarked")
        if r is not None:
            got = _read_next(w, r)
            if got is None:
                out.append(Transition("advance", w, ms, error=("memory-safety", r)))
            else:
                to, marked = got
                out.append(Transition("advance", w,
                                      with_vars(ms, l=r, r=to, lmarked=marked)))
        if lmarked:
            out.append(Transition("stop/position-marked", w, _finish(ms, None)))
        else:
            out.append(Transition("stop", w, replace(ms, pc="alloc")))
        return out
    if pc == "alloc":
        r = ms.var("r")
        w2, n = heap_alloc(w, {"next": [r, False], "fnext": None, "marker": None})
        got = run_mark_fresh(w2, n, DOMAIN, LABELS)
        if isinstance(got, GhostAbort):
            return [_abort(ms, "alloc", w, got)]
        w3, ev = got
        ms2 = with_vars(replace(ms, pc="cas", dirty=ms.dirty | {n},
                                facts=ms.facts + (_fact_zero_inflow(ms, n),)), n=n)
        return [Transition("alloc", w3, ms2, ghost=(ev,))]
    if pc == "cas":
        l, r, n = ms.var("l"), ms.var("r"), ms.var("n")
        rec = w.record(l)
        if rec is None:
            return [Transition("cas", w, ms, error=("memory-safety", l))]
        if rec["next"] == [r, False]:
            w2 = heap_write(w, l, next=[n, False])
            got = run_sync(w2, {l, n}, structure_for(w2), DOMAIN, LABELS)
            if isinstance(got, GhostAbort):
                return [_abort(ms, "cas/sync", w, got)]
            w3, ev = got
            ms2 = replace(ms, dirty=ms.dirty - {n},
                          facts=tuple(f for f in ms.facts if f[:2] != ("zero-inflow", n)))
            return [Transition("cas/success", w3, _finish(ms2, True), ghost=(ev,))]
        return [Transition("cas/fail", w, replace(ms, pc="reclaim"))]
    if pc == "reclaim":
        n = ms.var("n")
        s = ghost_unmark(w.state(), n, DOMAIN)
        if isinstance(s, GhostAbort):
            return [_abort(ms, "reclaim", w, s)]
        w2 = heap_free(with_state(w, s), n)
        ms2 = replace(clear_vars(ms), pc="read-head", dirty=ms.dirty - {n},
                      facts=tuple(f for f in ms.facts if f[:2] != ("zero-inflow", n)))
        return [Transition("reclaim", w2, ms2, ghost=({"kind": "unmark", "node": n},))]
    raise AssertionError("bad insert pc %r" % pc)


def _delete_steps(w: World, ms: Machine, fault) -> List[Transition]:
    pc = ms.pc
    out: List[Transition] = []
    if pc == "read-head":
        l = w.globals["mh"]
        got = _read_next(w, l)
        if got is None:
            return [Transition("read-head", w, ms, error=("memory-safety", l))]
        to, marked = got
        return [Transition("read-head", w, with_vars(replace(ms, pc="traverse"), l=l, r=to))]
    if pc == "traverse":
        l, r = ms.var("l"), ms.var("r")
        if r is not None:
            got = _read_next(w, r)
            if got is None:
                out.append(Transition("advance", w, ms, error=("memory-safety", r)))
            else:
                to, marked = got
                out.append(Transition("advance", w, with_vars(ms, l=r, r=to)))
            out.append(Transition("stop", w, replace(ms, pc="read-x")))
        else:
            out.append(Transition("stop/empty", w, _finish(ms, None)))
        return out
    if pc == "read-x":
        r = ms.var("r")
        got = _read_next(w, r)
        if got is None:
            return [Transition("read-x", w, ms, error=("memory-safety", r))]
        x, xmarked = got
        if xmarked:
            return [Transition("read-x/already-marked", w,
                               replace(clear_vars(ms), pc="read-head"))]
        nxt = "append" if fault == "harris_skip_mark" else "mark-cas"
        return [Transition("read-x", w, with_vars(replace(ms, pc=nxt), x=x))]
    if pc == "mark-cas":
        r, x = ms.var("r"), ms.var("x")
        rec = w.record(r)
        if rec is None:
            return [Transition("mark-cas", w, ms, error=("memory-safety", r))]
        if rec["next"] == [x, False]:
            w2 = heap_write(w, r, next=[x, True], marker=ms.tid)
            got = run_sync(w2, {r}, structure_for(w2), DOMAIN, LABELS)
            if isinstance(got, GhostAbort):
                return [_abort(ms, "mark-cas/sync", w, got)]
            w3, ev = got
            ms2 = replace(ms, pc="append", facts=ms.facts + (_fact_marked_by(ms, r),))
            return [Transition("mark-cas/success", w3, ms2, ghost=(ev,))]
        return [Transition("mark-cas/fail", w, replace(clear_vars(ms), pc="read-head"))]
    if pc == "append":
        # CAS(ft.fnext, null, r); modeled as blocking while fnext is occupied
        r = ms.var("r")
        ft = w.globals["ft"]
        rec = w.record(ft)
        if rec is None:
            return [Transition("append", w, ms, error=("memory-safety", ft))]
        if rec["fnext"] is not None:
            return []  # retried once the current tail's appender advances ft
        w2 = heap_write(w, ft, fnext=r)
        got = run_sync(w2, {ft, r}, structure_for(w2), DOMAIN, LABELS)
        if isinstance(got, GhostAbort):
            return [_abort(ms, "append/sync", w, got)]
        w3, ev = got
        return [Transition("append/success", w3, replace(ms, pc="advance-ft"), ghost=(ev,))]
    if pc == "advance-ft":
        r = ms.var("r")
        return [Transition("advance-ft", set_global(w, "ft", r), replace(ms, pc="unlink"))]
    if pc == "unlink":
        l, r, x = ms.var("l"), ms.var("r"), ms.var("x")
        rec = w.record(l)
        if rec is None:
            return [Transition("unlink", w, ms, error=("memory-safety", l))]
        if rec["next"] == [r, False]:
            w2 = heap_write(w, l, next=[x, False])
            got = run_sync(w2, {l, r}, structure_for(w2), DOMAIN, LABELS)
            if isinstance(got, GhostAbort):
                return [_abort(ms, "unlink/sync", w, got)]
            w3, ev = got
            return [Transition("unlink/success", w3, _finish(ms, True), ghost=(ev,))]
        return [Transition("unlink/fail", w, _finish(ms, False))]
    raise AssertionError("bad delete pc %r" % pc)
