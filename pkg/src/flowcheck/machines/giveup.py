"""The give-up dictionary template: lock a node, validate its range, follow
edgesets, restart from the root when stale.

The template is generic over a node model (B+ tree node or sorted-list
node) that supplies range/successor/decisive behavior on heap records. Each
helper call is one atomic step. Multi-write decisive ops stage their node
out of sync (lock label t~) first, mutate field by field, and finish with
the single contents-changing sync, which is the operation's linearization
point; read-only decisions linearize at their decisive read.

History events: ("inv", opid, kind, key), ("lp", opid), ("resp", opid, result).
"""

from __future__ import annotations

from dataclasses import replace
from typing import List, Optional

from ..conditions import Structure, dictionary_structure
from ..domains import keyset_domain, dictionary_labels
from ..heap import GhostAbort
from .base import (
    Machine,
    Transition,
    World,
    clear_vars,
    heap_alloc,
    heap_write,
    run_mark_fresh,
    run_sync,
    with_vars,
)

DOMAIN = keyset_domain()
LABELS = dictionary_labels()


class GiveupModel:
    """Node-model hooks the template needs beyond the Structure bundle."""

    name = "abstract"

    def in_range(self, record: dict, k: int) -> bool:
        raise NotImplementedError

    def find_next(self, record: dict, k: int) -> Optional[str]:
        raise NotImplementedError

    def decide(self, record: dict, kind: str, k: int):
        """Returns (result, plan) where plan is () for read-only decisions, a
        tuple of mutation step descriptors otherwise, or the string
        "node full" for bounded-workload exclusions."""
        raise NotImplementedError

    def apply_step(self, w: World, c: str, step) -> World:
        raise NotImplementedError

    def reclaimable(self, record: dict) -> bool:
        return False

    def unlink(self, w: World, pred: str, node: str) -> World:
        raise NotImplementedError


def structure_for(model, root: str) -> Structure:
    return dictionary_structure(model, root)


def new_machine(tid: int, ops) -> Machine:
    return Machine(tid=tid, ops=tuple(ops), pc="op-start")


def _mkfacts(ms: Machine, *facts) -> Machine:
    return replace(ms, facts=ms.facts + tuple(facts))


def _drop_facts(ms: Machine) -> Machine:
    return replace(ms, facts=())


def _finish_op(ms: Machine) -> Machine:
    nxt = _drop_facts(clear_vars(ms))
    if ms.op_idx + 1 < len(ms.ops):
        return replace(nxt, op_idx=ms.op_idx + 1, pc="op-start", contents_syncs=0)
    return replace(nxt, done=True, pc="done")


def transitions(w: World, ms: Machine, model: GiveupModel, struct: Structure,
                fault: Optional[str] = None, reclaim: bool = False) -> List[Transition]:
    if ms.done:
        return []
    root = w.globals["root"]
    kind, k = ms.op()
    pc = ms.pc
    t = ms.tid
    if pc == "op-start":
        ms2 = with_vars(replace(ms, pc="lock"), c=root)
        return transitions(w, ms2, model, struct, fault, reclaim)
    c = ms.var("c")

    def rec_of(addr):
        r = w.record(addr)
        if r is None:
            return None
        return r

    if pc == "lock":
        inv = ()
        if not ms.var("invoked"):
            inv = (("inv", ms.opid(), kind, k),)
        rec = rec_of(c)
        if rec is None:
            return [Transition("lock", w, ms, error=("memory-safety", c))]
        if fault == "dict_skip_lock":
            ms2 = with_vars(replace(ms, pc="inrange"), invoked=True)
            return [Transition("lock/skipped", w, ms2, history=inv)]
        if rec["lock"] != 0:
            return []  # blocked until the holder unlocks
        w2 = heap_write(w, c, lock=t)
        got = run_sync(w2, {c}, struct, DOMAIN, LABELS)
        if isinstance(got, GhostAbort):
            return [Transition("lock", w, ms, error=("ghost-abort", (got.reason, got.detail)))]
        w3, ev = got
        ms2 = with_vars(_mkfacts(replace(ms, pc="inrange"), ("locked", c, t)), invoked=True)
        return [Transition("lock", w3, ms2, ghost=(ev,), history=inv)]

    if pc == "inrange":
        rec = rec_of(c)
        if rec is None:
            return [Transition("inrange", w, ms, error=("memory-safety", c))]
        ok = model.in_range(rec, k)
        if fault == "dict_skip_inrange":
            ok = True
            return [Transition("inrange/skipped", w, replace(ms, pc="findnext"))]
        if ok:
            ms2 = _mkfacts(replace(ms, pc="findnext"), ("inset", c, k))
            return [Transition("inrange/ok", w, ms2, claims=(("inset", c, k),))]
        ms2 = replace(ms, pc="giveup-unlock")
        return [Transition("inrange/stale", w, ms2, claims=(("not-inset", c, k),))]

    if pc == "giveup-unlock":
        return _unlock(w, ms, model, struct, c, fault,
                       after=lambda m: with_vars(replace(m, pc="lock"), c=w.globals["root"]),
                       label="unlock/giveup")

    if pc == "findnext":
        rec = rec_of(c)
        if rec is None:
            return [Transition("findnext", w, ms, error=("memory-safety", c))]
        n = model.find_next(rec, k)
        if n is None:
            ms2 = replace(ms, pc="decide-scan")
            return [Transition("findnext/none", w, ms2, claims=(("noedge", c, k),))]
        outs = []
        if reclaim:
            ms2 = with_vars(replace(ms, pc="peek-next"), n=n)
            outs.append(Transition("findnext/peek", w, ms2, claims=(("edge", c, n, k),)))
        ms3 = with_vars(replace(ms, pc="move-unlock"), n=n)
        outs.append(Transition("findnext/step", w, ms3, claims=(("edge", c, n, k),)))
        return outs

    if pc == "peek-next":
        n = ms.var("n")
        rec = rec_of(n)
        if rec is None:
            return [Transition("peek-next", w, ms, error=("memory-safety", n))]
        if model.reclaimable(rec) and rec["lock"] == 0:
            return [Transition("peek-next/stale", w, replace(ms, pc="reclaim-lock"))]
        return [Transition("peek-next/live", w, replace(ms, pc="move-unlock"))]

    if pc == "reclaim-lock":
        n = ms.var("n")
        rec = rec_of(n)
        if rec is None:
            return [Transition("reclaim-lock", w, ms, error=("memory-safety", n))]
        if rec["lock"] != 0:
            return []
        w2 = heap_write(w, n, lock=t)
        got = run_sync(w2, {n}, struct, DOMAIN, LABELS)
        if isinstance(got, GhostAbort):
            return [Transition("reclaim-lock", w, ms, error=("ghost-abort", (got.reason, got.detail)))]
        w3, ev = got
        return [Transition("reclaim-lock", w3, replace(ms, pc="reclaim-unlink"), ghost=(ev,))]

    if pc == "reclaim-unlink":
        n = ms.var("n")
        rec = rec_of(n)
        if not model.reclaimable(rec):
            # raced with a re-insert; back out and traverse normally
            return _unlock(w, ms, model, struct, n, fault,
                           after=lambda m: replace(m, pc="move-unlock"),
                           label="reclaim-abort")
        w2 = model.unlink(w, c, n)
        got = run_sync(w2, {c, n}, struct, DOMAIN, LABELS)
        if isinstance(got, GhostAbort):
            return [Transition("reclaim-unlink", w, ms, error=("ghost-abort", (got.reason, got.detail)))]
        w3, ev = got
        return [Transition("reclaim-unlink", w3, replace(ms, pc="reclaim-unlock"), ghost=(ev,))]

    if pc == "reclaim-unlock":
        n = ms.var("n")
        return _unlock(w, ms, model, struct, n, fault,
                       after=lambda m: replace(m, pc="findnext"),
                       label="reclaim-unlock")

    if pc == "move-unlock":
        n = ms.var("n")
        return _unlock(w, ms, model, struct, c, fault,
                       after=lambda m: with_vars(replace(m, pc="lock"), c=n, n=None),
                       label="unlock/move")

    if pc == "decide-scan":
        rec = rec_of(c)
        if rec is None:
            return [Transition("decide-scan", w, ms, error=("memory-safety", c))]
        decided = model.decide(rec, kind, k)
        if decided == "node full":
            return [Transition("decide-scan", w, ms, exclusion="node full")]
        res, plan = decided
        claims = (("keyset", c, k), ("decisive-result", c, kind, k, res))
        if not plan:
            ms2 = with_vars(replace(ms, pc="final-unlock"), res=res)
            return [Transition("decide/read", w, ms2, claims=claims, decisive=True,
                               history=(("lp", ms.opid()),))]
        ms2 = with_vars(replace(ms, pc="mutate-start"), res=res, plan=tuple(plan), step=0)
        return [Transition("decide/plan", w, ms2, claims=claims)]

    if pc == "mutate-start":
        plan = ms.var("plan")
        writes = sum(1 for st in plan if st[0] not in ("alloc", "link"))
        if writes > 1:
            # stage the node out of sync before the field-by-field rewrite
            w2 = heap_write(w, c, unsynced=True)
            got = run_sync(w2, {c}, struct, DOMAIN, LABELS)
            if isinstance(got, GhostAbort):
                return [Transition("stage-dirty", w, ms, error=("ghost-abort", (got.reason, got.detail)))]
            w3, ev = got
            return [Transition("stage-dirty", w3, replace(ms, pc="mutate"), ghost=(ev,))]
        return transitions(w, replace(ms, pc="mutate"), model, struct, fault, reclaim)

    if pc == "mutate":
        plan, idx = ms.var("plan"), ms.var("step")
        step = plan[idx]
        last = idx + 1 == len(plan)
        if step[0] == "alloc":
            w2, m_addr = _alloc_node(w, model, step, t)
            got = run_mark_fresh(w2, m_addr, DOMAIN, LABELS)
            if isinstance(got, GhostAbort):
                return [Transition("alloc", w, ms, error=("ghost-abort", (got.reason, got.detail)))]
            w3, mev = got
            got2 = run_sync(w3, {m_addr}, struct, DOMAIN, LABELS)
            if isinstance(got2, GhostAbort):
                return [Transition("alloc", w, ms, error=("ghost-abort", (got2.reason, got2.detail)))]
            w4, sev = got2
            ms2 = with_vars(ms, step=idx + 1, m=m_addr)
            return [Transition("alloc", w4, ms2, ghost=(mev, sev))]
        w2 = model.apply_step(w, c, _subst(step, ms))
        if last:
            if w2.heap[c].get("unsynced"):
                w2 = heap_write(w2, c, unsynced=False)
            region = {c}
            if step[0] == "link":
                region = {c, ms.var("m")}
            got = run_sync(w2, region, struct, DOMAIN, LABELS)
            if isinstance(got, GhostAbort):
                return [Transition("commit", w, ms, error=("ghost-abort", (got.reason, got.detail)))]
            w3, ev = got
            ms2 = with_vars(replace(ms, pc="final-unlock", contents_syncs=ms.contents_syncs + 1),
                            plan=None, step=None)
            claims = (("keyset", c, k),)
            return [Transition("commit", w3, ms2, ghost=(ev,), claims=claims, decisive=True,
                               history=(("lp", ms.opid()),))]
        ms2 = with_vars(ms, step=idx + 1)
        return [Transition("mutate/%d" % idx, w2, ms2)]

    if pc == "final-unlock":
        res = ms.var("res")
        return _unlock(w, ms, model, struct, c, fault,
                       after=lambda m: _finish_op(m),
                       label="unlock/final",
                       history=(("resp", ms.opid(), res),))

    raise AssertionError("bad give-up pc %r" % pc)


def _subst(step, ms: Machine):
    if step[0] == "link":
        return ("link", ms.var("m")) + tuple(step[1:])
    return step


def _alloc_node(w: World, model, step, tid: int):
    record = dict(step[1])
    record["lock"] = tid
    record["unsynced"] = True
    return heap_alloc(w, record)


def _unlock(w: World, ms: Machine, model, struct, node, fault, after, label, history=()):
    rec = w.record(node)
    if rec is None:
        return [Transition(label, w, ms, error=("memory-safety", node))]
    if fault == "dict_skip_lock":
        ms2 = after(_drop_lock_facts(ms, node))
        return [Transition(label + "/skipped", w, ms2, history=history)]
    w2 = heap_write(w, node, lock=0)
    got = run_sync(w2, {node}, struct, DOMAIN, LABELS)
    if isinstance(got, GhostAbort):
        return [Transition(label, w, ms, error=("ghost-abort", (got.reason, got.detail)))]
    w3, ev = got
    ms2 = after(_drop_lock_facts(ms, node))
    return [Transition(label, w3, ms2, ghost=(ev,), history=history)]


def _drop_lock_facts(ms: Machine, node) -> Machine:
    keep = tuple(f for f in ms.facts if not (f[0] in ("locked", "inset") and f[1] == node))
    return replace(ms, facts=keep)
