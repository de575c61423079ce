"""Bounded exploration of thread interleavings with per-step invariant checks.

The step semantics is deterministic given (shared world, machine state), so
the set of behaviors is a graph over (world, machines, history) states; the
monitor explores it exhaustively with memoized states, which covers every
interleaving's every step while checking each distinct shared state once.
Schedule counts are recovered by path counting. run() replays one explicit
schedule and yields a trace; explore() walks everything within bounds.

Per-step checks: the structure's global invariant and per-node condition,
heap/graph sync, leak coverage, helper-contract claims, cross-thread
stability of previously established facts, rely/guarantee action
conformance (dictionaries), the contents-change discipline, and - on
complete histories - linearization-point order against the sequential
specification, cross-checked with a brute-force linearization search.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from .conditions import Structure, check_global, edgeset_report
from .domains import FlowDomain, LabelDomain
from .graphs import NodeId
from .heap import heap_graph_mismatch
from .interfaces import interface_of
from .intervals import KeySet
from .machines import base, bptree, giveup, harris, sortedlist
from .machines.base import Machine, Transition, World, freeze, machine_digest, world_digest
from .machines.seqspec import sequential_spec


@dataclass(frozen=True)
class Workload:
    structure: str                      # harris | giveup_sortedlist | giveup_bptree
    threads: Tuple[Tuple[Tuple[str, Any], ...], ...]
    params: dict = field(default_factory=dict)
    fault: Optional[str] = None

    def thread_count(self) -> int:
        return len(self.threads)


class Model:
    """Binds a workload to its step functions and checkable structure."""

    def __init__(self, workload: Workload):
        self.workload = workload
        kind = workload.structure
        if kind == "harris":
            self.family = "harris"
            self.domain = harris.DOMAIN
            self.labels = harris.LABELS
            self._world0 = harris.initial_world()
            self.giveup_model = None
        elif kind in ("giveup_sortedlist", "giveup_bptree"):
            self.family = "dict"
            self.domain = giveup.DOMAIN
            self.labels = giveup.LABELS
            if kind == "giveup_bptree":
                self.giveup_model = bptree.BPTreeModel(workload.params.get("B", 2))
                self._world0 = bptree.initial_world(workload.params.get("B", 2))
            else:
                self.giveup_model = sortedlist.SortedListModel()
                self._world0 = sortedlist.initial_world()
            self._struct = giveup.structure_for(self.giveup_model, self._world0.globals["root"])
        else:
            raise ValueError("unknown structure %r" % kind)
        self.reclaim = bool(workload.params.get("reclaim"))
        self.fault = workload.fault

    def initial(self) -> World:
        return self._world0

    def machines(self) -> Tuple[Machine, ...]:
        mk = harris.new_machine if self.family == "harris" else giveup.new_machine
        return tuple(mk(tid + 1, ops) for tid, ops in enumerate(self.workload.threads))

    def structure(self, w: World) -> Structure:
        if self.family == "harris":
            return harris.structure_for(w)
        return self._struct

    def transitions(self, w: World, ms: Machine) -> List[Transition]:
        if self.family == "harris":
            return harris.transitions(w, ms, self.fault)
        return giveup.transitions(w, ms, self.giveup_model, self._struct,
                                  self.fault, self.reclaim)

    def initial_contents(self) -> frozenset:
        if self.family != "dict":
            return frozenset()
        out = set()
        for label in self._world0.graph.graph.labels.values():
            out.update(label[0].finite_keys())
        return frozenset(out)


# ---------------------------------------------------------------------------
# per-step checks


def check_world(model: Model, w: World, dirty: frozenset) -> Optional[tuple]:
    """Invariants of one shared state: leak coverage, the global interface
    condition, the per-node condition, heap/graph sync, and (dictionaries)
    the good-state conditions GS1-GS3."""
    if set(w.heap) != set(w.nodemap):
        leaked = set(w.heap) ^ set(w.nodemap)
        return ("leak", sorted(leaked))
    struct = model.structure(w)
    i = interface_of(w.graph, model.domain, model.labels)
    bad = check_global(i, struct.global_invariant, model.domain)
    if bad:
        return ("global-invariant", bad)
    rep = struct.report(w.graph)
    fails = [f for f in rep.failures if f[0] not in dirty]
    if fails:
        return ("node-condition", fails)
    mismatch = heap_graph_mismatch(w.state(), struct, skip=dirty)
    if mismatch is not None:
        return ("heap-sync", mismatch)
    if model.family == "dict":
        gs = edgeset_report(w.graph)
        if not gs.ok:
            return ("good-state", gs.violations)
    return None


def _contents_of(label) -> KeySet:
    if isinstance(label, tuple) and isinstance(label[0], KeySet):
        return label[0]
    return KeySet.empty()


def validate_claims(model: Model, w: World, claims) -> Optional[tuple]:
    g = w.graph
    for claim in claims:
        tag = claim[0]
        if tag == "inset":
            _, c, k = claim
            if k not in g.flow[c]:
                return ("claim-inset", claim)
        elif tag == "not-inset":
            _, c, k = claim
            if k in g.flow[c]:
                return ("claim-not-inset", claim)
        elif tag == "edge":
            _, c, n, k = claim
            v = g.graph.edges.get((c, n))
            if v is None or k not in v:
                return ("claim-edge", claim)
        elif tag == "noedge":
            _, c, k = claim
            for (src, _), v in g.graph.edges.items():
                if src == c and k in v:
                    return ("claim-noedge", claim)
        elif tag == "keyset":
            _, c, k = claim
            if k not in g.flow[c]:
                return ("claim-keyset", claim)
            for (src, _), v in g.graph.edges.items():
                if src == c and k in v:
                    return ("claim-keyset", claim)
        elif tag == "decisive-result":
            _, c, kind, k, res = claim
            present = k in _contents_of(g.graph.labels[c])
            want = present if kind in ("member", "delete") else not present
            if res != want:
                return ("claim-result", claim)
        else:
            raise ValueError("unknown claim %r" % (claim,))
    return None


def validate_facts(model: Model, w: World, machines, stepping: int) -> Optional[tuple]:
    """Cross-thread stability: facts a thread established must survive other
    threads' steps."""
    g = w.graph
    for ms in machines:
        if ms.tid == stepping or ms.done:
            continue
        for f in ms.facts:
            tag = f[0]
            if tag == "locked":
                _, c, t = f
                if w.heap.get(c, {}).get("lock") != t:
                    return ("stability", (ms.tid, f))
            elif tag == "inset":
                _, c, k = f
                if c not in g.graph.nodes or k not in g.flow[c]:
                    return ("stability", (ms.tid, f))
            elif tag == "zero-inflow":
                _, n = f
                if n not in g.graph.nodes or g.flow[n] != model.domain.zero:
                    return ("stability", (ms.tid, f))
            elif tag == "marked-by":
                _, n, t = f
                if g.graph.labels.get(n) != t:
                    return ("stability", (ms.tid, f))
    return None


# ---------------------------------------------------------------------------
# rely/guarantee action conformance (dictionary)


def _lockset_of(summary, node):
    for n, enc in summary["labels"]:
        if n == node:
            return frozenset(enc[1])
    return None


def _event_conforms(ev: dict, tid: int, fresh=frozenset()) -> Optional[str]:
    if ev["kind"] == "mark":
        return None  # judged with its paired sync below
    own = {"%d" % tid, "%d~" % tid}
    before, after = ev["before"], ev["after"]
    if set(after["nodes"]) <= fresh:
        # Alloc: one fresh node, no inflow, no contents, no edges, label t~
        if len(after["nodes"]) != 1:
            return "alloc must introduce exactly the fresh node"
        if after["inflow"] or after["fmap"] or after["contents"]:
            return "fresh node must carry no inflow, flow map, or contents"
        ls = _lockset_of(after, after["nodes"][0])
        if ls != {"%d~" % tid}:
            return "fresh node must be held out-of-sync by its creator"
        return None
    # Lock: a single unlocked node acquired by t, nothing else moved
    if len(before["nodes"]) == 1:
        n = before["nodes"][0]
        pre, post = _lockset_of(before, n), _lockset_of(after, n)
        if pre == {"0"} and post and post <= own:
            same = (before["inflow"] == after["inflow"] and before["fmap"] == after["fmap"]
                    and before["contents"] == after["contents"])
            return None if same else "lock acquisition may not change the interface"
    # Sync: every touched node was held by t; afterwards held or released;
    # the region's interface is contextually extended (old sources keep rows)
    for n in before["nodes"]:
        ls = _lockset_of(before, n)
        if not ls or not ls <= own:
            return "sync touched %s without holding it" % n
    for n in after["nodes"]:
        ls = _lockset_of(after, n)
        if not ls or not ls <= own | {"0"}:
            return "sync left %s in a foreign lock state" % n
    pre_inflow = dict(before["inflow"])
    post_inflow = dict(after["inflow"])
    for n, v in pre_inflow.items():
        if post_inflow.get(n) != v:
            return "sync changed an existing source's inflow"
    pre_rows: Dict[str, dict] = {}
    for (src, dst), v in before["fmap"]:
        pre_rows.setdefault(src, {})[dst] = v
    post_rows: Dict[str, dict] = {}
    for (src, dst), v in after["fmap"]:
        post_rows.setdefault(src, {})[dst] = v
    for src in pre_inflow:
        if pre_rows.get(src, {}) != post_rows.get(src, {}):
            return "sync changed the flow map of existing source %s" % src
    return None


def action_conformance_step(model: Model, pre: World, post: World, tid: int,
                            ghost) -> Optional[tuple]:
    if model.family != "dict":
        return None
    fresh = frozenset(ev["node"] for ev in ghost if ev["kind"] == "mark")
    for ev in ghost:
        why = _event_conforms(ev, tid, fresh)
        if why:
            return ("action", why)
    synced = set(fresh)
    for ev in ghost:
        if ev["kind"] == "sync":
            synced.update(ev["region"])
    removed = set(pre.heap) - set(post.heap)
    if removed:
        return ("action", "heap cells vanished: %r" % sorted(removed))
    added = set(post.heap) - set(pre.heap)
    if added - synced:
        return ("action", "unsynced fresh cells: %r" % sorted(added - synced))
    for addr in set(pre.heap) & set(post.heap):
        if pre.heap[addr] != post.heap[addr]:
            holder = pre.heap[addr].get("lock")
            acquiring = holder == 0 and post.heap[addr].get("lock") == tid and addr in synced
            if holder != tid and not acquiring:
                return ("action", "wrote %s without holding its lock" % addr)
    pre_g, post_g = pre.graph.graph, post.graph.graph
    graph_delta = {
        n
        for n in pre_g.nodes | post_g.nodes
        if (n not in pre_g.nodes or n not in post_g.nodes
            or pre_g.labels[n] != post_g.labels[n]
            or {e: v for e, v in pre_g.edges.items() if e[0] == n}
            != {e: v for e, v in post_g.edges.items() if e[0] == n})
    }
    if graph_delta - synced:
        return ("action", "graph changed outside the synced region: %r" % sorted(graph_delta - synced))
    return None


def contents_discipline(tr: Transition) -> Optional[tuple]:
    changed = [ev for ev in tr.ghost if base.sync_changed_contents(ev)]
    if changed and not tr.decisive:
        return ("contents-discipline", "contents changed outside a decisive step")
    if tr.machine.contents_syncs > 1:
        return ("contents-discipline", "more than one contents-changing sync in one op")
    return None


# ---------------------------------------------------------------------------
# linearizability


@dataclass(frozen=True)
class HistOp:
    opid: str
    kind: str
    key: Any
    invoked: int
    responded: Optional[int]
    lp: Optional[int]
    result: Any


def history_ops(events) -> List[HistOp]:
    seen: Dict[str, dict] = {}
    for idx, ev in enumerate(events):
        tag, opid = ev[0], ev[1]
        rec = seen.setdefault(opid, {"kind": None, "key": None, "invoked": None,
                                     "responded": None, "lp": None, "result": None})
        if tag == "inv":
            rec["kind"], rec["key"], rec["invoked"] = ev[2], ev[3], idx
        elif tag == "lp":
            rec["lp"] = idx
        elif tag == "resp":
            rec["responded"], rec["result"] = idx, ev[2]
    return [HistOp(opid=k, **v) for k, v in sorted(seen.items())]


def linearizable_lp(ops: List[HistOp], initial=frozenset()) -> Tuple[bool, Any]:
    """Order the operations by linearization point and compare every result
    with the sequential specification."""
    if any(o.lp is None or o.responded is None for o in ops):
        return False, "history is missing linearization points or responses"
    order = sorted(ops, key=lambda o: o.lp)
    expect = sequential_spec([(o.kind, o.key) for o in order], initial)
    for o, want in zip(order, expect):
        if o.result != want:
            return False, ("mismatch", o.opid, o.result, want)
    return True, None


def linearizable_oracle(ops: List[HistOp], initial=frozenset()) -> bool:
    """Exhaustive search for any linearization consistent with real-time
    order. Pending operations (no response) may be included or dropped."""
    complete = [o for o in ops if o.responded is not None]
    n = len(ops)
    seen = set()

    def placeable(o: HistOp, placed: frozenset) -> bool:
        for other in ops:
            if other.opid == o.opid or other.opid in placed:
                continue
            if other.responded is not None and other.responded < o.invoked:
                return False
        return True

    def go(placed: frozenset, contents: frozenset) -> bool:
        if all(o.opid in placed for o in complete):
            return True
        key = (placed, contents)
        if key in seen:
            return False
        seen.add(key)
        for o in ops:
            if o.opid in placed or not placeable(o, placed):
                continue
            if o.kind == "member":
                res, nxt = o.key in contents, contents
            elif o.kind == "insert":
                res, nxt = o.key not in contents, contents | {o.key}
            else:
                res, nxt = o.key in contents, contents - {o.key}
            if o.responded is not None and o.result != res:
                continue
            if go(placed | {o.opid}, nxt):
                return True
        return False

    return go(frozenset(), frozenset(initial))


def linearizability_check(ops: List[HistOp], initial=frozenset()) -> dict:
    """Primary mode orders by recorded linearization points; the oracle mode
    searches all linearizations of up to 8 operations. When both run their
    verdicts must agree."""
    complete = all(o.responded is not None for o in ops)
    lp_known = complete and all(o.lp is not None for o in ops)
    out: dict = {"ops": len(ops)}
    if lp_known:
        ok, detail = linearizable_lp(ops, initial)
        out["lp"] = ok
        if detail is not None:
            out["lp_detail"] = detail
    if len(ops) <= 8 or not lp_known:
        out["oracle"] = linearizable_oracle(ops, initial)
    if "lp" in out and "oracle" in out:
        out["agree"] = out["lp"] == out["oracle"]
    out["linearizable"] = out.get("lp", out.get("oracle"))
    return out


# ---------------------------------------------------------------------------
# exploration


@dataclass
class Violation:
    code: str
    detail: Any
    schedule: Tuple[tuple, ...]
    label: str

    def as_json(self):
        return {
            "code": self.code,
            "detail": repr(self.detail),
            "schedule": [list(s) for s in self.schedule],
            "label": self.label,
        }


@dataclass
class ExploreSummary:
    states: int = 0
    transitions: int = 0
    schedules: Optional[int] = None
    histories: int = 0
    exclusions: Dict[str, int] = field(default_factory=dict)
    bound_exhausted: int = 0
    deadlocks: int = 0
    violation: Optional[Violation] = None
    lin_results: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violation is None

    def as_json(self):
        return {
            "states": self.states,
            "transitions": self.transitions,
            "schedules": None if self.schedules is None else str(self.schedules),
            "histories": self.histories,
            "exclusions": dict(self.exclusions),
            "bound_exhausted": self.bound_exhausted,
            "verdict": "pass" if self.ok else "violation",
            "violation": None if self.ok else self.violation.as_json(),
            "linearizability": self.lin_results[:20],
        }


def _dirty_union(machines) -> frozenset:
    out: frozenset = frozenset()
    for ms in machines:
        out |= ms.dirty
    return out


class _Checker:
    def __init__(self, model: Model):
        self.model = model
        self._world_checks: Dict[tuple, Optional[tuple]] = {}
        self._trans: Dict[tuple, List[Transition]] = {}

    def world_check(self, w: World, dirty: frozenset) -> Optional[tuple]:
        key = (world_digest(w), dirty)
        if key not in self._world_checks:
            self._world_checks[key] = check_world(self.model, w, dirty)
        return self._world_checks[key]

    def transitions(self, w: World, ms: Machine) -> List[Transition]:
        key = (world_digest(w), machine_digest(ms))
        if key not in self._trans:
            self._trans[key] = self.model.transitions(w, ms)
        return self._trans[key]

    def step_check(self, pre: World, tr: Transition, machines, tid: int) -> Optional[tuple]:
        if tr.error is not None:
            return tr.error
        bad = validate_claims(self.model, pre, tr.claims)
        if bad:
            return bad
        dirty = _dirty_union(machines)
        bad = self.world_check(tr.world, dirty)
        if bad:
            return bad
        bad = validate_facts(self.model, tr.world, machines, tid)
        if bad:
            return bad
        bad = action_conformance_step(self.model, pre, tr.world, tid, tr.ghost)
        if bad:
            return bad
        return contents_discipline(tr)


def explore(workload: Workload, bounds: Optional[dict] = None) -> ExploreSummary:
    bounds = bounds or {}
    max_steps = bounds.get("max_steps", 400)
    max_states = bounds.get("max_states", 2_000_000)
    model = Model(workload)
    checker = _Checker(model)
    summary = ExploreSummary()
    w0 = model.initial()
    ms0 = model.machines()
    initial_bad = checker.world_check(w0, _dirty_union(ms0))
    if initial_bad:
        summary.violation = Violation(initial_bad[0], initial_bad[1], (), "initial")
        return summary

    def key_of(w, machines, hist):
        return (world_digest(w), tuple(machine_digest(m) for m in machines), hist)

    init_key = key_of(w0, ms0, ())
    nodes: Dict[tuple, tuple] = {init_key: (w0, ms0, ())}
    edges: Dict[tuple, List[tuple]] = {}
    parent: Dict[tuple, tuple] = {init_key: ()}
    depth: Dict[tuple, int] = {init_key: 0}
    terminals: List[tuple] = []
    order: List[tuple] = []
    stack = [init_key]
    seen = {init_key}

    def schedule_to(k) -> Tuple[tuple, ...]:
        return parent[k]

    while stack:
        k = stack.pop()
        order.append(k)
        w, machines, hist = nodes[k]
        if depth[k] >= max_steps:
            summary.bound_exhausted += 1
            continue
        if len(nodes) > max_states:
            summary.bound_exhausted += 1
            break
        enabled = False
        live = False
        excluded_here = False
        succs: List[tuple] = []
        for i, ms in enumerate(machines):
            if ms.done:
                continue
            live = True
            trs = checker.transitions(w, ms)
            for idx, tr in enumerate(trs):
                if tr.exclusion:
                    summary.exclusions[tr.exclusion] = summary.exclusions.get(tr.exclusion, 0) + 1
                    excluded_here = True
                    continue
                enabled = True
                summary.transitions += 1
                bad = checker.step_check(w, tr, tuple(machines[:i]) + (tr.machine,) + tuple(machines[i + 1:]), ms.tid)
                if bad:
                    summary.violation = Violation(
                        bad[0], bad[1],
                        schedule_to(k) + ((ms.tid, idx),), tr.label)
                    summary.states = len(nodes)
                    return summary
                new_machines = tuple(machines[:i]) + (tr.machine,) + tuple(machines[i + 1:])
                nk = key_of(tr.world, new_machines, hist + tr.history)
                succs.append(nk)
                if nk not in seen:
                    seen.add(nk)
                    nodes[nk] = (tr.world, new_machines, hist + tr.history)
                    parent[nk] = schedule_to(k) + ((ms.tid, idx),)
                    depth[nk] = depth[k] + 1
                    stack.append(nk)
        edges[k] = succs
        if not enabled:
            if live:
                if excluded_here:
                    continue  # path left the modeled envelope, cut here
                summary.deadlocks += 1
                summary.violation = Violation("deadlock", None, schedule_to(k), "deadlock")
                summary.states = len(nodes)
                return summary
            terminals.append(k)

    summary.states = len(nodes)

    # linearizability of every produced complete history
    if model.family == "dict":
        initial = model.initial_contents()
        checked = set()
        for k in terminals:
            hist = nodes[k][2]
            if hist in checked:
                continue
            checked.add(hist)
            ops = history_ops(hist)
            res = linearizability_check(ops, initial)
            res["history"] = [list(e) for e in hist]
            summary.lin_results.append(res)
            if not res["linearizable"] or not res.get("agree", True):
                code = "linearizability" if not res["linearizable"] else "lp-oracle-disagreement"
                summary.violation = Violation(code, res, schedule_to(k), "history")
                return summary
        summary.histories = len(checked)

    # schedule count: paths from the root to terminal states (DAG expected)
    terminal_set = set(terminals)
    memo: Dict[tuple, Optional[int]] = {}

    def count(root) -> Optional[int]:
        # iterative post-order; None marks a cycle (unbounded schedules)
        on_path: set = set()
        work = [(root, False)]
        while work:
            k, expanded = work.pop()
            if expanded:
                on_path.discard(k)
                total = 0
                succ = edges.get(k, [])
                if not succ:
                    total = 1 if k in terminal_set else 0
                else:
                    for nk in succ:
                        c = memo.get(nk)
                        if c is None:
                            memo[k] = None
                            total = None
                            break
                        total += c
                memo[k] = total
                continue
            if k in memo:
                continue
            if k in on_path:
                memo[k] = None
                continue
            on_path.add(k)
            work.append((k, True))
            for nk in edges.get(k, []):
                if nk not in memo:
                    if nk in on_path:
                        memo[nk] = None
                    else:
                        work.append((nk, False))
        return memo.get(root)

    summary.schedules = count(init_key)
    return summary


def action_conformance(trace: "Trace", t0: int) -> List[tuple]:
    """Match every recorded ghost event of thread t0's steps against the
    allowed actions (Lock / Alloc / Sync); the full shared-state delta check
    runs online during run/explore, this re-examines a finished trace."""
    out = []
    for stepno, st in enumerate(trace.steps):
        if st.thread != t0:
            continue
        fresh = frozenset(ev["node"] for ev in st.ghost if ev["kind"] == "mark")
        for ev in st.ghost:
            why = _event_conforms(ev, t0, fresh)
            if why:
                out.append((stepno, st.label, why))
    return out


# ---------------------------------------------------------------------------
# single-schedule replay


@dataclass
class TraceStep:
    thread: int
    choice: int
    label: str
    pre: str
    post: str
    ghost: tuple
    claims: tuple
    history: tuple


@dataclass
class Trace:
    steps: List[TraceStep] = field(default_factory=list)
    verdict: str = "pass"
    violation: Optional[Violation] = None
    history: tuple = ()
    lin: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.violation is None

    def as_json(self):
        return {
            "verdict": self.verdict,
            "violation": None if self.violation is None else self.violation.as_json(),
            "steps": [
                {
                    "thread": st.thread,
                    "choice": st.choice,
                    "label": st.label,
                    "pre": st.pre,
                    "post": st.post,
                    "claims": [list(map(str, c)) for c in st.claims],
                    "history": [list(e) for e in st.history],
                }
                for st in self.steps
            ],
            "history": [list(e) for e in self.history],
            "linearizability": self.lin,
        }


def digest_str(x) -> str:
    return hashlib.sha256(repr(freeze(x)).encode()).hexdigest()[:12]


def _world_str(w: World) -> str:
    return hashlib.sha256(repr(world_digest(w)).encode()).hexdigest()[:12]


def run(workload: Workload, schedule) -> Trace:
    """Replay one schedule: a list of thread ids, or [tid, choice] pairs when
    a step is non-deterministic (choice defaults to 0)."""
    model = Model(workload)
    checker = _Checker(model)
    trace = Trace()
    w = model.initial()
    machines = list(model.machines())
    hist: tuple = ()
    bad = checker.world_check(w, _dirty_union(machines))
    if bad:
        trace.verdict = "violation"
        trace.violation = Violation(bad[0], bad[1], (), "initial")
        return trace
    sched = []
    for entry in schedule:
        if isinstance(entry, int):
            sched.append((entry, 0))
        else:
            tid, choice = entry
            sched.append((int(tid), int(choice)))
    for stepno, (tid, choice) in enumerate(sched):
        idx = next((i for i, m in enumerate(machines) if m.tid == tid), None)
        if idx is None:
            raise ValueError("schedule names unknown thread %r" % tid)
        ms = machines[idx]
        if ms.done:
            raise ValueError("schedule steps a finished thread at %d" % stepno)
        trs = checker.transitions(w, ms)
        if not trs:
            raise ValueError("schedule steps a blocked thread at %d" % stepno)
        if choice >= len(trs):
            raise ValueError("schedule choice %d out of range at %d" % (choice, stepno))
        tr = trs[choice]
        if tr.exclusion:
            trace.verdict = "excluded"
            trace.violation = Violation("exclusion", tr.exclusion, tuple(sched[: stepno + 1]), tr.label)
            return trace
        new_machines = machines[:idx] + [tr.machine] + machines[idx + 1:]
        bad = checker.step_check(w, tr, tuple(new_machines), tid)
        trace.steps.append(TraceStep(tid, choice, tr.label, _world_str(w), _world_str(tr.world),
                                     tr.ghost, tr.claims, tr.history))
        if bad:
            trace.verdict = "violation"
            trace.violation = Violation(bad[0], bad[1], tuple(sched[: stepno + 1]), tr.label)
            return trace
        w = tr.world
        machines = new_machines
        hist = hist + tr.history
    trace.history = hist
    if model.family == "dict" and hist and all(m.done for m in machines):
        ops = history_ops(hist)
        trace.lin = linearizability_check(ops, model.initial_contents())
        if not trace.lin["linearizable"]:
            trace.verdict = "violation"
            trace.violation = Violation("linearizability", trace.lin, tuple(sched), "history")
    return trace


def random_runs(workload: Workload, seed: int, runs: int = 20,
                max_steps: int = 400) -> List[Trace]:
    """Seeded schedule sampling: at every point pick uniformly among the
    enabled transitions."""
    model = Model(workload)
    rng = random.Random(seed)
    out = []
    for _ in range(runs):
        checker = _Checker(model)
        w = model.initial()
        machines = list(model.machines())
        sched: List[tuple] = []
        for _ in range(max_steps):
            options = []
            for ms in machines:
                if ms.done:
                    continue
                trs = checker.transitions(w, ms)
                options.extend((ms.tid, i) for i in range(len(trs)) if not trs[i].exclusion)
            if not options:
                break
            sched.append(options[rng.randrange(len(options))])
            tid, choice = sched[-1]
            idx = next(i for i, m in enumerate(machines) if m.tid == tid)
            tr = checker.transitions(w, machines[idx])[choice]
            w = tr.world
            machines[idx] = tr.machine
        out.append(run(workload, sched))
    return out
