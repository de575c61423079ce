"""Command-line front end.

Subcommands: flow, check, compose, split, extend, simulate, lin. All input
is JSON in the formats of files.py; all output is canonical JSON on stdout.
Exit codes: 0 = pass, 1 = violation (invariant, composition, verdict),
2 = malformed input or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from . import files
from .conditions import builtin_condition, check_global, edgeset_report
from .domains import make_domain
from .graphs import fg_compose, fg_decompose
from .heap import heap_graph_mismatch
from .interfaces import contextual_extension, interface_of
from .machines import bptree, sortedlist
from .monitor import Workload, explore, linearizability_check, random_runs, run

PASS, VIOLATION, MALFORMED = 0, 1, 2


def fixture_path(name: str):
    """Path to one of the shipped example files."""
    return resources.files("flowcheck") / "fixtures" / name


def _emit(doc) -> None:
    sys.stdout.write(files.dumps(doc))


def _load(path):
    try:
        return files.load_path(path)
    except OSError as e:
        raise files.FileFormatError("cannot read %s: %s" % (path, e))


def _parse_params(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise files.FileFormatError("--param expects name=value, got %r" % pair)
        k, v = pair.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# flow


def cmd_flow(args) -> int:
    gf = files.graph_from_json(_load(args.graph))
    h = gf.graph
    doc = {"flows": {n: gf.domain.encode(h.flow[n]) for n in sorted(h.graph.nodes)}}
    if args.capacity:
        src, dst = args.capacity
        from .graphs import capacity

        cap = capacity(h.graph, gf.domain)
        doc["capacity"] = {
            "src": src,
            "dst": dst,
            "value": gf.domain.encode(cap.get((src, dst), gf.domain.zero)),
        }
    _emit(doc)
    return PASS


# ---------------------------------------------------------------------------
# check


def _condition_for(args, doc):
    params = _parse_params(args.param)
    kind = args.condition
    if kind is None:
        raise files.FileFormatError("--condition is required")
    if "structure" in doc:  # snapshot: default parameters from the file
        for k, v in doc.get("globals", {}).items():
            params.setdefault(k, v)
        for k, v in doc.get("params", {}).items():
            params.setdefault(k, v)
    if kind == "dictionary":
        structure = doc.get("structure", params.get("structure"))
        if structure == "giveup_bptree" or params.get("model") == "bptree":
            params["model"] = bptree.BPTreeModel(int(params.get("B", 2)))
        elif structure == "giveup_sortedlist" or params.get("model") == "sortedlist":
            params["model"] = sortedlist.SortedListModel()
        else:
            params.setdefault("model", None)
    try:
        return builtin_condition(kind, **params)
    except (KeyError, TypeError) as e:
        raise files.FileFormatError("condition %s is missing a parameter: %s" % (kind, e))


def cmd_check(args) -> int:
    doc = _load(args.file)
    is_snapshot = "structure" in doc
    if is_snapshot:
        snap = files.snapshot_from_json(doc)
        gf_domain, h, world = snap.domain, snap.world.graph, snap.world
    else:
        gf = files.graph_from_json(doc)
        gf_domain, h, world = gf.domain, gf.graph, None
    struct = _condition_for(args, doc)
    if struct.domain.descriptor != gf_domain.descriptor:
        raise files.FileFormatError(
            "condition %s needs domain %r, file uses %r"
            % (struct.name, struct.domain.descriptor, gf_domain.descriptor))
    report = {"condition": struct.name, "nodes": {}, "violations": []}
    rep = struct.report(h)
    for n in sorted(h.graph.nodes):
        report["nodes"][n] = "ok"
    for n, why in rep.failures:
        report["nodes"][n] = why
        report["violations"].append(["node", n, why])
    i = interface_of(h, struct.domain, struct.labels)
    for why in check_global(i, struct.global_invariant, struct.domain):
        report["violations"].append(["global", why])
    if world is not None and struct.extract is not None:
        mismatch = heap_graph_mismatch(world.state(), struct)
        if mismatch is not None:
            report["violations"].append(["heap", mismatch])
    if struct.domain.descriptor == "keyset":
        gs = edgeset_report(h)
        report["keysets"] = {
            n: {
                "inset": struct.domain.encode(info["inset"]),
                "keyset": struct.domain.encode(info["keyset"]),
                "contents": struct.domain.encode(info["contents"]),
            }
            for n, info in gs.per_node.items()
        }
        for code, why in gs.violations:
            report["violations"].append([code, why])
    report["verdict"] = "pass" if not report["violations"] else "violation"
    _emit(report)
    return PASS if not report["violations"] else VIOLATION


# ---------------------------------------------------------------------------
# compose / split / extend


def cmd_compose(args) -> int:
    g1 = files.graph_from_json(_load(args.graph1))
    g2 = files.graph_from_json(_load(args.graph2))
    if g1.domain.descriptor != g2.domain.descriptor:
        raise files.FileFormatError("graphs use different flow domains")
    h = fg_compose(g1.graph, g2.graph, g1.domain)
    if not h:
        _emit({"verdict": "undefined", "reason": h.reason})
        return VIOLATION
    _emit(files.GraphFile(g1.domain, g1.labels, h).to_json())
    return PASS


def _region(args, nodes):
    region = set()
    for part in (args.region or "").split(","):
        part = part.strip()
        if part:
            region.add(part)
    if not region:
        raise files.FileFormatError("--region must name at least one node")
    missing = region - set(nodes)
    if missing:
        raise files.FileFormatError("region nodes %s are not in the graph" % sorted(missing))
    return region


def cmd_split(args) -> int:
    gf = files.graph_from_json(_load(args.graph))
    region = _region(args, gf.graph.graph.nodes)
    h1, h2 = fg_decompose(gf.graph, region, gf.domain)
    _emit({
        "part": files.GraphFile(gf.domain, gf.labels, h1).to_json(),
        "rest": files.GraphFile(gf.domain, gf.labels, h2).to_json(),
    })
    return PASS


def cmd_extend(args) -> int:
    before = files.graph_from_json(_load(args.before))
    after = files.graph_from_json(_load(args.after))
    if before.domain.descriptor != after.domain.descriptor:
        raise files.FileFormatError("graphs use different flow domains")
    d, a = before.domain, before.labels
    region = _region(args, before.graph.graph.nodes)
    fresh = after.graph.graph.nodes - before.graph.graph.nodes
    if not region <= after.graph.graph.nodes:
        raise files.FileFormatError("region is not present in the after graph")
    hb, ctx_b = fg_decompose(before.graph, region, d)
    ha, _ = fg_decompose(after.graph, region | fresh, d)
    ib, ia = interface_of(hb, d, a), interface_of(ha, d, a)
    extends = contextual_extension(ib, ia, d)
    recomposed = fg_compose(ha, ctx_b, d)
    recomposes = bool(recomposed)
    grown = None
    if recomposes:
        i_before = interface_of(before.graph, d, a)
        i_after = interface_of(recomposed, d, a)
        grown = contextual_extension(i_before, i_after, d)
    verdict = extends and recomposes and bool(grown)
    _emit({
        "region": sorted(region),
        "fresh_nodes": sorted(fresh),
        "extends": extends,
        "context_recomposes": recomposes,
        "whole_extends": grown,
        "verdict": "pass" if verdict else "violation",
    })
    return PASS if verdict else VIOLATION


# ---------------------------------------------------------------------------
# simulate / lin


def cmd_simulate(args) -> int:
    rf = files.run_from_json(_load(args.run))
    params = dict(rf.params)
    fault = params.pop("fault", None)
    if args.fault:
        fault = args.fault
    wl = Workload(rf.structure, rf.threads, params, fault)
    mode = dict(rf.mode)
    if args.exhaustive:
        mode = {"exhaustive": True}
    if args.seed is not None:
        mode = {"seed": args.seed, "runs": mode.get("runs", 20)}
    if "exhaustive" in mode:
        summary = explore(wl, rf.bounds)
        doc = {"mode": "exhaustive", "summary": summary.as_json()}
        ok = summary.ok
    else:
        traces = random_runs(wl, int(mode["seed"]), int(mode.get("runs", 20)),
                             rf.bounds.get("max_steps", 400))
        bad = next((t for t in traces if not t.ok), None)
        doc = {
            "mode": "seeded",
            "runs": len(traces),
            "verdict": "pass" if bad is None else "violation",
            "violation": None if bad is None else bad.violation.as_json(),
        }
        ok = bad is None
    if args.trace:
        if "exhaustive" in mode:
            trace_doc = doc
        else:
            trace_doc = {"runs": [t.as_json() for t in traces]}
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(files.dumps(trace_doc))
    _emit(doc)
    return PASS if ok else VIOLATION


def cmd_lin(args) -> int:
    ops, initial = files.history_from_json(_load(args.history))
    verdict = linearizability_check(ops, initial)
    _emit(verdict)
    return PASS if verdict["linearizable"] else VIOLATION


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="flowcheck",
        description="Flow-based invariant checking for heap structures and "
                    "concurrent data-structure models.")
    sub = p.add_subparsers(dest="cmd", required=True)

    q = sub.add_parser("flow", help="print per-node flows of a graph file")
    q.add_argument("graph")
    q.add_argument("--capacity", nargs=2, metavar=("SRC", "DST"),
                   help="also print one capacity entry")
    q.set_defaults(fn=cmd_flow)

    q = sub.add_parser("check", help="check a structure condition on a graph or snapshot")
    q.add_argument("file")
    q.add_argument("--condition", required=True,
                   choices=["tree", "list", "cyclic_list", "sorted_list", "harris", "dictionary"])
    q.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="condition parameter (root, mh, fh, ft, B, ...)")
    q.set_defaults(fn=cmd_check)

    q = sub.add_parser("compose", help="compose two graph files")
    q.add_argument("graph1")
    q.add_argument("graph2")
    q.set_defaults(fn=cmd_compose)

    q = sub.add_parser("split", help="split a graph file at a region")
    q.add_argument("graph")
    q.add_argument("--region", required=True, help="comma-separated node ids")
    q.set_defaults(fn=cmd_split)

    q = sub.add_parser("extend", help="check contextual extension of a region between two graphs")
    q.add_argument("before")
    q.add_argument("after")
    q.add_argument("--region", required=True, help="comma-separated node ids")
    q.set_defaults(fn=cmd_extend)

    q = sub.add_parser("simulate", help="drive a concurrent run descriptor")
    q.add_argument("run")
    q.add_argument("--trace", help="write the machine-readable trace/summary here")
    q.add_argument("--seed", type=int, help="seeded schedule sampling instead of the file's mode")
    q.add_argument("--exhaustive", action="store_true", help="force exhaustive exploration")
    q.add_argument("--fault", choices=["harris_skip_mark", "dict_skip_lock", "dict_skip_inrange"],
                   help="fault-injection switch (negative controls)")
    q.set_defaults(fn=cmd_simulate)

    q = sub.add_parser("lin", help="check a history file for linearizability")
    q.add_argument("history")
    q.set_defaults(fn=cmd_lin)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return MALFORMED if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except files.FileFormatError as e:
        sys.stderr.write("error: %s\n" % e)
        return MALFORMED
    except ValueError as e:
        sys.stderr.write("error: %s\n" % e)
        return MALFORMED


if __name__ == "__main__":
    sys.exit(main())
