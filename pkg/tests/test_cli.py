"""CLI behavior: round trips, exit codes, command output."""

import json

import pytest

from flowcheck import files
from flowcheck.cli import fixture_path, main

FIX = [
    "two-region.graph",
    "inf-cycle-left.graph",
    "inf-cycle-right.graph",
    "list-insert-before.graph",
    "list-insert-after.graph",
    "harris.snapshot",
    "btree.snapshot",
]


def _fx(name):
    return str(fixture_path(name))


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.mark.parametrize("name", FIX)
def test_fixture_files_round_trip_canonically(name):
    text = fixture_path(name).read_text()
    doc = files.loads(text)
    if name.endswith(".snapshot"):
        parsed = files.snapshot_from_json(doc)
        again = files.dumps(parsed.to_json())
    else:
        parsed = files.graph_from_json(doc)
        again = files.dumps(files.GraphFile(parsed.domain, parsed.labels, parsed.graph).to_json())
    assert again == text
    # parse -> serialize -> parse is the identity
    assert files.dumps(files.loads(again)) == files.dumps(doc)


def test_flow_command(capsys):
    code, doc = run_cli(capsys, "flow", _fx("two-region.graph"), "--capacity", "n0", "n5")
    assert code == 0
    assert doc["flows"] == {("n%d" % i): 1 for i in range(7)}
    assert doc["capacity"] == {"src": "n0", "dst": "n5", "value": 1}


def test_check_command_verdicts(capsys):
    code, doc = run_cli(capsys, "check", _fx("two-region.graph"),
                        "--condition", "tree", "--param", "root=n0")
    assert code == 0 and doc["verdict"] == "pass"
    code, doc = run_cli(capsys, "check", _fx("harris.snapshot"), "--condition", "harris")
    assert code == 0 and doc["verdict"] == "pass"
    code, doc = run_cli(capsys, "check", _fx("btree.snapshot"), "--condition", "dictionary")
    assert code == 0 and doc["verdict"] == "pass"
    assert doc["keysets"]["n"]["keyset"] == [[5, 7]]


def test_check_detects_diamond(tmp_path, capsys):
    doc = files.loads(fixture_path("two-region.graph").read_text())
    for node in doc["nodes"]:
        if node["id"] == "n2":
            node["edges"]["n3"] = 1  # second route into n3
    p = tmp_path / "diamond.graph"
    p.write_text(files.dumps(doc))
    code, rep = run_cli(capsys, "check", str(p), "--condition", "tree", "--param", "root=n0")
    assert code == 1
    assert rep["nodes"]["n3"] != "ok"


def test_check_domain_mismatch_is_usage_error(capsys):
    code, _ = run_cli(capsys, "check", _fx("two-region.graph"), "--condition", "harris",
                      "--param", "mh=n0", "--param", "fh=n1", "--param", "ft=n1")
    assert code == 2


def test_compose_and_split(capsys, tmp_path):
    code, doc = run_cli(capsys, "compose", _fx("inf-cycle-left.graph"), _fx("inf-cycle-right.graph"))
    assert code == 0
    assert doc["inflow"] in ({"n1": "inf", "n2": "inf"}, {"n1": 1}, {"n2": 1})
    code, doc = run_cli(capsys, "split", _fx("two-region.graph"), "--region", "n1,n2,n4")
    assert code == 0
    assert doc["part"]["inflow"] == {"n1": 1, "n2": 1}
    assert doc["rest"]["inflow"] == {"n0": 1, "n3": 1, "n5": 1, "n6": 1}
    # overlapping node sets cannot compose
    code, doc = run_cli(capsys, "compose", _fx("two-region.graph"), _fx("two-region.graph"))
    assert code == 1 and doc["reason"] == "node-overlap"


def test_extend_command(capsys):
    code, doc = run_cli(capsys, "extend", _fx("list-insert-before.graph"),
                        _fx("list-insert-after.graph"), "--region", "l,n")
    assert code == 0 and doc["extends"] and doc["context_recomposes"] and doc["whole_extends"]
    code, doc = run_cli(capsys, "extend", _fx("list-insert-before.graph"),
                        _fx("list-insert-after.graph"), "--region", "l")
    assert code == 1 and not doc["extends"]
    code, doc = run_cli(capsys, "extend", _fx("list-insert-before.graph"),
                        _fx("list-insert-before.graph"), "--region", "l")
    assert code == 0  # identical files always extend


def test_simulate_and_trace(tmp_path, capsys):
    trace = tmp_path / "trace.json"
    code, doc = run_cli(capsys, "simulate", str(fixture_path("harris-insert-delete.run")),
                        "--trace", str(trace))
    assert code == 0 and doc["summary"]["verdict"] == "pass"
    assert int(doc["summary"]["schedules"]) > 1000
    assert json.loads(trace.read_text())["summary"]["verdict"] == "pass"


def test_simulate_mutant_exits_one(capsys):
    code, doc = run_cli(capsys, "simulate", str(fixture_path("harris-insert-delete.run")),
                        "--fault", "harris_skip_mark")
    assert code == 1
    assert doc["summary"]["violation"]["schedule"]


def test_simulate_seeded_mode(capsys):
    code, doc = run_cli(capsys, "simulate", str(fixture_path("harris-insert-delete.run")),
                        "--seed", "3")
    assert code == 0 and doc["mode"] == "seeded" and doc["runs"] > 0


def test_lin_command(capsys):
    code, doc = run_cli(capsys, "lin", str(fixture_path("double-insert.history")))
    assert code == 1 and doc["linearizable"] is False and doc["agree"]
    code, doc = run_cli(capsys, "lin", str(fixture_path("insert-member.history")))
    assert code == 0 and doc["linearizable"] is True


def test_malformed_inputs_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.graph"
    bad.write_text("{not json")
    assert run_cli(capsys, "flow", str(bad))[0] == 2
    bad.write_text(json.dumps({"domain": "path_count"}))
    assert run_cli(capsys, "flow", str(bad))[0] == 2
    bad.write_text(json.dumps({
        "domain": "path_count", "label_domain": "trivial",
        "nodes": [{"id": "a", "edges": {"zz": 1}}], "sinks": [], "inflow": {}}))
    assert run_cli(capsys, "flow", str(bad))[0] == 2
    assert main(["flow", str(tmp_path / "missing.graph")]) == 2
    assert main(["no-such-command"]) == 2


def test_run_file_validation(tmp_path):
    bad = {"structure": "harris", "threads": [[{"op": "member", "key": 1}]],
           "mode": {"exhaustive": True}}
    with pytest.raises(files.FileFormatError):
        files.run_from_json(bad)
    bad = {"structure": "giveup_bptree", "threads": [[{"op": "insert"}]],
           "mode": {"exhaustive": True}}
    with pytest.raises(files.FileFormatError):
        files.run_from_json(bad)
    ok = files.run_from_json({
        "structure": "giveup_bptree",
        "threads": [{"op": "insert", "key": 3}],
        "mode": {"seed": 4},
    })
    assert ok.threads == ((("insert", 3),),)
