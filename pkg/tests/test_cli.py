import json

import pytest

from capcover.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def euclid_file(tmp_path):
    path = tmp_path / "e.json"
    assert main(["gen", "euclid", "--seed", "3", "--n", "30", "--m", "10", "-o", str(path)]) == 0
    return path


@pytest.fixture
def metric_file(tmp_path):
    path = tmp_path / "m.json"
    assert main(["gen", "metric", "--seed", "4", "--n", "25", "--m", "8", "-o", str(path)]) == 0
    return path


@pytest.mark.parametrize("mode,bound", [("metric", 9.0), ("uniform", 6.4641), ("euclid", 1.5), ("soft", 3.0)])
def test_solve_then_verify(capsys, tmp_path, mode, bound):
    inst = tmp_path / "u.json"
    main(["gen", "euclid", "--seed", "2", "--n", "30", "--m", "10", "--capacity-mode", "uniform", "--capacity", "4", "-o", str(inst)])
    sol = tmp_path / "s.json"
    code, out, _ = run(capsys, "solve", "-i", inst, "--mode", mode, "-o", sol)
    assert code == 0
    rep = json.loads(out)
    assert rep["max_beta"] <= bound + 1e-9
    assert rep["checks"] == {"replay": True, "verify": True}
    assert "timings" not in rep
    code, out, _ = run(capsys, "verify", "-i", inst, "-s", sol, "--beta", bound)
    assert code == 0 and json.loads(out)["is_valid"]


def test_soft_report_cost_bound(capsys, metric_file):
    code, out, _ = run(capsys, "solve", "-i", metric_file, "--mode", "soft")
    rep = json.loads(out)
    assert code == 0 and rep["cost"] <= 4 * rep["lp_value"] + 1e-6


def test_oracle_and_timings(capsys, euclid_file):
    code, out, _ = run(capsys, "solve", "-i", euclid_file, "--oracle", "--timings")
    rep = json.loads(out)
    assert rep["opt"] <= rep["cost"]
    assert set(rep["timings"]) == {"lp", "rounding", "oracle"}


def test_exact(capsys, euclid_file, tmp_path):
    code, out, _ = run(capsys, "exact", "-i", euclid_file, "-o", tmp_path / "opt.json")
    assert code == 0
    opt = json.loads(out)["opt"]
    code, out, _ = run(capsys, "verify", "-i", euclid_file, "-s", tmp_path / "opt.json", "--beta", 1)
    assert code == 0 and json.loads(out)["cost"] == opt


def test_failed_verification_exit_code(capsys, euclid_file, tmp_path):
    sol = tmp_path / "bad.json"
    sol.write_text(json.dumps({"selected": [0], "assignment": [0] * 30, "expansion": [1.0]}))
    code, out, _ = run(capsys, "verify", "-i", euclid_file, "-s", sol, "--beta", 1)
    assert code == 2 and not json.loads(out)["is_valid"]


def test_gadget_witness_verifies(capsys, tmp_path):
    inst, wit = tmp_path / "g.json", tmp_path / "w.json"
    assert main(["gen", "gadget-3dm", "--N", "1", "--c", "1", "-o", str(inst), "--witness", str(wit)]) == 0
    code, out, _ = run(capsys, "verify", "-i", inst, "-s", wit, "--beta", 1)
    rep = json.loads(out)
    assert code == 0 and rep["is_valid"] and rep["cost"] == 28


def test_input_errors(capsys, tmp_path, metric_file):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "solve", "-i", bad)[0] == 1
    assert run(capsys, "solve", "-i", tmp_path / "missing.json")[0] == 1
    code, _, err = run(capsys, "solve", "-i", metric_file, "--mode", "euclid")
    assert code == 1 and "coordinate" in err
    assert run(capsys, "gen", "gadget-3dm", "--N", "1", "--triples", "0,0")[0] == 1
    assert run(capsys, "exact", "-i", metric_file, "--max-balls", "3")[0] == 1


def test_uncovered_instance_is_infeasible(capsys, tmp_path):
    path = tmp_path / "u.json"
    path.write_text(json.dumps({"dimension": 1, "points": [[0.0], [5.0]], "centers": [[0.0]], "balls": [{"center_index": 0, "radius": 1.0, "capacity": 2}]}))
    assert run(capsys, "solve", "-i", path)[0] == 2


def test_bench_csv(capsys, tmp_path):
    d = tmp_path / "insts"
    d.mkdir()
    for s in (2, 1):
        main(["gen", "euclid", "--seed", str(s), "--n", "15", "--m", "6", "-o", str(d / f"i{s}.json")])
    code, out, _ = run(capsys, "bench", "-i", d, "--oracle")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0].startswith("instance,n,m,mode,lp,cost,opt")
    assert [l.split(",")[0] for l in lines[1:]] == ["i1", "i2"]
    assert all(l.endswith(",") for l in lines[1:])  # no timings unless asked


def test_plot(capsys, euclid_file, tmp_path):
    sol = tmp_path / "s.json"
    run(capsys, "solve", "-i", euclid_file, "-o", sol)
    out_svg = tmp_path / "p.svg"
    assert run(capsys, "plot", "-i", euclid_file, "-s", sol, "-o", out_svg)[0] == 0
    assert out_svg.read_text().count('class="ball"') == 10


def test_invariant_failure_exit_code(capsys, monkeypatch, euclid_file, tmp_path):
    import capcover.cli as cli

    def broken(*args, **kwargs):
        raise AssertionError("capacity invariant failed")

    monkeypatch.setattr(cli, "run_metric_pipeline", broken)
    trace = tmp_path / "t.ndjson"
    code, _, err = run(capsys, "solve", "-i", euclid_file, "--trace", trace)
    assert code == 3
    assert "capacity invariant failed" in err and str(trace) in err
    assert trace.exists()
