"""The nine acceptance criteria, each at its stated size and tolerance.

Every test prints one PASS/FAIL line; the lines are repeated in the pytest summary.
"""

import json
import time

import numpy as np
import pytest

from capcover.cli import main
from capcover.exact import brute_force_opt, verify_solution
from capcover.gen import GadgetSpec3DM, gen_3dm_gadget, gen_random_euclidean, gen_random_metric
from capcover.lpcore import EQ, GE, LE, LpProblem, Status, simplex_solve, vertex_enum_oracle
from capcover.relax import build_mmcc_lp, solve_relaxation
from capcover.round_euclid import EuclidParams, k_total, run_euclid_pipeline
from capcover.round_metric import GENERAL_BETA, UNIFORM_BETA, RoundingParams, run_metric_pipeline, solve_soft
from capcover.solution import from_assignment
from capcover.trace import Trace, replay

from conftest import ACCEPTANCE, line_instance

TOL = 1e-6


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def mixed_instance(seed, n_range, m_range, **kw):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(*n_range))
    m = int(rng.integers(*m_range))
    if seed % 2:
        return gen_random_metric(seed, n, m, **kw)
    return gen_random_euclidean(seed, n, m, 2, (0.03, 0.3), **kw)


def run_traced(fn, *args, **kw):
    trace = Trace()
    sol = fn(*args, trace=trace, **kw)
    return sol, replay(trace.events)


@pytest.fixture(scope="module", autouse=True)
def warm_up():
    # compile the numba kernels outside the timed loops
    run_metric_pipeline(line_instance([0.0, 0.1], [0.0, 0.05], [(0, 1.0, 1), (1, 1.0, 1)]))


@pytest.fixture(scope="module")
def metric_runs():
    t0 = time.perf_counter()
    runs = []
    for seed in range(500):
        inst = mixed_instance(seed, (10, 121), (4, 41))
        sol, rep = run_traced(run_metric_pipeline, inst, RoundingParams(strict=False))
        runs.append((inst, sol, rep))
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def oracle_runs():
    t0 = time.perf_counter()
    runs = []
    for seed in range(100):
        inst = mixed_instance(10_000 + seed, (3, 17), (2, 11))
        sol, rep = run_traced(run_metric_pipeline, inst, RoundingParams(strict=False))
        opt = brute_force_opt(inst, max_balls=10)[0]
        runs.append((inst, sol, rep, opt))
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def uniform_runs():
    runs = []
    for seed in range(200):
        cap = 1 + seed % 5
        inst = mixed_instance(20_000 + seed, (10, 121), (4, 41), capacity_mode="uniform", capacity=cap)
        sol, rep = run_traced(run_metric_pipeline, inst, RoundingParams(strict=False), variant="uniform")
        runs.append((inst, sol, rep))
    return runs


@pytest.fixture(scope="module")
def euclid_runs():
    runs = []
    for eps in (1.0, 0.5, 0.25):
        for d in (1, 2, 3):
            for k in range(50):
                seed = 30_000 + 1000 * d + k + int(100 * eps)
                rng = np.random.default_rng(seed)
                inst = gen_random_euclidean(seed, int(rng.integers(10, 61)), int(rng.integers(4, 26)), d, (0.02, 0.5))
                sol, rep = run_traced(run_euclid_pipeline, inst, EuclidParams(epsilon=eps, strict=False))
                runs.append((eps, d, inst, sol, rep))
    return runs


def test_criterion_1_metric_bicriteria(metric_runs):
    runs, elapsed = metric_runs
    bad = [
        i
        for i, (inst, sol, _) in enumerate(runs)
        if not verify_solution(inst, sol, GENERAL_BETA).is_valid or sol.cost > 21 * sol.lp_value + TOL
    ]
    worst_beta = max(sol.max_expansion for _, sol, _ in runs)
    worst_ratio = max(sol.cost / sol.lp_value for _, sol, _ in runs)
    detail = f"500 instances, {len(bad)} failures, max beta {worst_beta:.3f}, max cost/lp {worst_ratio:.3f}, {elapsed:.1f}s"
    record(1, not bad and elapsed < 60, detail)


def test_criterion_2_oracle_sandwich(oracle_runs):
    runs, elapsed = oracle_runs
    bad = [
        i
        for i, (inst, sol, _, opt) in enumerate(runs)
        if not (sol.lp_value <= opt + TOL and opt <= sol.cost + TOL and sol.cost <= 21 * opt + TOL)
    ]
    worst = max(sol.cost / opt for _, sol, _, opt in runs)
    record(2, not bad and elapsed < 30, f"100 tiny instances, {len(bad)} failures, max cost/OPT {worst:.3f}, {elapsed:.1f}s")


def test_criterion_3_uniform_capacities(uniform_runs):
    bad = [i for i, (inst, sol, _) in enumerate(uniform_runs) if not verify_solution(inst, sol, 6.47).is_valid]
    worst = max(sol.max_expansion for _, sol, _ in uniform_runs)
    record(3, not bad and UNIFORM_BETA <= 6.47, f"200 instances, {len(bad)} failures, max beta {worst:.3f}")


def test_criterion_4_euclidean_expansion(euclid_runs):
    bad = []
    worst = {}
    for eps, d, inst, sol, _ in euclid_runs:
        counts_ok = all(c <= b for c, b in zip(sol.stats["cluster_counts"], sol.stats["cluster_bounds"]))
        if sol.max_expansion > 1 + eps + 1e-9 or not counts_ok or not verify_solution(inst, sol, 1 + eps).is_valid:
            bad.append((eps, d))
        worst[eps] = max(worst.get(eps, 1.0), sol.max_expansion)
    # oracle ratio log on tiny instances against the implementation's own certificate
    ratios = []
    for seed in range(20):
        inst = gen_random_euclidean(40_000 + seed, 12, 8, 2, (0.05, 0.5))
        sol = run_euclid_pipeline(inst, EuclidParams(epsilon=0.5))
        opt = brute_force_opt(inst)[0]
        ratios.append(sol.cost / opt)
        if sol.cost > k_total(0.5, 2) * opt:
            bad.append(("oracle", seed))
    betas = ", ".join(f"eps={e}: {b:.3f}" for e, b in sorted(worst.items()))
    record(4, not bad, f"450 runs, {len(bad)} failures, max beta {betas}, tiny cost/OPT max {max(ratios):.2f}")


def test_criterion_5_soft_capacities():
    bad = []
    worst = 0.0
    for seed in range(200):
        inst = mixed_instance(50_000 + seed, (10, 121), (4, 41))
        sol = solve_soft(inst)
        worst = max(worst, sol.cost / sol.lp_value)
        if sol.cost > 4 * sol.lp_value + TOL or not verify_solution(inst, sol, 3.0).is_valid:
            bad.append(seed)
    record(5, not bad, f"200 instances, {len(bad)} failures, max copies/lp {worst:.3f}")


def test_criterion_6_trace_invariants(metric_runs, oracle_runs, uniform_runs, euclid_runs):
    reports = [rep for _, _, rep in metric_runs[0]]
    reports += [rep for _, _, rep, _ in oracle_runs[0]]
    reports += [rep for _, _, rep in uniform_runs]
    reports += [rep for *_, rep in euclid_runs]
    live = [v for _, sol, _ in metric_runs[0] for v in sol.stats["violations"]]
    live += [v for _, sol, _ in uniform_runs for v in sol.stats["violations"]]
    live += [v for *_, sol, _ in euclid_runs for v in sol.stats["violations"]]
    replayed = [v for rep in reports for v in rep.violations]
    n_select = sum(rep.n_selected for rep in reports)
    min_f = min(rep.min_f_ratio for rep in reports)
    max_y = max(rep.max_yacc for rep in reports)
    detail = (
        f"{len(reports)} traces, {n_select} O-additions, {len(replayed)} replay and {len(live)} live violations, "
        f"min F/k {min_f:.3f}, max y-acc {max_y:.3f}"
    )
    record(6, not replayed and not live, detail)


def test_criterion_7_gadget_fidelity():
    spec = GadgetSpec3DM(1, [(0, 0, 0)])
    g = gen_3dm_gadget(spec)
    inst = g.instance
    selected, assignment = g.canonical_solution([0])
    sol = from_assignment(inst, assignment, keep=selected)
    lp = solve_relaxation(inst).lp_value
    ok = (
        spec.p == 2
        and spec.n_element_balls == 27
        and set(inst.capacities.tolist()) == {3}
        and set(inst.radii.tolist()) == {1.0}
        and sol.cost == 28
        and verify_solution(inst, sol, 1.0).is_valid
        and lp <= 28 + TOL
    )
    record(7, ok, f"p={spec.p}, B={spec.n_element_balls}, canonical size {sol.cost}, lp {lp:.4f}")


def test_criterion_8_lp_solver():
    mismatches = 0
    for seed in range(30):
        rng = np.random.default_rng(60_000 + seed)
        nv, nr = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        lp = LpProblem(
            rng.integers(-3, 4, nv).astype(float),
            rng.integers(-3, 4, (nr, nv)).astype(float),
            rng.choice([LE, GE, EQ], nr, p=[0.5, 0.35, 0.15]),
            rng.integers(-4, 8, nr).astype(float),
            np.zeros(nv),
            rng.integers(1, 4, nv).astype(float),
        )
        sol, ref = simplex_solve(lp), vertex_enum_oracle(lp)
        if ref is Status.INFEASIBLE:
            mismatches += sol.status is not Status.INFEASIBLE
        else:
            mismatches += sol.status is not Status.OPTIMAL or abs(sol.value - ref) > TOL
    hand = [
        (line_instance([0.0], [0.0], [(0, 1.0, 1)]), 1.0),
        (line_instance([0.0, 0.1], [0.0, 0.0], [(0, 1.0, 1), (1, 1.0, 1)]), 2.0),
        (line_instance([0.0, 0.1, 0.2], [0.0], [(0, 1.0, 3)]), 1.0),
    ]
    for inst, value in hand:
        lp, _ = build_mmcc_lp(inst)
        mismatches += abs(simplex_solve(lp).value - value) > TOL or abs(vertex_enum_oracle(lp) - value) > TOL
    record(8, mismatches == 0, f"30 random LPs and 3 hand MMCC-LPs, {mismatches} mismatches")


def test_criterion_9_determinism(tmp_path, capsys):
    def run_all(tag):
        d = tmp_path / tag
        d.mkdir()
        outputs = {}

        def call(name, argv):
            main([str(a) for a in argv])
            outputs[name] = capsys.readouterr().out

        call("gen-e", ["gen", "euclid", "--seed", 11, "--n", 40, "--m", 12, "-o", d / "e.json"])
        call("gen-m", ["gen", "metric", "--seed", 12, "--n", 30, "--m", 10, "-o", d / "m.json"])
        call("gen-u", ["gen", "euclid", "--seed", 13, "--n", 30, "--m", 10, "--capacity-mode", "uniform", "-o", d / "u.json"])
        call("gen-g", ["gen", "gadget-3dm", "--N", 1, "--c", 1, "-o", d / "g.json", "--witness", d / "w.json"])
        for mode, inst in [("metric", "m.json"), ("uniform", "u.json"), ("euclid", "e.json"), ("soft", "e.json")]:
            call(f"solve-{mode}", ["solve", "-i", d / inst, "--mode", mode, "-o", d / f"s-{mode}.json", "--trace", d / f"t-{mode}.ndjson"])
        call("exact", ["exact", "-i", d / "e.json", "-o", d / "opt.json"])
        call("verify", ["verify", "-i", d / "g.json", "-s", d / "w.json", "--beta", 1])
        bench = d / "bench"
        bench.mkdir()
        for name in ("e.json", "m.json"):
            (bench / name).write_text((d / name).read_text())
        call("bench", ["bench", "-i", bench, "--oracle", "-o", d / "bench.csv"])
        call("plot", ["plot", "-i", d / "e.json", "-s", d / "s-euclid.json", "-o", d / "p.svg"])
        files = {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}
        return files, outputs

    files_a, out_a = run_all("a")
    files_b, out_b = run_all("b")
    differing = [k for k in files_a if files_a[k] != files_b.get(k)] + [k for k in out_a if out_a[k] != out_b[k]]
    reports_ok = all(json.loads(out_a[f"solve-{m}"])["checks"]["verify"] for m in ("metric", "uniform", "euclid", "soft"))
    record(9, not differing and reports_ok and len(files_a) >= 15, f"{len(files_a)} files and {len(out_a)} reports compared, differing: {differing or 'none'}")
