"""End-to-end acceptance checks, one test per criterion.

Each test records a single verdict line (shown in the terminal summary) and
then asserts, so a failing criterion is both reported and counted.
"""
import itertools
import math
import random
import time
import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from conftest import VERDICTS
from oracles import brute_force_jobshop_price, lp_vertex_enumeration
from powersched import jobshop as js
from powersched import migratory as mg
from powersched import nonmigratory as nm
from powersched import routing as rt
from powersched import single_nonpreemptive as sn
from powersched.cli import main
from powersched.core_types import SchedulingInstance
from powersched.generators import GenSpec, generate
from powersched.lp import LinearProgram, solve
from powersched.oracle import OracleRefusal, continuous_single_processor, ip_nonmigratory, ip_routing
from powersched.probability import check_inequalities, generalized_bell
from powersched.schedule import check_non_preemptive
from test_jobshop import CHAIN, TWO_SINGLE_OPS, shop
from test_lp import random_lp
from test_nonmigratory import all_configurations, rand_inst as rand_nonmig
from test_migratory import rand_inst as rand_mig
from test_routing import PARALLEL

PLANS = __import__("pathlib").Path(__file__).parent.parent / "plans"


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_bell_numbers():
    table = {1.11: 1.07, 1.62: 1.49, 1.66: 1.54, 2.0: 2.00, 2.5: 3.08, 3.0: 5.00}
    t0 = time.perf_counter()
    got = {a: generalized_bell(a) for a in table}
    elapsed = time.perf_counter() - t0
    worst = max(abs(got[a] - v) for a, v in table.items())
    exact = abs(got[2.0] - 2) < 1e-12 and abs(got[3.0] - 5) < 1e-12
    verdict(1, worst <= 0.01 and exact and elapsed < 1,
            f"max deviation {worst:.4f} <= 0.01, integer alphas exact, {elapsed:.3f}s < 1s")


def test_criterion_2_inequality_suite():
    t0 = time.perf_counter()
    rows = check_inequalities(samples=100_000, seed=0, tol=1e-9)
    elapsed = time.perf_counter() - t0
    props = sorted({r.proposition for r in rows})
    failed = [r for r in rows if not r.passed]
    verdict(2, not failed and len(props) >= 5 and elapsed < 60,
            f"{len(rows)} rows over {props}, {len(failed)} failed, {elapsed:.1f}s < 60s")


def test_criterion_3_lp_against_vertex_enumeration():
    rng = random.Random(2024)
    worst_obj = worst_gap = 0.0
    mismatched = 0
    for _ in range(200):
        c, A, senses, b, lb, ub = random_lp(rng)
        sol = solve(LinearProgram.from_arrays(c, A, senses, b, lb, ub))
        ref = lp_vertex_enumeration(c, A, senses, b, lb, ub)
        if ref is None:
            mismatched += sol.status != "infeasible"
            continue
        if sol.status != "optimal":
            mismatched += 1
            continue
        worst_obj = max(worst_obj, abs(sol.objective - ref))
        worst_gap = max(worst_gap, abs(sol.dual_objective - sol.objective))
    verdict(3, mismatched == 0 and worst_obj <= 1e-7 and worst_gap <= 1e-7,
            f"200 LPs, status mismatches {mismatched}, max |obj - ref| {worst_obj:.1e} <= 1e-7, "
            f"max duality gap {worst_gap:.1e}")


def test_criterion_4_compact_and_configuration_lps_agree():
    rng = random.Random(404)
    worst_extract = worst_full = 0.0
    for k in range(50):
        inst = rand_nonmig(rng, 2, 2) if k % 2 else rand_nonmig(rng, 2, 1, max_len=2)
        model = nm.NonMigratoryModel(inst, F(9, 10))
        sol, idx = nm.solve_compact(model)
        dist = nm.extract_configurations(model, sol, idx)
        full = solve(nm.configuration_lp(model, all_configurations(model)))
        worst_extract = max(worst_extract, abs(dist.lp_value() - sol.objective))
        worst_full = max(worst_full, abs(full.objective - sol.objective))
    verdict(4, worst_extract <= 1e-6 and worst_full <= 1e-6,
            f"50 instances, extraction drift {worst_extract:.1e}, enumeration gap {worst_full:.1e} <= 1e-6")


def test_criterion_5_sandwich_and_rounding_bound():
    t0 = time.perf_counter()
    accepted, refused, seed = 0, 0, 0
    sandwich_bad, bound_bad = [], []
    while accepted < 100:
        spec = GenSpec(kind="nonmigratory", n=1 + seed % 4, m=1 + (seed // 4) % 2, horizon=4,
                       alpha_range=(1.5, 3.0), window_family=("random", "nested", "agreeable")[seed % 3],
                       restricted=0.3 if seed % 5 == 0 else 0.0, seed=5000 + seed)
        seed += 1
        inst = generate(spec)
        model = nm.NonMigratoryModel(inst, F(1, 4))
        try:
            ip = ip_nonmigratory(inst, model, with_solution=False).value
        except OracleRefusal:
            refused += 1
            continue
        accepted += 1
        dist, _ = nm.solve_lp(model)
        lp = dist.lp_value()
        rounder = nm.Rounder(dist)
        energies = rounder.energies(rounder.draws(seed, 500))
        slack = 1e-6 * max(1.0, ip)
        if not (lp <= ip + slack and np.all(energies >= ip - slack)):
            sandwich_bad.append(spec.seed)
        se = energies.std(ddof=1) / math.sqrt(energies.size)
        if energies.mean() > generalized_bell(max(model.alphas)) * lp + 3 * se + 1e-9:
            bound_bad.append(spec.seed)
    elapsed = time.perf_counter() - t0
    verdict(5, not sandwich_bad and not bound_bad and elapsed < 600,
            f"100 instances ({refused} refused by the oracle and replaced), sandwich failures {sandwich_bad}, "
            f"mean > B*LP+3se on {bound_bad}, {elapsed:.0f}s < 600s")


def test_criterion_6_migratory_exactness():
    rng = random.Random(606)
    worst = 0.0
    for _ in range(30):
        inst = rand_mig(rng, 2, 2, max_w=2)
        res = mg.solve_migratory(inst, 1.0)
        worst = max(worst, abs(res.lp_value - mg.enumerated_lp_value(mg.MigratoryModel(inst, 1.0))))
    single_ok = True
    for delta, (w, length, alpha) in itertools.product([0.05, 0.01], [(2, 1, 2.0), (3, 2, 3.0), (1, 3, 1.5)]):
        inst = SchedulingInstance.single_processor([(0, length, w)], alpha=alpha)
        value = mg.solve_migratory(inst, delta).lp_value
        closed = mg.continuous_single_job(w, length, alpha)
        single_ok &= closed - 1e-9 <= value <= (1 + delta) ** alpha * closed + 1e-9
    verdict(6, worst <= 1e-6 and single_ok,
            f"30 instances, colgen vs enumeration max gap {worst:.1e} <= 1e-6, "
            f"single job within (1+delta)^alpha: {single_ok}")


def test_criterion_7_single_processor_non_preemptive():
    bad, bound_bad, checked = [], [], 0
    for s in range(200):
        n = 1 + s % 3
        alpha = (1.5, 2.0, 2.5, 3.0)[s % 4]
        spec = GenSpec(kind="single", n=n, horizon=4 + s % 3, alpha_range=(alpha, alpha),
                       window_family=("random", "nested", "agreeable")[s % 3], seed=7000 + s)
        inst = generate(spec)
        eps = F(1, 4)
        res = sn.solve_single(inst, alpha, eps, seed=s, trials=200 if n == 3 else 20)
        if res.report.violations or check_non_preemptive(res.schedule):
            bad.append(spec.seed)
        if n == 3:
            checked += 1
            opt = continuous_single_processor(sn._jobs(inst), alpha).value
            if res.schedule.energy() > sn.guarantee_factor(3, eps, alpha) * opt + 1e-9:
                bound_bad.append(spec.seed)
    verdict(7, not bad and not bound_bad,
            f"200 instances, infeasible or preemptive {bad}; {checked} three-job instances, "
            f"best-of-200 above the factor times the continuous optimum on {bound_bad}")


def test_criterion_8_job_shop():
    rng = np.random.default_rng(808)
    mismatches = 0
    for inst in (TWO_SINGLE_OPS, CHAIN):
        model = js.JobShopModel(inst, F(1), max_windows_per_op=4)
        for _ in range(250):
            kappa = [rng.exponential(rng.choice([0.05, 0.5, 3.0]), pa.count) * (rng.random(pa.count) < 0.6)
                     for pa in model.grids.atoms]
            for j in range(inst.n):
                got = js.best_configuration(model, j, kappa)[1]
                mismatches += not math.isclose(got, brute_force_jobshop_price(model, j, kappa),
                                               rel_tol=1e-9, abs_tol=1e-9)
    infeasible, means = 0, []
    # a chain that exercises precedence, and two jobs competing for one window (fractional LP)
    for chains in ([[(0, 0, 2, 1), (1, 1, 3, 1)], [(1, 0, 2, 2)]], [[(0, 0, 2, 2)], [(0, 0, 2, 2)]]):
        model = js.JobShopModel(shop(chains, alphas=(2.0, 2.0)), F(1, 2), max_windows_per_op=6)
        lp = js.solve_jobshop_lp(model)
        rounder = js.JobShopRounder(lp.distribution)
        energies = []
        for seed in range(200):
            row = rounder.draws(seed, 1)[0]
            sched = js.assemble_jobshop(model, rounder.assignment(row))
            infeasible += bool(js.check_jobshop(model, sched))
            energies.append(sched.energy())
        energies = np.array(energies)
        se = energies.std(ddof=1) / math.sqrt(energies.size)
        means.append((energies.mean(), generalized_bell(2.0) * lp.objective + 3 * se))
    shown = ", ".join(f"{m:.3f} <= {b:.3f}" for m, b in means)
    verdict(8, mismatches == 0 and infeasible == 0 and all(m <= b for m, b in means),
            f"500 dual vectors, {mismatches} pricer mismatches; 2 x 200 seeds, {infeasible} infeasible; "
            f"mean vs B*LP+3se: {shown}")


def test_criterion_9_routing():
    relax = rt.solve_relaxation(PARALLEL)
    expected = rt.expected_energy(rt.flow_decompose(relax))
    fixture_ok = expected <= generalized_bell(2.0) * relax.lower_bound + 1e-9
    edge_bad, sandwich_bad = [], []
    for s in range(50):
        spec = GenSpec(kind="routing", n=1 + s % 3, m=5, extra_edges=3 + s % 3, alpha_range=(1.5, 3.0),
                       bandwidth=1 + s % 2, directed=s % 4 != 0, seed=9000 + s)
        inst = generate(spec)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = rt.solve_and_round_routing(inst, seed=s, trials=2000)
        if not res.report.per_edge_ok:
            edge_bad.append(spec.seed)
        if res.relaxation.lower_bound > ip_routing(inst).value + 1e-6:
            sandwich_bad.append(spec.seed)
    verdict(9, fixture_ok and not edge_bad and not sandwich_bad,
            f"parallel fixture {expected:g} <= {generalized_bell(2.0) * relax.lower_bound:g}; 50 graphs, "
            f"per-edge bound broken on {edge_bad}, relaxation above IP on {sandwich_bad}")


def test_criterion_10_experiment_reproducible(tmp_path, monkeypatch):
    outputs = []
    for k, threads in enumerate(["1", "1", "3"]):
        monkeypatch.setenv("POWERSCHED_THREADS", threads)
        out = tmp_path / f"run{k}.csv"
        assert main(["experiment", "--plan", str(PLANS / "smoke20.json"), "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    same = outputs[0] == outputs[1] == outputs[2]
    verdict(10, same, f"3 runs of the 20-instance plan (1, 1 and 3 workers) byte-identical: {same}")
