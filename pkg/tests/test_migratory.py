import random
from fractions import Fraction as F

import numpy as np
import pytest

from oracles import brute_force_migratory_price
from powersched import migratory as mg
from powersched.core_types import JobOnProcessor, Processor, SchedulingInstance
from powersched.discretize import geometric_grid


def rand_inst(rng, n, m, horizon=3, max_len=3, max_w=3, alphas=(1.5, 2.0, 2.5, 3.0)):
    procs = tuple(Processor(i, rng.choice(alphas)) for i in range(m))
    jobs = []
    for _ in range(n):
        row = []
        for _ in range(m):
            r = rng.randint(0, horizon)
            row.append(JobOnProcessor(F(r), F(r + rng.randint(1, max_len)), F(rng.randint(1, max_w))))
        jobs.append(tuple(row))
    return SchedulingInstance(procs, tuple(jobs))


def one_job(w, length, alpha=2.0):
    return SchedulingInstance.single_processor([(0, length, w)], alpha=alpha)


def test_zero_duals_price_nothing():
    model = mg.MigratoryModel(rand_inst(random.Random(0), 2, 2), 0.5)
    for k in range(len(model.intervals)):
        c, rc = mg.price_interval(model, k, [0.0, 0.0], 0.0)
        assert c is None and rc == 0.0


def test_single_job_price_hand_value():
    inst = one_job(1, 1)
    model = mg.MigratoryModel(inst, 1.0)
    assert list(model.grid.speeds) == [2.0]
    # put v = 1 on the grid explicitly
    model.grid = geometric_grid(0.5, 1.0, 1.0)
    assert 1.0 in model.grid.speeds
    c, rc = mg.price_interval(model, 0, [2.0], 0.0)
    assert c.assignment == ((0, 0, 1.0),)
    assert rc == pytest.approx(-1.0)


@pytest.mark.parametrize("seed", range(10))
def test_pricer_matches_brute_force(seed):
    rng = random.Random(seed)
    inst = rand_inst(rng, 2, 2, alphas=(1.0, 1.5, 2.0, 3.0))
    model = mg.MigratoryModel(inst, 0.7)
    if len(model.grid.speeds) > 6:
        model.grid = geometric_grid(model.grid.s_lb, model.grid.s_lb * 1.7 ** 5, 0.7)
    for _ in range(100):
        lam = [rng.uniform(0, 8) if rng.random() < 0.8 else 0.0 for _ in range(2)]
        mu = rng.uniform(0, 3)
        for k in range(len(model.intervals)):
            c, rc = mg.price_interval(model, k, lam, mu, tol=-np.inf)
            want = brute_force_migratory_price(model, k, lam, mu)
            assert min(rc, mu) == pytest.approx(want, abs=1e-9)
            if c is not None:
                direct = model.power(c) - sum(model.rate(c, j) * lam[j] for j in c.jobs) + mu
                assert direct == pytest.approx(rc, abs=1e-9)


@pytest.mark.parametrize("delta", [0.05, 0.01])
def test_single_job_within_grid_factor(delta):
    res = mg.solve_migratory(one_job(2, 1), delta)
    assert 4.0 <= res.lp_value + 1e-9
    assert res.lp_value <= (1 + delta) ** 2 * 4.0 + 1e-9
    assert mg.validate_fractional(res.schedule).ok


def test_split_across_disjoint_windows():
    inst = SchedulingInstance((Processor(0, 2.0), Processor(1, 2.0)),
                              ((JobOnProcessor(F(0), F(1), F(2)), JobOnProcessor(F(1), F(2), F(2))),))
    delta = 0.05
    res = mg.solve_migratory(inst, delta)
    assert 2.0 - 1e-9 <= res.lp_value <= (1 + delta) ** 2 * 2.0 + 1e-9
    report = mg.validate_fractional(res.schedule)
    assert report.ok, report.violations


@pytest.mark.parametrize("seed", range(12))
def test_column_generation_matches_enumeration(seed):
    rng = random.Random(50 + seed)
    inst = rand_inst(rng, 2, 2, max_w=2)
    model = mg.MigratoryModel(inst, 1.0)
    res = mg.solve_migratory(inst, 1.0)
    assert res.status == "optimal"
    assert res.lp_value == pytest.approx(mg.enumerated_lp_value(model), abs=1e-6)
    report = mg.validate_fractional(res.schedule)
    assert report.ok, report.violations
    assert res.schedule.energy() == pytest.approx(res.lp_value, rel=1e-9)


def test_nested_grids_never_increase_value():
    rng = random.Random(5)
    for _ in range(5):
        inst = rand_inst(rng, 3, 2)
        coarse = mg.solve_migratory(inst, 0.21).lp_value
        fine = mg.solve_migratory(inst, 0.1).lp_value  # 1.1^2 = 1.21: every coarse speed is on the fine grid
        assert fine <= coarse + 1e-7


def test_schedule_pieces_respect_intervals_and_energy():
    inst = rand_inst(random.Random(9), 3, 2)
    res = mg.solve_migratory(inst, 0.1)
    sched = res.schedule.to_schedule()
    assert sched.energy() == pytest.approx(res.lp_value, rel=1e-9)
    for p in sched.pieces:
        e = inst.jobs[p.job][p.processor]
        assert float(e.release) - 1e-9 <= p.start and p.end <= float(e.deadline) + 1e-9
    by_proc = {}
    for p in sorted(sched.pieces, key=lambda p: p.start):
        assert by_proc.get(p.processor, -1) <= p.start + 1e-9
        by_proc[p.processor] = p.end


def _hand_schedule(durations):
    inst = one_job(1, 1)
    model = mg.MigratoryModel(inst, 1.0)
    v = float(model.grid.speeds[0])  # 2.0: half a time unit finishes the job
    c = mg.MigratoryConfiguration(0, ((0, 0, v),))
    return mg.FractionalSchedule(model, [[(c, d) for d in durations]])


def test_validator_flags_overfull_interval():
    fs = _hand_schedule([0.7, 0.7])
    report = mg.validate_fractional(fs)
    assert any("configurations last" in v for v in report.violations)


def test_validator_flags_short_job():
    fs = _hand_schedule([0.45])
    report = mg.validate_fractional(fs)
    assert report.fractions[0] == pytest.approx(0.9)
    assert any("of its work is done" in v for v in report.violations)


def test_document_round_trip_is_json():
    import json
    res = mg.solve_migratory(one_job(2, 1), 0.05)
    doc = json.loads(json.dumps(res.schedule.to_document()))
    assert doc["intervals"][0]["start"] == "0"
