import itertools
import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from powersched import nonmigratory as nm
from powersched.core_types import JobOnProcessor, Processor, SchedulingInstance
from powersched.lp import solve
from powersched.probability import generalized_bell
from powersched.rng import stream
from powersched.schedule import Piece, Schedule


def rand_inst(rng, n, m, horizon=3, max_len=3, max_w=4):
    procs = tuple(Processor(i, rng.choice([1.5, 2.0, 2.5, 3.0])) for i in range(m))
    jobs = []
    for j in range(n):
        row = []
        for i in range(m):
            r = rng.randint(0, horizon)
            row.append(JobOnProcessor(F(r), F(r + rng.randint(1, max_len)), F(rng.randint(1, max_w))))
        jobs.append(tuple(row))
    return SchedulingInstance(procs, tuple(jobs))


def all_configurations(model):
    return [nm.Configuration(j, i, s) for (i, j) in model.pairs for q in range(1, model.K + 1)
            for s in itertools.combinations(range(model.K), q)]


def test_compact_counts_and_value_single_job():
    inst = SchedulingInstance.single_processor([(0, 1, 2)], alpha=2)
    model = nm.NonMigratoryModel(inst, F(1, 2))
    lp, idx = nm.build_compact_lp(model, link_z_to_y=False)
    assert len(idx.y) == 2 and len(idx.z) == 4
    assert lp.n_rows == 1 + 2 + 2
    sol = solve(lp)
    assert sol.objective == pytest.approx(4.0)
    linked, _ = nm.build_compact_lp(model)
    assert linked.n_rows == 5 + 4


def test_energy_constants_strictly_decreasing():
    model = nm.NonMigratoryModel(rand_inst(random.Random(1), 2, 2), F(1, 2))
    for table in model.energy_table.values():
        assert np.all(np.diff(table) < 0)


@pytest.mark.parametrize("seed", range(8))
def test_compact_matches_enumerated_configuration_lp(seed):
    rng = random.Random(seed)
    inst = rand_inst(rng, 2, 2)
    model = nm.NonMigratoryModel(inst, F(9, 10))
    sol, idx = nm.solve_compact(model)
    full = solve(nm.configuration_lp(model, all_configurations(model)))
    assert sol.objective == pytest.approx(full.objective, abs=1e-6)
    dist = nm.extract_configurations(model, sol, idx)
    assert dist.lp_value() == pytest.approx(sol.objective, abs=1e-6)
    assert dist.validate() == []
    res, d2 = nm.solve_configuration_lp(model)
    assert res.objective == pytest.approx(full.objective, abs=1e-6)
    assert d2.validate() == []


def test_unlinked_compact_lp_can_be_weaker():
    # found by a sweep: without z <= y the relaxation undercuts the configuration LP
    rng = random.Random(13)
    inst = rand_inst(rng, 2, rng.randint(1, 2))
    eps = F(rng.choice([80, 85, 90, 95, 99]), 100)
    model = nm.NonMigratoryModel(inst, eps)
    loose = solve(nm.build_compact_lp(model, link_z_to_y=False)[0]).objective
    tight = solve(nm.build_compact_lp(model)[0]).objective
    full = solve(nm.configuration_lp(model, all_configurations(model))).objective
    assert tight == pytest.approx(full, abs=1e-6)
    assert loose < full - 1e-3


def test_extraction_preserves_marginals():
    inst = rand_inst(random.Random(3), 2, 2)
    model = nm.NonMigratoryModel(inst, F(9, 10))
    sol, idx = nm.solve_compact(model)
    dist = nm.extract_configurations(model, sol, idx)
    y = {}
    z = {}
    for j, opts in dist.choices.items():
        for c, p in opts:
            y[(c.processor, j, c.q)] = y.get((c.processor, j, c.q), 0) + p
            for t in c.slots:
                z[(c.processor, j, c.q, t)] = z.get((c.processor, j, c.q, t), 0) + p
    for key, col in idx.y.items():
        assert y.get(key, 0.0) == pytest.approx(max(sol.x[col], 0), abs=1e-7)
    for key, col in idx.z.items():
        assert z.get(key, 0.0) == pytest.approx(max(sol.x[col], 0), abs=1e-7)


def test_integral_solution_gives_single_configuration():
    inst = SchedulingInstance.single_processor([(0, 2, 1), (2, 4, 1)], alpha=2)
    model = nm.NonMigratoryModel(inst, F(1, 2))
    sol, idx = nm.solve_compact(model)
    dist = nm.extract_configurations(model, sol, idx)
    assert all(len(opts) == 1 and opts[0][1] == pytest.approx(1) for opts in dist.choices.values())


def test_rounding_single_config_and_determinism():
    inst = SchedulingInstance.single_processor([(0, 1, 2)], alpha=2)
    res = nm.solve_and_round(inst, F(1, 4), seed=3, trials=20)
    assert np.all(res.energies == pytest.approx(4.0))
    again = nm.solve_and_round(inst, F(1, 4), seed=3, trials=20)
    assert np.array_equal(res.choices, again.choices)
    assert res.report.ratio_mean == pytest.approx(1.0)
    assert res.report.guarantee_factor is None


def test_rounding_frequencies_match_probabilities():
    model = nm.NonMigratoryModel(SchedulingInstance.single_processor([(0, 1, 1)], alpha=2), F(1, 2))
    a = nm.Configuration(0, 0, (0,))
    b = nm.Configuration(0, 0, (0, 1))
    dist = nm.ConfigDistribution(model, {0: [(a, 0.3), (b, 0.7)]})
    rounder = nm.Rounder(dist)
    N = 20000
    picks = rounder.draws(11, N)[:, 0]
    freq = (picks == 0).mean()
    assert abs(freq - 0.3) < 3 * math.sqrt(0.3 * 0.7 / N)


def test_draws_independent_across_jobs():
    model = nm.NonMigratoryModel(SchedulingInstance.single_processor([(0, 1, 1), (0, 1, 1)], alpha=2), F(1, 2))
    a0, a1 = nm.Configuration(0, 0, (0,)), nm.Configuration(0, 0, (1,))
    b0, b1 = nm.Configuration(1, 0, (0,)), nm.Configuration(1, 0, (1,))
    dist = nm.ConfigDistribution(model, {0: [(a0, 0.5), (a1, 0.5)], 1: [(b0, 0.5), (b1, 0.5)]})
    picks = nm.Rounder(dist).draws(5, 20000)
    corr = np.corrcoef(picks[:, 0], picks[:, 1])[0, 1]
    assert abs(corr) < 3 / math.sqrt(20000)


def test_assembly_collision_speed_and_energy():
    inst = SchedulingInstance.single_processor([(0, 1, 1), (0, 1, 2)], alpha=2)
    model = nm.NonMigratoryModel(inst, F(1, 2))  # K = 16 slots of 1/16
    assign = [nm.Configuration(0, 0, tuple(range(16))), nm.Configuration(1, 0, tuple(range(8)))]
    sched = nm.assemble_schedule(model, assign)
    # first half: speeds 1 + 4 collide -> 5; second half: job 0 alone at 1
    assert {round(p.speed, 9) for p in sched.pieces} == {5.0, 1.0}
    assert sched.energy() == pytest.approx(0.5 * 25 + 0.5 * 1)
    assert sched.energy() == pytest.approx(nm.atom_energy(model, assign))
    assert nm.Rounder(nm.ConfigDistribution(model, {0: [(assign[0], 1.0)], 1: [(assign[1], 1.0)]})).energies(
        np.array([[0, 0]]))[0] == pytest.approx(sched.energy())
    ledger = sched.work_ledger()
    assert ledger[(0, None)] == pytest.approx(1) and ledger[(1, None)] == pytest.approx(2)


def test_energy_of_pieces():
    assert Schedule((2.0,), []).energy() == 0
    assert Schedule((2.0,), [Piece(0, 0, 0.0, 2.0, 3.0)]).energy() == pytest.approx(18)


@pytest.mark.parametrize("seed", range(5))
def test_random_schedule_energy_two_ways(seed):
    rng = random.Random(seed)
    inst = rand_inst(rng, 3, 2)
    model = nm.NonMigratoryModel(inst, F(1, 1))
    assign = []
    for j in range(3):
        i = rng.randrange(2)
        q = rng.randint(1, model.K)
        assign.append(nm.Configuration(j, i, tuple(sorted(rng.sample(range(model.K), q)))))
    sched = nm.assemble_schedule(model, assign)
    assert sched.energy() == pytest.approx(nm.atom_energy(model, assign), rel=1e-12)
    assert nm.check_schedule(sched, nm.requirements(model, assign)) == []


def test_three_jobs_mean_within_bell_bound():
    rng = random.Random(21)
    inst = rand_inst(rng, 3, 2, horizon=2)
    inst = SchedulingInstance(tuple(Processor(i, 2.0) for i in range(2)), inst.jobs)
    res = nm.solve_and_round(inst, F(1, 4), seed=9, trials=500)
    r = res.report
    assert r.mean_energy <= generalized_bell(2.0) * r.lp_value + 3 * r.stderr
    assert r.guarantee_factor == pytest.approx(((1 + 1 / 3) * 3) ** 2 * 2)
    assert r.violations == []
    assert r.best_energy >= r.lp_value - 1e-9


@pytest.mark.parametrize("seed", range(8))
def test_marginal_lp_matches_enumerated_configuration_lp(seed):
    rng = random.Random(100 + seed)
    inst = rand_inst(rng, 2, 2)
    model = nm.NonMigratoryModel(inst, F(9, 10))
    full = solve(nm.configuration_lp(model, all_configurations(model)))
    sol, dist = nm.solve_marginal(model)
    assert sol.objective == pytest.approx(full.objective, abs=1e-6)
    assert dist.lp_value() == pytest.approx(full.objective, abs=1e-6)
    assert dist.validate() == []


def test_systematic_sets_reproduce_marginals():
    rng = np.random.default_rng(3)
    for _ in range(50):
        v = rng.random(9)
        v[rng.random(9) < 0.2] = 1.0
        parts = nm.systematic_sets(v)
        assert sum(w for _, w in parts) == pytest.approx(1.0)
        freq = np.zeros(9)
        for s, w in parts:
            freq[list(s)] += w
        np.testing.assert_allclose(freq, v, atol=1e-12)
        q = math.floor(v.sum() + 1e-12)
        assert {len(s) for s, _ in parts} <= {q, q + 1}
        mass_big = sum(w for s, w in parts if len(s) == q + 1)
        assert mass_big == pytest.approx(v.sum() - q, abs=1e-12)


def test_auto_uses_marginal_lp_for_large_grids():
    inst = rand_inst(random.Random(4), 4, 2, horizon=5)
    model = nm.NonMigratoryModel(inst, F(1, 4))
    assert model.K == 256
    dist, used = nm.solve_lp(model)
    assert used == "marginal"
    assert dist.validate() == []
