import math
import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from oracles import brute_force_jobshop_ip, brute_force_jobshop_price, jobshop_all_configurations
from powersched import jobshop as js
from powersched.core_types import JobShopInstance, Operation, Processor
from powersched.lp import SparseProgram, EQ, LE, solve_sparse
from powersched.oracle import OracleRefusal, ip_jobshop
from powersched.probability import generalized_bell


def shop(chains, alphas=(2.0,), name=""):
    procs = tuple(Processor(i, a) for i, a in enumerate(alphas))
    jobs = tuple(tuple(Operation(p, F(r), F(d), F(w)) for p, r, d, w in chain) for chain in chains)
    return JobShopInstance(procs, jobs, name)


TWO_SINGLE_OPS = shop([[(0, 0, 2, 1)], [(0, 1, 3, 2)]])
CHAIN = shop([[(0, 0, 1, 1), (1, 1, 2, 1)]], alphas=(2.0, 3.0))


def enumerated_lp(model):
    """Configuration LP with every column of every job (tiny models only)."""
    sp = SparseProgram()
    assign = {j: sp.add_row(("assign", j), EQ, 1.0, []) for j in range(model.instance.n)}
    caps = {}
    for j in range(model.instance.n):
        for t, (e, atoms) in enumerate(jobshop_all_configurations(model, j)):
            col = sp.add_column(("c", j, t), e)
            rows = [assign[j]]
            for a in sorted(atoms):
                if a not in caps:
                    caps[a] = sp.add_row(("cap",) + a, LE, 1.0, [])
                rows.append(caps[a])
            sp.add_entries(rows, [col] * len(rows), 1.0)
    return solve_sparse(sp).objective


def test_zero_charges_use_every_slot_of_the_widest_window():
    model = js.JobShopModel(shop([[(0, 0, 2, 3)]]), F(1, 2))
    c, value = js.best_configuration(model, 0, [np.zeros(pa.count) for pa in model.grids.atoms])
    (plan,) = c.plans
    assert plan.window == js.Window(F(0), F(2))
    assert plan.slots == tuple(range(model.K))
    assert value == pytest.approx(9 / 2)


def test_single_operation_two_windows_matches_enumeration():
    model = js.JobShopModel(shop([[(0, 0, 1, 1)]]), F(1), max_windows_per_op=2)
    assert len(model.grids.windows[(0, 0)]) == 2
    rng = np.random.default_rng(0)
    for _ in range(20):
        kappa = [rng.exponential(0.3, pa.count) for pa in model.grids.atoms]
        _, value = js.best_configuration(model, 0, kappa)
        assert value == pytest.approx(brute_force_jobshop_price(model, 0, kappa), abs=1e-9)


def test_low_dual_prices_nothing():
    model = js.JobShopModel(TWO_SINGLE_OPS, F(1))
    zero = [np.zeros(pa.count) for pa in model.grids.atoms]
    cheapest = js.best_configuration(model, 0, zero)[1]
    c, rc = js.price_job(model, 0, cheapest - 1e-3, zero)
    assert c is None and rc > 0
    c, rc = js.price_job(model, 0, cheapest + 1.0, zero)
    assert c is not None and rc == pytest.approx(-1.0)


@pytest.mark.parametrize("inst", [TWO_SINGLE_OPS, CHAIN], ids=["two-jobs", "chain"])
def test_pricer_matches_brute_force_on_random_duals(inst):
    model = js.JobShopModel(inst, F(1), max_windows_per_op=4)
    rng = np.random.default_rng(7)
    for _ in range(60):
        kappa = [rng.exponential(rng.choice([0.05, 0.5, 3.0]), pa.count) * (rng.random(pa.count) < 0.6)
                 for pa in model.grids.atoms]
        for j in range(model.instance.n):
            c, value = js.best_configuration(model, j, kappa)
            assert value == pytest.approx(brute_force_jobshop_price(model, j, kappa), rel=1e-9, abs=1e-9)
            charged = model.config_energy(c) + sum(kappa[i][p] for i, p in model.config_atoms(c))
            assert charged == pytest.approx(value, rel=1e-9, abs=1e-9)


def test_returned_configuration_respects_chain_order():
    model = js.JobShopModel(shop([[(0, 0, 2, 1), (0, 0, 2, 1)]]), F(1, 2), max_windows_per_op=6)
    rng = np.random.default_rng(1)
    for _ in range(20):
        kappa = [rng.exponential(1.0, pa.count) for pa in model.grids.atoms]
        c, _ = js.best_configuration(model, 0, kappa)
        a, b = c.plans
        end_a = model.slot_ticks(a.window)[a.slots[-1] + 1]
        start_b = model.slot_ticks(b.window)[b.slots[0]]
        assert end_a <= start_b


def test_one_job_one_operation_is_the_closed_form():
    res = js.solve_jobshop(shop([[(0, 0, 2, 3)]]), F(1, 2), seed=0, trials=10)
    assert res.report.lp_value == pytest.approx(9 / 2)
    assert np.all(res.energies == pytest.approx(9 / 2))
    assert res.report.violations == []


def test_disjoint_windows_give_integral_lp():
    res = js.solve_jobshop(shop([[(0, 0, 1, 1)], [(0, 1, 2, 2)]]), F(1, 2), seed=0, trials=20)
    assert res.report.lp_value == pytest.approx(1 + 4)
    assert res.report.ratio_mean == pytest.approx(1.0)
    assert all(len(opts) == 1 for opts in res.lp.distribution.choices.values())


@pytest.mark.parametrize("inst", [TWO_SINGLE_OPS, CHAIN], ids=["two-jobs", "chain"])
def test_column_generation_matches_full_enumeration(inst):
    model = js.JobShopModel(inst, F(1), max_windows_per_op=3 if inst is TWO_SINGLE_OPS else 2)
    lp = js.solve_jobshop_lp(model)
    assert lp.status == "optimal"
    assert lp.objective == pytest.approx(enumerated_lp(model), abs=1e-6)
    assert lp.distribution.lp_value() == pytest.approx(lp.objective, abs=1e-6)


def test_rounded_schedules_are_feasible_over_many_seeds():
    inst = shop([[(0, 0, 2, 1), (1, 1, 3, 1)], [(1, 0, 2, 2)]], alphas=(2.0, 2.0))
    model = js.JobShopModel(inst, F(1, 2), max_windows_per_op=6)
    lp = js.solve_jobshop_lp(model)
    rounder = js.JobShopRounder(lp.distribution)
    choices = rounder.draws(11, 200)
    energies = rounder.energies(choices)
    for row, e in zip(choices, energies):
        sched = js.assemble_jobshop(model, rounder.assignment(row))
        assert js.check_jobshop(model, sched) == []
        assert sched.energy() == pytest.approx(e, rel=1e-9)
    mean, se = energies.mean(), energies.std(ddof=1) / math.sqrt(energies.size)
    assert mean <= generalized_bell(2.0) * lp.objective + 3 * se


def test_collisions_inside_an_atom_keep_chain_order():
    inst = shop([[(0, 0, 1, 1), (1, 1, 2, 1)], [(0, 0, 1, 1)]], alphas=(2.0, 2.0))
    model = js.JobShopModel(inst, F(1, 2), max_windows_per_op=1)
    w0 = model.grids.windows[(0, 0)][0]
    w1 = model.grids.windows[(0, 1)][0]
    full = tuple(range(model.K))
    a = js.JobShopConfiguration(0, (js.OperationPlan(w0, full), js.OperationPlan(w1, full)))
    b = js.JobShopConfiguration(1, (js.OperationPlan(w0, full),))
    sched = js.assemble_jobshop(model, [a, b])
    assert js.check_jobshop(model, sched) == []
    # both unit jobs share (0, 1] at speed 2: 2 * 2^2 on processor 0, 1 on processor 1
    assert sched.energy() == pytest.approx(4 * 1 + 1)


def test_guarantee_factor_needs_three_operations():
    model = js.JobShopModel(shop([[(0, 0, 2, 1), (0, 0, 2, 1), (0, 0, 2, 1)]]), F(1, 4), max_windows_per_op=2)
    expected = ((1.25) * (1 + 2 / 1) * (1 + 1 / 3)) ** 2 * 2
    assert model.guarantee_factor() == pytest.approx(expected)
    assert js.JobShopModel(CHAIN, F(1, 2)).guarantee_factor() is None


def test_chain_alignment_flag():
    inst = shop([[(0, 1, 5, 1), (0, 0, 4, 1)]])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fixed = js.normalize_chains(inst)
    assert caught
    assert fixed.jobs[0][1].release == 1 and fixed.jobs[0][0].deadline == 4
    with pytest.raises(ValueError):
        js.normalize_chains(inst, "reject")


def test_ip_oracle_matches_brute_force_and_sandwich():
    model = js.JobShopModel(TWO_SINGLE_OPS, F(1), max_windows_per_op=3)
    ip = ip_jobshop(TWO_SINGLE_OPS, model)
    assert ip.value == pytest.approx(brute_force_jobshop_ip(model), rel=1e-12)
    lp = js.solve_jobshop_lp(model)
    assert lp.objective <= ip.value + 1e-9
    sched = js.assemble_jobshop(model, [ip.solution[j] for j in range(2)])
    assert js.check_jobshop(model, sched) == []
    assert sched.energy() == pytest.approx(ip.value)
    rounder = js.JobShopRounder(lp.distribution)
    assert np.all(rounder.energies(rounder.draws(3, 100)) >= ip.value - 1e-9)


def test_ip_oracle_single_job_and_disjoint_windows():
    one = shop([[(0, 0, 2, 3)]])
    assert ip_jobshop(one, F(1, 2)).value == pytest.approx(9 / 2)
    two = shop([[(0, 0, 1, 1)], [(0, 1, 2, 2)]])
    assert ip_jobshop(two, F(1, 2)).value == pytest.approx(5)


def test_ip_oracle_refuses_when_budget_is_small():
    with pytest.raises(OracleRefusal):
        ip_jobshop(TWO_SINGLE_OPS, F(1), max_combinations=3)


def test_processor_without_operations_is_harmless():
    inst = shop([[(0, 0, 1, 1)]], alphas=(2.0, 3.0))
    lp = js.solve_jobshop_lp(js.JobShopModel(inst, F(1)))
    assert lp.status == "optimal"
    assert lp.objective == pytest.approx(1)
