import random
from fractions import Fraction as F

import pytest

from oracles import brute_force_nonmigratory_ip, milp_nonmigratory_ip
from powersched import nonmigratory as nm
from powersched.core_types import JobOnProcessor, Processor, SchedulingInstance
from powersched.oracle import OracleRefusal, ip_nonmigratory


def rand_inst(rng, n, m, horizon=3, max_len=3, max_w=4):
    procs = tuple(Processor(i, rng.choice([1.5, 2.0, 2.5, 3.0])) for i in range(m))
    jobs = []
    for _ in range(n):
        row = []
        for _ in range(m):
            r = rng.randint(0, horizon)
            row.append(JobOnProcessor(F(r), F(r + rng.randint(1, max_len)), F(rng.randint(1, max_w))))
        jobs.append(tuple(row))
    return SchedulingInstance(procs, tuple(jobs))


def check_solution(model, result):
    used = {}
    total = 0.0
    for j, c in result.solution.items():
        total += model.config_energy(c)
        for p in model.atoms_of(c):
            key = (c.processor, int(p))
            assert key not in used, "configurations overlap"
            used[key] = j
    assert sorted(result.solution) == list(range(model.instance.n))
    assert total == pytest.approx(result.value, rel=1e-12)


def test_single_job_closed_form():
    inst = SchedulingInstance.single_processor([(0, 2, 3)], alpha=2.5)
    r = ip_nonmigratory(inst, F(1, 2))
    assert r.value == pytest.approx(3 ** 2.5 / 2 ** 1.5)


def test_disjoint_windows_add_up():
    inst = SchedulingInstance.single_processor([(0, 1, 2), (1, 3, 2)], alpha=2)
    r = ip_nonmigratory(inst, F(1, 2))
    assert r.value == pytest.approx(4 + 2)


@pytest.mark.parametrize("seed", range(12))
def test_matches_brute_force_enumeration(seed):
    rng = random.Random(seed)
    inst = rand_inst(rng, 2, rng.choice([1, 2]))
    model = nm.NonMigratoryModel(inst, F(1))  # K = 8 slots
    r = ip_nonmigratory(inst, model)
    assert r.value == pytest.approx(brute_force_nonmigratory_ip(model), rel=1e-12)
    check_solution(model, r)


@pytest.mark.parametrize("seed", range(8))
def test_matches_milp_and_bounds_lp(seed):
    rng = random.Random(40 + seed)
    inst = rand_inst(rng, 3, 2, horizon=2)
    model = nm.NonMigratoryModel(inst, F(1, 2))  # K = 54
    r = ip_nonmigratory(inst, model)
    assert r.value == pytest.approx(milp_nonmigratory_ip(model), rel=1e-7)
    lp = nm.solve_marginal(model)[0].objective
    assert lp <= r.value + 1e-9
    check_solution(model, r)


def test_permutation_invariance():
    rng = random.Random(3)
    inst = rand_inst(rng, 3, 2, horizon=2)
    flipped = SchedulingInstance(inst.processors, inst.jobs[::-1])
    a = ip_nonmigratory(inst, F(1, 2), with_solution=False).value
    b = ip_nonmigratory(flipped, F(1, 2), with_solution=False).value
    assert a == pytest.approx(b, rel=1e-12)


def test_refuses_beyond_state_budget():
    inst = SchedulingInstance.single_processor([(0, 2, 1), (0, 2, 1), (0, 2, 1)], alpha=2)
    with pytest.raises(OracleRefusal):
        ip_nonmigratory(inst, F(1, 4), max_states=10_000)
