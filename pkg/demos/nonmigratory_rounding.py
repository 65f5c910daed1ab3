"""Heterogeneous processors without migration: LP, rounding and the exact optimum."""
from fractions import Fraction

from powersched import nonmigratory as nm
from powersched.generators import GenSpec, generate
from powersched.oracle import ip_nonmigratory

inst = generate(GenSpec(kind="nonmigratory", n=3, m=2, horizon=4, alpha_range=(2.0, 3.0), seed=11))
for j, row in enumerate(inst.jobs):
    print(f"job {j}: " + ", ".join(f"P{i} ({e.release},{e.deadline}] w={e.work}" for i, e in enumerate(row)))

res = nm.solve_and_round(inst, epsilon=Fraction(1, 4), seed=3, trials=500)
rep = res.report
ip = ip_nonmigratory(inst, res.model, with_solution=False).value
print(f"LP {rep.lp_value:.4f} <= IP {ip:.4f} <= best of {rep.trials} trials {rep.best_energy:.4f}")
print(f"mean {rep.mean_energy:.4f} +- {rep.stderr:.4f}, bound B*LP = {rep.bell_alpha * rep.lp_value:.4f}")
print("chosen configurations:")
for c in res.best_assignment:
    print(f"  job {c.job} on P{c.processor} using {len(c.slots)} of {res.model.K} slots")
