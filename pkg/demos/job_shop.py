"""Job shop: chains of operations on dedicated processors, priced by a DP over slot runs."""
from fractions import Fraction

from powersched import jobshop as js
from powersched.core_types import JobShopInstance, Operation, Processor

# two jobs compete for the same window on P0, so the LP mixes configurations;
# the slot grid grows with the cube of the number of operations, so keep it small
inst = JobShopInstance(
    (Processor(0, 2.0),),
    ((Operation(0, Fraction(0), Fraction(2), Fraction(2)),),
     (Operation(0, Fraction(0), Fraction(2), Fraction(2)),)),
)
res = js.solve_jobshop(inst, epsilon=Fraction(1, 2), seed=5, trials=200, max_windows_per_op=6)
print(f"LP {res.lp.objective:.4f} after {res.lp.iterations} pricing rounds and {res.lp.columns} columns")
print(f"mean {res.report.mean_energy:.4f} (bound {res.report.bell_alpha * res.lp.objective:.4f}), best {res.report.best_energy:.4f}, violations {res.report.violations}")
for (j, k), work in sorted(res.schedule.work_ledger().items()):
    pieces = res.schedule.pieces_of(j, k)
    print(f"  job {j} op {k}: work {work:.3f} in {len(pieces)} pieces between {pieces[0].start:.3f} "
          f"and {pieces[-1].end:.3f}")
