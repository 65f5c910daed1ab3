"""One processor, no preemption: a preemptive rounded schedule re-sequenced by EDF."""
from powersched import single_nonpreemptive as sn
from powersched.oracle import continuous_single_processor
from powersched.schedule import check_non_preemptive

jobs = [(0, 3, 2), (1, 4, 1), (2, 6, 3)]
alpha = 2.0
res = sn.solve_single(jobs, alpha, epsilon=0.25, seed=1, trials=200)
opt = continuous_single_processor(jobs, alpha).value
print(f"interval partition breakpoints: {[str(t) for t in res.partition.breakpoints]}")
print(f"continuous optimum {opt:.4f}, LP {res.report.lp_value:.4f}, best schedule {res.schedule.energy():.4f}")
for p in sorted(res.schedule.pieces, key=lambda p: p.start):
    print(f"  job {p.job}: ({p.start:.3f}, {p.end:.3f}] at speed {p.speed:.3f}")
print("non-preemptive:", not check_non_preemptive(res.schedule))
