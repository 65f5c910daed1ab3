"""Run the shipped 20-instance plan and summarize the sandwich LP <= IP <= best."""
import csv
import io
from pathlib import Path

from powersched import experiment as ex

plan = ex.load_plan(Path(__file__).parent.parent / "plans" / "smoke20.json")
rows, timings = ex.run_plan(plan)
for r in csv.DictReader(io.StringIO(ex.write_csv(rows))):
    print(f"{r['instance']:<18} lp={r['lp']:<12} ip={r['ip']:<12} best={r['best_energy']:<12} ok={r['checks_ok']}")
print(f"total solve time {sum(t['solve_seconds'] for t in timings):.2f}s")
