"""The eight-case design matrix on a desk-sized merge sort: one parameter
changes at a time on the way from the conventional style (case 1) to the
fully localised one (case 8).

Sizes here are small so the demo finishes in well under a minute; the
qualitative picture (localised + static mapping + local homing wins)
matches the full-scale runs in the acceptance suite.

Run:  python demos/03_eight_cases.py
"""

from nucasim import CASES, WorkloadSpec, run_case

N = 2 ** 15
M = 64

print(f"merge sort, n = {N}, m = {M} threads, striping on, seed 1\n")
print(f"{'case':>4} {'policy':>13} {'mapper':>7} {'hash':>13} "
      f"{'cycles':>13} {'migrations':>10}")

rows = []
for case_id in range(1, 9):
    spec = WorkloadSpec("mergesort", n=N, m=M, rng_seed=1)
    row = run_case(case_id, spec, striping=True)
    c = CASES[case_id]
    rows.append(row)
    print(f"{case_id:>4} {'localised' if c.localised else 'non-localised':>13} "
          f"{c.mapper:>7} {c.hash_mode:>13} {row.total_cycles:>13,} "
          f"{row.migrations:>10}")

best = min(rows, key=lambda r: r.total_cycles)
print(f"\nbest case: {best.case} "
      f"({'localised' if best.localised else 'non-localised'}, "
      f"{best.mapper} mapping, hash={best.hash_mode})")
