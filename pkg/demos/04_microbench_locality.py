"""The repetitive-copy micro-benchmark: each worker repeatedly copies its
part of the input array to the output array.  The localised variant first
copies the part into a worker-allocated buffer whose home cache is the
worker's own tile, then streams from that.

The one-time copy-in costs something, so the localised variant pays off
more and more as the number of repetitions grows.

Run:  python demos/04_microbench_locality.py
"""

from nucasim import WorkloadSpec, run_experiment
from nucasim.addrspace import HASH_NONE
from nucasim.harness import STATIC

N = 2 ** 16
M = 63

print(f"repetitive copy, n = {N}, m = {M} threads, local homing, "
      f"static mapping\n")
print(f"{'reps':>5} {'non-localised':>15} {'localised':>15} {'ratio':>7}")

for reps in (1, 2, 4, 8, 16):
    plain = run_experiment(
        WorkloadSpec("microbench", n=N, m=M, reps=reps, rng_seed=1),
        STATIC, HASH_NONE)
    local = run_experiment(
        WorkloadSpec("microbench", n=N, m=M, reps=reps, localised=True, rng_seed=1),
        STATIC, HASH_NONE)
    ratio = plain.total_cycles / local.total_cycles
    print(f"{reps:>5} {plain.total_cycles:>15,} {local.total_cycles:>15,} "
          f"{ratio:>7.3f}")

print("\nthe ratio climbs with reps: the copy-in is amortised away")
