"""The two benchmark programs: a repetitive-copy micro-benchmark and a
fork-join recursive merge sort, each in non-localised and localised forms.

Thread bodies are generators yielding engine effects.  Element values move
through plain Python lists alongside the timing events, so output
correctness is simulated together with performance.
"""

from dataclasses import dataclass
from random import Random

from .engine import (ALLOC, COPY, COPYL, FILL, FORK, FREE, LEAF, READ, WRITE,
                     Program)
from .errors import ConfigurationError, VerificationError

MICROBENCH = "microbench"
MERGESORT = "mergesort"

_VALUE_BITS = 31  # non-negative 32-bit int values


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str
    n: int
    m: int
    reps: int = 1
    localised: bool = False
    intermediate_step: bool = False
    rng_seed: int = 1

    def __post_init__(self):
        if self.kind not in (MICROBENCH, MERGESORT):
            raise ConfigurationError(f"unknown workload kind {self.kind!r}")
        if self.n < 1 or self.m < 1:
            raise ConfigurationError("n and m must be positive")
        if self.reps < 0:
            raise ConfigurationError("reps must be non-negative")


@dataclass
class SimArray:
    """A heap allocation together with its simulated element values."""

    region: object
    values: list

    @property
    def base(self):
        return self.region.base


def generate_input(seed, n):
    rng = Random(seed)
    return [rng.getrandbits(_VALUE_BITS) for _ in range(n)]


# -- access emitters ------------------------------------------------------


def bulk_copy_events(src_addr, dst_addr, count, esz=4, line_size=64):
    """Events for a memcpy of count elements.  Whole cache lines move as
    one read plus one full-line store; ragged edges and copies that are not
    line-co-aligned fall back to element granularity."""
    if count <= 0:
        return
    if (src_addr - dst_addr) % line_size:
        yield (COPY, src_addr, dst_addr, count)
        return
    head_elems = min(count, (-src_addr) % line_size // esz)
    if head_elems:
        yield (COPY, src_addr, dst_addr, head_elems)
    off = head_elems * esz
    n_lines = (count * esz - off) // line_size
    if n_lines:
        yield (COPYL, src_addr + off, dst_addr + off, n_lines)
    tail_off = off + n_lines * line_size
    tail_elems = count - tail_off // esz
    if tail_elems:
        yield (COPY, src_addr + tail_off, dst_addr + tail_off, tail_elems)


def merge_events(avals, aoff, abase, alen, bvals, boff, bbase, blen,
                 dvals, doff, dbase, esz=4):
    """Stable two-way merge (ties take the left run) into dvals/dbase.
    Each source element is read once as its run pointer advances; each
    output element is one write."""
    i = j = k = 0
    if alen and blen:
        yield (READ, abase)
        x = avals[aoff]
        yield (READ, bbase)
        y = bvals[boff]
        while True:
            if x <= y:
                dvals[doff + k] = x
                yield (WRITE, dbase + esz * k)
                k += 1
                i += 1
                if i == alen:
                    dvals[doff + k] = y  # flush the pending right element
                    yield (WRITE, dbase + esz * k)
                    k += 1
                    j += 1
                    break
                yield (READ, abase + esz * i)
                x = avals[aoff + i]
            else:
                dvals[doff + k] = y
                yield (WRITE, dbase + esz * k)
                k += 1
                j += 1
                if j == blen:
                    dvals[doff + k] = x
                    yield (WRITE, dbase + esz * k)
                    k += 1
                    i += 1
                    break
                yield (READ, bbase + esz * j)
                y = bvals[boff + j]
    while i < alen:
        yield (READ, abase + esz * i)
        dvals[doff + k] = avals[aoff + i]
        yield (WRITE, dbase + esz * k)
        i += 1
        k += 1
    while j < blen:
        yield (READ, bbase + esz * j)
        dvals[doff + k] = bvals[boff + j]
        yield (WRITE, dbase + esz * k)
        j += 1
        k += 1


def sort_events(vals, voff, vbase, svals, soff, sbase, length, esz=4):
    """Top-down recursive merge sort over vals[voff:voff+length], emitting
    one effect per element read or written.  vbase is the simulated address
    of vals[voff]; each merge lands in the scratch slice (svals at sbase)
    and is copied back."""
    if length <= 1:
        return
    stack = [(0, length, True)]
    while stack:
        lo, hi, descend = stack.pop()
        if hi - lo <= 1:
            continue
        mid = (lo + hi) // 2
        if descend:
            stack.append((lo, hi, False))
            stack.append((mid, hi, True))
            stack.append((lo, mid, True))
            continue
        yield from merge_events(vals, voff + lo, vbase + esz * lo, mid - lo,
                                vals, voff + mid, vbase + esz * mid, hi - mid,
                                svals, soff + lo, sbase + esz * lo, esz)
        vals[voff + lo:voff + hi] = svals[soff + lo:soff + hi]
        yield from bulk_copy_events(sbase + esz * lo, vbase + esz * lo,
                                    hi - lo, esz)


def serial_mergesort(values):
    """Run the sort emitter over a plain list (no engine); returns the
    sorted list.  Used as the in-memory form of the leaf sort."""
    vals = list(values)
    scratch = [0] * len(vals)
    for _ in sort_events(vals, 0, 0, scratch, 0, 1 << 30, len(vals)):
        pass
    return vals


def merge(left, right):
    """Run the merge emitter over two sorted lists (no engine); returns
    the merged list."""
    out = [0] * (len(left) + len(right))
    for _ in merge_events(list(left), 0, 0, len(left),
                          list(right), 0, 1 << 30, len(right),
                          out, 0, 1 << 31):
        pass
    return out


# -- program builders ------------------------------------------------------


def build_microbench(spec, element_size=4):
    """Alg.: main initialises an input array, m worker leaves repeatedly
    copy their part to the output; the localised form first copies the part
    into a worker-allocated buffer and frees it when done."""
    if spec.kind != MICROBENCH:
        raise ConfigurationError("spec.kind must be microbench")
    if spec.n < spec.m:
        raise ConfigurationError(f"n={spec.n} smaller than thread count m={spec.m}")
    n, m, reps = spec.n, spec.m, spec.reps
    esz = element_size
    chunk = -(-n // m)  # ceil(n / m); the last leaf takes the remainder
    localised = spec.localised

    def root():
        in_region = yield (ALLOC, n * esz)
        out_region = yield (ALLOC, n * esz)
        input_values = generate_input(spec.rng_seed, n)
        output_values = [0] * n
        yield (FILL, in_region.base, n)  # one init write per element
        in_base = in_region.base
        out_base = out_region.base

        def make_leaf(lo, hi):
            def body():
                yield (LEAF,)
                size = hi - lo
                if size == 0:
                    return
                if localised:
                    cpy_region = yield (ALLOC, size * esz)
                    cpy = input_values[lo:hi]
                    yield (COPY, in_base + esz * lo, cpy_region.base, size)
                    for _ in range(reps):
                        output_values[lo:hi] = cpy
                        yield (COPY, cpy_region.base, out_base + esz * lo, size)
                    yield (FREE, cpy_region)
                else:
                    for _ in range(reps):
                        output_values[lo:hi] = input_values[lo:hi]
                        yield (COPY, in_base + esz * lo, out_base + esz * lo, size)
            return body

        yield (FORK, [make_leaf(i * chunk, min((i + 1) * chunk, n)) for i in range(m)])
        return output_values

    variant = "localised" if localised else "non-localised"
    return Program(root, n_leaves=m, label=f"microbench/{variant}")


def build_mergesort(spec, element_size=4):
    """Fork-join merge sort: the recursion halves the slice and the thread
    budget until single-thread leaves run the serial sort.  Localised
    leaves sort a worker-allocated copy; merges then combine child buffers
    into a fresh scratch and free them (the intermediate step), instead of
    merging in place and copying back."""
    if spec.kind != MERGESORT:
        raise ConfigurationError("spec.kind must be mergesort")
    m = spec.m
    if m & (m - 1):
        raise ConfigurationError(f"thread count m={m} must be a power of two")
    if spec.n < m:
        raise ConfigurationError(f"n={spec.n} smaller than thread count m={m}")
    n = spec.n
    esz = element_size
    localised = spec.localised
    intermediate = spec.localised or spec.intermediate_step

    def root():
        arr_region = yield (ALLOC, n * esz)
        scr_region = yield (ALLOC, n * esz)
        values = generate_input(spec.rng_seed, n)
        scratch = [0] * n
        yield (FILL, arr_region.base, n)
        ab = arr_region.base
        sb = scr_region.base

        if not intermediate:
            # Conventional form: sort slices in place, merge into the shared
            # scratch, copy the merged run back over the inputs.
            def node(lo, hi, threads):
                def body():
                    if threads == 1:
                        yield (LEAF,)
                        yield from sort_events(values, lo, ab + esz * lo,
                                               scratch, lo, sb + esz * lo,
                                               hi - lo, esz)
                        return None
                    mid = lo + (hi - lo) // 2
                    yield (FORK, [node(lo, mid, threads // 2),
                                  node(mid, hi, threads - threads // 2)])
                    yield from merge_events(values, lo, ab + esz * lo, mid - lo,
                                            values, mid, ab + esz * mid, hi - mid,
                                            scratch, lo, sb + esz * lo, esz)
                    values[lo:hi] = scratch[lo:hi]
                    yield from bulk_copy_events(sb + esz * lo, ab + esz * lo,
                                                hi - lo, esz)
                    return None
                return body

            yield from node(0, n, m)()
            return values

        # Buffer-passing form.  A child result is (region, vals, off, base,
        # size); region is None when the buffer is a slice of the input.
        def node(lo, hi, threads):
            def body():
                if threads == 1:
                    yield (LEAF,)
                    size = hi - lo
                    if localised:
                        cpy_region = yield (ALLOC, size * esz)
                        vals = values[lo:hi]  # local copy of the input slice
                        yield from bulk_copy_events(ab + esz * lo,
                                                    cpy_region.base, size, esz)
                        yield from sort_events(vals, 0, cpy_region.base,
                                               scratch, lo, sb + esz * lo,
                                               size, esz)
                        return (cpy_region, vals, 0, cpy_region.base, size)
                    yield from sort_events(values, lo, ab + esz * lo,
                                           scratch, lo, sb + esz * lo,
                                           size, esz)
                    return (None, values, lo, ab + esz * lo, size)
                mid = lo + (hi - lo) // 2
                left, right = yield (FORK, [node(lo, mid, threads // 2),
                                            node(mid, hi, threads - threads // 2)])
                lreg, lvals, loff, lbase, lsize = left
                rreg, rvals, roff, rbase, rsize = right
                ext_region = yield (ALLOC, (lsize + rsize) * esz)
                evals = [0] * (lsize + rsize)
                yield from merge_events(lvals, loff, lbase, lsize,
                                        rvals, roff, rbase, rsize,
                                        evals, 0, ext_region.base, esz)
                # Free what the previous level allocated.
                if lreg is not None:
                    yield (FREE, lreg)
                if rreg is not None:
                    yield (FREE, rreg)
                return (ext_region, evals, 0, ext_region.base, lsize + rsize)
            return body

        result = yield from node(0, n, m)()
        if result[0] is not None:
            # The sorted data lives in the top buffer now; the input array
            # is dead, as in the localised main that frees the old array.
            yield (FREE, arr_region)
        return result[1]

    if localised:
        variant = "localised"
    elif spec.intermediate_step:
        variant = "intermediate"
    else:
        variant = "non-localised"
    return Program(root, n_leaves=m, label=f"mergesort/{variant}")


def build_workload(spec, element_size=4):
    if spec.kind == MICROBENCH:
        return build_microbench(spec, element_size)
    return build_mergesort(spec, element_size)


def verify(spec, output_values):
    """Check workload output against the regenerated input; raises
    VerificationError with a first-difference diagnostic."""
    expected = generate_input(spec.rng_seed, spec.n)
    if output_values is None or len(output_values) != spec.n:
        raise VerificationError(
            f"output has {0 if output_values is None else len(output_values)} "
            f"elements, expected {spec.n}")
    if spec.kind == MICROBENCH:
        if spec.reps < 1:
            return  # output is legitimately untouched
        for i, (got, want) in enumerate(zip(output_values, expected)):
            if got != want:
                raise VerificationError(f"output[{i}] = {got}, expected {want}")
        return
    for i in range(1, spec.n):
        if output_values[i - 1] > output_values[i]:
            raise VerificationError(
                f"output not sorted at index {i}: "
                f"{output_values[i - 1]} > {output_values[i]}")
    if sorted(expected) != output_values:
        raise VerificationError("output is not a permutation of the input")
