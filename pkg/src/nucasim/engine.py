"""Deterministic fork-join execution of simulated threads over the cache
model.

Thread bodies are generators that yield effect tuples; the engine resumes
whichever runnable thread has the smallest (clock, thread id), so every
event executes in global order and identical inputs give bit-identical
reports.
"""

from dataclasses import dataclass
from heapq import heappop, heappush
from random import Random
from typing import Callable

from .errors import ConfigurationError, SimulationFault

# Effects a thread body may yield.
READ = 0      # (READ, addr)
WRITE = 1     # (WRITE, addr)
COPY = 2      # (COPY, src_addr, dst_addr, n_elements): read src[i], write dst[i]
FILL = 3      # (FILL, addr, n_elements): write each element once
ALLOC = 4     # (ALLOC, n_bytes) -> Region
FREE = 5      # (FREE, region)
FORK = 6      # (FORK, [body_factory, ...]) -> list of child return values
LEAF = 7      # (LEAF,): mark this thread as a worker leaf (pins it under
              # static mapping, in leaf creation order)
COPYL = 8     # (COPYL, src_addr, dst_addr, n_lines): line-granular copy,
              # one read plus one full-line store per cache line (memcpy)

_NEVER = 1 << 62
_SEED_MIX = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class StaticOrdered:
    """Pin leaf i to tile (i mod usable_tiles), in leaf creation order."""


@dataclass(frozen=True)
class MigratingLinux:
    """OS-style scheduling: deterministic initial spread plus seeded random
    migrations evaluated at quantum boundaries of a thread's progress."""

    seed: int = 1
    quantum: int = 100_000
    migrate_prob: float = 0.05

    def __post_init__(self):
        if self.quantum <= 0:
            raise ConfigurationError("quantum must be positive")
        if not 0.0 <= self.migrate_prob <= 1.0:
            raise ConfigurationError("migrate_prob must lie in [0, 1]")


@dataclass
class Program:
    """Root thread body plus the metadata the engine checks up front."""

    root: Callable  # zero-argument generator factory
    n_leaves: int = 1
    label: str = ""


@dataclass
class Report:
    total_cycles: int
    stats: dict
    migrations: int
    thread_count: int
    result: object = None


class SimThread:
    """One logical thread: virtual clock, current tile, fork lineage."""

    __slots__ = ("id", "gen", "clock", "tile", "parent", "slot", "state",
                 "waiting", "results", "send_value", "bulk", "next_mark", "rng")

    def __init__(self, tid, gen, clock, tile, parent, slot):
        self.id = tid
        self.gen = gen
        self.clock = clock
        self.tile = tile
        self.parent = parent
        self.slot = slot
        self.state = "running"
        self.waiting = 0
        self.results = None
        self.send_value = None
        self.bulk = None
        self.next_mark = _NEVER
        self.rng = None


def place_thread(thread_id, mapping, mesh, leaf_counter=None, parent_tile=0):
    """Tile for a thread: Linux-style deterministic spread under migration,
    the shared leaf counter under static mapping, otherwise inherit."""
    if isinstance(mapping, MigratingLinux):
        return (thread_id * 17) % mesh.usable_tiles
    if leaf_counter is not None:
        return leaf_counter % mesh.usable_tiles
    return parent_tile


def maybe_migrate(thread, mapping, mesh):
    """One migration draw at a quantum boundary; returns the new tile or
    None.  Draws come from the thread's own seeded substream."""
    rng = thread.rng
    if rng.random() >= mapping.migrate_prob or mesh.usable_tiles < 2:
        return None
    t = rng.randrange(mesh.usable_tiles - 1)
    if t >= thread.tile:
        t += 1
    return t


def run(program, mapping, mesh, aspace, cache):
    """Execute the program to completion; returns the Report whose
    total_cycles is the root thread's finishing clock."""
    migrating = isinstance(mapping, MigratingLinux)
    usable = mesh.usable_tiles
    if not migrating and program.n_leaves > usable:
        raise ConfigurationError(
            f"{program.n_leaves} leaves exceed {usable} usable tiles under static mapping")

    access = cache.access
    line_write = cache.access_full_line_write
    esz = aspace.config.element_size
    lsz = aspace.config.line_size
    t_issue = cache.latency.t_l2  # thread-side occupancy of a streamed line op
    t_migrate = cache.latency.t_migrate
    quantum = mapping.quantum if migrating else 0
    prob = mapping.migrate_prob if migrating else 0.0
    seed = mapping.seed if migrating else 0

    heap = []
    tid_seq = 0
    leaf_counter = 0
    migrations = 0

    def spawn(factory, clock, parent, slot, parent_tile):
        nonlocal tid_seq
        tid = tid_seq
        tid_seq += 1
        tile = (tid * 17) % usable if migrating else parent_tile
        th = SimThread(tid, factory(), clock, tile, parent, slot)
        if migrating:
            th.rng = Random(seed * _SEED_MIX + tid)
            th.next_mark = clock + quantum
        return th

    def cross_quantum(th, tile, clock, mark):
        # Evaluated once per quantum boundary the thread's clock crossed;
        # the migration penalty itself restarts the quantum.
        nonlocal migrations
        rng = th.rng
        while clock >= mark:
            if rng.random() < prob and usable > 1:
                nt = rng.randrange(usable - 1)
                if nt >= tile:
                    nt += 1
                tile = nt
                clock += t_migrate
                migrations += 1
                mark = clock + quantum
            else:
                mark += quantum
        return tile, clock, mark

    cur = spawn(program.root, 0, None, 0, 0)
    root_result = None
    done = False

    while not done:
        th = cur
        tid = th.id
        gen_send = th.gen.send
        clock = th.clock
        tile = th.tile
        mark = th.next_mark
        send_value = th.send_value
        th.send_value = None
        if heap:
            h0 = heap[0]
            h0c = h0[0]
            h0t = h0[1]
        else:
            h0c, h0t = _NEVER, 0
        suspend = False
        forked = False
        finished = False
        stop_value = None

        while True:
            bulk = th.bulk
            if bulk is not None:
                mode, a, b, k, end, bdone = bulk
                if mode == 2:
                    # Line-granular memcpy streams: each line transfer only
                    # occupies the thread for the L2 issue slot; misses stay
                    # in flight (the queues they book meter the bandwidth)
                    # and the copy barriers on its last completion.
                    while k < end:
                        i = k >> 1
                        if k & 1:
                            lat = line_write(tile, b + lsz * i, clock)
                        else:
                            lat = access(tile, a + lsz * i, 0, clock)
                        if clock + lat > bdone:
                            bdone = clock + lat
                        clock += t_issue
                        k += 1
                        if clock >= mark:
                            tile, clock, mark = cross_quantum(th, tile, clock, mark)
                        if clock > h0c or (clock == h0c and tid > h0t):
                            th.bulk = (mode, a, b, k, end, bdone)
                            suspend = True
                            break
                    if suspend:
                        break
                    if bdone > clock:
                        clock = bdone
                        if clock >= mark:
                            tile, clock, mark = cross_quantum(th, tile, clock, mark)
                else:
                    while k < end:
                        if mode == 0:  # element copy: read a[i], write b[i]
                            i = k >> 1
                            if k & 1:
                                lat = access(tile, b + esz * i, 1, clock)
                            else:
                                lat = access(tile, a + esz * i, 0, clock)
                        else:          # write stream over b
                            lat = access(tile, b + esz * k, 1, clock)
                        clock += lat
                        k += 1
                        if clock >= mark:
                            tile, clock, mark = cross_quantum(th, tile, clock, mark)
                        if clock > h0c or (clock == h0c and tid > h0t):
                            th.bulk = (mode, a, b, k, end, bdone)
                            suspend = True
                            break
                    if suspend:
                        break
                th.bulk = None
            try:
                eff = gen_send(send_value)
            except StopIteration as stop:
                finished = True
                stop_value = stop.value
                break
            send_value = None
            op = eff[0]
            if op < 2:  # READ or WRITE; op doubles as the is_write flag
                lat = access(tile, eff[1], op, clock)
                clock += lat
                if clock >= mark:
                    tile, clock, mark = cross_quantum(th, tile, clock, mark)
                if clock > h0c or (clock == h0c and tid > h0t):
                    suspend = True
                    break
            elif op == COPY:
                th.bulk = (0, eff[1], eff[2], 0, 2 * eff[3], 0)
            elif op == FILL:
                th.bulk = (1, 0, eff[1], 0, eff[2], 0)
            elif op == COPYL:
                th.bulk = (2, eff[1], eff[2], 0, 2 * eff[3], 0)
            elif op == ALLOC:
                send_value = aspace.allocate(tile, eff[1])
            elif op == FREE:
                aspace.release(eff[1])
                cache.drop_region(eff[1])
            elif op == LEAF:
                if not migrating:
                    tile = leaf_counter % usable
                leaf_counter += 1
            elif op == FORK:
                children = eff[1]
                if not children:
                    raise SimulationFault("fork with no children would deadlock its join")
                th.waiting = len(children)
                th.results = [None] * len(children)
                th.state = "blocked-on-join"
                for i, factory in enumerate(children):
                    ch = spawn(factory, clock, th, i, tile)
                    heappush(heap, (clock, ch.id, ch))
                forked = True
                break
            else:
                raise SimulationFault(f"unknown effect opcode {op!r}")

        th.clock = clock
        th.tile = tile
        th.next_mark = mark
        if suspend:
            heappush(heap, (clock, tid, th))
        elif finished:
            th.state = "finished"
            parent = th.parent
            if parent is None:
                root_result = stop_value
                done = True
            else:
                parent.results[th.slot] = stop_value
                if th.slot == 0:
                    # The joining thread continues where its first child
                    # finished, like the section-running master thread that
                    # performs the merge after a parallel region.
                    parent.tile = th.tile
                if parent.clock < clock:
                    parent.clock = clock  # join resumes at the slowest child
                parent.waiting -= 1
                if parent.waiting == 0:
                    parent.send_value = parent.results
                    parent.results = None
                    parent.state = "running"
                    heappush(heap, (parent.clock, parent.id, parent))
        elif not forked:
            raise SimulationFault("thread stopped without suspending, forking or finishing")

        if not done:
            if not heap:
                raise SimulationFault("deadlock: no runnable threads")
            cur = heappop(heap)[2]

    # The loop ends when the root finishes, so cur is the root thread.
    return Report(
        total_cycles=cur.clock,
        stats=cache.stats_snapshot(),
        migrations=migrations,
        thread_count=tid_seq,
        result=root_result,
    )
