"""Per-tile L2 caches that double as the distributed home (L3) cache,
a directory of line holders, and the latency/queueing model that turns
one memory access into a cycle cost.

The home cache and the local L2 are one physical structure per tile: a
homed line occupies a way in the home tile's L2 like any other line.
Writes go through the home, which keeps the updated copy and invalidates
every other sharer; readers refetch the newer version from there.
Directories and memory controllers are FIFO servers; requests are booked
in the engine's global event order, which breaks same-cycle ties by
thread id.
"""

from collections import OrderedDict
from dataclasses import dataclass

from .errors import ConfigurationError, SimulationFault
from .geometry import controller_distance_table, distance_table

L2_HIT = "l2_hit"
L3_HIT = "l3_hit"
DRAM_FILL = "dram_fill"


@dataclass(frozen=True)
class CacheConfig:
    l2_capacity: int = 65536
    associativity: int = 4
    replacement: str = "lru"
    caches_enabled: bool = True

    def __post_init__(self):
        if self.l2_capacity < 1 or self.associativity < 1:
            raise ConfigurationError("cache capacity and associativity must be positive")
        if self.replacement != "lru":
            raise ConfigurationError(f"unsupported replacement policy {self.replacement!r}")


@dataclass(frozen=True)
class LatencyParams:
    """All values in cycles.  Defaults satisfy the required orderings:
    local hit < remote home hit < DRAM fill."""

    t_l2: int = 8
    t_hop: int = 1
    t_dir: int = 4
    t_dram: int = 80
    t_mem_svc: int = 10
    t_migrate: int = 10000

    def validate(self, mesh):
        for name in ("t_l2", "t_hop", "t_dir", "t_dram", "t_mem_svc"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1 cycle")
        if self.t_migrate < 0:
            raise ConfigurationError("t_migrate must be non-negative")
        max_d = (mesh.width - 1) + (mesh.height - 1)
        worst_remote_hit = self.t_l2 + 2 * self.t_hop * max_d + self.t_dir + self.t_l2
        if worst_remote_hit >= self.t_l2 + self.t_dram:
            raise ConfigurationError(
                "remote home hit must be cheaper than a DRAM access: "
                f"{worst_remote_hit} >= {self.t_l2 + self.t_dram}")


@dataclass
class AccessResult:
    latency: int
    klass: str
    queue_wait: int
    invalidations_sent: int


class CacheSystem:
    """All per-tile L2 state, the line directory, and the queue model."""

    def __init__(self, config, latency, mesh, aspace, striping=True):
        line_size = aspace.config.line_size
        if config.l2_capacity % (config.associativity * line_size):
            raise ConfigurationError(
                "l2_capacity must be a multiple of associativity * line_size")
        latency.validate(mesh)
        self.config = config
        self.latency = latency
        self.mesh = mesh
        self.aspace = aspace
        self.striping = striping
        self.enabled = config.caches_enabled

        self._n_sets = config.l2_capacity // (config.associativity * line_size)
        # XOR-folded set index: plain modulo indexing would alias with the
        # per-line home hash (both use the low line bits), collapsing every
        # tile's home capacity into a handful of sets.
        set_bits = max(1, self._n_sets.bit_length() - 1)
        self._sb1 = set_bits
        self._sb2 = 2 * set_bits
        self._ways = config.associativity
        self._ntiles = mesh.total_tiles
        self._nctrl = len(mesh.controller_anchors)
        self._l2 = [[OrderedDict() for _ in range(self._n_sets)] for _ in range(self._ntiles)]
        self._dir = {}  # line id -> set of tiles currently holding a copy
        self._dist = distance_table(mesh)
        self._cdist = controller_distance_table(mesh)
        self._dir_busy = [0] * self._ntiles
        self._ctrl_busy = [0] * self._nctrl

        self._line_shift = aspace.config.line_size.bit_length() - 1
        self._page_shift = aspace.config.page_size.bit_length() - 1
        self._pl_shift = self._page_shift - self._line_shift
        self._chunk_shift = aspace.config.stripe_chunk.bit_length() - 1
        self._t_l2 = latency.t_l2
        self._t_hop = latency.t_hop
        self._t_dir = latency.t_dir
        self._t_dram = latency.t_dram
        self._t_mem_svc = latency.t_mem_svc
        self._t_mem = latency.t_mem_svc + latency.t_dram  # controller occupancy

        self.accesses = 0
        self.l2_hits = 0
        self.l3_hits = 0
        self.dram_fills = 0
        self.invalidations = 0
        self.max_dir_depth = 0
        self.max_ctrl_depth = 0
        self.dir_wait_total = 0   # diagnostic aggregates, not report columns
        self.ctrl_wait_total = 0
        self.ctrl_idle_total = 0
        self.collect_detail = False
        self._detail = (None, 0)

    # -- queue model ---------------------------------------------------

    def _book_dir(self, tile, at):
        w = self._dir_busy[tile] - at
        if w < 0:
            w = 0
        else:
            self.dir_wait_total += w
            depth = -(-w // self._t_dir)
            if depth > self.max_dir_depth:
                self.max_dir_depth = depth
        self._dir_busy[tile] = at + w + self._t_dir
        return w

    def _book_ctrl(self, ctrl, at):
        w = self._ctrl_busy[ctrl] - at
        if w < 0:
            self.ctrl_idle_total -= w
            w = 0
        else:
            self.ctrl_wait_total += w
            depth = -(-w // self._t_mem)
            if depth > self.max_ctrl_depth:
                self.max_ctrl_depth = depth
        self._ctrl_busy[ctrl] = at + w + self._t_mem
        return w

    def queue_wait(self, resource, at):
        """FIFO wait at a shared server, booking its service time.
        resource is ("dir", tile) or ("controller", id)."""
        kind, idx = resource
        if kind == "dir":
            return self._book_dir(idx, at)
        if kind == "controller":
            return self._book_ctrl(idx, at)
        raise ConfigurationError(f"unknown resource kind {kind!r}")

    # -- the access path -----------------------------------------------

    def access(self, tile, addr, is_write, at):
        """Simulate one access issued from tile at cycle `at`; returns its
        latency and updates counters, caches, directory and queue state."""
        self.accesses += 1
        line = addr >> self._line_shift
        enabled = self.enabled
        if enabled:
            # A cached line implies a live page: releases purge every copy,
            # so the hit path can skip the page-table lookup.
            od = self._l2[tile][(line ^ (line >> self._sb1) ^ (line >> self._sb2))
                                % self._n_sets]
            if line in od:
                od.move_to_end(line)
                self.l2_hits += 1
                if self.collect_detail:
                    self._detail = (L2_HIT, 0)
                if is_write:
                    holders = self._dir[line]
                    if len(holders) != 1:
                        return self._t_l2 + self._write_invalidate(tile, line, holders)
                return self._t_l2
        ent = self.aspace.pages.get(addr >> self._page_shift)
        if ent is None:
            raise SimulationFault(
                f"access to unmapped address {addr:#x} (freed or never allocated)")
        home, region = ent
        if home < 0:
            home = line % self._ntiles

        if is_write and enabled and line not in self._dir:
            # First-ever write to a line of a fresh allocation: its contents
            # are undefined, so there is nothing to fetch before writing.
            # (Directory entries persist as tombstones once a line has been
            # cached, and freed addresses are never reused.)
            self._install(tile, line)
            self._dir[line] = {tile}
            self.l2_hits += 1
            if self.collect_detail:
                self._detail = (L2_HIT, 0)
            return self._t_l2

        t_hop = self._t_hop
        qw = 0
        if tile == home:
            # Local homing: the directory is consulted locally, then the
            # request goes straight to memory.
            total = self._t_l2 + self._t_dir
            if self.striping:
                ctrl = (addr >> self._chunk_shift) % self._nctrl
            else:
                ctrl = region.home_controller
            hd = self._cdist[tile][ctrl]
            qw = self._book_ctrl(ctrl, at + total + t_hop * hd)
            total += 2 * t_hop * hd + qw + self._t_dram + self._t_mem_svc
            self.dram_fills += 1
            klass = DRAM_FILL
            if enabled:
                self._install(tile, line)
                holders = self._dir.get(line)
                if holders is None:
                    self._dir[line] = {tile}
                else:
                    holders.add(tile)
        else:
            d = self._dist[tile][home]
            w = self._book_dir(home, at + self._t_l2 + t_hop * d)
            total = self._t_l2 + 2 * t_hop * d + w + self._t_dir
            qw = w
            holders = self._dir.get(line)
            if enabled and holders is not None and home in holders:
                # The home's own L2 serves the miss (virtual L3 hit).
                total += self._t_l2
                self.l3_hits += 1
                hod = self._l2[home][self.set_index(line)]
                hod.move_to_end(line)
                self._install(tile, line)
                holders.add(tile)
                klass = L3_HIT
            else:
                if self.striping:
                    ctrl = (addr >> self._chunk_shift) % self._nctrl
                else:
                    ctrl = region.home_controller
                hd = self._cdist[home][ctrl]
                arrive = at + self._t_l2 + t_hop * d + w + self._t_dir + t_hop * hd
                w2 = self._book_ctrl(ctrl, arrive)
                total += 2 * t_hop * hd + w2 + self._t_dram + self._t_mem_svc
                qw += w2
                self.dram_fills += 1
                klass = DRAM_FILL
                if enabled:
                    # A read fill installs at the home (L3) and the requester.
                    # A write-allocate fetch installs only at the writer: the
                    # completing write would invalidate a home copy anyway, so
                    # homing it would merely churn the home set.
                    if not is_write:
                        self._install_cold(home, line)
                    self._install(tile, line)
                    holders = self._dir.get(line)
                    if holders is None:
                        self._dir[line] = {tile} if is_write else {home, tile}
                    else:
                        if not is_write:
                            holders.add(home)
                        holders.add(tile)
        if is_write:
            holders = self._dir.get(line)
            if holders is not None and len(holders) != 1:
                total += self._write_invalidate(tile, line, holders)
        if self.collect_detail:
            self._detail = (klass, qw)
        return total

    def access_full_line_write(self, tile, addr, at):
        """A store that overwrites one whole cache line (bulk copies move
        line-sized chunks).  No fetch is needed for data that is fully
        replaced: the line is installed and written in the local L2, other
        sharers are invalidated as for any write."""
        if not self.enabled:
            return self.access(tile, addr, 1, at)
        self.accesses += 1
        line = addr >> self._line_shift
        od = self._l2[tile][(line ^ (line >> self._sb1) ^ (line >> self._sb2))
                            % self._n_sets]
        if line in od:
            od.move_to_end(line)
        else:
            ent = self.aspace.pages.get(addr >> self._page_shift)
            if ent is None:
                raise SimulationFault(
                    f"access to unmapped address {addr:#x} (freed or never allocated)")
            self._install(tile, line)
            holders = self._dir.get(line)
            if holders is None:
                self._dir[line] = {tile}
            else:
                holders.add(tile)
        self.l2_hits += 1
        if self.collect_detail:
            self._detail = (L2_HIT, 0)
        total = self._t_l2
        holders = self._dir[line]
        if len(holders) != 1:
            total += self._write_invalidate(tile, line, holders)
        return total

    def access_detailed(self, tile, addr, is_write, at):
        """access() plus the full per-access breakdown."""
        self.collect_detail = True
        inv_before = self.invalidations
        try:
            latency = self.access(tile, addr, is_write, at)
        finally:
            self.collect_detail = False
        klass, qw = self._detail
        return AccessResult(latency, klass, qw, self.invalidations - inv_before)

    # -- coherence actions ----------------------------------------------

    def _write_invalidate(self, writer, line, holders):
        """Completing a write drops every other sharer's copy of the line;
        the home's own copy is the coherence point and is updated in place
        (readers refetch the newer version from there).  The writer is
        charged a directory service plus the round trip to the farthest
        invalidated sharer; copies vanish without a charge of their own."""
        ent = self.aspace.pages.get(line >> self._pl_shift)
        home = ent[0] if ent is not None else -1
        if home < 0:
            home = line % self._ntiles
        # The home's copy is updated in place by the write-through but keeps
        # its replacement position; only demanded reuse (an L3 hit) promotes.
        idx = self.set_index(line)
        victims = [t for t in holders if t != writer and t != home]
        if not victims:
            return 0
        dist_h = self._dist[home]
        max_d = 0
        for t in victims:
            self._l2[t][idx].pop(line, None)
            holders.discard(t)
            if dist_h[t] > max_d:
                max_d = dist_h[t]
        self.invalidations += len(victims)
        return self._t_dir + 2 * self._t_hop * max_d

    def set_index(self, line):
        """L2 set of a line id (XOR-folded index)."""
        return (line ^ (line >> self._sb1) ^ (line >> self._sb2)) % self._n_sets

    def _install(self, tile, line):
        od = self._l2[tile][(line ^ (line >> self._sb1) ^ (line >> self._sb2))
                            % self._n_sets]
        if line in od:
            od.move_to_end(line)
            return
        if len(od) >= self._ways:
            victim, _ = od.popitem(last=False)
            self._evict_cleanup(tile, victim)
        od[line] = True

    def _install_cold(self, tile, line):
        """Install at the LRU end of the set.  Home copies of streamed
        fills are one-touch until something actually rereads them, so they
        displace each other instead of the tile's hot lines; an L3 hit or
        a write-through refresh promotes them to the MRU end."""
        od = self._l2[tile][(line ^ (line >> self._sb1) ^ (line >> self._sb2))
                            % self._n_sets]
        if line in od:
            return
        if len(od) >= self._ways:
            victim, _ = od.popitem(last=False)
            self._evict_cleanup(tile, victim)
        od[line] = True
        od.move_to_end(line, last=False)

    def evict(self, tile, line):
        """Drop the line from the tile's L2 (replacement bookkeeping)."""
        self._l2[tile][self.set_index(line)].pop(line, None)
        self._evict_cleanup(tile, line)

    def _evict_cleanup(self, tile, victim):
        holders = self._dir.get(victim)
        if holders is None:
            return
        holders.discard(tile)
        ent = self.aspace.pages.get(victim >> self._pl_shift)
        if ent is not None:
            home = ent[0]
            if home < 0:
                home = victim % self._ntiles
            if tile == home and holders:
                # The home lost its copy: remote holders are dropped too
                # (bookkeeping only, no cycle charge).
                m = self.set_index(victim)
                for t in holders:
                    self._l2[t][m].pop(victim, None)
                holders.clear()
        # an empty entry stays behind as a tombstone: the line has history

    def drop_region(self, region):
        """Invalidate every cached copy and directory entry of a released
        region's lines; cost-free bookkeeping."""
        first = region.base >> self._line_shift
        last = (region.base + region.length - 1) >> self._line_shift
        pop = self._dir.pop
        for line in range(first, last + 1):
            holders = pop(line, None)
            if holders:
                m = self.set_index(line)
                for t in holders:
                    self._l2[t][m].pop(line, None)

    def cached_at(self, tile, line):
        """True when the tile's L2 currently holds the line."""
        return line in self._l2[tile][self.set_index(line)]

    def stats_snapshot(self):
        return {
            "accesses": self.accesses,
            "l2_hits": self.l2_hits,
            "l3_hits": self.l3_hits,
            "dram_fills": self.dram_fills,
            "invalidations": self.invalidations,
            "max_home_queue_depth": self.max_dir_depth,
            "max_controller_queue_depth": self.max_ctrl_depth,
        }
