import random

import pytest

from nucasim.addrspace import (HASH_ALL_BUT_STACK, HASH_NONE, AddressSpace,
                               AddrSpaceConfig, HomePolicy, REMOTE)
from nucasim.coherence import (DRAM_FILL, L2_HIT, L3_HIT, CacheConfig,
                               CacheSystem, LatencyParams)
from nucasim.errors import ConfigurationError, SimulationFault
from nucasim.geometry import MeshConfig

MESH = MeshConfig()


def make_system(hash_mode=HASH_NONE, striping=True, caches=True,
                policy=None, mesh=MESH):
    aspace = AddressSpace(AddrSpaceConfig(), mesh,
                          policy or HomePolicy(hash_mode=hash_mode))
    cache = CacheSystem(CacheConfig(caches_enabled=caches), LatencyParams(),
                        mesh, aspace, striping)
    return aspace, cache


# -- latency micro-oracles (hand traced with the default parameters) -------


def test_local_l2_hit_costs_t_l2():
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    cache.access(0, region.base, 0, 0)  # fill
    res = cache.access_detailed(0, region.base, 0, 200)
    assert res.latency == 8
    assert res.klass == L2_HIT
    assert res.queue_wait == 0


def test_local_home_miss_goes_straight_to_dram():
    # requester = home = tile 0 at (0,0); with striping the base address of
    # the first page maps to controller 0, anchored at (0,0): zero hops.
    # 8 (L2 lookup) + 4 (directory) + 0 (hops) + 80 (DRAM) + 10 (service)
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    assert (region.base // 8192) % 4 == 0
    res = cache.access_detailed(0, region.base, 0, 0)
    assert 8 + 4 + 0 + 80 + 10 == 102
    assert res.latency == 102
    assert res.klass == DRAM_FILL
    assert res.queue_wait == 0


def test_remote_home_l3_hit():
    # home tile 0 holds the line; requester at tile 35 = (3,4) is 7 hops out.
    # 8 (local lookup) + 14 (round trip) + 4 (directory) + 8 (home L2)
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    cache.access(0, region.base, 0, 0)  # install at the home tile
    assert abs(3 - 0) + abs(4 - 0) == 7
    res = cache.access_detailed(35, region.base, 0, 1000)
    assert 8 + 14 + 4 + 8 == 34
    assert res.latency == 34
    assert res.klass == L3_HIT
    assert res.queue_wait == 0


def test_remote_home_miss_full_path():
    # requester 35 -> home 0 (7 hops), home misses, controller 0 at the
    # home's own corner: 8 + 14 + 4 + 0 + 80 + 10 = 116
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    res = cache.access_detailed(35, region.base, 0, 0)
    assert res.latency == 8 + 2 * 7 + 4 + 80 + 10
    assert res.klass == DRAM_FILL


def test_controller_fifo_waits():
    # three back-to-back requests at the same cycle: service occupies the
    # controller for t_mem_svc + t_dram = 90 cycles each
    _, cache = make_system()
    assert cache.queue_wait(("controller", 0), 1000) == 0
    assert cache.queue_wait(("controller", 0), 1000) == 90
    assert cache.queue_wait(("controller", 0), 1000) == 180


def test_directory_fifo_waits():
    # two simultaneous directory requests: the first waits 0, the second t_dir
    _, cache = make_system()
    assert cache.queue_wait(("dir", 3), 500) == 0
    assert cache.queue_wait(("dir", 3), 500) == 4
    # an idle resource later incurs no wait
    assert cache.queue_wait(("dir", 3), 10_000) == 0


def test_queue_depth_tracking():
    _, cache = make_system()
    for _ in range(4):
        cache.queue_wait(("controller", 1), 0)
    assert cache.stats_snapshot()["max_controller_queue_depth"] == 3


# -- hit classes and the latency ordering -----------------------------------


def test_latency_ordering_over_all_hop_distances():
    lat = LatencyParams()
    for d in range(1, 15):
        l3 = lat.t_l2 + 2 * lat.t_hop * d + lat.t_dir + lat.t_l2
        dram = lat.t_l2 + 2 * lat.t_hop * d + lat.t_dir + lat.t_dram + lat.t_mem_svc
        assert lat.t_l2 < l3 < dram


def test_l3_always_cheaper_than_same_path_dram():
    # measured, not just computed: same requester/home pair, hit vs miss
    aspace, cache = make_system()
    region = aspace.allocate(0, 8192)
    miss = cache.access_detailed(35, region.base, 0, 0)
    hit = cache.access_detailed(35, region.base + 64, 0, 10_000)
    # second access: home now caches the whole... no: different line, cold
    assert miss.klass == DRAM_FILL
    cache.access(0, region.base + 128, 0, 20_000)
    l3 = cache.access_detailed(35, region.base + 128, 0, 30_000)
    assert l3.klass == L3_HIT
    assert 8 < l3.latency < miss.latency


# -- coherence behaviour ----------------------------------------------------


def test_write_invalidates_other_sharers():
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    addr = region.base
    cache.access(0, addr, 0, 0)        # home copy
    cache.access(35, addr, 0, 100)     # sharer copy
    line = aspace.line_of(addr)
    assert cache.cached_at(0, line) and cache.cached_at(35, line)
    res = cache.access_detailed(10, addr, 1, 1000)  # write from a third tile
    assert res.invalidations_sent == 1  # the sharer at 35 is dropped
    assert cache.cached_at(0, line)    # the home keeps the updated copy
    assert not cache.cached_at(35, line)
    assert cache.cached_at(10, line)
    # until it refetches, the old sharer cannot hit locally
    refetch = cache.access_detailed(35, addr, 0, 2000)
    assert refetch.klass == L3_HIT     # served the newer version by the home


def test_write_invalidation_cost_spans_to_farthest_sharer():
    # home = tile 0 holds the line, sharers at tiles 7 and 56 (both 7 hops
    # from home).  A write from tile 10 = (2,1), 3 hops from home, fetches
    # first (L3 hit) and then pays the invalidation round trip:
    #   8 + 2*3 + 4 + 8  (fetch)  +  4 + 2*7  (invalidate)  = 44
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    addr = region.base + 64
    cache.access(0, addr, 0, 0)
    cache.access(7, addr, 0, 1000)
    cache.access(56, addr, 0, 2000)
    res = cache.access_detailed(10, addr, 1, 10_000)
    assert res.latency == (8 + 6 + 4 + 8) + (4 + 14)
    assert res.invalidations_sent == 2  # the home keeps its (updated) copy
    # with no other sharers left, the next write is a plain local hit
    again = cache.access_detailed(10, addr, 1, 20_000)
    assert again.latency == 8
    assert again.invalidations_sent == 0


def test_only_writer_and_home_hold_the_line_after_write():
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    addr = region.base
    for tile in (0, 9, 18, 27):
        cache.access(tile, addr, 0, tile * 10)
    cache.access(45, addr, 1, 10_000)
    line = aspace.line_of(addr)
    for tile in (9, 18, 27):
        assert not cache.cached_at(tile, line)
    assert cache.cached_at(0, line)   # the home's copy carries the new value
    assert cache.cached_at(45, line)


def test_read_does_not_invalidate_sharers():
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    addr = region.base
    cache.access(9, addr, 0, 0)
    cache.access(18, addr, 0, 100)
    line = aspace.line_of(addr)
    assert cache.cached_at(9, line) and cache.cached_at(18, line)


# -- eviction ----------------------------------------------------------------


def test_install_into_free_way_evicts_nothing():
    aspace, cache = make_system()
    region = aspace.allocate(0, 65536)
    # lines 0..2 of the region share a set only every n_sets lines apart
    cache.access(5, region.base, 0, 0)
    cache.access(5, region.base + 64, 0, 100)
    assert cache.cached_at(5, aspace.line_of(region.base))
    assert cache.cached_at(5, aspace.line_of(region.base + 64))


def _same_set_addrs(aspace, cache, region, count):
    # collect addresses of distinct lines that share one L2 set
    target = None
    out = []
    for line in range(aspace.line_of(region.base),
                      aspace.line_of(region.base + region.length)):
        idx = cache.set_index(line)
        if target is None:
            target = idx
        if idx == target:
            out.append(line * 64)
            if len(out) == count:
                return out
    raise AssertionError("region too small to fill one set")


def test_full_set_evicts_lru():
    aspace, cache = make_system()
    # The region is homed on the accessing tile so only its own L2 is in
    # play; five conflicting lines overflow one 4-way set.
    region = aspace.allocate(5, 1 << 20)
    addrs = _same_set_addrs(aspace, cache, region, 5)
    t = 0
    for a in addrs[:4]:
        cache.access(5, a, 0, t)
        t += 1000
    cache.access(5, addrs[0], 0, t)  # refresh line 0: line 1 becomes LRU
    cache.access(5, addrs[4], 0, t + 1000)  # overflow the set
    lines = [aspace.line_of(a) for a in addrs]
    assert cache.cached_at(5, lines[0])
    assert not cache.cached_at(5, lines[1])  # the LRU victim
    assert all(cache.cached_at(5, l) for l in lines[2:])


def test_home_eviction_drops_remote_sharers():
    aspace, cache = make_system()
    region = aspace.allocate(0, 6 * 16384)
    addr = region.base
    line = aspace.line_of(addr)
    cache.access(0, addr, 0, 0)      # home holds it
    cache.access(9, addr, 0, 100)    # two remote sharers
    cache.access(18, addr, 0, 200)
    cache.evict(0, line)             # home loses its copy
    assert not cache.cached_at(9, line)
    assert not cache.cached_at(18, line)


def test_evict_via_capacity_pressure_at_home():
    aspace, cache = make_system()
    region = aspace.allocate(0, 1 << 20)
    addrs = _same_set_addrs(aspace, cache, region, 5)
    addr = addrs[0]
    line = aspace.line_of(addr)
    cache.access(0, addr, 0, 0)
    cache.access(9, addr, 0, 10)     # remote sharer
    t = 100
    for a in addrs[1:]:              # push 4 more lines through the home set
        cache.access(0, a, 0, t)
        t += 1000
    assert not cache.cached_at(0, line)
    assert not cache.cached_at(9, line)  # recalled when the home evicted


# -- caches disabled ---------------------------------------------------------


def test_caches_off_pure_dram():
    aspace, cache = make_system(caches=False)
    region = aspace.allocate(0, 4096)
    for i in range(20):
        res = cache.access_detailed(i % 8, region.base + 4 * i, i % 2, i * 10)
        assert res.klass == DRAM_FILL
    snap = cache.stats_snapshot()
    assert snap["l2_hits"] == 0 and snap["l3_hits"] == 0
    assert snap["dram_fills"] == snap["accesses"] == 20


# -- stats -------------------------------------------------------------------


def test_stats_fresh_state_zeros():
    _, cache = make_system()
    snap = cache.stats_snapshot()
    assert all(v == 0 for v in snap.values())


def test_stats_one_miss():
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    cache.access(0, region.base, 0, 0)
    snap = cache.stats_snapshot()
    assert snap["dram_fills"] == 1 and snap["l2_hits"] == 0


def test_counter_conservation_random_trace():
    aspace, cache = make_system(hash_mode=HASH_ALL_BUT_STACK)
    regions = [aspace.allocate(t, 16384) for t in (0, 13, 42)]
    rng = random.Random(11)
    n = 5000
    t = 0
    for _ in range(n):
        r = regions[rng.randrange(3)]
        addr = r.base + 4 * rng.randrange(4096)
        cache.access(rng.randrange(64), addr, rng.randrange(2), t)
        t += rng.randrange(50)
    snap = cache.stats_snapshot()
    assert snap["accesses"] == n
    assert snap["l2_hits"] + snap["l3_hits"] + snap["dram_fills"] == n


def test_directory_invariant_random_traces():
    # After any write, no other tile may report a local hit on the line
    # until it refetches.  The mirror tracks a superset of legal holders:
    # reads add the requester and the home, writes reset it to the writer.
    aspace, cache = make_system(hash_mode=HASH_ALL_BUT_STACK)
    region = aspace.allocate(0, 8192)
    rng = random.Random(23)
    allowed = {}  # line -> tiles that may legally hit locally
    t = 0
    for _ in range(4000):
        tile = rng.randrange(64)
        addr = region.base + 64 * rng.randrange(128)
        is_write = int(rng.random() < 0.3)
        res = cache.access_detailed(tile, addr, is_write, t)
        line = aspace.line_of(addr)
        if res.klass == L2_HIT and line in allowed:
            assert tile in allowed[line], "stale copy hit after a write"
        if is_write:
            # the writer and the home (whose copy is updated) may hit next
            allowed[line] = {tile, line % 64}
        else:
            allowed.setdefault(line, set()).update((tile, line % 64))
        t += 25


# -- region teardown ---------------------------------------------------------


def test_drop_region_invalidates_everything():
    aspace, cache = make_system()
    region = aspace.allocate(0, 4096)
    cache.access(0, region.base, 0, 0)
    cache.access(9, region.base, 0, 10)
    line = aspace.line_of(region.base)
    aspace.release(region)
    cache.drop_region(region)
    assert not cache.cached_at(0, line)
    assert not cache.cached_at(9, line)
    with pytest.raises(SimulationFault):
        cache.access(0, region.base, 0, 100)  # use after free


def test_access_unmapped_faults():
    _, cache = make_system()
    with pytest.raises(SimulationFault):
        cache.access(0, 1 << 30, 0, 0)


# -- config validation -------------------------------------------------------


def test_cache_geometry_validation():
    aspace, _ = make_system()
    with pytest.raises(ConfigurationError):
        CacheSystem(CacheConfig(l2_capacity=1000), LatencyParams(), MESH, aspace)


def test_latency_validation():
    with pytest.raises(ConfigurationError):
        LatencyParams(t_dram=30).validate(MESH)  # remote hit would beat DRAM
    with pytest.raises(ConfigurationError):
        LatencyParams(t_l2=0).validate(MESH)
    LatencyParams().validate(MESH)


def test_replacement_policy_validation():
    with pytest.raises(ConfigurationError):
        CacheConfig(replacement="fifo")
