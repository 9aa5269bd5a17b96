"""A walk through the machine model: the tile mesh, hop distances, and
what one memory access costs depending on where its home tile sits.

Run:  python demos/01_mesh_and_latency.py
"""

from nucasim import (AddressSpace, AddrSpaceConfig, CacheConfig, CacheSystem,
                     HomePolicy, LatencyParams, MeshConfig, coords_of,
                     hop_distance, nearest_controller)
from nucasim.addrspace import HASH_NONE

mesh = MeshConfig()
print(f"mesh: {mesh.width}x{mesh.height}, {mesh.total_tiles} tiles, "
      f"{mesh.usable_tiles} usable for pinning")
print(f"controller anchors: {mesh.controller_anchors}")
print()

# Tile ids are row-major, so the "upper rows" are tiles 0..31.
for tile in (0, 10, 63):
    print(f"tile {tile:2d} sits at {coords_of(tile, mesh)}")
print(f"hops (0,0)->(7,7): {hop_distance((0, 0), (7, 7))}")
print(f"nearest controller to (3,0): {nearest_controller((3, 0), mesh)}")
print()

# One cache system; a region homed on tile 0 under local homing.
aspace = AddressSpace(AddrSpaceConfig(), mesh, HomePolicy(hash_mode=HASH_NONE))
cache = CacheSystem(CacheConfig(), LatencyParams(), mesh, aspace, striping=True)
region = aspace.allocate(0, 4096)

print("access costs with the default latency parameters:")
first = cache.access_detailed(0, region.base, 0, at=0)
print(f"  cold fill from the home tile itself: {first.latency:4d} cycles ({first.klass})")
hit = cache.access_detailed(0, region.base, 0, at=1000)
print(f"  local L2 hit:                        {hit.latency:4d} cycles ({hit.klass})")
l3 = cache.access_detailed(35, region.base, 0, at=2000)
print(f"  miss served by the home, 7 hops out: {l3.latency:4d} cycles ({l3.klass})")
far = cache.access_detailed(35, region.base + 64, 0, at=3000)
print(f"  miss that goes all the way to DRAM:  {far.latency:4d} cycles ({far.klass})")
print()

print("a memory controller is a FIFO server (t_mem_svc + t_dram each):")
for i in range(3):
    wait = cache.queue_wait(("controller", 2), at=5000)
    print(f"  request {i} arriving at cycle 5000 waits {wait} cycles")
