"""The three homing classes, page by page: local homing keeps a page on
the allocating tile, remote homing parks it on a chosen tile, and
hash-for-home spreads its lines round-robin across all 64 tiles.

Run:  python demos/02_homing_policies.py
"""

from nucasim import (AddressSpace, AddrSpaceConfig, HomePolicy, MeshConfig)
from nucasim.addrspace import HASH_ALL_BUT_STACK, HASH_FOR_HOME, HASH_NONE, REMOTE

mesh = MeshConfig()


def homes_of(space, region, count=8):
    first = space.line_of(region.base)
    return [space.home_of_line(line) for line in range(first, first + count)]


print("hash mode 'none': the requested variant applies")
space = AddressSpace(AddrSpaceConfig(), mesh, HomePolicy(hash_mode=HASH_NONE))
local = space.allocate(13, 4096)
print(f"  local homing, allocated on tile 13 -> homes {homes_of(space, local)}")
remote = space.allocate(13, 4096, HomePolicy(REMOTE, remote_tile=40, hash_mode=HASH_NONE))
print(f"  remote homing on tile 40           -> homes {homes_of(space, remote)}")
hashed = space.allocate(13, 4096, HomePolicy(HASH_FOR_HOME, hash_mode=HASH_NONE))
print(f"  hash-for-home                      -> homes {homes_of(space, hashed)}")
print()

print("hash mode 'all_but_stack': every heap page is hashed, whatever was asked")
space = AddressSpace(AddrSpaceConfig(), mesh, HomePolicy(hash_mode=HASH_ALL_BUT_STACK))
region = space.allocate(13, 4096)
print(f"  allocated on tile 13               -> homes {homes_of(space, region)}")
print()

print("round-robin balance: any 64 consecutive lines of a hashed page")
print("home every tile exactly once")
lines = range(space.line_of(region.base), space.line_of(region.base) + 64)
assert sorted(space.home_of_line(line) for line in lines) == list(range(64))
print("  checked.")
print()

print("striping: 8 KiB chunks rotate over the four controllers")
big = space.allocate(0, 65536)
chunks = [(off, space.controller_of(big.base + off, striping=True))
          for off in range(0, 65536, 8192)]
for off, ctrl in chunks:
    print(f"  offset {off:6d} -> controller {ctrl}")
print("with striping off, the whole region uses the allocating tile's nearest:")
print(f"  -> controller {space.controller_of(big.base, striping=False)}")
