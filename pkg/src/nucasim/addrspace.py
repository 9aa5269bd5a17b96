"""Flat simulated physical address space: page-aligned bump allocation,
per-page home designation, and striping-aware controller mapping.

Addresses are never reused within a run, so any access to a released
region shows up as an unmapped page and is reported as a workload bug.
"""

from dataclasses import dataclass

from .errors import ConfigurationError, SimulationFault
from .geometry import nearest_controller_table

# Page-table home code for hash-for-home pages (hashed per line).
HASHED = -1

# System-wide hashing switch: hash every heap page, or home pages on the
# allocating tile.
HASH_ALL_BUT_STACK = "all_but_stack"
HASH_NONE = "none"

# Homing variants a single allocation can request.
LOCAL = "local"
REMOTE = "remote"
HASH_FOR_HOME = "hash_for_home"


def _is_pow2(x):
    return x > 0 and x & (x - 1) == 0


@dataclass(frozen=True)
class AddrSpaceConfig:
    line_size: int = 64
    page_size: int = 65536
    stripe_chunk: int = 8192
    element_size: int = 4

    def __post_init__(self):
        for name in ("line_size", "page_size", "stripe_chunk", "element_size"):
            if not _is_pow2(getattr(self, name)):
                raise ConfigurationError(f"{name} must be a power of two")
        if self.stripe_chunk % self.line_size:
            raise ConfigurationError("line_size must divide stripe_chunk")
        if self.page_size % self.stripe_chunk:
            raise ConfigurationError("stripe_chunk must divide page_size")
        if self.line_size % self.element_size:
            raise ConfigurationError("element_size must divide line_size")


@dataclass(frozen=True)
class HomePolicy:
    """Which tile homes an allocation, plus the system-wide hashing mode."""

    variant: str = LOCAL
    remote_tile: int = None
    hash_mode: str = HASH_ALL_BUT_STACK

    def __post_init__(self):
        if self.variant not in (LOCAL, REMOTE, HASH_FOR_HOME):
            raise ConfigurationError(f"unknown homing variant {self.variant!r}")
        if self.variant == REMOTE and self.remote_tile is None:
            raise ConfigurationError("remote homing needs a target tile")
        if self.hash_mode not in (HASH_ALL_BUT_STACK, HASH_NONE):
            raise ConfigurationError(f"unknown hash mode {self.hash_mode!r}")


@dataclass
class Region:
    """One live heap allocation; base is page-aligned."""

    base: int
    length: int
    allocating_tile: int
    home_controller: int  # proximity controller used when striping is off
    live: bool = True


class AddressSpace:
    """Owns the page table and the bump allocator."""

    SPACE_LIMIT = 1 << 40

    def __init__(self, config, mesh, policy=None):
        self.config = config
        self.mesh = mesh
        self.policy = policy if policy is not None else HomePolicy()
        self.pages = {}  # page id -> (home tile id or HASHED, owning Region)
        self.regions = []
        self._next = 0
        self._line_shift = config.line_size.bit_length() - 1
        self._page_shift = config.page_size.bit_length() - 1
        self._chunk_shift = config.stripe_chunk.bit_length() - 1
        self._ntiles = mesh.total_tiles
        self._nctrl = len(mesh.controller_anchors)
        self._nearest = nearest_controller_table(mesh)

    def line_of(self, addr):
        return addr >> self._line_shift

    def page_of(self, addr):
        return addr >> self._page_shift

    def live_regions(self):
        return [r for r in self.regions if r.live]

    def allocate(self, thread_tile, n_bytes, policy=None):
        """Fresh page-aligned region; every covered page gets its home from
        the policy (the system hash mode overrides the requested variant)."""
        if n_bytes <= 0:
            raise ConfigurationError("allocation size must be positive")
        p = policy if policy is not None else self.policy
        if p.hash_mode == HASH_ALL_BUT_STACK:
            home = HASHED
        elif p.variant == LOCAL:
            home = thread_tile
        elif p.variant == REMOTE:
            home = p.remote_tile
        else:
            home = HASHED
        ps = self.config.page_size
        base = (self._next + ps - 1) & ~(ps - 1)
        if base + n_bytes > self.SPACE_LIMIT:
            raise SimulationFault(
                f"simulated address space exhausted allocating {n_bytes} bytes at {base:#x}")
        region = Region(base, n_bytes, thread_tile, self._nearest[thread_tile])
        first = base >> self._page_shift
        last = (base + n_bytes - 1) >> self._page_shift
        for page in range(first, last + 1):
            self.pages[page] = (home, region)
        self._next = base + n_bytes
        self.regions.append(region)
        return region

    def release(self, region):
        """Drop the region's page entries; cached-copy cleanup is the cache
        model's job (CacheSystem.drop_region)."""
        if not region.live:
            raise SimulationFault(f"double release of region at {region.base:#x}")
        region.live = False
        first = region.base >> self._page_shift
        last = (region.base + region.length - 1) >> self._page_shift
        for page in range(first, last + 1):
            del self.pages[page]

    def page_entry(self, addr):
        ent = self.pages.get(addr >> self._page_shift)
        if ent is None:
            raise SimulationFault(f"access to unmapped address {addr:#x} (freed or never allocated)")
        return ent

    def home_of_line(self, line):
        """Home tile of a cache line: the page's home, or line mod tile count
        for hashed pages."""
        ent = self.pages.get(line >> (self._page_shift - self._line_shift))
        if ent is None:
            raise SimulationFault(f"line {line} belongs to no live page")
        home = ent[0]
        return home if home >= 0 else line % self._ntiles

    def controller_of(self, addr, striping, region=None):
        """Memory controller serving addr: round-robin over stripe chunks
        when striping, otherwise the allocating tile's nearest controller."""
        if striping:
            return (addr >> self._chunk_shift) % self._nctrl
        if region is None:
            region = self.page_entry(addr)[1]
        return region.home_controller
