"""Tile-grid geometry: row-major tile ids, Manhattan hop distances, and
memory-controller anchor positions on the mesh."""

from dataclasses import dataclass

from .errors import ConfigurationError

# Controllers sit in the four grid corners.  Combined with row-major tile
# numbering this puts threads 0..31 on the upper four rows, whose nearest
# controllers are only the two top ones.
DEFAULT_ANCHORS = ((0, 0), (7, 0), (0, 7), (7, 7))


@dataclass(frozen=True)
class MeshConfig:
    """Mesh dimensions, the usable-tile budget for thread pinning, and the
    controller anchor coordinates."""

    width: int = 8
    height: int = 8
    usable_tiles: int = 63
    controller_anchors: tuple = DEFAULT_ANCHORS

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigurationError("mesh dimensions must be positive")
        if not 1 <= self.usable_tiles <= self.width * self.height:
            raise ConfigurationError("usable_tiles must lie in [1, width*height]")
        if len(self.controller_anchors) != 4:
            raise ConfigurationError("exactly 4 controller anchors are required")
        for x, y in self.controller_anchors:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ConfigurationError(f"controller anchor ({x},{y}) outside the grid")

    @property
    def total_tiles(self):
        return self.width * self.height


def coords_of(tile, mesh):
    """Grid coordinates (x, y) of a row-major tile id."""
    if not 0 <= tile < mesh.total_tiles:
        raise ConfigurationError(f"tile id {tile} out of range for {mesh.width}x{mesh.height} mesh")
    return tile % mesh.width, tile // mesh.width


def tile_of(coord, mesh):
    """Row-major tile id of grid coordinates; inverse of coords_of."""
    x, y = coord
    if not (0 <= x < mesh.width and 0 <= y < mesh.height):
        raise ConfigurationError(f"coordinates ({x},{y}) outside the grid")
    return y * mesh.width + x


def hop_distance(a, b):
    """Manhattan distance, in mesh hops, between two grid coordinates."""
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def nearest_controller(coord, mesh):
    """Controller whose anchor is closest to coord; ties go to the lowest id."""
    best = 0
    best_d = None
    for cid, anchor in enumerate(mesh.controller_anchors):
        d = hop_distance(coord, anchor)
        if best_d is None or d < best_d:
            best, best_d = cid, d
    return best


def distance_table(mesh):
    """hops[a][b] for every pair of tile ids; precomputed for the access path."""
    coords = [coords_of(t, mesh) for t in range(mesh.total_tiles)]
    return [[hop_distance(a, b) for b in coords] for a in coords]


def controller_distance_table(mesh):
    """hops[tile][controller] from every tile to every controller anchor."""
    return [
        [hop_distance(coords_of(t, mesh), a) for a in mesh.controller_anchors]
        for t in range(mesh.total_tiles)
    ]


def nearest_controller_table(mesh):
    """Nearest controller id for every tile."""
    return [nearest_controller(coords_of(t, mesh), mesh) for t in range(mesh.total_tiles)]
