"""Tour of the metric tile grid: projection, tiling, point lookup, polygon masks.

Run: python demos/grid_tiling.py
"""

import math

from snapgrid.geo import (
    METERS_PER_DEG_LAT,
    GeoPoint,
    Region,
    TileIndex,
    build_grid,
    locate,
    project_local,
)


def km_ring(anchor_lat, anchor_lon, points_km):
    """Polygon ring from offsets in kilometres around an anchor."""
    m_lon = METERS_PER_DEG_LAT * math.cos(math.radians(anchor_lat))
    return [
        GeoPoint(anchor_lat + 1000.0 * y / METERS_PER_DEG_LAT, anchor_lon + 1000.0 * x / m_lon)
        for x, y in points_km
    ]


def show_grid(name, grid):
    print(f"{name}: {grid.n_rows} rows x {grid.n_cols} cols, {grid.n_active} active tiles")
    for row in reversed(range(grid.n_rows)):
        cells = ("#" if grid.active[row, col] else "." for col in range(grid.n_cols))
        print("   " + " ".join(cells))


def main():
    # A 5 km x 3 km box over central London. Tiles are 1 km squares in a
    # local equirectangular projection anchored at the southwest corner.
    south, west = 51.50, -0.14
    north = south + 3000.0 / METERS_PER_DEG_LAT
    east = west + 5000.0 / (METERS_PER_DEG_LAT * math.cos(math.radians(south)))
    box = Region.from_bbox(south, west, north, east)
    grid = build_grid(box, tile_size_m=1000.0)
    show_grid("bbox city", grid)

    # Point lookup. locate() floors the projected coordinates, so a point
    # exactly on a tile edge belongs to the higher-index tile, and anything
    # past the outer east/north edge falls off the grid.
    for label, p in [
        ("southwest corner", GeoPoint(south, west)),
        ("1.5 km east, 0.5 km north", GeoPoint(south + 500 / METERS_PER_DEG_LAT, west + 1500 / (METERS_PER_DEG_LAT * math.cos(math.radians(south))))),
        ("north of the box", GeoPoint(north + 0.01, west)),
    ]:
        idx = locate(p, grid)
        where = f"tile (row={idx.row}, col={idx.col})" if idx else "outside"
        x, y = project_local(p, grid.origin)
        print(f"  {label}: projected ({x:7.1f} m, {y:7.1f} m) -> {where}")

    # A triangular "city" shows the polygon mask: a tile stays active only
    # when its center lies inside the ring (boundary counts as inside).
    triangle = Region.from_polygon(km_ring(51.50, -0.14, [(0, 0), (4.5, 0), (0, 4.5)]))
    tri_grid = build_grid(triangle, tile_size_m=1000.0)
    show_grid("triangle city", tri_grid)
    center = tri_grid.tile_center(TileIndex(0, 0))
    print(f"  tile (0,0) center: ({center.lat:.5f}, {center.lon:.5f})")
    print(f"  locate(center) -> {locate(center, tri_grid)}")


if __name__ == "__main__":
    main()
