import math

import numpy as np
import pytest

from risray import geo


@pytest.fixture(scope="session")
def materials():
    return geo.default_materials()


@pytest.fixture(scope="session")
def ground_scene(materials):
    """Infinite concrete ground, nothing else."""
    return geo.build_scene(materials["concrete"], [], materials=materials)


def make_wall_scene(materials, x0=10.0, y_span=(-8.0, 8.0), height=8.0, thickness=1.0):
    """One brick slab perpendicular to the x axis."""
    fp = geo._validate_footprint(
        [(x0, y_span[0]), (x0 + thickness, y_span[0]), (x0 + thickness, y_span[1]), (x0, y_span[1])]
    )
    bld = geo.ExtrudedPolygon(fp, height, materials["brick"])
    return geo.build_scene(materials["concrete"], [bld], materials=materials)


@pytest.fixture(scope="session")
def wall_scene(materials):
    return make_wall_scene(materials)


@pytest.fixture(scope="session")
def corridor_scene(materials):
    """Two parallel brick walls flanking the x axis."""
    walls = []
    for y0, y1 in ((4.0, 5.0), (-5.0, -4.0)):
        fp = geo._validate_footprint([(-2.0, y0), (30.0, y0), (30.0, y1), (-2.0, y1)])
        walls.append(geo.ExtrudedPolygon(fp, 8.0, materials["brick"]))
    return geo.build_scene(materials["concrete"], walls, materials=materials)


@pytest.fixture(scope="session")
def suburb_scene():
    return geo.load_scene("suburb-28ghz")


@pytest.fixture(scope="session")
def corner_scene():
    return geo.load_scene("corner-28ghz")


def assert_db_close(a, b, tol_db, label=""):
    da = 10 * math.log10(a) if a > 0 else -math.inf
    db = 10 * math.log10(b) if b > 0 else -math.inf
    assert abs(da - db) <= tol_db, f"{label}: {da:.4f} vs {db:.4f} dB (tol {tol_db})"
