"""Scene representation, material database and scene file ingestion.

A scene is an infinite ground plane at z = 0 plus a set of buildings, each
an extruded simple polygon with vertical walls and a flat roof.  Every face
carries a material whose electrical properties follow the ITU-R P.2040
power laws.  Scenes are immutable after load and safe to share between
workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from shapely.geometry import LinearRing

METERS_PER_DEGREE = 111_320.0

# Face kinds
GROUND = "ground"
WALL = "wall"
ROOF = "roof"


class SceneError(ValueError):
    """Raised when a scene file is malformed or violates an invariant."""


@dataclass(frozen=True)
class GeoAnchor:
    """WGS-84 reference point for the local east/north frame."""

    latitude_deg: float
    longitude_deg: float

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise SceneError(f"latitude {self.latitude_deg} outside [-90, 90]")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise SceneError(f"longitude {self.longitude_deg} outside [-180, 180]")


@dataclass(frozen=True)
class Material:
    """Frequency-dependent material, ITU-R P.2040 style.

    Relative permittivity real part eps' = eps_a * f^eps_b and conductivity
    sigma = sigma_c * f^sigma_d (S/m) with f in GHz.
    """

    name: str
    eps_a: float
    eps_b: float
    sigma_c: float
    sigma_d: float
    valid_freq_range: tuple[float, float]

    def __post_init__(self):
        if self.eps_a < 1.0:
            raise SceneError(f"material {self.name}: eps_a must be >= 1")
        if self.sigma_c < 0.0:
            raise SceneError(f"material {self.name}: sigma_c must be >= 0")
        lo, hi = self.valid_freq_range
        if not lo < hi:
            raise SceneError(f"material {self.name}: empty validity range")


def itu_permittivity(material: Material, freq_ghz: float) -> complex:
    """Complex relative permittivity eps' - j*eps'' at ``freq_ghz``.

    Uses eps'' = 17.98 * sigma / f_GHz.  The e^{+j omega t} time convention
    is used throughout, so the imaginary part of a lossy medium is negative.
    """
    lo, hi = material.valid_freq_range
    if not lo <= freq_ghz <= hi:
        raise SceneError(
            f"material {material.name} valid for {lo}-{hi} GHz, got {freq_ghz}"
        )
    eps_re = material.eps_a * freq_ghz**material.eps_b
    sigma = material.sigma_c * freq_ghz**material.sigma_d
    return complex(eps_re, -17.98 * sigma / freq_ghz)


def geo_to_local(anchor: GeoAnchor, point: GeoAnchor) -> tuple[float, float]:
    """Equirectangular conversion of ``point`` to (east, north) meters.

    Valid for small offsets (< 0.1 degree) where the flat-earth
    approximation holds to sub-millimeter accuracy.
    """
    dlat = point.latitude_deg - anchor.latitude_deg
    dlon = point.longitude_deg - anchor.longitude_deg
    if abs(dlat) > 0.1 or abs(dlon) > 0.1:
        raise SceneError("geo_to_local offset exceeds 0.1 degree")
    east = dlon * math.cos(math.radians(anchor.latitude_deg)) * METERS_PER_DEGREE
    north = dlat * METERS_PER_DEGREE
    return east, north


@dataclass(frozen=True)
class ExtrudedPolygon:
    """Building: simple CCW footprint in local meters, extruded to ``height``."""

    footprint: tuple[tuple[float, float], ...]
    height: float
    material: Material

    def __post_init__(self):
        if self.height <= 0:
            raise SceneError("building height must be positive")
        if len(self.footprint) < 3:
            raise SceneError("footprint needs at least 3 vertices")


@dataclass(frozen=True)
class Face:
    """One planar logical face of the scene (ground, wall or roof)."""

    index: int
    name: str
    kind: str
    origin: np.ndarray        # plane reference point
    normal: np.ndarray        # outward unit normal
    axis_u: np.ndarray        # in-plane orthonormal basis
    axis_v: np.ndarray
    poly2d: np.ndarray | None  # polygon in (u, v); None for infinite ground
    material: Material


@dataclass(frozen=True)
class Edge:
    """Diffracting wedge edge shared by two faces.

    ``n_param`` is the wedge parameter: exterior angle = n_param * pi.
    ``face_o``/``face_n`` index the two faces forming the wedge.
    """

    index: int
    name: str
    p0: np.ndarray
    p1: np.ndarray
    face_o: int
    face_n: int
    n_param: float


@dataclass(frozen=True)
class Scene:
    """Immutable world: ground plane, buildings and derived geometry."""

    ground_material: Material
    buildings: tuple[ExtrudedPolygon, ...]
    anchor: GeoAnchor | None = None
    materials: dict[str, Material] = field(default_factory=dict)
    # Derived, filled by _finalize
    faces: tuple[Face, ...] = ()
    edges: tuple[Edge, ...] = ()
    triangles: np.ndarray = None      # (T, 3, 3) float64
    tri_face: np.ndarray = None       # (T,) int32, index into faces

    def face_by_name(self, name: str) -> Face:
        for f in self.faces:
            if f.name == name:
                return f
        raise KeyError(name)

    def contains_point(self, p) -> bool:
        """True if p lies strictly inside any building volume."""
        x, y, z = float(p[0]), float(p[1]), float(p[2])
        if z <= 0:
            return True
        for b in self.buildings:
            if z < b.height and _point_in_polygon_2d(x, y, b.footprint):
                return True
        return False


def _point_in_polygon_2d(x: float, y: float, poly) -> bool:
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                inside = not inside
    return inside


def _signed_area(pts) -> float:
    a = 0.0
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        a += x1 * y2 - x2 * y1
    return 0.5 * a


def _validate_footprint(pts) -> tuple[tuple[float, float], ...]:
    """Normalize a footprint to CCW order; reject degenerate polygons."""
    if len(pts) < 3:
        raise SceneError("footprint needs at least 3 vertices")
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if math.dist(pts[i], pts[j]) < 1e-9:
                raise SceneError("duplicate footprint vertex")
    ring = LinearRing([tuple(p) for p in pts])
    if not ring.is_valid or not ring.is_simple:
        raise SceneError("footprint polygon is self-intersecting")
    if abs(_signed_area(pts)) < 1e-9:
        raise SceneError("footprint polygon has zero area")
    if _signed_area(pts) < 0:
        pts = list(reversed(pts))
    return tuple((float(x), float(y)) for x, y in pts)


def _ear_clip(poly: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate a simple CCW polygon by ear clipping. Returns index triples."""
    idx = list(range(len(poly)))
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 10_000:
        guard += 1
        n = len(idx)
        clipped = False
        for k in range(n):
            i0, i1, i2 = idx[(k - 1) % n], idx[k], idx[(k + 1) % n]
            a, b, c = poly[i0], poly[i1], poly[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= 1e-12:
                continue  # reflex or collinear corner
            ear = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                if _point_in_triangle(poly[j], a, b, c):
                    ear = False
                    break
            if ear:
                tris.append((i0, i1, i2))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            raise SceneError("polygon triangulation failed")
    tris.append((idx[0], idx[1], idx[2]))
    return tris


def _point_in_triangle(p, a, b, c) -> bool:
    d1 = (p[0] - b[0]) * (a[1] - b[1]) - (a[0] - b[0]) * (p[1] - b[1])
    d2 = (p[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (p[1] - c[1])
    d3 = (p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])
    neg = (d1 < 0) or (d2 < 0) or (d3 < 0)
    pos = (d1 > 0) or (d2 > 0) or (d3 > 0)
    return not (neg and pos)


def build_scene(
    ground_material: Material,
    buildings,
    anchor: GeoAnchor | None = None,
    materials: dict[str, Material] | None = None,
) -> Scene:
    """Assemble a Scene and derive faces, edges and the triangle soup."""
    faces: list[Face] = []
    edges: list[Edge] = []
    tri_list: list[np.ndarray] = []
    tri_face: list[int] = []

    faces.append(
        Face(
            index=0,
            name="ground",
            kind=GROUND,
            origin=np.zeros(3),
            normal=np.array([0.0, 0.0, 1.0]),
            axis_u=np.array([1.0, 0.0, 0.0]),
            axis_v=np.array([0.0, 1.0, 0.0]),
            poly2d=None,
            material=ground_material,
        )
    )

    for bi, b in enumerate(buildings):
        pts = np.asarray(b.footprint, dtype=float)
        nv = len(pts)
        wall_face_ids = []
        # Walls: edge i runs pts[i] -> pts[i+1]; CCW footprint gives outward
        # normal (dy, -dx).
        for wi in range(nv):
            p1 = pts[wi]
            p2 = pts[(wi + 1) % nv]
            d = p2 - p1
            length = float(np.hypot(d[0], d[1]))
            nrm = np.array([d[1] / length, -d[0] / length, 0.0])
            axis_u = np.array([d[0] / length, d[1] / length, 0.0])
            axis_v = np.array([0.0, 0.0, 1.0])
            origin = np.array([p1[0], p1[1], 0.0])
            poly2d = np.array([[0.0, 0.0], [length, 0.0], [length, b.height], [0.0, b.height]])
            fidx = len(faces)
            wall_face_ids.append(fidx)
            faces.append(
                Face(fidx, f"bldg{bi}.wall{wi}", WALL, origin, nrm, axis_u, axis_v, poly2d, b.material)
            )
            lo1 = np.array([p1[0], p1[1], 0.0])
            lo2 = np.array([p2[0], p2[1], 0.0])
            hi1 = np.array([p1[0], p1[1], b.height])
            hi2 = np.array([p2[0], p2[1], b.height])
            tri_list.append(np.stack([lo1, lo2, hi2]))
            tri_face.append(fidx)
            tri_list.append(np.stack([lo1, hi2, hi1]))
            tri_face.append(fidx)

        # Roof
        origin = np.array([pts[0][0], pts[0][1], b.height])
        axis_u = np.array([1.0, 0.0, 0.0])
        axis_v = np.array([0.0, 1.0, 0.0])
        poly2d = pts - pts[0]
        ridx = len(faces)
        faces.append(
            Face(
                ridx,
                f"bldg{bi}.roof",
                ROOF,
                origin,
                np.array([0.0, 0.0, 1.0]),
                axis_u,
                axis_v,
                poly2d,
                b.material,
            )
        )
        for (i0, i1, i2) in _ear_clip(pts):
            tri = np.stack(
                [
                    np.array([pts[k][0], pts[k][1], b.height])
                    for k in (i0, i1, i2)
                ]
            )
            tri_list.append(tri)
            tri_face.append(ridx)

        # Wedge edges.  Vertical corner edges between consecutive walls;
        # horizontal roof edges between each wall and the roof.
        for wi in range(nv):
            w_prev = wall_face_ids[(wi - 1) % nv]
            w_this = wall_face_ids[wi]
            n_prev = faces[w_prev].normal
            n_this = faces[w_this].normal
            interior = math.pi - math.acos(float(np.clip(np.dot(n_prev, n_this), -1, 1)))
            n_param = (2 * math.pi - interior) / math.pi
            if n_param <= 1.0 + 1e-9:
                continue  # flat or reflex corner: no exterior wedge
            p = pts[wi]
            edges.append(
                Edge(
                    len(edges),
                    f"bldg{bi}.edge{wi}",
                    np.array([p[0], p[1], 0.0]),
                    np.array([p[0], p[1], b.height]),
                    w_prev,
                    w_this,
                    n_param,
                )
            )
        for wi in range(nv):
            p1 = pts[wi]
            p2 = pts[(wi + 1) % nv]
            edges.append(
                Edge(
                    len(edges),
                    f"bldg{bi}.roofedge{wi}",
                    np.array([p1[0], p1[1], b.height]),
                    np.array([p2[0], p2[1], b.height]),
                    wall_face_ids[wi],
                    ridx,
                    1.5,  # wall/roof right angle: exterior 3*pi/2
                )
            )

    if tri_list:
        triangles = np.ascontiguousarray(np.stack(tri_list), dtype=np.float64)
        tri_face_arr = np.asarray(tri_face, dtype=np.int32)
    else:
        triangles = np.zeros((0, 3, 3), dtype=np.float64)
        tri_face_arr = np.zeros(0, dtype=np.int32)
    triangles.setflags(write=False)
    tri_face_arr.setflags(write=False)

    return Scene(
        ground_material=ground_material,
        buildings=tuple(buildings),
        anchor=anchor,
        materials=dict(materials or {}),
        faces=tuple(faces),
        edges=tuple(edges),
        triangles=triangles,
        tri_face=tri_face_arr,
    )


def _parse_material(name: str, spec: dict) -> Material:
    try:
        return Material(
            name=name,
            eps_a=float(spec["a"]),
            eps_b=float(spec["b"]),
            sigma_c=float(spec["c"]),
            sigma_d=float(spec["d"]),
            valid_freq_range=(float(spec["fmin_ghz"]), float(spec["fmax_ghz"])),
        )
    except KeyError as exc:
        raise SceneError(f"material {name}: missing key {exc}") from exc


def default_materials() -> dict[str, Material]:
    """Materials shipped with the package (ITU-R P.2040 constants)."""
    text = resources.files("risray.data").joinpath("materials.json").read_text()
    raw = json.loads(text)
    return {name: _parse_material(name, spec) for name, spec in raw.items()}


def load_scene(path) -> Scene:
    """Load a scene file (JSON, ``schema: 1``).

    Raises SceneError for parse failures, unknown materials, invalid
    polygons or non-positive heights.  Built-in scene names (for example
    ``suburb-28ghz``) resolve to bundled files.
    """
    path = _resolve_scene_path(path)
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneError(f"cannot read scene {path}: {exc}") from exc

    if raw.get("schema") != 1:
        raise SceneError("scene file must declare schema: 1")

    materials = default_materials()
    for name, spec in raw.get("materials", {}).items():
        materials[name] = _parse_material(name, spec)

    def lookup(name: str) -> Material:
        try:
            return materials[name]
        except KeyError:
            raise SceneError(f"unknown material {name!r}") from None

    ground = lookup(raw.get("ground", {}).get("material", "concrete"))

    anchor = None
    if "anchor" in raw:
        anchor = GeoAnchor(float(raw["anchor"]["lat"]), float(raw["anchor"]["lon"]))

    buildings = []
    for bi, b in enumerate(raw.get("buildings", [])):
        try:
            footprint = _validate_footprint([(float(x), float(y)) for x, y in b["footprint"]])
            buildings.append(
                ExtrudedPolygon(footprint, float(b["height"]), lookup(b["material"]))
            )
        except SceneError as exc:
            raise SceneError(f"building {bi}: {exc}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneError(f"building {bi}: malformed entry ({exc})") from None

    return build_scene(ground, buildings, anchor, materials)


def _resolve_scene_path(path):
    p = Path(path)
    if p.exists():
        return p
    builtin = resources.files("risray.data").joinpath(f"scenes/{path}.json")
    if builtin.is_file():
        return builtin
    raise SceneError(f"scene file not found: {path}")


def builtin_scene_names() -> list[str]:
    root = resources.files("risray.data").joinpath("scenes")
    return sorted(f.name[: -len(".json")] for f in root.iterdir() if f.name.endswith(".json"))
