"""Convex polytopes in R^d: generators, explicit hulls (d <= 3), face lattices,
and angular volumes of the local cone along each face.

A polytope carries its full face lattice, from vertices up to the polytope
itself treated as the unique d-dimensional face.  Each face knows its angular
volume rho: the Lebesgue measure of (local cone) intersected with the unit
ball.  Interiors give the full ball volume theta_d, facets theta_d/2, polygon
vertices half the interior angle, polyhedron edges 2/3 of the dihedral angle,
polyhedron vertices a third of the solid angle; everything else falls back to
seeded Monte Carlo.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import PolytopeConstructionError, UnsupportedDimensionError

__all__ = [
    "Polytope", "Face", "unit_ball_volume",
    "hypercube", "box", "simplex", "cross_polytope", "regular_polygon",
    "from_vertices", "build_polytope",
    "face_lattice", "angular_volume", "angular_volume_monte_carlo",
    "dihedral_angle", "contains",
]

COPLANAR_TOL = 1e-9     # coplanarity/collinearity, relative to the diameter
CONTAIN_TOL = 1e-12     # absolute slack for membership tests
MC_SAMPLES_DEFAULT = 10 ** 6


def unit_ball_volume(d: int) -> float:
    """Volume theta_d = pi^(d/2) / Gamma(1 + d/2) of the unit ball in R^d."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return math.pi ** (d / 2.0) / math.gamma(1.0 + d / 2.0)


@dataclass
class Face:
    """One element of the face lattice.

    ``dimension == polytope.dim`` identifies the polytope itself.  Treated as
    immutable after construction; ``angular_volume`` is None only for faces
    whose rho has no exact branch and is filled (and cached) on first request
    by the Monte Carlo path.
    """

    id: int
    dimension: int
    vertex_ids: tuple[int, ...]
    parent_ids: tuple[int, ...] = ()
    child_ids: tuple[int, ...] = ()
    angular_volume: float | None = None
    relative_interior_point: np.ndarray | None = field(default=None, repr=False)


class Polytope:
    """Compact convex full-dimensional polytope with an explicit face lattice.

    Built by the module-level generators (:func:`hypercube`, :func:`box`,
    :func:`simplex`, :func:`cross_polytope`, :func:`regular_polygon`) or from
    explicit vertices in d <= 3 (:func:`from_vertices`); not intended for
    direct construction.  Immutable after construction.
    """

    def __init__(self, dim, vertices, normals, offsets, face_specs, volume, kind):
        self.dim = int(dim)
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.normals = np.ascontiguousarray(normals, dtype=float)
        self.offsets = np.ascontiguousarray(offsets, dtype=float)
        self.volume = float(volume)
        self.kind = str(kind)

        d = self.dim
        if d < 1:
            raise PolytopeConstructionError(f"dimension must be >= 1, got {d}")
        if self.vertices.ndim != 2 or self.vertices.shape[1] != d:
            raise PolytopeConstructionError(
                f"vertices must be (n, {d}), got {self.vertices.shape}")
        if len(self.vertices) < d + 1:
            raise PolytopeConstructionError(
                f"need at least {d + 1} vertices in R^{d}, got {len(self.vertices)}")
        if self.volume <= 0:
            raise PolytopeConstructionError("polytope must have positive volume")

        norms = np.sqrt((self.normals ** 2).sum(1))
        if np.abs(norms - 1.0).max() > 1e-9:
            raise PolytopeConstructionError("halfspace normals must be unit vectors")

        lo = self.vertices.min(0)
        hi = self.vertices.max(0)
        self.bounding_box = np.vstack([lo, hi])
        self.diameter = float(np.sqrt(((hi - lo) ** 2).sum()))
        tol = COPLANAR_TOL * max(1.0, self.diameter)

        slack = self.vertices @ self.normals.T - self.offsets
        if slack.max() > tol:
            raise PolytopeConstructionError(
                f"a vertex violates a halfspace by {slack.max():.3g}")
        if d <= 3:
            active_counts = (np.abs(slack) <= tol).sum(1)
            if active_counts.min() < d:
                raise PolytopeConstructionError(
                    f"a vertex is active on only {active_counts.min()} < {d} halfspaces")

        self.faces = self._build_faces(face_specs)
        self._link_lattice()
        self._check_euler()
        self._facet_halfspace = self._map_facets_to_halfspaces(tol)
        self._fill_angular_volumes()

        payload = self.kind.encode() + bytes([d]) + self.vertices.tobytes()
        self.key = hashlib.sha1(payload).hexdigest()[:12]

    # -- construction ------------------------------------------------------

    def _build_faces(self, face_specs):
        specs = sorted({(int(D), tuple(sorted(int(v) for v in vids)))
                        for D, vids in face_specs})
        if not specs or specs[-1][0] != self.dim:
            raise PolytopeConstructionError("face lattice must include the polytope itself")
        faces = []
        for fid, (D, vids) in enumerate(specs):
            if not 0 <= D <= self.dim:
                raise PolytopeConstructionError(f"face dimension {D} out of range")
            if len(vids) < D + 1:
                raise PolytopeConstructionError(
                    f"face of dimension {D} needs >= {D + 1} vertices, got {len(vids)}")
            rip = self.vertices[list(vids)].mean(0)
            faces.append(Face(id=fid, dimension=D, vertex_ids=vids,
                              relative_interior_point=rip))
        return faces

    def _link_lattice(self):
        by_dim: dict[int, list[Face]] = {}
        for f in self.faces:
            by_dim.setdefault(f.dimension, []).append(f)
        vsets = {f.id: frozenset(f.vertex_ids) for f in self.faces}
        children: dict[int, list[int]] = {f.id: [] for f in self.faces}
        for f in self.faces:
            if f.dimension == self.dim:
                continue
            parents = [g.id for g in by_dim.get(f.dimension + 1, [])
                       if vsets[f.id] <= vsets[g.id]]
            if not parents:
                raise PolytopeConstructionError(
                    f"face {f.id} (dim {f.dimension}) has no parent in the lattice")
            f.parent_ids = tuple(parents)
            for p in parents:
                children[p].append(f.id)
        for f in self.faces:
            f.child_ids = tuple(sorted(children[f.id]))

    def _check_euler(self):
        # boundary Euler characteristic: sum over proper faces of (-1)^D equals
        # 1 - (-1)^d for every convex d-polytope with d <= 3
        if self.dim > 3:
            return
        chi = sum((-1) ** f.dimension for f in self.faces if f.dimension < self.dim)
        expect = 1 - (-1) ** self.dim
        if chi != expect:
            raise PolytopeConstructionError(
                f"face counts violate the Euler relation: chi={chi}, expected {expect}")

    def _map_facets_to_halfspaces(self, tol):
        mapping = {}
        for f in self.faces:
            if f.dimension != self.dim - 1:
                continue
            pts = self.vertices[list(f.vertex_ids)]
            resid = np.abs(pts @ self.normals.T - self.offsets).max(0)
            rows = np.flatnonzero(resid <= tol)
            if len(rows) != 1:
                raise PolytopeConstructionError(
                    f"facet {f.id} matches {len(rows)} halfspaces, expected 1")
            mapping[f.id] = int(rows[0])
        return mapping

    def _fill_angular_volumes(self):
        d = self.dim
        theta = unit_ball_volume(d)
        for f in self.faces:
            D = f.dimension
            if D == d:
                f.angular_volume = theta
            elif D == d - 1:
                f.angular_volume = theta / 2.0
            elif self.kind in ("hypercube", "box"):
                f.angular_volume = theta / 2 ** (d - D)
            elif d == 2 and D == 0:
                f.angular_volume = 0.5 * self._polygon_vertex_angle(f)
            elif d == 3 and D == 1:
                f.angular_volume = 2.0 * self._dihedral(f) / 3.0
            elif d == 3 and D == 0:
                f.angular_volume = self._vertex_solid_angle(f) / 3.0
            # else: no exact branch; Monte Carlo on first request

    # -- local geometry ----------------------------------------------------

    def _edge_directions_at_vertex(self, face):
        vid = face.vertex_ids[0]
        v = self.vertices[vid]
        dirs = []
        for pid in face.parent_ids:
            edge = self.faces[pid]
            if edge.dimension != 1:
                continue
            other = next(w for w in edge.vertex_ids if w != vid)
            u = self.vertices[other] - v
            dirs.append(u / np.sqrt((u ** 2).sum()))
        return np.array(dirs)

    def _polygon_vertex_angle(self, face):
        dirs = self._edge_directions_at_vertex(face)
        if len(dirs) != 2:
            raise PolytopeConstructionError(
                f"polygon vertex {face.id} has {len(dirs)} incident edges, expected 2")
        c = float(np.clip(dirs[0] @ dirs[1], -1.0, 1.0))
        return math.acos(c)

    def _dihedral(self, edge_face):
        facet_ids = [p for p in edge_face.parent_ids
                     if self.faces[p].dimension == 2]
        if len(facet_ids) != 2:
            raise PolytopeConstructionError(
                f"edge {edge_face.id} lies on {len(facet_ids)} facets, expected 2")
        n1 = self.normals[self._facet_halfspace[facet_ids[0]]]
        n2 = self.normals[self._facet_halfspace[facet_ids[1]]]
        c = float(np.clip(n1 @ n2, -1.0, 1.0))
        return math.pi - math.acos(c)

    def _vertex_solid_angle(self, face):
        dirs = self._edge_directions_at_vertex(face)
        if len(dirs) < 3:
            raise PolytopeConstructionError(
                f"polyhedron vertex {face.id} has {len(dirs)} incident edges, expected >= 3")
        axis = dirs.mean(0)
        axis /= np.sqrt((axis ** 2).sum())
        ref = np.zeros(3)
        ref[int(np.argmin(np.abs(axis)))] = 1.0
        u = ref - (ref @ axis) * axis
        u /= np.sqrt((u ** 2).sum())
        w = np.cross(axis, u)
        order = np.argsort(np.arctan2(dirs @ w, dirs @ u))
        ds = dirs[order]
        omega = 0.0
        for i in range(1, len(ds) - 1):
            a, b, c = ds[0], ds[i], ds[i + 1]
            num = abs(float(a @ np.cross(b, c)))
            den = 1.0 + float(a @ b) + float(b @ c) + float(a @ c)
            omega += 2.0 * math.atan2(num, den)
        return omega

    # -- queries -----------------------------------------------------------

    def face_by_id(self, fid: int) -> Face:
        if not 0 <= fid < len(self.faces):
            raise LookupError(f"no face with id {fid}")
        return self.faces[fid]

    def faces_of_dimension(self, D: int) -> list[Face]:
        return [f for f in self.faces if f.dimension == D]

    @property
    def top_face(self) -> Face:
        return self.faces[-1]

    @property
    def halfspaces(self) -> list[tuple[np.ndarray, float]]:
        return [(self.normals[i], float(self.offsets[i]))
                for i in range(len(self.normals))]

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (pts @ self.normals.T <= self.offsets + CONTAIN_TOL).all(axis=1)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dim},)")
        return bool(self.contains_many(x[None])[0])

    def describe(self) -> str:
        return f"{self.kind}[d={self.dim},v={len(self.vertices)}]#{self.key}"

    def __repr__(self) -> str:
        return (f"Polytope({self.describe()}, faces={len(self.faces)}, "
                f"volume={self.volume:.6g})")


# -- generators ------------------------------------------------------------

def hypercube(d: int) -> Polytope:
    """Unit hypercube [0, 1]^d."""
    return _box_impl([1.0] * int(d), kind="hypercube")


def box(sides) -> Polytope:
    """Axis-aligned box [0, s_1] x ... x [0, s_d]."""
    return _box_impl(list(sides), kind="box")


def _box_impl(sides, kind):
    d = len(sides)
    if d < 1:
        raise PolytopeConstructionError("box needs at least one side length")
    sides = np.asarray([float(s) for s in sides])
    if not (np.isfinite(sides).all() and (sides > 0).all()):
        raise PolytopeConstructionError(f"side lengths must be positive, got {sides}")
    nv = 2 ** d
    corners = np.array([[(j >> i) & 1 for i in range(d)] for j in range(nv)], dtype=float)
    verts = corners * sides
    specs = []
    for code in itertools.product((0, 1, None), repeat=d):
        vids = [j for j in range(nv)
                if all(c is None or ((j >> i) & 1) == c for i, c in enumerate(code))]
        specs.append((sum(c is None for c in code), tuple(vids)))
    normals = np.vstack([np.eye(d), -np.eye(d)])
    offsets = np.concatenate([sides, np.zeros(d)])
    return Polytope(d, verts, normals, offsets, specs, float(sides.prod()), kind)


def simplex(d: int) -> Polytope:
    """Corner simplex conv{0, e_1, ..., e_d}; volume 1/d!."""
    d = int(d)
    if d < 1:
        raise PolytopeConstructionError(f"simplex dimension must be >= 1, got {d}")
    verts = np.vstack([np.zeros(d), np.eye(d)])
    specs = []
    for r in range(1, d + 2):
        for sub in itertools.combinations(range(d + 1), r):
            specs.append((r - 1, sub))
    normals = np.vstack([-np.eye(d), np.full(d, 1.0 / math.sqrt(d))])
    offsets = np.concatenate([np.zeros(d), [1.0 / math.sqrt(d)]])
    return Polytope(d, verts, normals, offsets, specs, 1.0 / math.factorial(d), "simplex")


def cross_polytope(d: int) -> Polytope:
    """Cross-polytope conv{+-e_1, ..., +-e_d}; volume 2^d/d!."""
    d = int(d)
    if d < 1:
        raise PolytopeConstructionError(f"cross_polytope dimension must be >= 1, got {d}")
    verts = np.zeros((2 * d, d))
    for i in range(d):
        verts[2 * i, i] = 1.0
        verts[2 * i + 1, i] = -1.0
    specs = []
    for r in range(1, d + 1):
        for axes in itertools.combinations(range(d), r):
            for signs in itertools.product((0, 1), repeat=r):
                vids = tuple(sorted(2 * ax + s for ax, s in zip(axes, signs)))
                specs.append((r - 1, vids))
    specs.append((d, tuple(range(2 * d))))
    inv_sqrt_d = 1.0 / math.sqrt(d)
    normals = np.array([[s * inv_sqrt_d for s in signs]
                        for signs in itertools.product((1, -1), repeat=d)])
    offsets = np.full(2 ** d, inv_sqrt_d)
    return Polytope(d, verts, normals, offsets, specs,
                    2 ** d / math.factorial(d), "cross_polytope")


def regular_polygon(m: int) -> Polytope:
    """Regular m-gon inscribed in the unit circle."""
    m = int(m)
    if m < 3:
        raise PolytopeConstructionError(f"regular polygon needs >= 3 vertices, got {m}")
    ang = 2.0 * math.pi * np.arange(m) / m
    verts = np.column_stack([np.cos(ang), np.sin(ang)])
    specs = [(0, (j,)) for j in range(m)]
    specs += [(1, tuple(sorted((j, (j + 1) % m)))) for j in range(m)]
    specs.append((2, tuple(range(m))))
    mid = (2.0 * np.arange(m) + 1.0) * math.pi / m
    normals = np.column_stack([np.cos(mid), np.sin(mid)])
    offsets = np.full(m, math.cos(math.pi / m))
    return Polytope(2, verts, normals, offsets, specs,
                    0.5 * m * math.sin(2.0 * math.pi / m), "regular_polygon")


def from_vertices(points) -> Polytope:
    """Convex hull of explicit points; d in {2, 3} only.  Interior points are
    discarded; coplanar hull triangles are merged into polygonal facets."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise PolytopeConstructionError(f"vertex array must be 2-d, got shape {pts.shape}")
    d = pts.shape[1]
    if d not in (2, 3):
        raise UnsupportedDimensionError(
            f"explicit vertex lists are supported only for d in {{2, 3}}, got d={d}")
    if len(pts) < d + 1:
        raise PolytopeConstructionError(
            f"need at least {d + 1} points in R^{d}, got {len(pts)}")
    if not np.isfinite(pts).all():
        raise PolytopeConstructionError("vertex coordinates must be finite")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise PolytopeConstructionError(f"degenerate vertex set: {exc}") from exc
    if d == 2:
        return _polygon_from_hull(pts, hull)
    return _polyhedron_from_hull(pts, hull)


def _polygon_from_hull(pts, hull):
    order = hull.vertices  # counter-clockwise
    verts = pts[order]
    m = len(verts)
    specs = [(0, (j,)) for j in range(m)]
    specs += [(1, tuple(sorted((j, (j + 1) % m)))) for j in range(m)]
    specs.append((2, tuple(range(m))))
    normals = np.empty((m, 2))
    offsets = np.empty(m)
    for j in range(m):
        e = verts[(j + 1) % m] - verts[j]
        n = np.array([e[1], -e[0]])
        n /= np.sqrt((n ** 2).sum())
        normals[j] = n
        offsets[j] = n @ verts[j]
    return Polytope(2, verts, normals, offsets, specs, hull.volume, "hull")


def _polyhedron_from_hull(pts, hull):
    keep = np.array(sorted(set(int(i) for i in hull.vertices)))
    verts = pts[keep]
    lo, hi = verts.min(0), verts.max(0)
    tol = COPLANAR_TOL * max(1.0, float(np.sqrt(((hi - lo) ** 2).sum())))

    # cluster the outward-oriented triangle planes into distinct facet planes
    planes: list[tuple[np.ndarray, float]] = []
    for eq in hull.equations:
        n, b = eq[:3], -eq[3]
        for n2, b2 in planes:
            if abs(float(n @ n2) - 1.0) <= 1e-9 and abs(b - b2) <= tol:
                break
        else:
            planes.append((n, b))

    facet_specs = []
    edge_count: dict[tuple[int, int], int] = {}
    for n, b in planes:
        on = np.flatnonzero(np.abs(verts @ n - b) <= tol)
        if len(on) < 3:
            raise PolytopeConstructionError("facet with fewer than 3 vertices")
        ring = _order_in_plane(verts[on], n)
        cyc = [int(on[i]) for i in ring]
        facet_specs.append((2, tuple(sorted(cyc))))
        for a, bb in zip(cyc, cyc[1:] + cyc[:1]):
            e = (a, bb) if a < bb else (bb, a)
            edge_count[e] = edge_count.get(e, 0) + 1
    bad = [e for e, c in edge_count.items() if c != 2]
    if bad:
        raise PolytopeConstructionError(
            f"{len(bad)} edges do not lie on exactly 2 facets; input too degenerate")

    specs = [(0, (j,)) for j in range(len(verts))]
    specs += [(1, e) for e in edge_count]
    specs += facet_specs
    specs.append((3, tuple(range(len(verts)))))
    normals = np.array([n for n, _ in planes])
    offsets = np.array([b for _, b in planes])
    return Polytope(3, verts, normals, offsets, specs, hull.volume, "hull")


def _order_in_plane(pts3, normal):
    """Indices of coplanar 3-d points in cyclic order around their centroid."""
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(normal)))] = 1.0
    u = ref - (ref @ normal) * normal
    u /= np.sqrt((u ** 2).sum())
    w = np.cross(normal, u)
    rel = pts3 - pts3.mean(0)
    return np.argsort(np.arctan2(rel @ w, rel @ u))


_GENERATORS = {"hypercube", "simplex", "cross_polytope", "box", "regular_polygon"}


def build_polytope(spec) -> Polytope:
    """Build from a spec dict: {"shape": name, ...} or {"vertices": [[...], ...]}."""
    if isinstance(spec, Polytope):
        return spec
    if not isinstance(spec, dict):
        raise PolytopeConstructionError(f"polytope spec must be a dict, got {type(spec)}")
    if "vertices" in spec:
        pts = np.asarray(spec["vertices"], dtype=float)
        if "dim" in spec and pts.ndim == 2 and int(spec["dim"]) != pts.shape[1]:
            raise PolytopeConstructionError(
                f"spec dim {spec['dim']} does not match vertex dimension {pts.shape[1]}")
        return from_vertices(pts)
    shape = spec.get("shape")
    if shape not in _GENERATORS:
        raise PolytopeConstructionError(
            f"unknown shape {shape!r}; expected one of {sorted(_GENERATORS)} or 'vertices'")
    if shape == "box":
        return box(spec["sides"])
    if shape == "regular_polygon":
        m = spec.get("sides", spec.get("m"))
        if m is None:
            raise PolytopeConstructionError("regular_polygon spec needs 'sides'")
        return regular_polygon(int(m))
    if "dim" not in spec:
        raise PolytopeConstructionError(f"{shape} spec needs 'dim'")
    return {"hypercube": hypercube, "simplex": simplex,
            "cross_polytope": cross_polytope}[shape](int(spec["dim"]))


# -- face operations -------------------------------------------------------

def face_lattice(polytope: Polytope) -> list[Face]:
    """All faces of dimensions 0..d, the polytope itself last."""
    return list(polytope.faces)


def _resolve_face(polytope: Polytope, face) -> Face:
    if isinstance(face, Face):
        owned = polytope.face_by_id(face.id)
        if owned is not face:
            raise LookupError("face does not belong to this polytope")
        return owned
    return polytope.face_by_id(int(face))


def angular_volume(polytope: Polytope, face, *, samples: int = MC_SAMPLES_DEFAULT,
                   seed: int = 0) -> float:
    """Angular volume rho of the face's local cone (cached).

    Exact for interiors, facets, box faces of any codimension, polygon
    vertices, and polyhedron edges/vertices; Monte Carlo (with the given
    sample count and seed) otherwise, cached on the face.
    """
    f = _resolve_face(polytope, face)
    if f.angular_volume is None:
        f.angular_volume = angular_volume_monte_carlo(
            polytope, f, samples=samples, seed=seed)
    return f.angular_volume


def angular_volume_monte_carlo(polytope: Polytope, face, *,
                               samples: int = MC_SAMPLES_DEFAULT,
                               seed: int = 0) -> float:
    """Monte Carlo rho: theta_d times the fraction of uniform unit-ball points
    inside the cone of active constraints at the face's relative interior point.

    Independent of the exact branches; usable as a cross-check on any face.
    """
    f = _resolve_face(polytope, face)
    d = polytope.dim
    x0 = f.relative_interior_point
    tol = COPLANAR_TOL * max(1.0, polytope.diameter)
    active = np.abs(polytope.normals @ x0 - polytope.offsets) <= tol
    cone_normals = polytope.normals[active]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    hits = 0
    remaining = int(samples)
    while remaining > 0:
        m = min(remaining, 200_000)
        z = rng.standard_normal((m, d))
        norms = np.sqrt((z ** 2).sum(1))
        norms[norms == 0.0] = 1.0
        y = z / norms[:, None] * rng.random(m)[:, None] ** (1.0 / d)
        if len(cone_normals):
            hits += int(((y @ cone_normals.T) <= CONTAIN_TOL).all(1).sum())
        else:
            hits += m
        remaining -= m
    return unit_ball_volume(d) * hits / float(samples)


def dihedral_angle(polytope: Polytope, edge) -> float:
    """Interior angle between the two facet planes meeting at a d=3 edge."""
    f = _resolve_face(polytope, edge)
    if polytope.dim != 3 or f.dimension != 1:
        raise ValueError(
            f"dihedral_angle needs a d=3 polytope and an edge, got d={polytope.dim}, "
            f"face dimension {f.dimension}")
    return polytope._dihedral(f)


def contains(polytope: Polytope, x) -> bool:
    """Membership within absolute tolerance 1e-12 on every halfspace."""
    return polytope.contains(x)
