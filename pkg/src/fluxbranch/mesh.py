"""Two-dimensional triangulations with explicit, outward-oriented boundary edges.

The text format handled by :func:`save_mesh` / :func:`load_mesh` is::

    # comment
    mesh2d <nv> <nt> <nb>
    v <x> <y>          (nv lines)
    t <i> <j> <k>      (nt lines, 0-based, counter-clockwise)
    b <i> <j>          (nb lines, domain lies left of i -> j)
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import MeshOrientationError, MeshParseError, MeshTopologyError, ResourceError

MAX_DISK_REFINEMENT = 10
BASE_FAN_SIZE = 16


@dataclass(frozen=True)
class Disk:
    radius: float


@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float


@dataclass(frozen=True)
class External:
    source: str = ""


DomainTag = Union[Disk, Rectangle, External]


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MeshGeometry:
    """Immutable triangulation of a planar domain.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    boundary_edges : (nb, 2) int array, domain on the left of each edge
    domain_tag : Disk, Rectangle or External
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    domain_tag: DomainTag = field(default_factory=External)
    level: int = 0

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, np.float64).reshape(-1, 2))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64).reshape(-1, 3))
        object.__setattr__(self, "boundary_edges", _frozen(self.boundary_edges, np.int64).reshape(-1, 2))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def boundary_vertex_set(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def area(self) -> float:
        return float(self.signed_areas().sum())

    def boundary_edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.boundary_edges[:, 1]] - self.vertices[self.boundary_edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def perimeter(self) -> float:
        return float(self.boundary_edge_lengths().sum())

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted pairs."""
        return _unique_edges(self.triangles)[0]

    def max_edge_length(self) -> float:
        e = self.edges()
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        return float(np.hypot(d[:, 0], d[:, 1]).max())

    def describe(self) -> str:
        tag = self.domain_tag
        if isinstance(tag, Disk):
            name = f"disk(R={tag.radius!r},level={self.level})"
        elif isinstance(tag, Rectangle):
            name = f"rect({tag.width!r}x{tag.height!r})"
        else:
            name = f"external({tag.source})"
        return f"{name}[nv={self.n_vertices},nt={len(self.triangles)},nb={len(self.boundary_edges)}]"


def _unique_edges(triangles):
    t = np.asarray(triangles)
    all_edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    all_edges.sort(axis=1)
    return np.unique(all_edges, axis=0, return_inverse=True, return_counts=True)


def validate_mesh(mesh: MeshGeometry) -> None:
    """Raise if any structural invariant of ``mesh`` fails."""
    nv = mesh.n_vertices
    t, b = mesh.triangles, mesh.boundary_edges
    if len(t) == 0:
        raise MeshTopologyError("mesh has no triangles")
    if t.min() < 0 or t.max() >= nv or (len(b) and (b.min() < 0 or b.max() >= nv)):
        raise MeshTopologyError("vertex index out of range")
    if not np.all(np.isfinite(mesh.vertices)):
        raise MeshTopologyError("non-finite vertex coordinate")

    areas = mesh.signed_areas()
    bad = np.flatnonzero(areas <= 0.0)
    if bad.size:
        raise MeshOrientationError(
            f"triangle {bad[0]} has non-positive signed area {areas[bad[0]]:.3e} (clockwise or degenerate)"
        )

    # directed half-edges: boundary edges must coincide with unpaired half-edges
    half = Counter()
    for tri in t.tolist():
        for k in range(3):
            half[(tri[k], tri[(k + 1) % 3])] += 1
    undirected = Counter()
    for (i, j), c in half.items():
        if c > 1:
            raise MeshTopologyError(f"directed edge {i}->{j} used by {c} triangles")
        undirected[(min(i, j), max(i, j))] += c
    over = [e for e, c in undirected.items() if c > 2]
    if over:
        raise MeshTopologyError(f"edge {over[0]} shared by more than two triangles")

    expected = {(i, j) for (i, j) in half if (j, i) not in half}
    given = [tuple(e) for e in b.tolist()]
    if len(set(given)) != len(given):
        raise MeshTopologyError("duplicate boundary edge")
    for e in given:
        if e in expected:
            continue
        if (e[1], e[0]) in expected:
            raise MeshOrientationError(f"boundary edge {e[0]}->{e[1]} is not outward oriented")
        raise MeshTopologyError(f"boundary edge {e[0]}->{e[1]} does not lie on exactly one triangle")
    missing = expected - set(given)
    if missing:
        e = sorted(missing)[0]
        raise MeshTopologyError(f"edge {e[0]}->{e[1]} lies on one triangle but is not listed as boundary")

    out_deg = Counter(e[0] for e in given)
    in_deg = Counter(e[1] for e in given)
    for v in set(out_deg) | set(in_deg):
        if out_deg[v] != 1 or in_deg[v] != 1:
            raise MeshTopologyError(f"boundary cycle not closed at vertex {v}")


# --------------------------------------------------------------------- generators

def generate_disk_mesh(radius: float = 1.0, refinement: int = 0) -> MeshGeometry:
    """Triangulate the disk of the given radius centred at the origin.

    Level 0 is a fan of 16 triangles around the centre. Each refinement splits
    every triangle into four through edge midpoints; new boundary vertices are
    projected onto the circle.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if refinement < 0:
        raise ValueError("refinement must be nonnegative")
    if refinement > MAX_DISK_REFINEMENT:
        raise ResourceError(
            f"refinement {refinement} exceeds the limit {MAX_DISK_REFINEMENT} "
            f"({BASE_FAN_SIZE * 4 ** refinement} triangles)"
        )
    n = BASE_FAN_SIZE
    theta = 2.0 * np.pi * np.arange(n) / n
    vertices = np.vstack([[0.0, 0.0], radius * np.column_stack([np.cos(theta), np.sin(theta)])])
    ring = 1 + np.arange(n)
    triangles = np.column_stack([np.zeros(n, dtype=np.int64), ring, np.roll(ring, -1)])
    boundary = np.column_stack([ring, np.roll(ring, -1)])
    mesh = MeshGeometry(vertices, triangles, boundary, Disk(float(radius)), 0)
    for _ in range(refinement):
        mesh = refine_mesh(mesh)
    return mesh


def refine_mesh(mesh: MeshGeometry) -> MeshGeometry:
    """Uniform red refinement; boundary midpoints are projected for disk meshes."""
    edges, inverse, _ = _unique_edges(mesh.triangles)
    nt = len(mesh.triangles)
    inverse = inverse.reshape(3, nt).T  # columns: edges (0,1), (1,2), (2,0)
    nv = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])

    # boundary edge -> index into `edges`
    b = mesh.boundary_edges
    bsorted = np.sort(b, axis=1)
    lookup = {(int(i), int(j)): k for k, (i, j) in enumerate(edges.tolist())}
    b_mid = np.array([lookup[(int(i), int(j))] for i, j in bsorted.tolist()], dtype=np.int64)

    if isinstance(mesh.domain_tag, Disk):
        r = mesh.domain_tag.radius
        m = mids[b_mid]
        mids[b_mid] = r * m / np.hypot(m[:, 0], m[:, 1])[:, None]

    vertices = np.vstack([mesh.vertices, mids])
    a, bb, c = mesh.triangles.T
    ab, bc, ca = (nv + inverse[:, 0], nv + inverse[:, 1], nv + inverse[:, 2])
    triangles = np.concatenate(
        [
            np.column_stack([a, ab, ca]),
            np.column_stack([bb, bc, ab]),
            np.column_stack([c, ca, bc]),
            np.column_stack([ab, bc, ca]),
        ]
    )
    m_idx = nv + b_mid
    boundary = np.empty((2 * len(b), 2), dtype=np.int64)
    boundary[0::2] = np.column_stack([b[:, 0], m_idx])
    boundary[1::2] = np.column_stack([m_idx, b[:, 1]])
    return MeshGeometry(vertices, triangles, boundary, mesh.domain_tag, mesh.level + 1)


def generate_rectangle_mesh(w: float, h: float, nx: int, ny: int) -> MeshGeometry:
    """Structured grid on [0, w] x [0, h] with every cell split into two triangles."""
    if not (w > 0 and h > 0):
        raise ValueError("rectangle sides must be positive")
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    xs = w * np.arange(nx + 1) / nx
    ys = h * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys)  # row j holds y = ys[j]
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    I, J = np.meshgrid(np.arange(nx), np.arange(ny))
    I, J = I.ravel(), J.ravel()
    v00, v10, v11, v01 = vid(I, J), vid(I + 1, J), vid(I + 1, J + 1), vid(I, J + 1)
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])

    loop = (
        [vid(i, 0) for i in range(nx)]
        + [vid(nx, j) for j in range(ny)]
        + [vid(i, ny) for i in range(nx, 0, -1)]
        + [vid(0, j) for j in range(ny, 0, -1)]
    )
    boundary = np.column_stack([loop, np.roll(loop, -1)])
    return MeshGeometry(vertices, triangles, boundary, Rectangle(float(w), float(h)))


# --------------------------------------------------------------------- file I/O

def save_mesh(mesh: MeshGeometry, path) -> None:
    lines = [f"# {mesh.describe()}", f"mesh2d {mesh.n_vertices} {len(mesh.triangles)} {len(mesh.boundary_edges)}"]
    lines += [f"v {x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += ["t {} {} {}".format(*tri) for tri in mesh.triangles.tolist()]
    lines += ["b {} {}".format(*e) for e in mesh.boundary_edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> MeshGeometry:
    """Read a mesh file and validate it; any failure raises a MeshError."""
    path = Path(path)
    header = None
    verts, tris, bnd = [], [], []
    expect = {"v": (verts, 2, float), "t": (tris, 3, int), "b": (bnd, 2, int)}
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if header is None:
                if tok[0] != "mesh2d" or len(tok) != 4:
                    raise MeshParseError("expected header 'mesh2d <nv> <nt> <nb>'", lineno)
                try:
                    header = tuple(int(x) for x in tok[1:])
                except ValueError:
                    raise MeshParseError("non-integer count in header", lineno) from None
                if min(header) < 0:
                    raise MeshParseError("negative count in header", lineno)
                continue
            if tok[0] not in expect:
                raise MeshParseError(f"unknown record type {tok[0]!r}", lineno)
            store, width, conv = expect[tok[0]]
            if len(tok) != width + 1:
                raise MeshParseError(f"record {tok[0]!r} needs {width} values", lineno)
            try:
                vals = [conv(x) for x in tok[1:]]
            except ValueError:
                raise MeshParseError(f"cannot parse {tok[0]!r} record", lineno) from None
            if conv is float and not all(math.isfinite(x) for x in vals):
                raise MeshParseError("non-finite coordinate", lineno)
            store.append(vals)
    if header is None:
        raise MeshParseError("missing header")
    counts = (len(verts), len(tris), len(bnd))
    if counts != header:
        raise MeshParseError(f"header announces {header} records but file holds {counts}")
    mesh = MeshGeometry(
        np.array(verts, dtype=np.float64).reshape(-1, 2),
        np.array(tris, dtype=np.int64).reshape(-1, 3),
        np.array(bnd, dtype=np.int64).reshape(-1, 2),
        External(str(path)),
    )
    validate_mesh(mesh)
    return mesh


def parse_mesh_spec(text: str, radius: float = 1.0, width: float = 1.0, height: float = 1.0) -> MeshGeometry:
    """Build a mesh from ``disk:<level>``, ``rect:<nx>x<ny>`` or ``file:<path>``."""
    kind, _, arg = text.strip().partition(":")
    if kind == "disk":
        return generate_disk_mesh(radius, int(arg))
    if kind == "rect":
        nx, _, ny = arg.lower().partition("x")
        return generate_rectangle_mesh(width, height, int(nx), int(ny))
    if kind == "file":
        return load_mesh(arg)
    raise ValueError(f"unknown mesh spec {text!r}")
