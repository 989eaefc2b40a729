"""
Triangulation of the disk ``|X| <= R``.

Interior nodes form an equilateral lattice with one lattice direction along
the y1 axis.  Rotations by 60 degrees and the mirror ``x1 -> -x1`` map the
lattice onto itself, so all six half-screens run along lattice lines and see
the same local discretisation.  A ring of equally spaced nodes sits exactly
on the circle; ``scipy.spatial.Delaunay`` stitches the ring to the lattice.

The lattice spacing is ``h * 3**-0.25`` which gives a node density of
``2 / h^2`` (node count ~ pi R^2 / (h^2 / 2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .errors import MeshGenerationFailure

LATTICE_FACTOR = 3.0 ** -0.25
# interior lattice nodes closer than this many spacings to the circle are dropped
RING_GAP = 0.3
# ring nodes are a little denser than the lattice to keep boundary elements below h
RING_DENSITY = 0.85


@dataclass(frozen=True, eq=False)
class Domain:
    """Node/element arrays of a P1 triangulation of ``B_R``."""

    R: float
    h: float
    spacing: float
    nodes: np.ndarray  # (N, 2) computational-frame coordinates
    elements: np.ndarray  # (T, 3) counter-clockwise
    boundary_nodes: np.ndarray  # ring node indices sorted by angle
    boundary_edges: np.ndarray  # (B, 2)
    lattice: np.ndarray  # (N,) True for nodes on the equilateral lattice
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            p = self.nodes[self.elements]
            e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
            self._cache["areas"] = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        return self._cache["areas"]

    @property
    def lumped_mass(self) -> np.ndarray:
        """Vertex-rule quadrature weights (one third of each adjacent area)."""
        if "lumped" not in self._cache:
            w = np.zeros(self.n_nodes)
            np.add.at(w, self.elements.ravel(), np.repeat(self.areas / 3.0, 3))
            self._cache["lumped"] = w
        return self._cache["lumped"]

    def diameters(self) -> np.ndarray:
        p = self.nodes[self.elements]
        edges = [p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]]
        return np.max([np.hypot(e[:, 0], e[:, 1]) for e in edges], axis=0)

    @property
    def boundary_angles(self) -> np.ndarray:
        b = self.nodes[self.boundary_nodes]
        return np.mod(np.arctan2(b[:, 1], b[:, 0]), 2 * np.pi)

    def export_text(self, path_prefix) -> tuple[str, str]:
        """Write ``<prefix>_nodes.txt`` and ``<prefix>_elements.txt``."""
        nodes_path = f"{path_prefix}_nodes.txt"
        elems_path = f"{path_prefix}_elements.txt"
        np.savetxt(nodes_path, self.nodes, fmt="%.12g", header="x y")
        np.savetxt(elems_path, self.elements, fmt="%d", header="n0 n1 n2")
        return nodes_path, elems_path


def lattice_points(spacing: float, radius: float) -> np.ndarray:
    """Equilateral lattice ``i*(0, s) + j*(s sqrt3/2, s/2)`` inside ``|X| <= radius``."""
    s = spacing
    jmax = int(math.ceil(radius / (s * math.sqrt(3) / 2))) + 1
    imax = int(math.ceil(radius / s)) + jmax
    j, i = np.meshgrid(np.arange(-jmax, jmax + 1), np.arange(-imax, imax + 1), indexing="ij")
    x = j * (s * math.sqrt(3) / 2)
    y = i * s + j * (s / 2)
    pts = np.column_stack([x.ravel(), y.ravel()])
    return pts[np.hypot(pts[:, 0], pts[:, 1]) <= radius]


def build_disk_domain(R: float, h: float) -> Domain:
    if not (R > 0 and 0 < h < R / 10):
        raise MeshGenerationFailure(f"need 0 < h < R/10, got R={R}, h={h}")
    s = h * LATTICE_FACTOR
    inner = lattice_points(s, R - RING_GAP * s)
    # ring count: multiple of 12 so that the ring shares the lattice symmetry
    # and has nodes on every half-screen direction
    n_ring = 12 * int(math.ceil(2 * math.pi * R / (12 * s * RING_DENSITY)))
    theta = 2 * math.pi * np.arange(n_ring) / n_ring
    ring = R * np.column_stack([np.cos(theta), np.sin(theta)])
    n_inner = len(inner)
    extra = np.empty((0, 2))
    for _ in range(8):
        nodes = np.vstack([inner, extra, ring])
        try:
            tri = Delaunay(nodes)
        except Exception as exc:  # qhull errors carry their own types
            raise MeshGenerationFailure(f"Delaunay triangulation failed: {exc}") from exc
        # split over-long edges (they only occur between the ring and the jagged lattice edge)
        p = nodes[tri.simplices]
        edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        length = np.hypot(edges[..., 0], edges[..., 1])
        longest = np.argmax(length, axis=1)
        bad = length.max(axis=1) > h
        if not bad.any():
            break
        k = longest[bad]
        a = p[bad, k]
        b = p[bad, (k + 1) % 3]
        mids = np.unique(np.round(0.5 * (a + b), 12), axis=0)
        extra = np.vstack([extra, mids])
    else:
        raise MeshGenerationFailure("could not bring all elements below the target size")
    elements = tri.simplices.astype(np.int64)
    p = nodes[elements]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    flip = area < 0
    elements[flip] = elements[flip][:, [0, 2, 1]]
    keep = np.abs(area) > 1e-10 * s * s
    elements = elements[keep]
    if len(elements) == 0:
        raise MeshGenerationFailure("triangulation produced no elements")

    n_lat = n_inner + len(extra)
    boundary_nodes = n_lat + np.arange(n_ring)
    boundary_edges = np.column_stack([boundary_nodes, np.roll(boundary_nodes, -1)])
    hull = {tuple(sorted(e)) for e in tri.convex_hull}
    if hull != {tuple(sorted(e)) for e in boundary_edges}:
        raise MeshGenerationFailure("convex hull does not coincide with the boundary ring")
    lattice = np.zeros(len(nodes), dtype=bool)
    lattice[:n_inner] = True
    return Domain(
        R=float(R),
        h=float(h),
        spacing=s,
        nodes=nodes,
        elements=elements,
        boundary_nodes=boundary_nodes,
        boundary_edges=boundary_edges,
        lattice=lattice,
    )
