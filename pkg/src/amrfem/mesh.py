"""Triangular mesh container, edge topology and element geometry.

A mesh stores node coordinates, element connectivity and tagged boundary
edges.  Elements carry a generation counter and a green flag used by the
conforming refinement in :mod:`amrfem.refine`; ``green_parent`` records, for
each green element, the node triple ``(a, b, c)`` of the coarse triangle the
green pair bisects (cut from the midpoint of edge ``a-b`` towards ``c``).

Meshes are treated as immutable: all operations that change a mesh return a
new instance.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, MeshInvariantError, TopologyError

BOUNDARY = -1
NO_TAG = -1


@dataclass(frozen=True)
class CircleArc:
    """Analytic circular boundary descriptor.

    Midpoints of refined boundary edges whose tag matches are projected
    radially onto the circle.
    """

    tag: int
    center: tuple[float, float]
    radius: float

    def project(self, points):
        points = np.atleast_2d(points)
        d = points - np.asarray(self.center)
        norm = np.linalg.norm(d, axis=1, keepdims=True)
        if np.any(norm == 0.0):
            raise GeometryError("cannot project the circle center onto the circle")
        return np.asarray(self.center) + self.radius * d / norm


@dataclass
class Mesh:
    nodes: np.ndarray              # (n_nodes, 2) float64
    elements: np.ndarray           # (n_elements, 3) int  (counterclockwise)
    boundary_edges: np.ndarray     # (n_bedges, 3) int: node a, node b, tag
    generation: np.ndarray         # (n_elements,) int
    green: np.ndarray              # (n_elements,) bool
    green_parent: np.ndarray       # (n_elements, 3) int, -1 rows unless green
    element_tags: np.ndarray       # (n_elements,) int
    curves: tuple = ()             # CircleArc descriptors for curved boundaries

    @property
    def num_nodes(self):
        return self.nodes.shape[0]

    @property
    def num_elements(self):
        return self.elements.shape[0]

    def signed_areas(self):
        p = self.nodes[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_lengths(self):
        """Lengths of the three edges per element, ordered opposite each vertex."""
        p = self.nodes[self.elements]
        out = np.empty((self.num_elements, 3))
        for i in range(3):
            out[:, i] = np.linalg.norm(p[:, (i + 2) % 3] - p[:, (i + 1) % 3], axis=1)
        return out

    def element_sizes(self):
        """Element diameters (longest edge length)."""
        return self.edge_lengths().max(axis=1)

    def min_angle(self):
        """Smallest interior angle over all elements, in radians."""
        ls = np.sort(self.edge_lengths(), axis=1)  # a <= b <= c
        a, b, c = ls[:, 0], ls[:, 1], ls[:, 2]
        # smallest angle is opposite the shortest edge
        cosang = np.clip((b * b + c * c - a * a) / (2.0 * b * c), -1.0, 1.0)
        return float(np.arccos(cosang).min())

    def curve_for_tag(self, tag):
        for curve in self.curves:
            if curve.tag == tag:
                return curve
        return None


def make_mesh(nodes, elements, boundary_edges=None, element_tags=None, curves=()):
    """Build a generation-0 mesh, deriving untagged boundary edges if needed."""
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    elements = np.ascontiguousarray(elements, dtype=np.int64)
    m = elements.shape[0]
    if boundary_edges is None:
        pairs = _boundary_pairs(elements)
        boundary_edges = np.column_stack([pairs, np.zeros(len(pairs), dtype=np.int64)])
    boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64).reshape(-1, 3)
    if element_tags is None:
        element_tags = np.zeros(m, dtype=np.int64)
    return Mesh(
        nodes=nodes,
        elements=elements,
        boundary_edges=boundary_edges,
        generation=np.zeros(m, dtype=np.int64),
        green=np.zeros(m, dtype=bool),
        green_parent=np.full((m, 3), -1, dtype=np.int64),
        element_tags=np.asarray(element_tags, dtype=np.int64),
        curves=tuple(curves),
    )


def _sorted_edges(elements):
    """All element edges as sorted node pairs, shape (3*m, 2)."""
    e = np.concatenate([elements[:, [0, 1]], elements[:, [1, 2]], elements[:, [2, 0]]])
    return np.sort(e, axis=1)


def _boundary_pairs(elements):
    edges = _sorted_edges(elements)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    return uniq[counts == 1]


@dataclass
class EdgeTopology:
    """Derived edge connectivity of a conforming mesh."""

    edges: np.ndarray            # (n_edges, 2) sorted node pairs
    edge_elements: np.ndarray    # (n_edges, 2) incident elements, BOUNDARY if none
    edge_tags: np.ndarray        # (n_edges,) boundary tag, NO_TAG for interior
    element_edges: np.ndarray    # (n_elements, 3) edge index opposite each vertex

    @property
    def num_edges(self):
        return self.edges.shape[0]

    def edge_lengths(self, mesh):
        d = mesh.nodes[self.edges[:, 1]] - mesh.nodes[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    def is_boundary(self):
        return self.edge_elements[:, 1] == BOUNDARY


def build_topology(mesh):
    """Derive the edge topology and cross-check it with the boundary list.

    Raises :class:`TopologyError` for non-manifold edges and
    :class:`MeshInvariantError` when the tagged boundary does not coincide
    with the set of edges incident to exactly one element (i.e. there are
    hanging nodes or stale boundary entries).
    """
    elements = mesh.elements
    m = elements.shape[0]
    # edge i of an element is opposite local vertex i
    raw = np.concatenate(
        [elements[:, [1, 2]], elements[:, [2, 0]], elements[:, [0, 1]]]
    )
    keys = np.sort(raw, axis=1)
    edges, inverse, counts = np.unique(
        keys, axis=0, return_inverse=True, return_counts=True
    )
    if np.any(counts > 2):
        bad = edges[counts > 2][0]
        raise TopologyError(
            f"edge {tuple(bad)} is shared by more than two elements"
        )

    element_edges = inverse.reshape(3, m).T
    owner = np.tile(np.arange(m), 3)

    edge_elements = np.full((edges.shape[0], 2), BOUNDARY, dtype=np.int64)
    order = np.argsort(inverse, kind="stable")
    sorted_eids = inverse[order]
    sorted_owner = owner[order]
    starts = np.searchsorted(sorted_eids, np.arange(edges.shape[0]))
    edge_elements[:, 0] = sorted_owner[starts]
    second = counts == 2
    edge_elements[second, 1] = sorted_owner[starts[second] + 1]

    edge_tags = np.full(edges.shape[0], NO_TAG, dtype=np.int64)
    tagged = {}
    for a, b, tag in mesh.boundary_edges:
        tagged[(min(a, b), max(a, b))] = tag
    n_boundary = 0
    for i in np.flatnonzero(counts == 1):
        key = (int(edges[i, 0]), int(edges[i, 1]))
        if key not in tagged:
            raise MeshInvariantError(
                f"edge {key} touches a single element but is not a tagged "
                "boundary edge (hanging node or missing boundary entry)"
            )
        edge_tags[i] = tagged[key]
        n_boundary += 1
    if n_boundary != len(tagged):
        raise MeshInvariantError(
            "boundary list contains edges that are not incident to exactly "
            "one element"
        )
    return EdgeTopology(
        edges=edges,
        edge_elements=edge_elements,
        edge_tags=edge_tags,
        element_edges=element_edges,
    )


def element_size(mesh, e):
    """Diameter (longest edge) of element ``e``."""
    p = mesh.nodes[mesh.elements[e]]
    return float(
        max(
            np.linalg.norm(p[1] - p[0]),
            np.linalg.norm(p[2] - p[1]),
            np.linalg.norm(p[0] - p[2]),
        )
    )


def check_mesh(mesh):
    """Validate all structural mesh invariants; raises on the first failure."""
    n, m = mesh.num_nodes, mesh.num_elements
    el = mesh.elements
    if m and (el.min() < 0 or el.max() >= n):
        raise MeshInvariantError("element references a node out of range")
    if np.any(el[:, 0] == el[:, 1]) or np.any(el[:, 1] == el[:, 2]) or np.any(
        el[:, 0] == el[:, 2]
    ):
        raise MeshInvariantError("element with repeated node indices")
    areas = mesh.signed_areas()
    if np.any(areas <= 0.0):
        k = int(np.argmin(areas))
        raise MeshInvariantError(
            f"element {k} has non-positive signed area {areas[k]:.3e}"
        )
    build_topology(mesh)  # conformity + boundary consistency
    return True
