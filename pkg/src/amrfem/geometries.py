"""Constructors for the benchmark domains and generic structured meshes.

All builders return conforming counterclockwise meshes with the boundary
tags documented in :mod:`amrfem.bench`.  The committed initial mesh files
under ``amrfem/data`` were generated from these functions.
"""

import numpy as np

from .mesh import CircleArc, make_mesh

# boundary tag conventions shared with the benchmark registry
SC0_OUTER, SC0_CRACK = 1, 2
SC1_HOLE, SC1_BOTTOM, SC1_RIGHT, SC1_TOP, SC1_LEFT = 1, 2, 3, 4, 5
FC0_WALL, FC0_LID = 1, 2
FC1_INFLOW, FC1_WALL, FC1_CYLINDER, FC1_OUTFLOW = 1, 2, 3, 4


def rectangle(nx, ny, x0=0.0, y0=0.0, x1=1.0, y1=1.0, tags=(1, 1, 1, 1)):
    """Structured triangulation of a rectangle, 2*nx*ny elements.

    ``tags`` assigns boundary tags to the (left, right, bottom, top) sides.
    """
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    return tensor_grid(xs, ys, tags)


def tensor_grid(xs, ys, tags=(1, 1, 1, 1)):
    """Triangulated tensor-product grid over given x/y lines."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    nx, ny = len(xs) - 1, len(ys) - 1
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    elements = []
    for i in range(nx):
        for j in range(ny):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            elements.append((a, b, c))
            elements.append((a, c, d))
    left, right, bottom, top = tags
    bedges = []
    for j in range(ny):
        bedges.append((nid(0, j), nid(0, j + 1), left))
        bedges.append((nid(nx, j), nid(nx, j + 1), right))
    for i in range(nx):
        bedges.append((nid(i, 0), nid(i + 1, 0), bottom))
        bedges.append((nid(i, ny), nid(i + 1, ny), top))
    return make_mesh(nodes, np.asarray(elements), np.asarray(bedges))


def slit_panel(n=16):
    """SC0: square [-1,1]^2 with a slit along {(x, 0): -1 <= x <= 0}.

    The crack faces are disconnected by duplicating the nodes strictly left
    of the tip (the tip at the origin stays shared); elements above the
    crack line reference the duplicates.  ``n`` must be even so the slit and
    the tip lie on grid lines.
    """
    if n % 2:
        raise ValueError("n must be even")
    mesh = rectangle(n, n, -1.0, -1.0, 1.0, 1.0)
    nodes = list(map(tuple, mesh.nodes))
    eps = 1e-12
    crack = {
        idx
        for idx, (x, y) in enumerate(nodes)
        if abs(y) < eps and x < -eps
    }
    dup = {}
    for idx in sorted(crack):
        dup[idx] = len(nodes)
        nodes.append(nodes[idx])
    elements = mesh.elements.copy()
    centroids_y = mesh.nodes[mesh.elements][:, :, 1].mean(axis=1)
    for e in np.flatnonzero(centroids_y > 0):
        for k in range(3):
            v = elements[e, k]
            if v in dup:
                elements[e, k] = dup[v]

    nodes = np.asarray(nodes)
    boundary = _tag_sc0_boundary(nodes, elements)
    return make_mesh(nodes, elements, boundary)


def _tag_sc0_boundary(nodes, elements):
    from .mesh import _boundary_pairs

    eps = 1e-12
    pairs = _boundary_pairs(np.asarray(elements))
    bedges = []
    for a, b in pairs:
        mx, my = 0.5 * (nodes[a] + nodes[b])
        if abs(my) < eps and -1.0 + eps < mx < eps:
            tag = SC0_CRACK
        else:
            tag = SC0_OUTER
        bedges.append((a, b, tag))
    return np.asarray(bedges, dtype=np.int64)


def plate_with_hole(n_phi=12, n_r=8, radius=1.0, half=4.0):
    """SC1: quarter plate [0, half]^2 with a quarter hole of ``radius``.

    Transfinite grid between the quarter circle and the outer square with
    geometric grading towards the hole.
    """
    phis = np.linspace(0.0, np.pi / 2.0, n_phi + 1)
    # mild grading: more resolution near the hole where stress varies fastest
    t = np.linspace(0.0, 1.0, n_r + 1) ** 1.3

    def outer(phi):
        s = half / max(np.cos(phi), np.sin(phi))
        return np.array([s * np.cos(phi), s * np.sin(phi)])

    nodes = []
    for i, phi in enumerate(phis):
        inner = radius * np.array([np.cos(phi), np.sin(phi)])
        out = outer(phi)
        for tj in t:
            nodes.append((1.0 - tj) * inner + tj * out)
    nodes = np.asarray(nodes)
    # snap the symmetry edges exactly onto the axes
    nodes[np.abs(nodes[:, 0]) < 1e-14, 0] = 0.0
    nodes[np.abs(nodes[:, 1]) < 1e-14, 1] = 0.0

    def nid(i, j):
        return i * (n_r + 1) + j

    elements = []
    for i in range(n_phi):
        for j in range(n_r):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            # alternate diagonals for better shape regularity
            if (i + j) % 2 == 0:
                elements.append((a, b, c))
                elements.append((a, c, d))
            else:
                elements.append((a, b, d))
                elements.append((b, c, d))
    elements = np.asarray(elements, dtype=np.int64)

    eps = 1e-9
    bedges = []
    for i in range(n_phi):
        bedges.append((nid(i, 0), nid(i + 1, 0), SC1_HOLE))
    for j in range(n_r):
        bedges.append((nid(0, j), nid(0, j + 1), SC1_BOTTOM))
        bedges.append((nid(n_phi, j), nid(n_phi, j + 1), SC1_LEFT))
    for i in range(n_phi):
        a, b = nid(i, n_r), nid(i + 1, n_r)
        mx, my = 0.5 * (nodes[a] + nodes[b])
        tag = SC1_RIGHT if abs(mx - half) < eps else SC1_TOP
        bedges.append((a, b, tag))
    curves = (CircleArc(SC1_HOLE, (0.0, 0.0), radius),)
    return make_mesh(nodes, elements, np.asarray(bedges), curves=curves)


def cavity(n=8):
    """FC0: unit lid-driven cavity; lid is the top side."""
    return rectangle(n, n, 0.0, 0.0, 1.0, 1.0, tags=(FC0_WALL, FC0_WALL, FC0_WALL, FC0_LID))


def channel_with_cylinder(n_ring=32, n_layers=3):
    """FC1: channel [0, 2.2] x [0, 0.41] with a cylinder of radius 0.05 at
    (0.2, 0.2).

    Block construction: an O-grid ring between the cylinder and the square
    [0.1, 0.3]^2, plus four tensor-product blocks filling the rest of the
    channel.  Shared block interfaces reuse identical coordinates so the
    blocks merge conformingly.
    """
    cx, cy, r = 0.2, 0.2, 0.05
    bl, bh = 0.1, 0.3        # inner square around the cylinder
    length, height = 2.2, 0.41
    if n_ring % 8:
        raise ValueError("n_ring must be a multiple of 8")

    # ring: angles chosen so the square corners are grid rays
    phis = np.linspace(-np.pi, np.pi, n_ring + 1)[:-1] + np.pi / 4.0
    t = np.linspace(0.0, 1.0, n_layers + 1)

    def on_square(phi):
        s = 0.1 / max(abs(np.cos(phi)), abs(np.sin(phi)))
        return np.array([cx + s * np.cos(phi), cy + s * np.sin(phi)])

    pts = {}
    tris = []

    def key(p):
        return (round(p[0], 12), round(p[1], 12))

    def add(p):
        k = key(p)
        if k not in pts:
            pts[k] = (len(pts), np.asarray(p, dtype=np.float64))
        return pts[k][0]

    def quad(p00, p10, p11, p01, flip=False):
        a, b, c, d = add(p00), add(p10), add(p11), add(p01)
        if flip:
            tris.append((a, b, d))
            tris.append((b, c, d))
        else:
            tris.append((a, b, c))
            tris.append((a, c, d))

    ring_nodes = np.empty((n_ring, n_layers + 1, 2))
    for i, phi in enumerate(phis):
        inner = np.array([cx + r * np.cos(phi), cy + r * np.sin(phi)])
        out = on_square(phi)
        for j, tj in enumerate(t):
            ring_nodes[i, j] = (1.0 - tj) * inner + tj * out
    for i in range(n_ring):
        k = (i + 1) % n_ring
        for j in range(n_layers):
            quad(
                ring_nodes[i, j],
                ring_nodes[k, j],
                ring_nodes[k, j + 1],
                ring_nodes[i, j + 1],
                flip=(i + j) % 2 == 0,
            )

    # interface coordinates on each side of the inner square, ring order
    side_count = n_ring // 4
    right_y = sorted(
        ring_nodes[i, n_layers, 1]
        for i in range(n_ring)
        if abs(ring_nodes[i, n_layers, 0] - bh) < 1e-12
    )
    # by symmetry the same fractions appear on all four sides
    frac = (np.asarray(right_y) - bl) / (bh - bl)

    def blend(lo, hi):
        return lo + frac * (hi - lo)

    ys_mid = blend(bl, bh)                     # matches ring sides on x and y
    ys_low = np.array([0.0, 0.05, bl])
    ys_high = np.array([bh, 0.355, height])
    ys_all = np.concatenate([ys_low, ys_mid[1:-1], ys_high])

    xs_left = np.array([0.0, 0.05, bl])
    xr = [bh]
    step = (bh - bl) / side_count
    while xr[-1] < length - 1e-9:
        xr.append(min(xr[-1] + step, length))
        step = min(step * 1.25, 0.12)
    xs_right = np.asarray(xr)
    xs_mid = blend(bl, bh)

    def block(xs, ys):
        for i in range(len(xs) - 1):
            for j in range(len(ys) - 1):
                quad(
                    (xs[i], ys[j]),
                    (xs[i + 1], ys[j]),
                    (xs[i + 1], ys[j + 1]),
                    (xs[i], ys[j + 1]),
                    flip=(i + j) % 2 == 0,
                )

    block(xs_left, ys_all)                 # upstream of the inner square
    block(xs_right, ys_all)                # downstream
    block(xs_mid, ys_low)                  # below the ring
    block(xs_mid, ys_high)                 # above the ring

    order = np.argsort([v[0] for v in pts.values()])
    coords = np.asarray([v[1] for v in pts.values()])[order]
    elements = np.asarray(tris, dtype=np.int64)

    from .mesh import _boundary_pairs

    eps = 1e-9
    bedges = []
    for a, b in _boundary_pairs(elements):
        mx, my = 0.5 * (coords[a] + coords[b])
        if abs(mx) < eps:
            tag = FC1_INFLOW
        elif abs(mx - length) < eps:
            tag = FC1_OUTFLOW
        elif abs(my) < eps or abs(my - height) < eps:
            tag = FC1_WALL
        else:
            tag = FC1_CYLINDER
        bedges.append((a, b, tag))
    curves = (CircleArc(FC1_CYLINDER, (cx, cy), r),)
    return make_mesh(coords, elements, np.asarray(bedges), curves=curves)
