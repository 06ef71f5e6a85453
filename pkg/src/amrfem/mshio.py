"""Reader/writer for the ASCII MSH version 2 subset used by the benchmarks.

Supported sections: ``$MeshFormat``, ``$Nodes``, ``$Elements``.  Element
type 1 (2-node line) is read as a tagged boundary edge, type 2 (3-node
triangle) as an element; anything else is rejected.  The first tag of an
entry (the physical tag) becomes the boundary/element tag.
"""

import numpy as np

from .errors import MshParseError
from .mesh import Mesh, make_mesh


def load_msh(path, curves=()):
    """Parse a MSH v2 ASCII file into a :class:`Mesh`.

    Green/generation bookkeeping is not representable in MSH: loaded meshes
    start at generation 0 with no green elements.  ``curves`` attaches
    analytic boundary descriptors that the format cannot carry.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()

    nodes = {}
    triangles = []
    tri_tags = []
    bedges = []

    i = 0
    n = len(lines)
    while i < n:
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "$MeshFormat":
            if i >= n:
                raise MshParseError("truncated $MeshFormat section", line=i)
            version = lines[i].split()
            if not version or not version[0].startswith("2"):
                raise MshParseError(
                    f"unsupported MSH version {version[0] if version else '?'}", line=i + 1
                )
            i = _seek_end(lines, i, "$EndMeshFormat")
        elif line == "$Nodes":
            count, i = _read_count(lines, i)
            for _ in range(count):
                parts = lines[i].split()
                if len(parts) < 4:
                    raise MshParseError("node line needs: id x y z", line=i + 1)
                nid = int(parts[0])
                nodes[nid] = (float(parts[1]), float(parts[2]))
                i += 1
            i = _seek_end(lines, i, "$EndNodes")
        elif line == "$Elements":
            count, i = _read_count(lines, i)
            for _ in range(count):
                parts = lines[i].split()
                if len(parts) < 3:
                    raise MshParseError("element line too short", line=i + 1)
                etype = int(parts[1])
                ntags = int(parts[2])
                tags = [int(t) for t in parts[3 : 3 + ntags]]
                conn = [int(v) for v in parts[3 + ntags :]]
                phys = tags[0] if tags else 0
                if etype == 1:
                    if len(conn) != 2:
                        raise MshParseError("line element needs 2 nodes", line=i + 1)
                    bedges.append((conn[0], conn[1], phys))
                elif etype == 2:
                    if len(conn) != 3:
                        raise MshParseError("triangle element needs 3 nodes", line=i + 1)
                    triangles.append(conn)
                    tri_tags.append(phys)
                else:
                    raise MshParseError(
                        f"unsupported element type {etype} (only 1 and 2)", line=i + 1
                    )
                i += 1
            i = _seek_end(lines, i, "$EndElements")
        elif line.startswith("$"):
            # skip unknown sections wholesale
            end = line.replace("$", "$End", 1)
            i = _seek_end(lines, i, end)

    if not nodes:
        raise MshParseError("file contains no $Nodes section")
    ids = sorted(nodes)
    remap = {nid: k for k, nid in enumerate(ids)}
    coords = np.asarray([nodes[nid] for nid in ids], dtype=np.float64)
    try:
        elements = np.asarray(
            [[remap[v] for v in tri] for tri in triangles], dtype=np.int64
        )
        boundary = np.asarray(
            [(remap[a], remap[b], t) for a, b, t in bedges], dtype=np.int64
        ).reshape(-1, 3)
    except KeyError as exc:
        raise MshParseError(f"node id {exc.args[0]} out of range") from None
    return make_mesh(
        coords,
        elements,
        boundary_edges=boundary if len(boundary) else None,
        element_tags=np.asarray(tri_tags, dtype=np.int64),
        curves=curves,
    )


def _read_count(lines, i):
    try:
        count = int(lines[i].strip())
    except (IndexError, ValueError):
        raise MshParseError("expected an entity count", line=i + 1) from None
    return count, i + 1


def _seek_end(lines, i, sentinel):
    while i < len(lines):
        if lines[i].strip() == sentinel:
            return i + 1
        i += 1
    raise MshParseError(f"missing {sentinel}", line=len(lines))


def save_msh(mesh, path):
    """Write ``mesh`` in MSH v2 ASCII with full float precision.

    ``load_msh(save_msh(m))`` reproduces coordinates and connectivity
    exactly; refinement bookkeeping and curve descriptors are not stored.
    """
    with open(path, "w") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write(f"$Nodes\n{mesh.num_nodes}\n")
        for k, (x, y) in enumerate(mesh.nodes, start=1):
            fh.write(f"{k} {float(x)!r} {float(y)!r} 0\n")
        fh.write("$EndNodes\n")
        total = mesh.num_elements + len(mesh.boundary_edges)
        fh.write(f"$Elements\n{total}\n")
        eid = 1
        for a, b, tag in mesh.boundary_edges:
            fh.write(f"{eid} 1 2 {tag} {tag} {a + 1} {b + 1}\n")
            eid += 1
        for conn, tag in zip(mesh.elements, mesh.element_tags):
            fh.write(f"{eid} 2 2 {tag} {tag} {conn[0] + 1} {conn[1] + 1} {conn[2] + 1}\n")
            eid += 1
        fh.write("$EndElements\n")
    return path
