"""Conforming red-green refinement of triangular meshes.

Marked elements are red-refined into four similar children (edge lengths
exactly halved).  Hanging nodes left behind are removed by the closure: an
element whose longest edge is its only bisected edge is green-bisected; any
other bisection pattern promotes the element to red.  Green elements are
never refined directly; whenever a green pair is disturbed (marked, or any of
its edges bisected) the pair is replaced by its parent triangle, which is
then red-refined.  Restricting green cuts to longest edges keeps the minimum
interior angle bounded below by half the initial mesh's minimum angle for
arbitrary refinement sequences (red children are similar to their parents and
a longest-edge bisection at most halves the smallest angle).

New nodes on boundary edges whose tag carries a circular-arc descriptor are
projected radially onto the arc.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MeshInvariantError
from .mesh import Mesh

_MAX_CLOSURE_ROUNDS = 10_000


@dataclass
class RefinementResult:
    mesh: Mesh
    parent_map: dict       # new element index -> input element index
    num_refined: int       # marked elements actually refined

    def children_of(self, parent):
        return sorted(c for c, p in self.parent_map.items() if p == parent)


def refine(mesh, marked):
    """Refine ``marked`` elements; returns a conforming :class:`RefinementResult`.

    An empty marked set returns the input mesh unchanged.
    """
    marked = np.unique(np.asarray(sorted(marked), dtype=np.int64))
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.num_elements):
        raise MeshInvariantError("marked set contains an element index out of range")
    if marked.size == 0:
        identity = {e: e for e in range(mesh.num_elements)}
        return RefinementResult(mesh=mesh, parent_map=identity, num_refined=0)

    w = _Workspace(mesh)
    for e in marked:
        w.mark(int(e))
    w.close()
    new_mesh, parent_map = w.emit()
    return RefinementResult(mesh=new_mesh, parent_map=parent_map, num_refined=int(marked.size))


class _Workspace:
    """Mutable scratch state for a single refine() call.

    Triangle records form a forest: each record stores a ``source`` telling
    where it came from, which is resolved to an input element index when the
    new mesh is emitted:

    * ``("elem", e)``        surviving non-green input element ``e``
    * ``("pair", gA, gB)``   restored parent of the green pair (``gA`` is the
                             half containing the parent corner ``a``)
    * ``("child", t, i)``    ``i``-th red child of record ``t``
    * ``("green", t, i, p)`` green half ``i`` of record ``t`` with parent
                             node triple ``p``
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.coords = [tuple(p) for p in mesh.nodes]
        self.tris = []
        self.alive = []
        self.gen = []
        self.source = []
        self.tags = []
        self.red_queue = []
        self.split = {}          # sorted node pair -> midpoint node index
        self.bdry = {}           # sorted node pair -> boundary tag
        for a, b, t in mesh.boundary_edges:
            self.bdry[self._key(a, b)] = int(t)
        self._elem_record = {}   # input element -> restored/original record
        self._ungreen_all()

    @staticmethod
    def _key(a, b):
        return (a, b) if a < b else (b, a)

    def _add_tri(self, verts, gen, source, tag):
        self.tris.append(tuple(int(v) for v in verts))
        self.alive.append(True)
        self.gen.append(int(gen))
        self.source.append(source)
        self.tags.append(int(tag))
        return len(self.tris) - 1

    def _ungreen_all(self):
        """Replace every green pair by its parent triangle.

        The bisected parent edge is registered as split, so the closure later
        either re-greens the parent identically or promotes it to red.
        """
        mesh = self.mesh
        pairs = {}
        for e in range(mesh.num_elements):
            if mesh.green[e]:
                key = tuple(int(v) for v in mesh.green_parent[e])
                pairs.setdefault(key, []).append(e)
            else:
                t = self._add_tri(
                    mesh.elements[e], mesh.generation[e], ("elem", e), mesh.element_tags[e]
                )
                self._elem_record[e] = t
        for (a, b, c), members in pairs.items():
            if len(members) != 2:
                raise MeshInvariantError(
                    f"green pair for parent ({a},{b},{c}) has {len(members)} members"
                )
            g1, g2 = members
            if a in set(int(v) for v in mesh.elements[g1]):
                ga, gb = g1, g2
            else:
                ga, gb = g2, g1
            shared = set(int(v) for v in mesh.elements[g1]) & set(
                int(v) for v in mesh.elements[g2]
            )
            shared.discard(c)
            (mid,) = shared
            self.split[self._key(a, b)] = mid
            t = self._add_tri(
                (a, b, c), mesh.generation[g1], ("pair", ga, gb), mesh.element_tags[g1]
            )
            self._elem_record[ga] = t
            self._elem_record[gb] = t

    def _midpoint_index(self, a, b):
        key = self._key(a, b)
        if key in self.split:
            return self.split[key]
        pa = np.asarray(self.coords[a])
        pb = np.asarray(self.coords[b])
        p = 0.5 * (pa + pb)
        tag = self.bdry.get(key)
        if tag is not None:
            curve = self.mesh.curve_for_tag(tag)
            if curve is not None:
                p = curve.project(p)[0]
        self.coords.append((float(p[0]), float(p[1])))
        mid = len(self.coords) - 1
        self.split[key] = mid
        if tag is not None:
            # keep child boundary edges discoverable for multi-level splits
            self.bdry[self._key(a, mid)] = tag
            self.bdry[self._key(mid, b)] = tag
        return mid

    def mark(self, e):
        self.red_queue.append(self._elem_record[e])

    def _splits_of(self, verts):
        v0, v1, v2 = verts
        return [
            (a, b)
            for a, b in ((v0, v1), (v1, v2), (v2, v0))
            if self._key(a, b) in self.split
        ]

    def _is_longest_edge(self, verts, edge):
        lengths = {}
        v0, v1, v2 = verts
        for a, b in ((v0, v1), (v1, v2), (v2, v0)):
            pa = np.asarray(self.coords[a])
            pb = np.asarray(self.coords[b])
            lengths[self._key(a, b)] = float(np.hypot(*(pb - pa)))
        longest = max(lengths.values())
        return lengths[self._key(*edge)] >= longest * (1.0 - 1e-12)

    def _red(self, t):
        v0, v1, v2 = self.tris[t]
        m01 = self._midpoint_index(v0, v1)
        m12 = self._midpoint_index(v1, v2)
        m20 = self._midpoint_index(v2, v0)
        self.alive[t] = False
        g = self.gen[t] + 1
        tag = self.tags[t]
        children = [
            (v0, m01, m20),
            (m01, v1, m12),
            (m20, m12, v2),
            (m01, m12, m20),
        ]
        for i, child in enumerate(children):
            self._add_tri(child, g, ("child", t, i), tag)

    def close(self):
        """Red-refine queued elements and restore conformity."""
        for _ in range(_MAX_CLOSURE_ROUNDS):
            while self.red_queue:
                t = self.red_queue.pop()
                if self.alive[t]:
                    self._red(t)
            progressed = False
            for t in range(len(self.tris)):
                if not self.alive[t]:
                    continue
                splits = self._splits_of(self.tris[t])
                if len(splits) >= 2:
                    self.red_queue.append(t)
                    progressed = True
                elif len(splits) == 1:
                    a, b = splits[0]
                    m = self.split[self._key(a, b)]
                    # promote to red when the hanging node sits on a shorter
                    # edge (a green cut there would spoil the angle bound) or
                    # when a finer-level hanging node lurks below the midpoint
                    if (
                        not self._is_longest_edge(self.tris[t], (a, b))
                        or self._key(a, m) in self.split
                        or self._key(m, b) in self.split
                    ):
                        self.red_queue.append(t)
                        progressed = True
            if not progressed and not self.red_queue:
                break
        else:
            raise MeshInvariantError("refinement closure did not terminate")

        # green completion: consume the single remaining hanging node per element
        for t in range(len(self.tris)):
            if not self.alive[t]:
                continue
            splits = self._splits_of(self.tris[t])
            if not splits:
                continue
            (a, b) = splits[0]
            v0, v1, v2 = self.tris[t]
            c = ({v0, v1, v2} - {a, b}).pop()
            m = self.split[self._key(a, b)]
            self.alive[t] = False
            g = self.gen[t]
            tag = self.tags[t]
            self._add_tri((a, m, c), g, ("green", t, 0, (a, b, c)), tag)
            self._add_tri((m, b, c), g, ("green", t, 1, (a, b, c)), tag)

    def _resolve(self, t, slot):
        """Attribute record ``t`` (as seen through child ``slot``) to an input element."""
        src = self.source[t]
        if src[0] == "elem":
            return src[1]
        if src[0] == "pair":
            # red children of a restored parent (a, b, c): the corner-a child
            # lies in gA, the corner-b child in gB; the corner-c and center
            # children straddle the old cut and are split evenly so each green
            # input keeps at least two descendants.
            return (src[1], src[2], src[1], src[2])[slot]
        if src[0] == "child":
            return self._resolve(src[1], src[2])
        raise AssertionError(f"unexpected source {src}")

    def emit(self):
        mesh = self.mesh
        nodes = np.asarray(self.coords, dtype=np.float64)
        live = [t for t in range(len(self.tris)) if self.alive[t]]
        elements = np.asarray([self.tris[t] for t in live], dtype=np.int64)
        generation = np.asarray([self.gen[t] for t in live], dtype=np.int64)
        tags = np.asarray([self.tags[t] for t in live], dtype=np.int64)
        green = np.zeros(len(live), dtype=bool)
        green_parent = np.full((len(live), 3), -1, dtype=np.int64)
        parent_map = {}
        for new_idx, t in enumerate(live):
            src = self.source[t]
            if src[0] == "green":
                green[new_idx] = True
                green_parent[new_idx] = src[3]
                base_t, half = src[1], src[2]
                base = self.source[base_t]
                if base[0] == "pair":
                    # identical re-green of an undisturbed pair
                    parent_map[new_idx] = base[1 + half]
                else:
                    parent_map[new_idx] = self._resolve(base_t, half)
            elif src[0] == "child":
                parent_map[new_idx] = self._resolve(src[1], src[2])
            elif src[0] == "pair":
                raise MeshInvariantError("restored green parent left unrefined")
            else:
                parent_map[new_idx] = src[1]

        boundary = []
        for a, b, tag in mesh.boundary_edges:
            for seg_a, seg_b in self._expand_edge(int(a), int(b)):
                boundary.append((seg_a, seg_b, int(tag)))
        boundary = np.asarray(boundary, dtype=np.int64)

        new_mesh = Mesh(
            nodes=nodes,
            elements=elements,
            boundary_edges=boundary,
            generation=generation,
            green=green,
            green_parent=green_parent,
            element_tags=tags,
            curves=mesh.curves,
        )
        return new_mesh, parent_map

    def _expand_edge(self, a, b):
        key = self._key(a, b)
        if key in self.split:
            m = self.split[key]
            yield from self._expand_edge(a, m)
            yield from self._expand_edge(m, b)
        else:
            yield (a, b)


def refine_uniform(mesh):
    """Red-refine every element once."""
    return refine(mesh, np.arange(mesh.num_elements))
