"""Shared P1 finite element machinery.

Provides reference-triangle quadrature, shape-function gradients, generic
sparse assembly from per-element kernels, symmetric Dirichlet elimination and
the linear solver front end (AMG-preconditioned CG for SPD systems, restarted
GMRES with an incomplete LU preconditioner otherwise).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, ConstraintError, GeometryError, SolverError

AREA_EPS_FACTOR = 1e-14  # times the mesh bounding-box area


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points/weights on the reference triangle.

    Weights sum to the reference area 1/2; a physical integral is
    ``2 * |T| * sum(w_i * f(x_i))``.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def physical_points(self, vertices):
        """Map to physical coordinates; vertices has shape (..., 3, 2)."""
        return np.einsum("qi,...id->...qd", self.points, vertices)


def _rule(points, weights, degree):
    points = np.asarray(points, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    weights = weights / weights.sum() * 0.5
    return QuadratureRule(points=points, weights=weights, degree=degree)


TRI_CENTROID = _rule([[1 / 3, 1 / 3, 1 / 3]], [1.0], degree=1)

TRI_DEGREE2 = _rule(
    [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    [1 / 3, 1 / 3, 1 / 3],
    degree=2,
)

_A1, _B1 = 0.445948490915965, 0.108103018168070
_A2, _B2 = 0.091576213509771, 0.816847572980459
TRI_DEGREE4 = _rule(
    [
        [_A1, _A1, _B1],
        [_A1, _B1, _A1],
        [_B1, _A1, _A1],
        [_A2, _A2, _B2],
        [_A2, _B2, _A2],
        [_B2, _A2, _A2],
    ],
    [0.223381589678011] * 3 + [0.109951743655322] * 3,
    degree=4,
)

# Gauss-Legendre on [0, 1] (degree 5)
EDGE_GAUSS3 = (
    np.array([0.5 - np.sqrt(15) / 10, 0.5, 0.5 + np.sqrt(15) / 10]),
    np.array([5 / 18, 8 / 18, 5 / 18]),
)


def p1_gradients(vertices, area_eps=None):
    """Gradients of the three barycentric shape functions, shape (3, 2).

    The gradients are constant on the triangle and sum to zero.
    """
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    area2 = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0])
    if area_eps is None:
        box = (x.max() - x.min()) * (y.max() - y.min())
        area_eps = AREA_EPS_FACTOR * max(box, 1.0)
    if area2 <= 2.0 * area_eps:
        raise GeometryError(f"degenerate triangle, doubled area {area2:.3e}")
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    return np.column_stack([b, c]) / area2


def all_p1_gradients(mesh):
    """Vectorized gradients for every element, shape (m, 3, 2), plus areas."""
    p = mesh.nodes[mesh.elements]
    x, y = p[..., 0], p[..., 1]
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (
        y[:, 1] - y[:, 0]
    )
    box = np.ptp(mesh.nodes[:, 0]) * np.ptp(mesh.nodes[:, 1])
    if np.any(area2 <= 2.0 * AREA_EPS_FACTOR * max(box, 1.0)):
        raise GeometryError("mesh contains a degenerate element")
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grads = np.stack([b, c], axis=2) / area2[:, None, None]
    return grads, 0.5 * area2


@dataclass
class SparseSystem:
    """CSR matrix + right-hand side with a (node, component) dof layout."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    ncomp: int = 1

    def dof(self, node, comp=0):
        if comp >= self.ncomp:
            raise AssemblyError(f"component {comp} out of range (ncomp={self.ncomp})")
        return node * self.ncomp + comp

    @property
    def size(self):
        return self.rhs.shape[0]


def element_dofs(element, ncomp):
    """Global dof indices of an element, node-major: (n0,c0), (n0,c1), ..."""
    element = np.asarray(element)
    return (element[:, None] * ncomp + np.arange(ncomp)[None, :]).ravel()


def assemble(mesh, kernel, ncomp=1):
    """Assemble a global system from a per-element kernel.

    ``kernel(e, vertices)`` returns ``(ke, fe)`` with shapes
    ``(3*ncomp, 3*ncomp)`` and ``(3*ncomp,)``; contributions scatter-add into
    the global matrix/vector.
    """
    m = mesh.num_elements
    k = 3 * ncomp
    mats = np.empty((m, k, k))
    vecs = np.empty((m, k))
    for e in range(m):
        ke, fe = kernel(e, mesh.nodes[mesh.elements[e]])
        ke = np.asarray(ke, dtype=np.float64)
        fe = np.asarray(fe, dtype=np.float64)
        if ke.shape != (k, k) or fe.shape != (k,):
            raise AssemblyError(
                f"kernel returned shapes {ke.shape}/{fe.shape}, expected ({k},{k})/({k},)"
            )
        mats[e] = ke
        vecs[e] = fe
    return assemble_batch(mesh, mats, vecs, ncomp)


def assemble_batch(mesh, local_mats, local_vecs, ncomp=1):
    """Scatter stacked local matrices/vectors into a :class:`SparseSystem`."""
    n = mesh.num_nodes * ncomp
    m = mesh.num_elements
    if m == 0:
        return SparseSystem(sp.csr_matrix((n, n)), np.zeros(n), ncomp)
    dofs = element_dofs(mesh.elements, ncomp).reshape(m, 3 * ncomp)
    if dofs.max() >= n:
        raise AssemblyError("dof map exceeds system size")
    rows = np.repeat(dofs, 3 * ncomp, axis=1).ravel()
    cols = np.tile(dofs, (1, 3 * ncomp)).ravel()
    mat = sp.coo_matrix((local_mats.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    rhs = np.zeros(n)
    np.add.at(rhs, dofs.ravel(), local_vecs.ravel())
    return SparseSystem(mat, rhs, ncomp)


def apply_dirichlet(system, constraints):
    """Return a new system with Dirichlet dofs eliminated symmetrically.

    Constrained rows/columns are zeroed, the diagonal set to one and known
    values moved to the right-hand side, so symmetry is preserved and the
    constrained dofs solve exactly to their prescribed values.
    """
    if len(constraints) == 0:
        return system
    idx = np.asarray([c[0] for c in constraints], dtype=np.int64)
    vals = np.asarray([c[1] for c in constraints], dtype=np.float64)
    if idx.min() < 0 or idx.max() >= system.size:
        raise ConstraintError("constraint dof out of range")
    order = np.argsort(idx, kind="stable")
    idx, vals = idx[order], vals[order]
    dup = idx[1:] == idx[:-1]
    if np.any(dup):
        bad = np.flatnonzero(dup)
        for k in bad:
            if vals[k] != vals[k + 1]:
                raise ConstraintError(
                    f"conflicting values {vals[k]} != {vals[k + 1]} for dof {idx[k]}"
                )
        keep = np.concatenate([[True], ~dup])
        idx, vals = idx[keep], vals[keep]

    n = system.size
    x0 = np.zeros(n)
    x0[idx] = vals
    rhs = system.rhs - system.matrix @ x0
    rhs[idx] = vals
    free = np.ones(n)
    free[idx] = 0.0
    d_free = sp.diags(free)
    mat = d_free @ system.matrix @ d_free
    fixed = np.zeros(n)
    fixed[idx] = 1.0
    mat = (mat + sp.diags(fixed)).tocsr()
    return SparseSystem(mat, rhs, system.ncomp)


def solve(system, kind="spd", tol=1e-10, max_iter=10_000, near_nullspace=None):
    """Solve the linear system to a relative residual below ``tol``.

    ``kind="spd"`` uses conjugate gradients with a smoothed-aggregation AMG
    preconditioner (``near_nullspace`` passes rigid-body-type modes to the
    AMG setup); ``kind="general"`` uses restarted GMRES with an ILU
    preconditioner.  Raises :class:`SolverError` carrying the final residual
    on non-convergence.
    """
    a = system.matrix.tocsr()
    b = system.rhs
    if a.shape[0] != a.shape[1]:
        raise SolverError("system matrix is not square")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)

    if kind == "spd":
        x = _solve_spd(a, b, tol, max_iter, near_nullspace)
    elif kind == "general":
        x = _solve_general(a, b, tol, max_iter)
    else:
        raise SolverError(f"unknown solver kind {kind!r}")

    rel = np.linalg.norm(b - a @ x) / bnorm
    if not np.isfinite(rel) or rel > 10.0 * tol:
        raise SolverError(f"solver residual {rel:.3e} above tolerance", residual=rel)
    return x


def _solve_spd(a, b, tol, max_iter, near_nullspace):
    import pyamg

    try:
        bmodes = near_nullspace
        ml = pyamg.smoothed_aggregation_solver(
            a, B=bmodes, max_coarse=200, symmetry="symmetric"
        )
        m = ml.aspreconditioner(cycle="V")
    except Exception:
        m = sp.diags(1.0 / a.diagonal())
    x, info = spla.cg(a, b, rtol=tol * 0.1, atol=0.0, maxiter=max_iter, M=m)
    if info > 0:
        rel = np.linalg.norm(b - a @ x) / np.linalg.norm(b)
        if rel > tol:
            raise SolverError(
                f"CG did not converge within {max_iter} iterations", residual=rel
            )
    elif info < 0:
        raise SolverError("CG failed with an illegal input")
    return x


def _solve_general(a, b, tol, max_iter):
    try:
        ilu = spla.spilu(a.tocsc(), drop_tol=1e-6, fill_factor=25.0)
        m = spla.LinearOperator(a.shape, ilu.solve)
    except RuntimeError as exc:
        raise SolverError(f"ILU factorization failed: {exc}") from exc
    x, info = spla.gmres(
        a,
        b,
        rtol=tol * 0.1,
        atol=0.0,
        restart=200,
        maxiter=max(1, max_iter // 200),
        M=m,
    )
    if info != 0:
        rel = np.linalg.norm(b - a @ x) / np.linalg.norm(b)
        if rel > tol:
            raise SolverError(
                f"GMRES did not converge within {max_iter} iterations", residual=rel
            )
    return x


def lumped_edge_load(mesh, tags, traction, ncomp=2, npoints=3):
    """Boundary load vector from edge-wise traction integration.

    ``traction(x, n)`` maps a physical point and outward unit normal to a
    traction vector of length ``ncomp``; edges whose tag is in ``tags``
    contribute ``int t . v ds`` with ``npoints``-point Gauss quadrature.
    """
    ts, ws = EDGE_GAUSS3 if npoints == 3 else _edge_gauss(npoints)
    rhs = np.zeros(mesh.num_nodes * ncomp)
    centroids = mesh.nodes[mesh.elements].mean(axis=1)
    owner = _boundary_edge_owners(mesh)
    for (a, b, tag), e in zip(mesh.boundary_edges, owner):
        if tag not in tags:
            continue
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        d = pb - pa
        length = np.hypot(*d)
        normal = np.array([d[1], -d[0]]) / length
        if np.dot(normal, centroids[e] - 0.5 * (pa + pb)) > 0:
            normal = -normal
        for t, w in zip(ts, ws):
            x = (1.0 - t) * pa + t * pb
            tr = np.asarray(traction(x, normal), dtype=np.float64)
            rhs[a * ncomp : a * ncomp + ncomp] += w * length * (1.0 - t) * tr
            rhs[b * ncomp : b * ncomp + ncomp] += w * length * t * tr
    return rhs


def _edge_gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _boundary_edge_owners(mesh):
    """Owning element index for each boundary edge."""
    from .mesh import build_topology

    topo = build_topology(mesh)
    lookup = {}
    for i in range(topo.num_edges):
        if topo.edge_elements[i, 1] == -1:
            key = (int(topo.edges[i, 0]), int(topo.edges[i, 1]))
            lookup[key] = int(topo.edge_elements[i, 0])
    owners = []
    for a, b, _ in mesh.boundary_edges:
        owners.append(lookup[(min(a, b), max(a, b))])
    return owners
