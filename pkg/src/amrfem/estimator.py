"""Gradient-jump (Kelly-type) error indicator for P1 nodal fields.

For each element ``e`` the indicator is

    eta_e = sqrt( perimeter_e / 24 * sum_f |f| * || G_left - G_right ||_F^2 )

where the sum runs over the interior edges ``f`` of ``e`` and ``G`` are the
(constant) element gradients of the field; for vector fields the jump is a
matrix and the Frobenius norm is used.  Boundary edges contribute nothing.
Since P1 fields are C0-continuous the tangential jump component vanishes, so
this coincides with the normal-derivative jump formulation.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import all_p1_gradients
from .errors import AmrError


@dataclass
class ErrorIndicators:
    values: np.ndarray
    cycle: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise AmrError("indicator values must form a vector")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise AmrError("indicators must be finite and nonnegative")


def kelly(mesh, topology, field, cycle=0):
    """Per-element gradient-jump indicators for a nodal (vector) field."""
    field = np.asarray(field, dtype=np.float64)
    if field.ndim == 1:
        field = field[:, None]
    if field.shape[0] != mesh.num_nodes:
        raise AmrError(
            f"field has {field.shape[0]} rows for {mesh.num_nodes} nodes"
        )

    shape_grads, _ = all_p1_gradients(mesh)           # (m, 3, 2)
    nodal = field[mesh.elements]                       # (m, 3, ncomp)
    grads = np.einsum("eic,eid->ecd", nodal, shape_grads)  # (m, ncomp, 2)

    interior = ~topology.is_boundary()
    left = topology.edge_elements[interior, 0]
    right = topology.edge_elements[interior, 1]
    lengths = topology.edge_lengths(mesh)
    jumps = grads[left] - grads[right]
    jump_sq = np.einsum("ecd,ecd->e", jumps, jumps)    # squared Frobenius norm
    contrib = lengths[interior] * jump_sq

    acc = np.zeros(mesh.num_elements)
    np.add.at(acc, left, contrib)
    np.add.at(acc, right, contrib)

    perims = mesh.edge_lengths().sum(axis=1)
    return ErrorIndicators(values=np.sqrt(perims / 24.0 * acc), cycle=cycle)


def tangential_jump_residual(mesh, topology, field):
    """Max relative tangential component of the gradient jump (diagnostic).

    C0 continuity makes this zero up to rounding; used by the test suite to
    validate meshes and fields.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim == 1:
        field = field[:, None]
    shape_grads, _ = all_p1_gradients(mesh)
    nodal = field[mesh.elements]
    grads = np.einsum("eic,eid->ecd", nodal, shape_grads)
    interior = ~topology.is_boundary()
    d = mesh.nodes[topology.edges[interior, 1]] - mesh.nodes[topology.edges[interior, 0]]
    tang = d / np.linalg.norm(d, axis=1, keepdims=True)
    jumps = grads[topology.edge_elements[interior, 0]] - grads[
        topology.edge_elements[interior, 1]
    ]
    tang_part = np.einsum("ecd,ed->ec", jumps, tang)
    num = np.linalg.norm(tang_part, axis=1)
    den = np.sqrt(np.einsum("ecd,ecd->e", jumps, jumps))
    mask = den > 0
    if not np.any(mask):
        return 0.0
    return float((num[mask] / den[mask]).max())
