"""Uniform interval and Cartesian rectangle meshes with face connectivity.

Elements are axis-aligned cells.  Every face record stores the two incident
elements (side 1 first, with its outward normal) or a BOUNDARY marker, so
fluxes and boundary conditions can be assembled face by face.  Periodic
directions are realized by turning the paired boundary faces into interior
faces with wrap-around connectivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BOUNDARY = -1

# local face ids: 1D [x-, x+]; 2D [x-, x+, y-, y+]
_OPPOSITE = {0: 1, 1: 0, 2: 3, 3: 2}


@dataclass(frozen=True)
class Face:
    """One mesh face.

    elem1 carries the face with outward normal `normal`; elem2 is the
    neighbor (BOUNDARY if none).  For interior faces elem1 is the element
    on the negative side of the face axis, so `normal` points along +axis;
    on wrap-around (periodic) faces elem1 is the high-coordinate element.
    local1/local2 are the faces' ids within each element.
    """

    elem1: int
    elem2: int
    local1: int
    local2: int
    axis: int
    normal: np.ndarray
    center: np.ndarray
    measure: float
    wrap: bool = False

    @property
    def is_boundary(self) -> bool:
        return self.elem2 == BOUNDARY


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh of an interval (dim 1) or rectangle (dim 2)."""

    ndim: int
    lo: np.ndarray
    hi: np.ndarray
    shape: tuple  # cells per direction
    h: np.ndarray  # cell size per direction
    cell_lo: np.ndarray  # (n_elements, ndim)
    cell_hi: np.ndarray
    faces: list[Face] = field(repr=False)
    periodic: tuple = (False,)

    @property
    def n_elements(self) -> int:
        return len(self.cell_lo)

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.h))

    def interior_faces(self) -> list[Face]:
        return [f for f in self.faces if not f.is_boundary]

    def boundary_faces(self) -> list[Face]:
        return [f for f in self.faces if f.is_boundary]


def build_interval_mesh(a: float, b: float, N: int, periodic: bool = False) -> Mesh:
    """N uniform cells on (a, b); N+1 faces unless periodic (then N)."""
    if not (a < b):
        raise ValueError(f"need a < b, got ({a}, {b})")
    if N < 1:
        raise ValueError(f"need at least one cell, got N={N}")
    h = (b - a) / N
    verts = a + h * np.arange(N + 1)
    cell_lo = verts[:-1, None]
    cell_hi = verts[1:, None]
    faces = []
    for i in range(1, N):
        faces.append(
            Face(i - 1, i, 1, 0, 0, np.array([1.0]), np.array([verts[i]]), 1.0)
        )
    if periodic:
        faces.append(
            Face(N - 1, 0, 1, 0, 0, np.array([1.0]), np.array([verts[N]]), 1.0, wrap=True)
        )
    else:
        faces.append(Face(0, BOUNDARY, 0, -1, 0, np.array([-1.0]), np.array([verts[0]]), 1.0))
        faces.append(Face(N - 1, BOUNDARY, 1, -1, 0, np.array([1.0]), np.array([verts[N]]), 1.0))
    return Mesh(
        ndim=1,
        lo=np.array([a]),
        hi=np.array([b]),
        shape=(N,),
        h=np.array([h]),
        cell_lo=cell_lo,
        cell_hi=cell_hi,
        faces=faces,
        periodic=(periodic,),
    )


def build_cartesian_mesh(domain, nx: int, ny: int, periodic=(False, False)) -> Mesh:
    """nx*ny uniform cells on the rectangle domain = (x0, x1, y0, y1).

    Element ids are row-major with x fastest: e = iy*nx + ix.
    """
    x0, x1, y0, y1 = map(float, domain)
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"degenerate rectangle {domain}")
    if nx < 1 or ny < 1:
        raise ValueError(f"need at least one cell per direction, got ({nx}, {ny})")
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny))
    ix = ix.ravel()
    iy = iy.ravel()
    cell_lo = np.column_stack([x0 + ix * hx, y0 + iy * hy])
    cell_hi = np.column_stack([x0 + (ix + 1) * hx, y0 + (iy + 1) * hy])

    def eid(i, j):
        return j * nx + i

    faces = []
    ex = np.array([1.0, 0.0])
    ey = np.array([0.0, 1.0])
    for j in range(ny):
        for i in range(nx - 1):
            c = np.array([x0 + (i + 1) * hx, y0 + (j + 0.5) * hy])
            faces.append(Face(eid(i, j), eid(i + 1, j), 1, 0, 0, ex, c, hy))
        if periodic[0]:
            c = np.array([x1, y0 + (j + 0.5) * hy])
            faces.append(Face(eid(nx - 1, j), eid(0, j), 1, 0, 0, ex, c, hy, wrap=True))
    for j in range(ny - 1):
        for i in range(nx):
            c = np.array([x0 + (i + 0.5) * hx, y0 + (j + 1) * hy])
            faces.append(Face(eid(i, j), eid(i, j + 1), 3, 2, 1, ey, c, hx))
    if periodic[1]:
        for i in range(nx):
            c = np.array([x0 + (i + 0.5) * hx, y1])
            faces.append(Face(eid(i, ny - 1), eid(i, 0), 3, 2, 1, ey, c, hx, wrap=True))
    if not periodic[0]:
        for j in range(ny):
            cl = np.array([x0, y0 + (j + 0.5) * hy])
            cr = np.array([x1, y0 + (j + 0.5) * hy])
            faces.append(Face(eid(0, j), BOUNDARY, 0, -1, 0, -ex, cl, hy))
            faces.append(Face(eid(nx - 1, j), BOUNDARY, 1, -1, 0, ex, cr, hy))
    if not periodic[1]:
        for i in range(nx):
            cb = np.array([x0 + (i + 0.5) * hx, y0])
            ct = np.array([x0 + (i + 0.5) * hx, y1])
            faces.append(Face(eid(i, 0), BOUNDARY, 2, -1, 1, -ey, cb, hx))
            faces.append(Face(eid(i, ny - 1), BOUNDARY, 3, -1, 1, ey, ct, hx))
    return Mesh(
        ndim=2,
        lo=np.array([x0, y0]),
        hi=np.array([x1, y1]),
        shape=(nx, ny),
        h=np.array([hx, hy]),
        cell_lo=cell_lo,
        cell_hi=cell_hi,
        faces=faces,
        periodic=tuple(periodic),
    )
