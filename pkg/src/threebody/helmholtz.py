"""
P1 finite elements for ``(-Laplace + V - E) u = f`` on the disk with the
first-order radiation condition ``du/dn - i sqrt(E) u = 0`` on the circle.

Weak form::

    a(u, v) = int grad u . grad v + (V - E) u v  -  i sqrt(E) oint u v

The bilinear form is symmetric, so the system matrix is complex symmetric
(never Hermitian).  One sparse LU factorisation serves every right-hand side.

Right-hand sides and inner products use the vertex quadrature rule (lumped
mass): a nodal field ``f`` becomes the load ``m * f`` and
``<f|g> = sum m conj(f) g``.  A load vector ``q`` therefore corresponds to the
nodal field ``q / m`` exactly, which keeps residual sources localised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import AssemblyFailure, MeshMismatch, SingularSystem
from .geometry import pair_frame_coords
from .mesh import Domain
from .pair_model import PotentialSpec


@dataclass(frozen=True, eq=False)
class Field:
    """Complex nodal values of a P1 function on ``domain``."""

    values: np.ndarray
    domain: Domain

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.domain.n_nodes,):
            raise MeshMismatch(f"field has {v.shape} values, domain has {self.domain.n_nodes} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def _check(self, other):
        if other.domain is not self.domain:
            raise MeshMismatch("fields live on different domains")

    def __add__(self, other):
        self._check(other)
        return Field(self.values + other.values, self.domain)

    def __sub__(self, other):
        self._check(other)
        return Field(self.values - other.values, self.domain)

    def __mul__(self, c):
        return Field(self.values * c, self.domain)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(-self.values, self.domain)

    @property
    def load(self) -> np.ndarray:
        return self.domain.lumped_mass * self.values

    @classmethod
    def from_load(cls, load, domain: Domain) -> "Field":
        return cls(np.asarray(load) / domain.lumped_mass, domain)

    @classmethod
    def zeros(cls, domain: Domain) -> "Field":
        return cls(np.zeros(domain.n_nodes, dtype=complex), domain)

    def norm(self) -> float:
        return math.sqrt(max(inner(self.domain, self, self).real, 0.0))

    def to_csv(self, path) -> None:
        x, y = self.domain.nodes.T
        v = self.values
        data = np.column_stack([x, y, v.real, v.imag, np.abs(v)])
        np.savetxt(path, data, delimiter=",", header="x,y,re,im,abs", comments="", fmt="%.10g")


def inner(domain: Domain, f: Field, g: Field) -> complex:
    """``int conj(f) g`` by the vertex rule; conjugate-linear in ``f``."""
    if f.domain is not domain or g.domain is not domain:
        raise MeshMismatch("inner product of fields from another domain")
    return complex(np.sum(domain.lumped_mass * np.conj(f.values) * g.values))


def total_potential(potential: PotentialSpec, x1, y1):
    """``V = v(x_1) + v(x_2) + v(x_3)``."""
    return sum(potential(pair_frame_coords(x1, y1, j)[0]) for j in (1, 2, 3))


# -- element matrices ---------------------------------------------------------

_MASS_REF = (np.ones((3, 3)) + np.eye(3)) / 12.0


def _gradients(p):
    # p: (T, 3, 2) -> area (T,), grads (T, 3, 2) of the barycentric coordinates
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grads = np.stack([gx, gy], axis=-1) / (2 * area[:, None, None])
    return area, grads


def _scatter(elements, local, n):
    rows = np.repeat(elements, 3, axis=1).ravel()
    cols = np.tile(elements, (1, 3)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _clip(poly, xc, bound, keep_below):
    """Clip a convex polygon against ``x <= bound`` (or ``x >= bound``)."""
    out, out_x = [], []
    m = len(poly)
    for k in range(m):
        a, b = poly[k], poly[(k + 1) % m]
        xa, xb = xc[k], xc[(k + 1) % m]
        ina = xa <= bound if keep_below else xa >= bound
        inb = xb <= bound if keep_below else xb >= bound
        if ina:
            out.append(a)
            out_x.append(xa)
        if ina != inb:
            t = (bound - xa) / (xb - xa)
            out.append(a + t * (b - a))
            out_x.append(bound)
    return out, out_x


def _slab_mass(p, x, half):
    """``int_{T, |x| < half} lambda_a lambda_b`` for one triangle ``p`` (3, 2).

    ``x`` holds the slab coordinate at the three vertices; it is affine on the
    triangle so clipping in ``x`` and then mapping back is exact.
    """
    poly, xc = list(p), list(x)
    poly, xc = _clip(poly, xc, half, True)
    if len(poly) >= 3:
        poly, xc = _clip(poly, xc, -half, False)
    if len(poly) < 3:
        return np.zeros((3, 3))
    # barycentric coordinates of the polygon vertices w.r.t. the parent triangle
    T = np.array([[p[0, 0], p[1, 0], p[2, 0]], [p[0, 1], p[1, 1], p[2, 1]], [1.0, 1.0, 1.0]])
    Tinv = np.linalg.inv(T)
    pts = np.array(poly)
    lam = (Tinv @ np.vstack([pts.T, np.ones(len(pts))])).T
    out = np.zeros((3, 3))
    for k in range(1, len(pts) - 1):
        a, b, c = pts[0], pts[k], pts[k + 1]
        area = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        L = lam[[0, k, k + 1]]
        s = L.sum(axis=0)
        out += area / 12.0 * (L.T @ L + np.outer(s, s))
    return out


def potential_mass(nodes, elements, potential: PotentialSpec, pairs=(1, 2, 3)):
    """``int V phi_a phi_b`` with the square wells integrated exactly."""
    n = len(nodes)
    p = nodes[elements]
    area = np.abs(_gradients(p)[0])
    a = potential.halfwidth
    local = np.zeros((len(elements), 3, 3))
    for j in pairs:
        xj = pair_frame_coords(nodes[:, 0], nodes[:, 1], j)[0][elements]
        full = np.all(np.abs(xj) <= a, axis=1)
        outside = np.all(xj >= a, axis=1) | np.all(xj <= -a, axis=1)
        local[full] += area[full, None, None] * _MASS_REF
        for t in np.nonzero(~full & ~outside)[0]:
            local[t] += _slab_mass(p[t], xj[t], a)
    return _scatter(elements, -potential.depth * local, n)


def fem_matrices(nodes, elements, potential: PotentialSpec | None, pairs=(1, 2, 3)):
    """Stiffness, consistent mass and potential mass on an arbitrary P1 mesh."""
    n = len(nodes)
    p = nodes[elements]
    area, grads = _gradients(p)
    if np.any(area <= 0):
        raise AssemblyFailure("mesh contains inverted or degenerate elements")
    K = _scatter(elements, area[:, None, None] * np.einsum("tad,tbd->tab", grads, grads), n)
    M = _scatter(elements, area[:, None, None] * _MASS_REF, n)
    if potential is None:
        MV = sp.csr_matrix((n, n))
    else:
        MV = potential_mass(nodes, elements, potential, pairs)
    return K, M, MV


def boundary_mass(domain: Domain):
    e = domain.boundary_edges
    d = domain.nodes[e[:, 1]] - domain.nodes[e[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    local = length[:, None, None] * (np.ones((2, 2)) + np.eye(2)) / 6.0
    rows = np.repeat(e, 2, axis=1).ravel()
    cols = np.tile(e, (1, 2)).ravel()
    n = domain.n_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


# -- operator ----------------------------------------------------------------

@dataclass(eq=False)
class LinearOperator:
    """Assembled ``H0 - E`` with the radiation condition, plus its LU factors.

    ``interior`` is ``K + MV - E M`` without the boundary term; it is what gets
    applied to cut-off cluster waves to obtain their residuals.
    """

    matrix: sp.csc_matrix
    interior: sp.csr_matrix
    domain: Domain
    E: float
    _lu: object = field(default=None, repr=False)

    @property
    def lu(self):
        if self._lu is None:
            try:
                self._lu = splu(self.matrix, permc_spec="MMD_AT_PLUS_A")
            except RuntimeError as exc:
                raise SingularSystem(f"factorisation failed at E={self.E}: {exc}") from exc
        return self._lu

    def solve_load(self, load: np.ndarray) -> np.ndarray:
        b = np.asarray(load, dtype=complex)
        u = self.lu.solve(b)
        if not np.all(np.isfinite(u)):
            raise SingularSystem(f"non-finite solution at E={self.E}")
        return u

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u


def assemble(domain: Domain, E: float, potential: PotentialSpec | None) -> LinearOperator:
    """Assemble ``a(u, v)`` on ``domain``; ``potential=None`` gives ``V = 0``."""
    if not E > 0:
        raise AssemblyFailure(f"the radiation condition needs E > 0, got {E}")
    K, M, MV = fem_matrices(domain.nodes, domain.elements, potential)
    interior = (K + MV - E * M).tocsr()
    B = boundary_mass(domain)
    A = (interior.astype(complex) - 1j * math.sqrt(E) * B).tocsc()
    if not np.all(np.isfinite(A.data)):
        raise AssemblyFailure("non-finite matrix entries")
    return LinearOperator(matrix=A, interior=interior, domain=domain, E=float(E))


def solve_radiating(opr: LinearOperator, rhs: Field) -> Field:
    """Discrete ``(H0 - E)^{-1} rhs`` with the radiation condition."""
    if rhs.domain is not opr.domain:
        raise MeshMismatch("right-hand side lives on another domain")
    return Field(opr.solve_load(rhs.load), opr.domain)


def boundary_amplitude(field: Field, E: float, R: float, n_theta: int = 720):
    """``A(theta) = Phi(R, theta) sqrt(R) exp(-i sqrt(E) R)`` on a uniform grid.

    Values between ring nodes are interpolated linearly in angle.
    """
    dom = field.domain
    ang = dom.boundary_angles
    order = np.argsort(ang)
    ang = ang[order]
    vals = field.values[dom.boundary_nodes][order]
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    re = np.interp(theta, ang, vals.real, period=2 * np.pi)
    im = np.interp(theta, ang, vals.imag, period=2 * np.pi)
    amp = (re + 1j * im) * math.sqrt(R) * np.exp(-1j * math.sqrt(E) * R)
    return theta, amp
