"""
Cluster channel modes: the transverse bound-state profile and the
longitudinal momentum of a pair + free particle wave ``exp(i p y) phi(x)``.

Two flavours share one interface (``p``, ``epsilon``, ``profile(x)``):

* ``analytic_channel`` -- the exact square-well state and ``p = sqrt(E - eps)``.
* ``lattice_channel`` -- the Bloch mode of the P1 discretisation on the
  equilateral lattice used by :mod:`threebody.mesh`.  Along a lattice line the
  discrete operator is invariant under translations by the spacing ``s``, so
  ``u = g(x) exp(i p_h y)`` reduces ``(K + MV - E M) u = 0`` to a small real
  symmetric pencil in the column values ``g``.  ``p_h`` is the root of
  ``lambda_0(p) = E`` where ``lambda_0`` is the lowest eigenvalue of that
  pencil.  Cut-off waves built from this mode solve the discrete equations
  exactly wherever the cut-off is flat, so their residuals are strictly
  confined to the strips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import brentq
from scipy.spatial import Delaunay

from .errors import ClosedChannel
from .helmholtz import fem_matrices
from .pair_model import PairBoundState, PotentialSpec, channel_momentum, solve_square_well


@dataclass(frozen=True, eq=False)
class ChannelMode:
    kind: str
    p: float
    epsilon: float
    columns: np.ndarray | None = None  # lattice column positions
    values: np.ndarray | None = None  # profile at the columns
    state: PairBoundState | None = None

    def profile(self, x):
        if self.kind == "analytic":
            return self.state(x)
        return np.interp(np.asarray(x, dtype=float), self.columns, self.values, left=0.0, right=0.0)


def analytic_channel(E: float, state: PairBoundState) -> ChannelMode:
    return ChannelMode(kind="analytic", p=channel_momentum(E, state), epsilon=state.epsilon, state=state)


def _bloch_stencil(spacing: float, potential: PotentialSpec, extent: float, rows: int = 3):
    s = spacing
    dx = s * math.sqrt(3) / 2
    J = int(math.ceil(extent / dx))
    m, i = np.meshgrid(np.arange(-J, J + 1), np.arange(-rows, rows + 1), indexing="ij")
    x = m * dx
    y = i * s + np.mod(m, 2) * (s / 2)
    nodes = np.column_stack([x.ravel(), y.ravel()])
    col = (m + J).ravel()
    row = i.ravel()
    tri = Delaunay(nodes)
    elements = tri.simplices.copy()
    p = nodes[elements]
    area = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    elements[area < 0] = elements[area < 0][:, [0, 2, 1]]
    K, M, MV = fem_matrices(nodes, elements, potential, pairs=(1,))
    S = (K + MV).tocoo()
    Mc = M.tocoo()
    centre = row == 0

    def fold(mat):
        keep = centre[mat.row]
        r, c, v = mat.row[keep], mat.col[keep], mat.data[keep]
        return col[r], col[c], nodes[c, 1] - nodes[r, 1], v

    return 2 * J + 1, x[:, 0], fold(S), fold(Mc)


def _pencil(n, folded, p):
    r, c, dy, v = folded
    T = np.zeros((n, n), dtype=complex)
    np.add.at(T, (r, c), v * np.exp(1j * p * dy))
    return T.real  # imaginary parts cancel pairwise (+dy and -dy neighbours)


def lattice_channel(E: float, potential: PotentialSpec, spacing: float, tail_decades: float = 14.0) -> ChannelMode:
    """Bloch cluster mode of the lattice with the given spacing."""
    state = solve_square_well(potential)
    extent = potential.halfwidth + tail_decades * math.log(10) / state.kappa
    n, columns, fK, fM = _bloch_stencil(spacing, potential, extent)

    def lowest(p):
        w, v = eigh(_pencil(n, fK, p), _pencil(n, fM, p), subset_by_index=[0, 0])
        return w[0], v[:, 0]

    eps_h = lowest(0.0)[0]
    if E <= eps_h:
        raise ClosedChannel(f"E={E} is below the discrete bound-state energy {eps_h}")
    hi = 1.5 * math.sqrt(E - eps_h)
    while lowest(hi)[0] < E:
        hi *= 1.5
        if hi * spacing > math.pi:
            raise ClosedChannel("channel momentum beyond the lattice Brillouin zone; refine the mesh")
    p_h = brentq(lambda q: lowest(q)[0] - E, 0.0, hi, xtol=1e-14, rtol=1e-14)
    _, g = lowest(p_h)
    # unit probability per unit length along the screen
    g = g * math.sqrt(spacing / (g @ _pencil(n, fM, p_h) @ g))
    if g[n // 2] < 0:
        g = -g
    return ChannelMode(kind="lattice", p=float(p_h), epsilon=float(eps_h), columns=columns, values=g, state=state)
