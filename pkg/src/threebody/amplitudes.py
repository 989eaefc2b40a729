"""Cluster and breakup amplitudes, probability balance and the full solution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MeshMismatch
from .geometry import ALL_SCREENS, HalfScreenId
from .helmholtz import Field, boundary_amplitude, inner
from .wavefields import WaveSet


@dataclass(frozen=True)
class AmplitudeSet:
    """Six rearrangement amplitudes plus the sampled breakup amplitude."""

    a: dict            # HalfScreenId -> complex
    theta: np.ndarray
    A: np.ndarray
    E: float
    p: float

    def __post_init__(self):
        if set(self.a) != set(ALL_SCREENS):
            raise ValueError("an AmplitudeSet needs all six half-screens")
        n = len(self.theta)
        if len(self.A) != n or n == 0 or not np.allclose(self.theta, 2 * np.pi * np.arange(n) / n):
            raise ValueError("theta must cover [0, 2 pi) uniformly")

    @property
    def n_theta(self) -> int:
        return len(self.theta)

    def vector(self) -> np.ndarray:
        return np.array([self.a[s] for s in ALL_SCREENS])

    def dominant(self) -> HalfScreenId:
        return max(ALL_SCREENS, key=lambda s: abs(self.a[s]))

    def breakup_probability(self) -> float:
        """``int |A|^2 dtheta`` by the periodic trapezoid rule."""
        return float(2 * np.pi * np.mean(np.abs(self.A) ** 2))

    def forward_peak_deg(self) -> float:
        return float(np.degrees(self.theta[np.argmax(np.abs(self.A))]))

    def mirror_asymmetry(self) -> float:
        """Largest ``|a_2^tau - a_3^tau|``; zero for a reflection-symmetric solution.

        Reflection ``x_1 -> -x_1`` swaps pairs 2 and 3 and keeps the sign of ``y``.
        """
        return max(abs(self.a[HalfScreenId(2, t)] - self.a[HalfScreenId(3, t)]) for t in (-1, 1))

    def to_dict(self, balance: float | None = None) -> dict:
        out = {s.key: {"re": float(self.a[s].real), "im": float(self.a[s].imag)} for s in ALL_SCREENS}
        out["balance"] = probability_balance(self) if balance is None else balance
        out["E"] = self.E
        out["p"] = self.p
        return out


def cluster_amplitudes(waves: WaveSet, phi: Field) -> dict:
    """``a_i = <Q_i|Phi> / den``; the incoming half-screen also collects ``<Q_1^-|psi_in~>``."""
    dom = phi.domain
    if waves.psi_in.domain is not dom:
        raise MeshMismatch("Phi and the residuals live on different domains")
    first = ALL_SCREENS[0]
    out = {}
    for s in ALL_SCREENS:
        proj = inner(dom, waves.Q[s], phi)
        if s == first:
            proj += inner(dom, waves.Q[s], waves.psi_in)
        out[s] = complex(proj / waves.denominator(s))
    return out


def breakup_amplitude(phi: Field, E: float, R: float, n_theta: int = 720):
    return boundary_amplitude(phi, E, R, n_theta)


def extract(waves: WaveSet, phi: Field, n_theta: int = 720) -> AmplitudeSet:
    cfg = waves.cfg
    theta, A = breakup_amplitude(phi, cfg.E, cfg.R, n_theta)
    return AmplitudeSet(a=cluster_amplitudes(waves, phi), theta=theta, A=A, E=cfg.E, p=cfg.p)


def probability_balance(amps: AmplitudeSet, flux_weighted: bool = False) -> float:
    """``sum |a|^2 + int |A|^2 dtheta``.

    With ``flux_weighted`` the breakup term is scaled by ``sqrt(E)/p``, the
    ratio of breakup to cluster group velocities for the unit-normalised
    channels; this is the combination that the flux identity conserves.
    """
    w = math.sqrt(amps.E) / amps.p if flux_weighted else 1.0
    return float(np.sum(np.abs(amps.vector()) ** 2) + w * amps.breakup_probability())


def assemble_full_solution(waves: WaveSet, amps: AmplitudeSet, phi: Field):
    """Return ``(Psi, Psi0)`` with ``Psi0 = psi_in~ + sum a psi~`` and ``Psi = Psi0 + Phi``."""
    if phi.domain is not waves.psi_in.domain:
        raise MeshMismatch("Phi and the cut-off waves live on different domains")
    psi0 = waves.psi_in
    for s in ALL_SCREENS:
        psi0 = psi0 + waves.psi[s] * amps.a[s]
    return psi0 + phi, psi0


def radiation_defect(u: Field, E: float) -> float:
    """Relative size of ``d_n u - i sqrt(E) u`` on the boundary ring.

    The normal derivative comes from the gradient of the element owning each
    boundary edge; returns ``|d_n u - i k u| / (k |u|)`` in the edge-averaged L2 sense.
    """
    dom = u.domain
    k = math.sqrt(E)
    num = den = 0.0
    edges = dom.boundary_edges
    owner = _edge_owners(dom)
    for (a, b), e in zip(edges, owner):
        tri = dom.elements[e]
        P = dom.nodes[tri]
        J = np.array([P[1] - P[0], P[2] - P[0]]).T
        grad = np.linalg.solve(J.T, np.array([u.values[tri[1]] - u.values[tri[0]], u.values[tri[2]] - u.values[tri[0]]]))
        mid = 0.5 * (dom.nodes[a] + dom.nodes[b])
        n = mid / np.linalg.norm(mid)
        L = np.linalg.norm(dom.nodes[a] - dom.nodes[b])
        val = 0.5 * (u.values[a] + u.values[b])
        num += L * abs(grad @ n - 1j * k * val) ** 2
        den += L * abs(k * val) ** 2
    return math.sqrt(num / den) if den > 0 else 0.0


def _edge_owners(dom):
    key = "edge_owners"
    if key not in dom._cache:
        lookup = {}
        for e, tri in enumerate(dom.elements):
            for i in range(3):
                a, b = tri[i], tri[(i + 1) % 3]
                lookup[(min(a, b), max(a, b))] = e
        dom._cache[key] = [lookup[(min(a, b), max(a, b))] for a, b in dom.boundary_edges]
    return dom._cache[key]
