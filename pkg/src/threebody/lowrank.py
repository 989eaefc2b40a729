"""
Rank-six elimination of the cluster channels.

With ``R0 = (H - E - i0)^-1`` (here: the discrete radiating operator) and the
separable term ``V_sep = beta sum_i |Q_i><Q_i|``, the breakup remainder solves

    (H - E + V_sep) Phi = Q_b.

Everything reduces to the 6x6 matrix ``G_ij = <Q_i|R0 Q_j>`` and the vector
``g_i = <Q_i|R0 Q_b>``: the exact solution is ``Phi = R0 Q_b - beta sum c_i R0 Q_i``
with ``(I + beta G) c = g``, and then ``c_i = <Q_i|Phi>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DenominatorNearZero, RankSystemSingular
from .helmholtz import Field, LinearOperator, inner, solve_radiating

DEN_GUARD = 1e-8
DEN_WARN = 1e-3


@dataclass(eq=False)
class GreensCache:
    """Resolvent applied to the residuals and to the source, plus the Gram data."""

    r0q: list          # R0 Q_i as Fields
    r0qb: Field
    G: np.ndarray      # G[i, j] = <Q_i|R0 Q_j>
    g: np.ndarray      # g[i] = <Q_i|R0 Q_b>
    beta: complex
    sources: list

    @property
    def F(self) -> np.ndarray:
        return np.diag(self.G).copy()

    @property
    def G_offdiag(self) -> np.ndarray:
        return self.G - np.diag(np.diag(self.G))

    @property
    def diag_factors(self) -> np.ndarray:
        """``1 + beta F_i``."""
        return 1.0 + self.beta * self.F

    def flagged(self) -> bool:
        return bool(np.any(np.abs(self.diag_factors) < DEN_WARN))

    def consistency_error(self) -> float:
        dom = self.r0qb.domain
        G2 = np.array([[inner(dom, Qi, uj) for uj in self.r0q] for Qi in self.sources])
        return float(np.abs(G2 - self.G).max())


def beta_from_denominator(den: complex) -> complex:
    """``beta = -1 / den``; ``den = -ip + alpha`` in the continuum."""
    if abs(den) < DEN_GUARD:
        raise DenominatorNearZero(f"|den| = {abs(den):.3e}")
    return -1.0 / complex(den)


def build_greens_cache(opr: LinearOperator, sources, Qb: Field, beta: complex) -> GreensCache:
    """One solve per source plus one for ``Q_b`` against the shared factorisation."""
    dom = opr.domain
    r0q = [solve_radiating(opr, Q) for Q in sources]
    r0qb = solve_radiating(opr, Qb)
    G = np.array([[inner(dom, Qi, uj) for uj in r0q] for Qi in sources])
    g = np.array([inner(dom, Qi, r0qb) for Qi in sources])
    cache = GreensCache(r0q=r0q, r0qb=r0qb, G=G, g=g, beta=complex(beta), sources=list(sources))
    small = np.abs(cache.diag_factors).min()
    if small < DEN_GUARD:
        raise DenominatorNearZero(f"|1 + beta F_i| = {small:.3e}")
    return cache


def rank_one_resolvent_apply(r0_apply, Q, beta: complex, rhs, inner_fn=None):
    """``(H0 + beta |Q><Q| - E)^-1 rhs`` via Sherman-Morrison.

    ``r0_apply`` maps a right-hand side to ``R0`` of it. Works for ``Field``
    objects (pass ``inner_fn``) or plain vectors with the Euclidean product.
    """
    ip = inner_fn if inner_fn is not None else (lambda f, g: complex(np.vdot(f, g)))
    r0f = r0_apply(rhs)
    if beta == 0:
        return r0f
    r0Q = r0_apply(Q)
    den = 1.0 + beta * ip(Q, r0Q)
    if abs(den) < DEN_GUARD:
        raise DenominatorNearZero(f"|1 + beta F0| = {abs(den):.3e}")
    return r0f - r0Q * (beta * ip(Q, r0f) / den)


def _combine(cache: GreensCache, c) -> Field:
    out = cache.r0qb
    for ci, ui in zip(c, cache.r0q):
        out = out - ui * (cache.beta * ci)
    return out


def _increment(cache: GreensCache, c) -> Field:
    out = cache.r0qb * 0.0
    for ci, ui in zip(c, cache.r0q):
        out = out - ui * (cache.beta * ci)
    return out


def exact_coefficients(cache: GreensCache) -> np.ndarray:
    M = np.eye(len(cache.g)) + cache.beta * cache.G
    sv = np.linalg.svd(M, compute_uv=False)
    # the identity sets the natural scale, so a uniformly tiny M is singular too
    if not np.all(np.isfinite(sv)) or sv.min() < 1e-12 * max(1.0, sv.max()):
        raise RankSystemSingular(f"I + beta G is numerically singular (smallest singular value {sv.min():.3e})")
    return np.linalg.solve(M, cache.g)


def exact_lowrank_solve(cache: GreensCache) -> Field:
    """Closed-form finite-rank elimination."""
    return _combine(cache, exact_coefficients(cache))


def sep_residual(opr: LinearOperator, cache: GreensCache, phi: Field, Qb: Field) -> float:
    """``|(H0 + V_sep - E) Phi - Q_b| / |Q_b|`` measured on loads."""
    dom = opr.domain
    load = opr.apply(phi.values)
    for Q in cache.sources:
        load = load + cache.beta * inner(dom, Q, phi) * Q.load
    return float(np.linalg.norm(load - Qb.load) / np.linalg.norm(Qb.load))


def schwartz_coefficients(cache: GreensCache, order: int) -> list:
    """Coefficient increments of the multiple-scattering series.

    Entry ``n`` (``n >= 1``) is the coefficient vector added at order ``n``;
    entry 0 is the zero vector (order 0 is ``R0 Q_b`` alone). Each step
    scatters once more off a *different* screen because ``G`` enters with its
    diagonal removed.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    D = cache.diag_factors
    if np.abs(D).min() < DEN_GUARD:
        raise DenominatorNearZero(f"|1 + beta F_i| = {np.abs(D).min():.3e}")
    Goff = cache.G_offdiag
    terms = [np.zeros_like(cache.g)]
    cur = cache.g / D
    for _ in range(order):
        terms.append(cur)
        cur = -cache.beta * (Goff @ cur) / D
    return terms


def iteration_matrix(cache: GreensCache) -> np.ndarray:
    return -cache.beta * cache.G_offdiag / cache.diag_factors[:, None]


@dataclass
class SchwartzReport:
    """Per-order diagnostics of the truncated series."""

    order: int
    correction_norms: list = field(default_factory=list)   # |Phi_n - Phi_{n-1}|, n=0 gives |R0 Q_b|
    error_to_exact: list = field(default_factory=list)     # |Phi_n - Phi_exact|
    partial_coefficients: list = field(default_factory=list)
    spectral_radius: float = 0.0
    diag_factors: list = field(default_factory=list)
    beta: complex = 0j
    G: list = field(default_factory=list)

    def to_dict(self) -> dict:
        cpx = lambda z: [float(np.real(z)), float(np.imag(z))]
        return {
            "order": self.order,
            "correction_norms": self.correction_norms,
            "error_to_exact": self.error_to_exact,
            "partial_coefficients": [[cpx(z) for z in row] for row in self.partial_coefficients],
            "spectral_radius": self.spectral_radius,
            "abs_one_plus_beta_F": [abs(z) for z in self.diag_factors],
            "F": [cpx(z) for z in np.diag(np.asarray(self.G))] if len(self.G) else [],
            "beta": cpx(self.beta),
            "G": [[cpx(z) for z in row] for row in self.G],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def schwartz_solve(cache: GreensCache, order: int):
    """Truncated series of the given order; returns ``(Phi, report)``."""
    terms = schwartz_coefficients(cache, order)
    partial = np.cumsum(terms, axis=0)
    phi_exact = exact_lowrank_solve(cache)
    phis = [_combine(cache, c) for c in partial]
    corr = [cache.r0qb.norm()] + [_increment(cache, t).norm() for t in terms[1:]]
    report = SchwartzReport(
        order=order,
        correction_norms=[float(x) for x in corr],
        error_to_exact=[float((ph - phi_exact).norm()) for ph in phis],
        partial_coefficients=[list(c) for c in partial],
        spectral_radius=float(np.abs(np.linalg.eigvals(iteration_matrix(cache))).max()),
        diag_factors=list(cache.diag_factors),
        beta=cache.beta,
        G=cache.G.tolist(),
    )
    return phis[-1], report
