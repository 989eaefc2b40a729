"""
Cut-off incident and cluster waves, their residuals, and the source of the
boundary value problem.

Conventions (time factor ``exp(-i E t)``, outgoing means ``exp(+i k r)``):

* outgoing cluster wave on ``l_j^tau``:  ``exp(i p |y_j|) phi(x_j)`` on ``sign(y_j) = tau``
* incident wave on ``l_1^-``:            ``exp(-i p |y_1|) phi(x_1)`` on ``y_1 < 0``,
  i.e. ``exp(i p y_1) phi(x_1)``, travelling towards the origin.

Inside each strip the cut-off is evaluated at ``|y_j|`` (not at the
hyperradius); with ``s = |y_j|`` the residual of the outgoing wave is

    Q = (2 i p zeta'(s) + zeta''(s)) exp(i p s) phi(x_j)

and the incident residual is the same expression with ``p -> -p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMode, analytic_channel, lattice_channel
from .errors import InvalidConfig, MeshMismatch
from .geometry import ALL_SCREENS, CutoffSpec, HalfScreenId, cutoff_alpha, cutoff_eval, pair_frame_coords, strips_disjoint
from .helmholtz import Field, LinearOperator, inner
from .mesh import LATTICE_FACTOR, Domain
from .pair_model import PairBoundState, PotentialSpec, channel_momentum, solve_square_well, tail_halfwidth

INCIDENT = "incident"


@dataclass(frozen=True)
class ScatterConfig:
    """Physical and numerical parameters of one scattering run."""

    E: float
    potential: PotentialSpec
    bound: PairBoundState
    p: float
    cutoff: CutoffSpec
    R: float
    h: float
    order: int = 2
    channel: str = "lattice"
    denominator: str = "discrete"

    def __post_init__(self):
        if not self.E > 0:
            raise InvalidConfig(f"E must be positive (above the breakup threshold), got {self.E}")
        if not self.cutoff.R2 < self.R:
            raise InvalidConfig(f"need R2 < R, got R2={self.cutoff.R2}, R={self.R}")
        if abs(self.p * self.p - (self.E - self.bound.epsilon)) > 1e-9 * max(1.0, self.E):
            raise InvalidConfig("p^2 must equal E - epsilon")
        if self.h > free_wavelength(self.E) / 10 * (1 + 1e-12):
            raise InvalidConfig(f"h={self.h} gives fewer than 10 nodes per free wavelength")
        if not 0 < self.h < self.R / 10:
            raise InvalidConfig(f"need 0 < h < R/10, got h={self.h}")
        if self.cutoff.R2 + 2 * self.h > self.R:
            raise InvalidConfig("the strips must stay at least two elements away from the boundary")
        if self.order < 0:
            raise InvalidConfig("order must be nonnegative")
        if self.channel not in ("lattice", "analytic"):
            raise InvalidConfig(f"unknown channel {self.channel!r}")
        if self.denominator not in ("discrete", "analytic"):
            raise InvalidConfig(f"unknown denominator {self.denominator!r}")
        if not strips_disjoint(self.cutoff.R1, strip_halfwidth(self)):
            raise InvalidConfig(
                f"R1={self.cutoff.R1} too small: neighbouring strips of half-width "
                f"{strip_halfwidth(self):.3g} overlap (need R1 > 2 d)"
            )

    @property
    def alpha(self) -> float:
        return cutoff_alpha(self.cutoff)

    @property
    def beta(self) -> complex:
        return -1.0 / (-1j * self.p + self.alpha)


def free_wavelength(E: float) -> float:
    return 2 * math.pi / math.sqrt(E)


def default_h(E: float, cap: float = 0.9) -> float:
    return min(cap, free_wavelength(E) / 10)


def strip_halfwidth(cfg: ScatterConfig) -> float:
    """Transverse strip half-width ``d`` with ``|phi(d)| = 1/R``."""
    return tail_halfwidth(cfg.bound, 1.0 / cfg.R)


def make_config(
    E: float,
    depth: float = 1.0,
    halfwidth: float = 1.0,
    R: float = 50.0,
    R1: float = 15.0,
    R2: float = 30.0,
    h: float | None = None,
    order: int = 2,
    tail_tol: float = 1e-4,
    channel: str = "lattice",
    denominator: str = "discrete",
) -> ScatterConfig:
    potential = PotentialSpec(depth, halfwidth)
    bound = solve_square_well(potential, tail_tol)
    if not E > 0:
        raise InvalidConfig(f"E must be positive, got {E}")
    return ScatterConfig(
        E=float(E),
        potential=potential,
        bound=bound,
        p=channel_momentum(E, bound),
        cutoff=CutoffSpec(R1, R2),
        R=float(R),
        h=float(default_h(E) if h is None else h),
        order=int(order),
        channel=channel,
        denominator=denominator,
    )


# -- pointwise waves ----------------------------------------------------------

def _wave(cfg, mode, j, sign, phase_sign, x1, y1, derivs=False):
    xj, yj = pair_frame_coords(x1, y1, j)
    s = np.abs(yj)
    z, z1, z2 = cutoff_eval(cfg.cutoff, s)
    on_half = np.sign(yj) == sign
    ph = np.exp(1j * phase_sign * mode.p * s)
    phi = mode.profile(xj)
    if derivs:
        return xj, s, on_half, ph, phi, z, z1, z2
    return np.where(on_half, z * ph * phi, 0.0)


def _mode(cfg: ScatterConfig, mode: ChannelMode | None) -> ChannelMode:
    return mode if mode is not None else analytic_channel(cfg.E, cfg.bound)


def incident_field(cfg: ScatterConfig, x1, y1, mode: ChannelMode | None = None):
    """Cut-off incident wave ``exp(-i p |y1|) phi(x1) zeta(|y1|)`` on ``y1 < 0``."""
    return _wave(cfg, _mode(cfg, mode), 1, -1, -1, x1, y1)


def cluster_field(cfg: ScatterConfig, screen: HalfScreenId, x1, y1, mode: ChannelMode | None = None):
    """Cut-off outgoing cluster wave on ``screen``; zero on the opposite half."""
    return _wave(cfg, _mode(cfg, mode), screen.j, screen.tau, 1, x1, y1)


def residual_field_analytic(cfg: ScatterConfig, screen, x1, y1, mode: ChannelMode | None = None):
    """Closed-form residual ``-(H - E)`` of the cut-off wave (cluster or incident).

    Exact for the analytic mode as long as the other two wells are negligible
    on the strip.
    """
    mode = _mode(cfg, mode)
    if screen == INCIDENT:
        j, sign, k = 1, -1, -mode.p
    else:
        j, sign, k = screen.j, screen.tau, mode.p
    xj, s, on_half, _, phi, z, z1, z2 = _wave(cfg, mode, j, sign, 1, x1, y1, derivs=True)
    q = (2j * k * z1 + z2) * np.exp(1j * k * s) * phi
    return np.where(on_half, q, 0.0)


# -- discrete fields ----------------------------------------------------------

def channel_mode(cfg: ScatterConfig, domain: Domain) -> ChannelMode:
    if cfg.channel == "analytic":
        return analytic_channel(cfg.E, cfg.bound)
    key = ("channel", cfg.E, cfg.potential)
    if key not in domain._cache:
        domain._cache[key] = lattice_channel(cfg.E, cfg.potential, domain.spacing)
    return domain._cache[key]


def sampled_field(cfg: ScatterConfig, domain: Domain, screen, mode: ChannelMode) -> Field:
    x1, y1 = domain.nodes.T
    if screen == INCIDENT:
        return Field(incident_field(cfg, x1, y1, mode), domain)
    return Field(cluster_field(cfg, screen, x1, y1, mode), domain)


def strip_mask(cfg: ScatterConfig, domain: Domain, screen) -> np.ndarray:
    """Nodes whose element patch can touch the strip of ``screen``."""
    j, tau = (1, -1) if screen == INCIDENT else (screen.j, screen.tau)
    xj, yj = pair_frame_coords(domain.nodes[:, 0], domain.nodes[:, 1], j)
    mask = (tau * yj > cfg.cutoff.R1 - cfg.h) & (tau * yj < cfg.cutoff.R2 + cfg.h)
    mask[domain.boundary_nodes] = False
    return mask


def residual_field_discrete(cfg: ScatterConfig, opr: LinearOperator, screen, mode: ChannelMode | None = None) -> Field:
    """``-(H - E)`` of the sampled cut-off wave using the assembled operator.

    The load ``-(K + MV - E M) u`` is restricted to the strip (rows outside it
    carry only discretisation error) and converted to a nodal field through
    the vertex weights.
    """
    dom = opr.domain
    if abs(opr.E - cfg.E) > 1e-12 * max(1.0, cfg.E):
        raise MeshMismatch(f"operator assembled at E={opr.E}, config has E={cfg.E}")
    mode = channel_mode(cfg, dom) if mode is None else mode
    u = sampled_field(cfg, dom, screen, mode)
    load = -(opr.interior @ u.values)
    load[~strip_mask(cfg, dom, screen)] = 0.0
    return Field.from_load(load, dom)


def source_Qb(cfg: ScatterConfig, Q_in: Field, Q_1minus: Field, psi_in_tilde: Field, den: complex | None = None) -> Field:
    """``Q_b = Q_in + Q_1^- <Q_1^-|psi_in~> / den`` with ``den = -ip + alpha`` by default."""
    dom = Q_in.domain
    if Q_1minus.domain is not dom or psi_in_tilde.domain is not dom:
        raise MeshMismatch("Q_b ingredients live on different domains")
    if den is None:
        den = -1j * cfg.p + cfg.alpha
    return Q_in + Q_1minus * (inner(dom, Q_1minus, psi_in_tilde) / den)


@dataclass(eq=False)
class WaveSet:
    """All sampled cut-off waves and residuals of one run."""

    cfg: ScatterConfig
    mode: ChannelMode
    psi_in: Field
    Q_in: Field
    psi: dict = field(default_factory=dict)  # HalfScreenId -> Field
    Q: dict = field(default_factory=dict)

    def sources(self) -> list:
        return [self.Q[s] for s in ALL_SCREENS]

    def denominator(self, screen: HalfScreenId) -> complex:
        """``-ip + alpha`` or its discrete counterpart ``-int Q conj(psi~)``."""
        if self.cfg.denominator == "analytic":
            return -1j * self.cfg.p + self.cfg.alpha
        dom = self.psi_in.domain
        return -np.conj(inner(dom, self.Q[screen], self.psi[screen]))


def build_waves(cfg: ScatterConfig, opr: LinearOperator) -> WaveSet:
    dom = opr.domain
    mode = channel_mode(cfg, dom)
    ws = WaveSet(
        cfg=cfg,
        mode=mode,
        psi_in=sampled_field(cfg, dom, INCIDENT, mode),
        Q_in=residual_field_discrete(cfg, opr, INCIDENT, mode),
    )
    for s in ALL_SCREENS:
        ws.psi[s] = sampled_field(cfg, dom, s, mode)
        ws.Q[s] = residual_field_discrete(cfg, opr, s, mode)
    return ws
