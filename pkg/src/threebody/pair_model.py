"""
Two-body square well in one dimension.

Units follow the three-body problem: every particle has mass 1/2, so the
relative motion inside a pair obeys

    -phi''(x) + v(x) phi(x) = eps phi(x),     v(x) = -depth for |x| < halfwidth

with no extra kinetic prefactor.  All wavenumbers below (``k_in``, ``kappa``,
channel momentum ``p``) depend on this convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import ClosedChannel, InvalidSpec, InvalidTol, NoBoundState

DEFAULT_TAIL_TOL = 1e-4


@dataclass(frozen=True)
class PotentialSpec:
    """Square well ``v(x) = -depth`` on ``|x| < halfwidth``."""

    depth: float
    halfwidth: float

    def __post_init__(self):
        if not (self.depth > 0 and self.halfwidth > 0):
            raise InvalidSpec(f"depth and halfwidth must be positive, got {self.depth}, {self.halfwidth}")

    def __call__(self, x):
        return np.where(np.abs(x) < self.halfwidth, -self.depth, 0.0)


@dataclass(frozen=True)
class PairBoundState:
    """Even ground state of the square well.

    phi(x) = amp_in cos(k_in x) inside, amp_out exp(-kappa |x|) outside.
    """

    epsilon: float
    k_in: float
    kappa: float
    amp_in: float
    amp_out: float
    halfwidth: float
    d: float
    depth: float

    def __call__(self, x):
        return eval_pair_state(self, x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        inside = -self.amp_in * self.k_in * np.sin(self.k_in * ax)
        outside = -self.kappa * self.amp_out * np.exp(-self.kappa * ax)
        return np.sign(x) * np.where(ax < self.halfwidth, inside, outside)


def _norm_integral(k, kappa, a):
    # int phi^2 for amp_in = 1 (continuity fixes amp_out)
    return a + math.sin(2 * k * a) / (2 * k) + math.cos(k * a) ** 2 / kappa


def solve_square_well(spec: PotentialSpec, tail_tol: float = DEFAULT_TAIL_TOL) -> PairBoundState:
    """Ground state of ``spec`` by bisection on the interior wavenumber.

    The even-parity matching condition is ``k tan(k a) = sqrt(depth - k^2)``;
    on ``(0, min(pi/2a, sqrt(depth)))`` the left side minus the right side
    increases monotonically from ``-sqrt(depth)``, so the bracket always
    holds exactly one root.
    """
    if not (0 < tail_tol < 1):
        raise InvalidTol(f"tail_tol must lie in (0, 1), got {tail_tol}")
    v0, a = float(spec.depth), float(spec.halfwidth)

    def mismatch(k):
        return k * math.tan(k * a) - math.sqrt(max(v0 - k * k, 0.0))

    hi = min(math.pi / (2 * a), math.sqrt(v0))
    hi = hi * (1 - 1e-15)
    lo = 0.0
    if not (mismatch(lo) < 0 < mismatch(hi)):
        raise NoBoundState(f"no sign change of the matching function for depth={v0}, halfwidth={a}")
    k = bisect(mismatch, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
    kappa = math.sqrt(v0 - k * k)
    if kappa <= 0:
        raise NoBoundState("bound state merged with the threshold")

    amp_in = 1.0 / math.sqrt(_norm_integral(k, kappa, a))
    amp_out = amp_in * math.cos(k * a) * math.exp(kappa * a)
    state = PairBoundState(
        epsilon=-kappa * kappa,
        k_in=k,
        kappa=kappa,
        amp_in=amp_in,
        amp_out=amp_out,
        halfwidth=a,
        d=a,
        depth=v0,
    )
    edge = amp_in * math.cos(k * a)
    d = tail_halfwidth(state, tail_tol) if tail_tol < edge else a
    return PairBoundState(**{**state.__dict__, "d": d})


def eval_pair_state(state: PairBoundState, x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    inside = state.amp_in * np.cos(state.k_in * np.minimum(ax, state.halfwidth))
    outside = state.amp_out * np.exp(-state.kappa * ax)
    out = np.where(ax < state.halfwidth, inside, outside)
    return out if out.ndim else float(out)


def channel_momentum(E: float, state: PairBoundState) -> float:
    """Relative momentum of the free particle: ``E = p^2 + eps``."""
    if E <= state.epsilon:
        raise ClosedChannel(f"E={E} does not exceed the bound-state energy {state.epsilon}")
    return math.sqrt(E - state.epsilon)


def tail_halfwidth(state: PairBoundState, tol: float) -> float:
    """Smallest ``d`` with ``|phi(d)| <= tol``."""
    edge = state.amp_in * math.cos(state.k_in * state.halfwidth)
    if not (0 < tol < edge):
        raise InvalidTol(f"tol must lie in (0, phi(halfwidth)={edge:.6g}), got {tol}")
    return state.halfwidth + math.log(edge / tol) / state.kappa
