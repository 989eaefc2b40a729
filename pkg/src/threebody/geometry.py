"""
Jacobi frames on the centre-of-mass plane, half-screens, residual strips and
the radial cut-off.

Frame 1 is the computational frame ``(x1, y1)``.  Frames 2 and 3 are obtained
by rotating it by +2pi/3 and +4pi/3:

    x2 = -x1/2 - (sqrt3/2) y1,   y2 =  (sqrt3/2) x1 - y1/2
    x3 = -x1/2 + (sqrt3/2) y1,   y3 = -(sqrt3/2) x1 - y1/2

Half-screen ``l_j^tau`` is the ray ``x_j = 0, sign(y_j) = tau``.  In the
computational frame the six half-screens sit 60 degrees apart; ``l_1^+`` points
along +y1.  The figures in the literature draw screen 1 vertically with the
incident wave travelling downward, i.e. with y1 flipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import InvalidConfig

SQRT3_2 = math.sqrt(3.0) / 2.0


@dataclass(frozen=True, order=True)
class HalfScreenId:
    """Half-screen ``l_j^tau``; ``tau`` is +1 or -1."""

    j: int
    tau: int

    def __post_init__(self):
        if self.j not in (1, 2, 3) or self.tau not in (1, -1):
            raise ValueError(f"invalid half-screen ({self.j}, {self.tau})")

    @property
    def index(self) -> int:
        """1..6: minus half-screens first, then plus half-screens."""
        return self.j if self.tau < 0 else self.j + 3

    @classmethod
    def from_index(cls, i: int) -> "HalfScreenId":
        if not 1 <= i <= 6:
            raise ValueError(f"half-screen index must be in 1..6, got {i}")
        return cls(j=(i - 1) % 3 + 1, tau=-1 if i <= 3 else 1)

    @property
    def key(self) -> str:
        return f"a_{self.j}_{'plus' if self.tau > 0 else 'minus'}"

    @property
    def angle(self) -> float:
        """Polar angle (computational frame) of the half-screen direction."""
        d = frame_to_computational(0.0, float(self.tau), self.j)
        return math.atan2(d[1], d[0]) % (2 * math.pi)

    def __str__(self):
        return f"l_{self.j}^{'+' if self.tau > 0 else '-'}"


ALL_SCREENS = tuple(HalfScreenId.from_index(i) for i in range(1, 7))


def _rotation(j: int) -> np.ndarray:
    if j not in (1, 2, 3):
        raise ValueError(f"pair index must be 1, 2 or 3, got {j}")
    phi = 2 * math.pi * (j - 1) / 3
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def pair_frame_coords(x1, y1, j: int):
    """Jacobi coordinates ``(x_j, y_j)`` of a point given in frame 1."""
    rot = _rotation(j)
    x1 = np.asarray(x1, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    xj = rot[0, 0] * x1 + rot[0, 1] * y1
    yj = rot[1, 0] * x1 + rot[1, 1] * y1
    return xj, yj


def frame_to_computational(xj, yj, j: int):
    """Inverse of :func:`pair_frame_coords`."""
    rot = _rotation(j).T
    xj = np.asarray(xj, dtype=float)
    yj = np.asarray(yj, dtype=float)
    return rot[0, 0] * xj + rot[0, 1] * yj, rot[1, 0] * xj + rot[1, 1] * yj


# -- cut-off -----------------------------------------------------------------

def smoothstep(t):
    """Quintic smoothstep ``6t^5 - 15t^4 + 10t^3`` and its first two derivatives."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    s = t * t * t * (t * (6 * t - 15) + 10)
    ds = 30 * t * t * (t - 1) ** 2
    d2s = 60 * t * (t - 1) * (2 * t - 1)
    return s, ds, d2s


@dataclass(frozen=True)
class CutoffSpec:
    """C^2 monotone cut-off rising from 0 at ``R1`` to 1 at ``R2``."""

    R1: float
    R2: float

    def __post_init__(self):
        if not (0 < self.R1 < self.R2):
            raise InvalidConfig(f"cut-off radii must satisfy 0 < R1 < R2, got {self.R1}, {self.R2}")

    @property
    def width(self) -> float:
        return self.R2 - self.R1

    def __call__(self, X):
        return cutoff_eval(self, X)[0]


def cutoff_eval(spec: CutoffSpec, X):
    """``(zeta, zeta', zeta'')`` at ``X``; flat outside ``[R1, R2]``."""
    W = spec.width
    s, ds, d2s = smoothstep((np.asarray(X, dtype=float) - spec.R1) / W)
    return s, ds / W, d2s / (W * W)


def cutoff_alpha(spec: CutoffSpec, method: str = "closed") -> float:
    """``alpha = int_{R1}^{R2} zeta'(y)^2 dy``.

    For the quintic profile ``int_0^1 s'(t)^2 dt = 900 B(5, 5) = 10/7``.
    ``method="quadrature"`` integrates numerically and works for any profile
    exposed through :func:`cutoff_eval`.
    """
    if method == "closed":
        return (10.0 / 7.0) / spec.width
    if method == "quadrature":
        nodes, weights = roots_legendre(12)
        y = spec.R1 + 0.5 * spec.width * (nodes + 1.0)
        d1 = cutoff_eval(spec, y)[1]
        return float(0.5 * spec.width * np.sum(weights * d1 * d1))
    raise ValueError(f"unknown method {method!r}")


# -- strips ------------------------------------------------------------------

@dataclass(frozen=True)
class StripSpec:
    """Rectangle ``R1 < |y_j| < R2, |x_j| < d, sign(y_j) = tau`` in frame j."""

    screen: HalfScreenId
    R1: float
    R2: float
    d: float


def strip_indicator(strip: StripSpec, x1, y1):
    xj, yj = pair_frame_coords(x1, y1, strip.screen.j)
    ay = np.abs(yj)
    inside = (ay > strip.R1) & (ay < strip.R2) & (np.abs(xj) < strip.d) & (np.sign(yj) == strip.screen.tau)
    return inside if np.ndim(inside) else bool(inside)


def strips_disjoint(R1: float, d: float) -> bool:
    """Neighbouring half-screens are 60 degrees apart, so strips separate once R1 sin30 > d."""
    return R1 > 2 * d
