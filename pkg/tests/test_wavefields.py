import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from runs import result
from threebody.channel import analytic_channel, lattice_channel
from threebody.errors import InvalidConfig
from threebody.geometry import ALL_SCREENS, CutoffSpec, HalfScreenId, StripSpec, cutoff_alpha, cutoff_eval, \
    frame_to_computational, pair_frame_coords, strip_indicator
from threebody.helmholtz import Field, assemble, inner
from threebody.mesh import build_disk_domain
from threebody.wavefields import (INCIDENT, build_waves, cluster_field, incident_field, make_config, residual_field_analytic,
                                  residual_field_discrete, source_Qb, strip_halfwidth)

CFG = make_config(0.5)
PHI0 = CFG.bound(0.0)


# -- pointwise waves -------------------------------------------------------

def test_incident_field_examples():
    assert incident_field(CFG, 0.0, -5.0) == 0
    Y = 40.0
    # incoming: exp(-i p |y1|) on y1 < 0, i.e. phase decreasing away from the origin
    assert incident_field(CFG, 0.0, -Y) == pytest.approx(np.exp(-1j * CFG.p * Y) * PHI0)
    assert incident_field(CFG, 0.0, Y) == 0
    rng = np.random.default_rng(2)
    x, y = rng.uniform(-45, 45, size=(2, 500))
    zeta = cutoff_eval(CFG.cutoff, np.abs(y))[0]
    assert np.allclose(np.abs(incident_field(CFG, x, y)), np.where(y < 0, CFG.bound(x) * zeta, 0), atol=1e-14)


def test_cluster_field_examples():
    s1p = HalfScreenId(1, 1)
    Y = 35.0
    assert cluster_field(CFG, s1p, 0.0, Y) == pytest.approx(np.exp(1j * CFG.p * Y) * PHI0)
    assert cluster_field(CFG, s1p, 0.0, -Y) == 0
    rng = np.random.default_rng(4)
    x, y = rng.uniform(-3, 3, 200), rng.uniform(5, 40, 200)
    u, v = frame_to_computational(x, y, 2)
    assert np.allclose(np.abs(cluster_field(CFG, HalfScreenId(2, 1), u, v)), np.abs(cluster_field(CFG, s1p, x, y)))


def test_residual_analytic_examples():
    s1p = HalfScreenId(1, 1)
    mid = 0.5 * (CFG.cutoff.R1 + CFG.cutoff.R2)
    expect = 2j * CFG.p * (1.875 / CFG.cutoff.width) * np.exp(1j * CFG.p * mid) * PHI0
    assert residual_field_analytic(CFG, s1p, 0.0, mid) == pytest.approx(expect, rel=1e-12)
    for y in (5.0, 14.9, 30.1, 45.0):
        assert residual_field_analytic(CFG, s1p, 0.0, y) == 0
    assert residual_field_analytic(CFG, s1p, 0.0, -mid) == 0
    # incident residual: same formula with p -> -p on y1 < 0
    q = residual_field_analytic(CFG, INCIDENT, 0.0, -mid)
    assert q == pytest.approx(-2j * CFG.p * (1.875 / CFG.cutoff.width) * np.exp(-1j * CFG.p * mid) * PHI0)


def test_residual_support_in_strip():
    d = strip_halfwidth(CFG)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-40, 40, size=(2, 20000))
    for s in ALL_SCREENS:
        q = np.abs(residual_field_analytic(CFG, s, *pts))
        outside = ~strip_indicator(StripSpec(s, CFG.cutoff.R1, CFG.cutoff.R2, d), *pts)
        peak = 2 * CFG.p * 1.875 / CFG.cutoff.width + 5.8 / CFG.cutoff.width ** 2
        assert q[outside].max() <= peak / CFG.R + 1e-15


# -- configuration ------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(E=0.0), dict(E=-1.0), dict(E=0.5, R2=50.0), dict(E=0.5, h=1.0),
                                dict(E=0.5, R1=8.0, R2=20.0), dict(E=0.5, channel="bogus")])
def test_config_validation(kw):
    with pytest.raises(InvalidConfig):
        make_config(**kw)


def test_config_beta_matches_closed_form():
    assert CFG.alpha == pytest.approx(10 / 7 / 15)
    assert CFG.beta == pytest.approx(-1 / (-1j * CFG.p + CFG.alpha))
    assert CFG.p ** 2 == pytest.approx(CFG.E - CFG.bound.epsilon)


# -- discrete residuals -----------------------------------------------------

def test_lattice_residual_vanishes_where_cutoff_is_flat():
    res = result(0.5)
    opr, ws = res.opr, res.waves
    for s in (HalfScreenId(1, 1), HalfScreenId(3, -1)):
        raw = -(opr.interior @ ws.psi[s].values)
        xj, yj = pair_frame_coords(*res.domain.nodes.T, s.j)
        r = np.hypot(*res.domain.nodes.T)
        flat = (s.tau * yj > CFG.cutoff.R2 + 2) & (r < CFG.R - 2)
        assert np.abs(raw[flat]).max() < 1e-12
        inner_flat = (s.tau * yj < CFG.cutoff.R1 - 2)
        assert np.abs(raw[inner_flat]).max() < 1e-12


def test_discrete_residual_converges_to_analytic():
    errs = []
    hs = [0.8, 0.8 / math.sqrt(2), 0.4]
    for h in hs:
        cfg = make_config(0.5, R=20.0, R1=9.0, R2=15.0, h=h, channel="analytic")
        dom = build_disk_domain(cfg.R, cfg.h)
        opr = assemble(dom, cfg.E, cfg.potential)
        s = HalfScreenId(1, 1)
        Qd = residual_field_discrete(cfg, opr, s)
        Qa = Field(residual_field_analytic(cfg, s, *dom.nodes.T), dom)
        errs.append((Qd - Qa).norm() / Qa.norm())
    rates = [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(2)]
    assert errs[-1] < 0.05
    assert min(rates) > 1.5


def test_residual_equivariance_on_lattice():
    res = result(0.5)
    nodes = res.domain.nodes
    tree = cKDTree(nodes)
    Q = res.waves.Q
    base = Q[HalfScreenId(1, 1)].values
    idx = np.flatnonzero(np.abs(base) > 0)
    for j in (2, 3):
        img = np.column_stack(frame_to_computational(nodes[idx, 0], nodes[idx, 1], j))
        dist, k = tree.query(img)
        assert dist.max() < 1e-9
        assert np.abs(Q[HalfScreenId(j, 1)].values[k] - base[idx]).max() < 1e-10
    # y-reflection maps l_1^+ onto l_1^-
    dist, k = tree.query(nodes[idx] * [1, -1])
    assert dist.max() < 1e-9
    assert np.abs(Q[HalfScreenId(1, -1)].values[k] - base[idx]).max() < 1e-10


def test_source_Qb_support_and_degenerate_coupling():
    res = result(0.5)
    ws, dom = res.waves, res.domain
    s1m = HalfScreenId(1, -1)
    xj, yj = pair_frame_coords(*dom.nodes.T, 1)
    outside = ~((yj < -CFG.cutoff.R1 + CFG.h) & (yj > -CFG.cutoff.R2 - CFG.h))
    assert np.abs(res.Qb.values[outside]).max() == 0
    # zero coupling reduces Q_b to the incident residual
    qb = source_Qb(CFG, ws.Q_in, ws.Q[s1m], Field.zeros(dom))
    assert np.array_equal(qb.values, ws.Q_in.values)


def test_source_Qb_independent_of_R():
    norms = []
    for R in (40.0, 50.0):
        res = result(0.5, R=R)
        norms.append(res.Qb.norm())
    assert norms[0] == pytest.approx(norms[1], rel=1e-10)


def test_discrete_denominator_tends_to_closed_form():
    dev = []
    for h in (0.8, 0.4):
        cfg = make_config(0.5, R=20.0, R1=9.0, R2=15.0, h=h)
        dom = build_disk_domain(cfg.R, cfg.h)
        opr = assemble(dom, cfg.E, cfg.potential)
        ws = build_waves(cfg, opr)
        den = ws.denominator(HalfScreenId(1, 1))
        dev.append(abs(den - (-1j * cfg.p + cfg.alpha)))
    assert dev[1] < dev[0] / 3


def test_channel_momentum_converges_quadratically():
    exact = CFG.p
    err = [abs(lattice_channel(0.5, CFG.potential, h * 3 ** -0.25).p - exact) for h in (0.6, 0.3)]
    assert 3.3 < err[0] / err[1] < 4.7


def test_lattice_profile_normalised():
    mode = lattice_channel(0.5, CFG.potential, 0.3)
    x = np.linspace(-30, 30, 200001)
    assert np.trapezoid(mode.profile(x) ** 2, x) == pytest.approx(1.0, rel=2e-2)
    assert analytic_channel(0.5, CFG.bound).p == CFG.p


# -- one-dimensional reduction -------------------------------------------------

def _square_well_tr(k, depth, b):
    q = math.sqrt(k * k + depth)
    den = math.cos(2 * q * b) - 1j * (k * k + q * q) / (2 * k * q) * math.sin(2 * q * b)
    t = np.exp(-2j * k * b) / den
    r = 1j * (q * q - k * k) / (2 * k * q) * math.sin(2 * q * b) * t
    return t, r


def _one_dimensional(k, depth, b, cut, denominator, L=45.0, delta=0.01):
    """The cut-off ansatz with the separable absorber for ``-u'' + w u = k^2 u``.

    Loads and products follow the two-dimensional code: ``S`` is the weak-form
    matrix (``delta`` times the finite-difference operator), residual loads are
    ``q = -S psi~`` and ``<Q|f> = q^H f``.
    """
    n = int(round(L / delta))
    y = delta * np.arange(-n, n + 1)
    kh = math.acos(1 - 0.5 * (k * delta) ** 2) / delta  # discrete dispersion
    # half weight on a grid point that sits exactly on the well edge
    w = -depth * np.where(np.abs(y) < b - 1e-12, 1.0, np.where(np.abs(np.abs(y) - b) < 1e-12, 0.5, 0.0))
    main = (2 / delta ** 2 + w - k * k).astype(complex)
    main[[0, -1]] -= np.exp(1j * kh * delta) / delta ** 2
    off = -np.ones(len(y) - 1) / delta ** 2
    S = (delta * sp.diags([off, main, off], [-1, 0, 1])).tocsc()
    z = cutoff_eval(cut, np.abs(y))[0]
    out_p = np.where(y > 0, z * np.exp(1j * kh * np.abs(y)), 0)
    out_m = np.where(y < 0, z * np.exp(1j * kh * np.abs(y)), 0)
    inc = np.where(y < 0, z * np.exp(1j * kh * y), 0)
    # residual loads live on the cut-off strips only (as in two dimensions);
    # the boundary rows of an incoming wave are not part of Q
    strip = (np.abs(y) > cut.R1 - delta) & (np.abs(y) < cut.R2 + delta)
    q_p, q_m, q_in = (np.where(strip, -(S @ u), 0) for u in (out_p, out_m, inc))
    if denominator == "discrete":
        den = -np.conj(np.vdot(q_p, out_p))
    else:
        den = -1j * k + cutoff_alpha(cut)
    beta = -1 / den
    qb = q_in + q_m * np.vdot(q_m, inc) / den
    # (S + beta sum |q><q|) phi = qb by Woodbury
    lu = splu(S)
    r0 = [lu.solve(v) for v in (qb, q_p, q_m)]
    G = np.array([[np.vdot(qi, rj) for rj in r0[1:]] for qi in (q_p, q_m)])
    g = np.array([np.vdot(qi, r0[0]) for qi in (q_p, q_m)])
    c = np.linalg.solve(np.eye(2) + beta * G, g)
    phi = r0[0] - beta * (c[0] * r0[1] + c[1] * r0[2])
    a_p = np.vdot(q_p, phi) / den
    a_m = (np.vdot(q_m, phi) + np.vdot(q_m, inc)) / den
    return a_p, a_m, phi, y


@pytest.mark.parametrize("denominator", ["discrete", "analytic"])
@pytest.mark.parametrize("k,depth,b", [(0.9766, 0.6, 1.3), (0.6, 3.0, 0.8)])
def test_one_dimensional_reduction_reproduces_t_and_r(denominator, k, depth, b):
    tol = 1e-4
    t, r = _square_well_tr(k, depth, b)
    a_p, a_m, phi, y = _one_dimensional(k, depth, b, CutoffSpec(8.0, 20.0), denominator)
    assert abs(a_p - t) < tol and abs(a_m - r) < tol
    assert abs(abs(a_p) ** 2 + abs(a_m) ** 2 - 1) < 2 * tol
    # the remainder is localised: nothing reaches the ends
    assert np.abs(phi[np.abs(y) > 21]).max() < 10 * tol
