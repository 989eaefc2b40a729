import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from threebody.geometry import (ALL_SCREENS, CutoffSpec, HalfScreenId, StripSpec, cutoff_alpha, cutoff_eval,
                                frame_to_computational, pair_frame_coords, smoothstep, strip_indicator,
                                strips_disjoint)
from threebody.pair_model import PotentialSpec, solve_square_well, tail_halfwidth

CUT = CutoffSpec(15.0, 30.0)


def test_alpha_closed_form_and_quadrature():
    assert cutoff_alpha(CUT) == pytest.approx(0.0952381, abs=1e-7)
    assert cutoff_alpha(CUT, "quadrature") == pytest.approx(cutoff_alpha(CUT), abs=1e-12)
    assert cutoff_alpha(CutoffSpec(1.0, 1e9)) < 1e-8


def test_cutoff_profile_edges_and_monotone():
    z, z1, z2 = cutoff_eval(CUT, np.array([0.0, 15.0, 30.0, 40.0]))
    assert list(z) == [0.0, 0.0, 1.0, 1.0]
    assert np.all(z1[[0, 1, 2, 3]] == 0) and np.all(z2 == 0)
    X = np.linspace(0, 45, 10001)
    assert np.all(cutoff_eval(CUT, X)[1] >= 0)
    for edge in (15.0, 30.0):
        for dlt in (1e-6, -1e-6):
            assert abs(cutoff_eval(CUT, edge + dlt)[0] - cutoff_eval(CUT, edge)[0]) < 1e-13


def test_smoothstep_derivatives_by_finite_differences():
    t = np.linspace(0.05, 0.95, 19)
    d = 1e-6
    s, ds, d2s = smoothstep(t)
    assert np.allclose((smoothstep(t + d)[0] - smoothstep(t - d)[0]) / (2 * d), ds, atol=1e-8)
    assert np.allclose((smoothstep(t + d)[1] - smoothstep(t - d)[1]) / (2 * d), d2s, atol=1e-6)


def test_half_screen_labels_and_angles():
    assert [s.index for s in ALL_SCREENS] == [1, 2, 3, 4, 5, 6]
    assert [s.key for s in ALL_SCREENS] == ["a_1_minus", "a_2_minus", "a_3_minus", "a_1_plus", "a_2_plus", "a_3_plus"]
    deg = [round(math.degrees(s.angle)) for s in ALL_SCREENS]
    assert deg == [270, 150, 30, 90, 330, 210]
    with pytest.raises(ValueError):
        HalfScreenId(4, 1)


def test_frame_two_rows():
    x2, y2 = pair_frame_coords(1.0, 0.0, 2)
    assert (x2, y2) == pytest.approx((-0.5, math.sqrt(3) / 2))
    x2, y2 = pair_frame_coords(0.0, 1.0, 2)
    assert (x2, y2) == pytest.approx((-math.sqrt(3) / 2, -0.5))


def test_frame_composition():
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=(2, 200)) * 20
    u, v = frame_to_computational(*pair_frame_coords(x, y, 2), 3)
    ang = 2 * math.pi / 3 - 4 * math.pi / 3
    c, s = math.cos(ang), math.sin(ang)
    assert np.allclose(u, c * x - s * y, atol=1e-12) and np.allclose(v, s * x + c * y, atol=1e-12)


@given(st.floats(-100, 100), st.floats(-100, 100), st.sampled_from([1, 2, 3]))
def test_hyperradius_invariant(x, y, j):
    xj, yj = pair_frame_coords(x, y, j)
    assert math.hypot(xj, yj) == pytest.approx(math.hypot(x, y), abs=1e-9)
    back = frame_to_computational(xj, yj, j)
    assert back[0] == pytest.approx(x, abs=1e-9) and back[1] == pytest.approx(y, abs=1e-9)


def test_strip_indicator_examples():
    mid = 22.5
    s1m = StripSpec(HalfScreenId(1, -1), 15, 30, 2.0)
    assert strip_indicator(s1m, 0.0, -mid) is True
    assert strip_indicator(s1m, 0.0, mid) is False
    s2p = StripSpec(HalfScreenId(2, 1), 15, 30, 2.0)
    assert strip_indicator(s2p, *frame_to_computational(0.0, mid, 2)) is True


def test_strips_disjoint_by_rejection_sampling():
    bs = solve_square_well(PotentialSpec(1.0, 1.0))
    d = tail_halfwidth(bs, 1 / 50)
    assert strips_disjoint(15.0, d)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-32, 32, size=(2, 100_000))
    count = sum(strip_indicator(StripSpec(s, 15, 30, d), *pts).astype(int) for s in ALL_SCREENS)
    assert count.max() == 1
    # too close to the origin: neighbours overlap and the predicate says so
    assert not strips_disjoint(2 * d - 0.1, d)
    bad = sum(strip_indicator(StripSpec(s, 2 * d - 3, 30, d), *pts).astype(int) for s in ALL_SCREENS)
    assert bad.max() == 2
