"""Brute-force 1-D fit enumeration on small hand-checkable inputs."""

from fractions import Fraction

import pytest

from ernn.gadgets import AtLeast, Exact
from ernn.oracle import evaluate_profile, fit_cpwl_1d_oracle

F = Fraction


def _exact(v):
    return (Exact(F(v)), Exact(F(v)))


def test_rejects_bad_arguments():
    pts = [(F(0), _exact(0)), (F(1), _exact(1))]
    with pytest.raises(ValueError):
        fit_cpwl_1d_oracle(pts, breakpoints=0, grid_denominator=1)
    with pytest.raises(ValueError):
        fit_cpwl_1d_oracle(pts, breakpoints=1, grid_denominator=0)
    with pytest.raises(ValueError):
        fit_cpwl_1d_oracle(pts + [(F(0), _exact(2))], 1, 1)


def test_single_kink_vee():
    # |t - 2| sampled at 0, 1, 3, 4; one breakpoint must land at 2
    pts = [(F(t), _exact(abs(t - 2))) for t in (0, 1, 3, 4)]
    res = fit_cpwl_1d_oracle(pts, breakpoints=1, grid_denominator=1)
    assert len(res) == 1
    (p,) = res
    assert p.breakpoints == (F(2),)
    assert p.slopes[0] == (F(-1), F(1))
    assert evaluate_profile(p, F(2), 1) == 0
    assert evaluate_profile(p, F(10), 1) == 8


def test_straight_line_data_admits_sliding_breakpoint():
    # collinear labels: any grid breakpoint works, with equal slopes
    pts = [(F(t), _exact(t)) for t in (0, 1, 2)]
    res = fit_cpwl_1d_oracle(pts, breakpoints=1, grid_denominator=2)
    assert len(res) == 5  # 0, 1/2, 1, 3/2, 2
    assert [p.breakpoints[0] for p in res] == [F(0), F(1, 2), F(1), F(3, 2), F(2)]
    for p in res:
        for t, labels in pts:
            assert evaluate_profile(p, t, 1) == labels[0].value
    # interior breakpoints leave no freedom: slope 1 on both sides
    for p in res[1:4]:
        assert p.slopes[0] == (F(1), F(1))


def test_breakpoint_off_grid_means_no_fit():
    # kink at 3/2 cannot be expressed on the integer grid
    pts = [(F(t), _exact(abs(2 * t - 3))) for t in (0, 1, 2, 3)]
    assert fit_cpwl_1d_oracle(pts, breakpoints=1, grid_denominator=1) == ()
    res = fit_cpwl_1d_oracle(pts, breakpoints=1, grid_denominator=2)
    assert len(res) == 1
    assert res[0].breakpoints == (F(3, 2),)


def test_dimensions_fit_independently():
    # dim 1 is a vee at 2, dim 2 a plain line; both must be satisfied
    pts = [
        (F(t), (Exact(F(abs(t - 2))), Exact(F(t)))) for t in (0, 1, 3, 4)
    ]
    res = fit_cpwl_1d_oracle(pts, breakpoints=1, grid_denominator=1)
    assert len(res) == 1
    assert res[0].slopes[1] == (F(1), F(1))


def test_at_least_labels_filter_profiles():
    # three exact points force a horizontal line through 0; the weak point
    # demands at least 1 there, so nothing fits
    pts = [
        (F(0), _exact(0)),
        (F(2), _exact(0)),
        (F(4), _exact(0)),
        (F(1), (AtLeast(F(1)), AtLeast(F(0)))),
    ]
    assert fit_cpwl_1d_oracle(pts, breakpoints=1, grid_denominator=1) == ()
    # with a reachable bound the flat fits reappear
    pts[3] = (F(1), (AtLeast(F(0)), AtLeast(F(0))))
    assert fit_cpwl_1d_oracle(pts, breakpoints=1, grid_denominator=1) != ()


def test_two_breakpoints_trapezoid():
    # ramp 0->2 on [1,3], plateau afterwards; sampled off the bends
    def shape(t):
        return max(F(0), min(F(2), t - 1))

    pts = [(F(t), _exact(shape(F(t)))) for t in (0, 2, 4, 5)]
    res = fit_cpwl_1d_oracle(pts, breakpoints=2, grid_denominator=1)
    assert (F(1), F(3)) in [p.breakpoints for p in res]
    for p in res:
        for t in (0, 2, 4, 5):
            assert evaluate_profile(p, F(t), 1) == shape(F(t))
            assert evaluate_profile(p, F(t), 2) == shape(F(t))


def test_profiles_come_back_sorted_and_verified():
    pts = [(F(t), _exact(t * t % 3)) for t in (0, 1, 2, 3)]
    res = fit_cpwl_1d_oracle(pts, breakpoints=2, grid_denominator=2)
    keys = [p.breakpoints for p in res]
    assert keys == sorted(keys)
    for p in res:
        for t, labels in pts:
            assert evaluate_profile(p, t, 1) == labels[0].value
