"""Placement planning: stripes, constraint points, verticals, sidecar JSON."""

from fractions import Fraction

import pytest

from ernn.formula import parse_formula
from ernn.gadgets import AtLeast, Exact, LowerBound, Variable
from ernn.geometry import signed_value
from ernn.layout import (
    DEFAULT_CONFIG,
    AdditionCopyRole,
    CanonicalRole,
    InversionRole,
    LayoutConfig,
    LowerBoundRole,
    PlacementFailure,
    formula_from_layout,
    layout_from_json,
    layout_to_json,
    plan,
    realize,
    validate,
)

F = Fraction


def test_single_variable_layout():
    layout = plan(parse_formula("inv X Y\n"), DEFAULT_CONFIG)
    kinds = [type(pg.role) for pg in layout.placements]
    assert kinds.count(CanonicalRole) == 2
    assert kinds.count(InversionRole) == 1
    assert kinds.count(LowerBoundRole) == 4  # two canonical q's, p_X, p_Y
    assert validate(layout) == ()


def test_addition_layout_counts():
    layout = plan(parse_formula("add X Y Z\n"), DEFAULT_CONFIG)
    kinds = [type(pg.role) for pg in layout.placements]
    assert kinds.count(CanonicalRole) == 3
    assert kinds.count(AdditionCopyRole) == 3
    # one q per variable gadget, canonical and copy alike
    assert kinds.count(LowerBoundRole) == 6
    assert validate(layout) == ()
    # the addition point carries the doubled label
    add_points = [
        cp
        for cp in layout.constraint_points
        if cp.labels == (Exact(F(10)), Exact(F(10)))
    ]
    assert len(add_points) == 1
    assert len(add_points[0].member_of) == 3


def test_all_stripes_disjoint_among_parallels():
    layout = plan(parse_formula("add X Y Z\ninv X W\n"), DEFAULT_CONFIG)
    by_normal = {}
    for pg in layout.placements:
        n = pg.placement.normal
        by_normal.setdefault((n.n1, n.n2), []).append(pg.placement.stripe())
    for stripes in by_normal.values():
        stripes.sort()
        for (lo1, hi1), (lo2, hi2) in zip(stripes, stripes[1:]):
            assert hi1 < lo2


def test_constraint_points_sit_inside_their_members_only():
    layout = plan(parse_formula("add X Y Z\n"), DEFAULT_CONFIG)
    for cp in layout.constraint_points:
        allowed = set(cp.member_of)
        for i, pg in enumerate(layout.placements):
            lo, hi = pg.placement.stripe()
            n = pg.placement.normal
            v = n.n1 * cp.point.x1 + n.n2 * cp.point.x2
            if lo < v < hi:
                assert i in allowed, f"point {cp.point} intrudes on placement {i}"


def test_weak_points_get_centered_notch_gadgets():
    layout = plan(parse_formula("inv X Y\n"), DEFAULT_CONFIG)
    weak = [cp for cp in layout.constraint_points if cp.weak_dims]
    assert weak
    for cp in weak:
        lb = layout.placements[cp.lower_bound_gadget]
        assert isinstance(lb.placement.template.kind, LowerBound)
        assert lb.placement.template.kind.active_dims == cp.weak_dims
        mid = lb.placement.line_at(F(4))
        assert signed_value(mid, cp.point) == 0


def test_realize_makes_three_points_per_data_line():
    layout = plan(parse_formula("inv X Y\n"), DEFAULT_CONFIG)
    realization = realize(layout)
    data_lines = sum(
        len(pg.placement.template.data_entries) for pg in layout.placements
    )
    assert len(realization.points) == 3 * data_lines + len(layout.constraint_points)
    v1, v2, v3 = realization.verticals
    assert v2 - v1 == 1 and v3 - v2 == 1
    # realized weak labels drop by exactly 2
    realized = dict()
    for p, labels in realization.points:
        realized[(p.x1, p.x2)] = labels
    for cp in layout.constraint_points:
        want = tuple(
            lbl.value - 2 if isinstance(lbl, AtLeast) else lbl.value
            for lbl in cp.labels
        )
        assert realized[(cp.point.x1, cp.point.x2)] == want


def test_verticals_clear_all_stripe_corners():
    layout = plan(parse_formula("add X Y Z\ninv X W\n"), DEFAULT_CONFIG)
    corners = []
    pls = [pg.placement for pg in layout.placements]
    from ernn.geometry import PARALLEL, intersect

    for i, a in enumerate(pls):
        for b in pls[i + 1 :]:
            for la in (a.line_at(F(0)), a.line_at(a.template.width)):
                for lb in (b.line_at(F(0)), b.line_at(b.template.width)):
                    p = intersect(la, lb)
                    if p is not PARALLEL:
                        corners.append(p.x1)
    assert layout.verticals[0] > max(corners)


def test_repeated_variable_inversion_cannot_be_placed():
    # inv X X pins both reading points to the same canonical line, too
    # close together; the fixed geometry has no room for that
    with pytest.raises(PlacementFailure):
        plan(parse_formula("inv X X\n"), DEFAULT_CONFIG)


def test_config_validation():
    with pytest.raises(ValueError):
        LayoutConfig(spacing=F(100), vertical_margin=F(50))
    with pytest.raises(ValueError):
        LayoutConfig(spacing=F(1000), vertical_margin=F(0))


def test_layout_json_round_trip():
    layout = plan(parse_formula("add X Y Z\ninv X W\n"), DEFAULT_CONFIG)
    s = layout_to_json(layout)
    back = layout_from_json(s)
    assert back == layout
    assert layout_to_json(back) == s


def test_formula_recoverable_from_roles():
    formula = parse_formula("add X Y Z\nadd Y Z W\ninv X W\n")
    layout = plan(formula, DEFAULT_CONFIG)
    assert formula_from_layout(layout) == formula
    # survives the sidecar too
    assert formula_from_layout(layout_from_json(layout_to_json(layout))) == formula


def test_validate_flags_tampered_layout():
    import dataclasses

    layout = plan(parse_formula("inv X Y\n"), DEFAULT_CONFIG)
    bad = dataclasses.replace(
        layout,
        verticals=(
            layout.verticals[0],
            layout.verticals[1] + F(1, 2),
            layout.verticals[2],
        ),
    )
    assert validate(bad) != ()
