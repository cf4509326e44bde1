"""Tests for closed-form kernel masses and the quadrature oracle."""

import math

import pytest

from nugamma.numeasure import (
    Enclosure,
    GammaParam,
    PlaneBox,
    as_gamma,
    curved_indicator,
    kernel_mass,
    nu_curved,
    nu_quadrature_oracle,
    nu_slab,
    nu_triangle,
    triangle_indicator,
)


def test_gamma_param_validation():
    assert as_gamma(0.5) == 0.5
    assert as_gamma(GammaParam(2.0)) == 2.0
    with pytest.raises(ValueError):
        as_gamma(0.0)
    with pytest.raises(ValueError):
        as_gamma(-1.0)
    with pytest.raises(ValueError):
        as_gamma(math.nan)


def test_plane_box_validation():
    PlaneBox((0.0, 1.0), (0.0, 2.0))
    with pytest.raises(ValueError):
        PlaneBox((1.0, 0.0), (0.0, 1.0))
    with pytest.raises(ValueError):
        PlaneBox((0.0, 1.0), (-0.1, 1.0))
    with pytest.raises(ValueError):
        PlaneBox((0.0, 1.0), (1.0, 1.0))


def test_enclosure_helpers():
    e = Enclosure(1.0, 3.0)
    assert e.width == 2.0
    assert e.mid == 2.0
    assert e.contains(1.0) and e.contains(3.0)
    assert not e.contains(3.1)
    assert e.contains(3.1, slack=0.2)
    assert e.overlaps(Enclosure(2.9, 4.0))
    assert not e.overlaps(Enclosure(3.5, 4.0))
    s = e.scaled(2.0)
    assert (s.lo, s.hi) == (2.0, 6.0)
    with pytest.raises(ValueError):
        e.scaled(-2.0)
    with pytest.raises(ValueError):
        Enclosure(2.0, 1.0)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def test_nu_triangle_frozen():
    assert abs(nu_triangle(1.0, 1.0) - 0.5) < 1e-15
    assert abs(nu_triangle(2.0, 0.5) - 2.0**1.5 / 1.5) < 1e-14
    assert nu_triangle(0.0, 1.0) == 0.0


def test_nu_curved_frozen():
    assert abs(nu_curved(1.0, 1.0) - 1.0 / 6.0) < 1e-15
    assert abs(nu_curved(2.0, 1.0) - 2.0 / 3.0) < 1e-14


def test_nu_slab_frozen():
    assert abs(nu_slab((0.0, 1.0), (1.0, 2.0), 1.0) - 1.0) < 1e-15
    assert abs(nu_slab((0.0, 0.5), (1.0, 4.0), 0.5) - 1.0) < 1e-14


def test_nu_slab_additive_in_h():
    for g in (0.25, 1.0, 3.0):
        whole = nu_slab((0.2, 1.7), (0.5, 4.0), g)
        split = nu_slab((0.2, 1.7), (0.5, 1.3), g) + nu_slab((0.2, 1.7), (1.3, 4.0), g)
        assert math.isclose(whole, split, rel_tol=1e-14)


def test_nu_triangle_scaling_law():
    # The triangle mass is homogeneous of degree 1 + gamma in its width.
    for g in (0.25, 1.0, 3.0):
        for d in (0.3, 1.0, 2.5):
            lhs = nu_triangle(2.0 * d, g)
            rhs = 2.0 ** (1.0 + g) * nu_triangle(d, g)
            assert math.isclose(lhs, rhs, rel_tol=1e-13)


def test_kernel_mass_matches_slab():
    box = PlaneBox((0.0, 2.0), (0.5, 1.5))
    for g in (0.5, 1.0, 2.0):
        assert math.isclose(
            kernel_mass(box, g), nu_slab((0.0, 2.0), (0.5, 1.5), g), rel_tol=1e-15
        )


# ---------------------------------------------------------------------------
# Quadrature oracle
# ---------------------------------------------------------------------------


def test_oracle_brackets_triangle():
    g = 1.0
    box = PlaneBox((-1.0, 0.0), (0.0, 1.0))
    enc = nu_quadrature_oracle(triangle_indicator(1.0), box, g, n=256)
    val = nu_triangle(1.0, g)
    assert enc.lo <= val <= enc.hi


def test_oracle_brackets_curved():
    g = 0.5
    r = 1.0
    box = PlaneBox((-r, 0.0), (0.0, 2.0 * r))
    enc = nu_quadrature_oracle(curved_indicator(r, g), box, g, n=256)
    val = nu_curved(r, g)
    assert enc.lo <= val <= enc.hi


def test_oracle_width_shrinks_with_resolution():
    g = 1.0
    box = PlaneBox((-1.0, 0.0), (0.0, 1.0))
    coarse = nu_quadrature_oracle(triangle_indicator(1.0), box, g, n=128)
    fine = nu_quadrature_oracle(triangle_indicator(1.0), box, g, n=512)
    assert fine.width < coarse.width
    assert fine.lo >= coarse.lo - 1e-15
    assert fine.hi <= coarse.hi + 1e-15


def test_oracle_agreement_grid():
    """Triangle and shoulder masses against the oracle on a 3 x 3 grid."""
    slack = 1e-8
    for g in (0.25, 1.0, 3.0):
        for p in (0.5, 1.0, 2.0):
            tri = nu_triangle(p, g)
            box = PlaneBox((-p, 0.0), (0.0, p))
            enc = nu_quadrature_oracle(triangle_indicator(p), box, g, n=512)
            assert enc.contains(tri, slack=slack * max(1.0, abs(tri)))

            cur = nu_curved(p, g)
            box = PlaneBox((-p, 0.0), (0.0, 2.0 * p))
            enc = nu_quadrature_oracle(curved_indicator(p, g), box, g, n=512)
            assert enc.contains(cur, slack=slack * max(1.0, abs(cur)))
