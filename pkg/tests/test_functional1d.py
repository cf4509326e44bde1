"""Tests for the certified branch-and-bound functional evaluation."""

import math

import numpy as np
import pytest

from nugamma.bvmodel import (
    BVFunction1D,
    JumpPiece,
    affine_ramp,
    cantor_staircase,
    polynomial_piece,
    sine_ramp,
    single_jump,
    smoothstep_piece,
)
from nugamma.functional1d import (
    BoxVerdict,
    ExceedanceQuery,
    ZeroVariationError,
    classify_box,
    closed_form_jump_F,
    f_enclosures_batch,
    F_value,
    measure_exceedance,
    pair_increment_bounds,
    truncation_radius,
)
from nugamma.numeasure import PlaneBox


def test_truncation_radius_frozen():
    assert truncation_radius(1.0, 100.0, 1.0) == pytest.approx(0.1, rel=1e-12)
    assert truncation_radius(1.0, 1.0, 0.7) == 1.0
    assert truncation_radius(1.0, 8.0, 3.0) == pytest.approx(0.125**0.25, rel=1e-12)
    # Any object exposing total_variation works too.
    assert truncation_radius(single_jump(1.0), 100.0, 1.0) == pytest.approx(0.1)


def test_truncation_radius_zero_variation():
    with pytest.raises(ZeroVariationError):
        truncation_radius(0.0, 10.0, 1.0)


def test_closed_form_jump_frozen():
    assert closed_form_jump_F(1.0, 1.0) == 1.0
    assert abs(closed_form_jump_F(0.5, 0.5) - 2.0 / 3.0) < 1e-15
    assert closed_form_jump_F(-1.0, 1.0) == 1.0


def test_query_validation():
    ExceedanceQuery(gamma=1.0, lam=10.0)
    with pytest.raises(ValueError):
        ExceedanceQuery(gamma=0.0, lam=10.0)
    with pytest.raises(ValueError):
        ExceedanceQuery(gamma=1.0, lam=0.0)
    with pytest.raises(ValueError):
        ExceedanceQuery(gamma=1.0, lam=10.0, tol=0.0)


# ---------------------------------------------------------------------------
# Enclosures against closed forms
# ---------------------------------------------------------------------------


def test_jump_enclosures_contain_closed_form():
    for height in (1.0, -0.5, 2.0):
        for g in (0.5, 1.0, 2.0):
            for lam in (1.0, 100.0):
                u = single_jump(height)
                enc = F_value(u, ExceedanceQuery(gamma=g, lam=lam))
                exact = closed_form_jump_F(height, g)
                assert enc.lo <= exact <= enc.hi
                assert enc.tol_met


def test_constant_function_evaluates_to_zero():
    u = BVFunction1D(pieces=())
    enc = f_enclosures_batch([u], 1.0, 10.0)[0]
    assert enc.lo == 0.0 and enc.hi == 0.0 and enc.tol_met


def test_ramp_exceedance_measure_small_lambda_band():
    # For a unit-slope ramp on [0,1] at gamma=1 the exceedance region is
    # a sliver of area about slope/lam, with curvature corrections well
    # under 5% by lam = 1e3.
    u = BVFunction1D(pieces=(affine_ramp(0.0, 1.0, 1.0),))
    lam = 1e3
    enc = measure_exceedance(u, ExceedanceQuery(gamma=1.0, lam=lam, tol=1e-5))
    assert enc.mid == pytest.approx(1.0 / lam, rel=0.05)


def test_batch_order_and_determinism():
    funcs = [single_jump(1.0), single_jump(2.0), BVFunction1D(pieces=())]
    out1 = f_enclosures_batch(funcs, 1.0, 10.0)
    out2 = f_enclosures_batch(funcs, 1.0, 10.0)
    assert [e.lo for e in out1] == [e.lo for e in out2]
    assert [e.hi for e in out1] == [e.hi for e in out2]
    assert out1[2].hi == 0.0
    # Height 2 jump carries more mass than height 1 at the same lambda.
    assert out1[1].lo > out1[0].hi


def test_lambda_monotone_exceedance_measure():
    # The exceedance set shrinks as lambda grows, so the kernel measure
    # cannot rise; certified enclosures may only overlap slightly.
    u = BVFunction1D(
        pieces=(affine_ramp(0.0, 1.0, 2.0), JumpPiece(location=0.5, height=1.0))
    )
    lams = [2.0, 10.0, 50.0, 250.0]
    encs = [
        measure_exceedance(u, ExceedanceQuery(gamma=1.0, lam=lam, tol=1e-4))
        for lam in lams
    ]
    for a, b in zip(encs, encs[1:]):
        assert b.lo <= a.hi + 1e-15


def test_smooth_pieces_tight_at_large_lambda():
    # Regression guard: slope localisation used to stall on these, with
    # runaway splitting and meaningless widths.
    cases = [
        (BVFunction1D(pieces=(smoothstep_piece(0.0, 1.0, 1.0),)), 2.0),
        (BVFunction1D(pieces=(sine_ramp(0.0, 1.0, 1.0),)), 2.0),
        (BVFunction1D(pieces=(polynomial_piece(0.0, 1.0, [0.0, 1.0, -0.5]),)), 1.0),
    ]
    for u, limit in cases:
        enc = f_enclosures_batch([u], 1.0, 1e5, tol=0.01)[0]
        assert enc.tol_met
        assert enc.width <= 0.01
        assert abs(enc.mid - limit) < 0.02


def test_grid_estimate_inside_enclosure():
    # A plain midpoint estimate of the exceedance mass is not certified,
    # but with a fine grid it must land inside a a slightly widened
    # certified enclosure.
    u = BVFunction1D(
        pieces=(affine_ramp(0.0, 1.0, 1.0), JumpPiece(location=2.0, height=0.5))
    )

    def u_np(x):
        return np.clip(x, 0.0, 1.0) + 0.5 * (x >= 2.0)

    g, lam = 1.0, 25.0
    enc = measure_exceedance(u, ExceedanceQuery(gamma=g, lam=lam, tol=1e-5))
    H = truncation_radius(u.total_variation, lam, g)
    xs = np.linspace(-H, 3.0, 2401)
    hs = np.linspace(0.0, H, 2401)
    xm = 0.5 * (xs[:-1] + xs[1:])
    hm = 0.5 * (hs[:-1] + hs[1:])
    X, Hh = np.meshgrid(xm, hm, indexing="ij")
    exceed = np.abs(u_np(X + Hh) - u_np(X)) > lam * Hh ** (1.0 + g)
    cell = np.diff(xs)[:, None] * (Hh ** (g - 1.0)) * np.diff(hs)[None, :]
    est = float((cell * exceed).sum())
    assert enc.lo - 0.05 * enc.hi <= est <= enc.hi * 1.05


# ---------------------------------------------------------------------------
# Box classification
# ---------------------------------------------------------------------------


def test_classify_box_outside():
    u = single_jump(1.0)
    q = ExceedanceQuery(gamma=1.0, lam=1.0)
    box = PlaneBox((-0.5, -0.2), (2.0, 3.0))
    assert classify_box(u, box, q) is BoxVerdict.OUTSIDE


def test_classify_box_inside():
    u = single_jump(1.0)
    q = ExceedanceQuery(gamma=1.0, lam=1.0)
    box = PlaneBox((-0.05, -0.01), (0.1, 0.2))
    assert classify_box(u, box, q) is BoxVerdict.INSIDE


def test_classify_box_mixed():
    u = single_jump(1.0)
    q = ExceedanceQuery(gamma=1.0, lam=1.0)
    # Pairs left of the jump never exceed; straddling ones with small
    # separation do.
    box = PlaneBox((-0.5, -0.01), (0.1, 0.6))
    assert classify_box(u, box, q) is BoxVerdict.MIXED


def test_pair_increment_bounds_bracket_samples():
    u = BVFunction1D(
        pieces=(
            affine_ramp(0.0, 1.0, 1.0),
            JumpPiece(location=0.5, height=-0.25),
            smoothstep_piece(0.2, 0.8, 0.4),
        )
    )
    rng = np.random.default_rng(23)
    for _ in range(50):
        x0, x1 = np.sort(rng.uniform(-0.5, 1.5, size=2))
        h0, h1 = np.sort(rng.uniform(0.01, 1.0, size=2))
        if x1 - x0 < 1e-6 or h1 - h0 < 1e-6:
            continue
        box = PlaneBox((float(x0), float(x1)), (float(h0), float(h1)))
        low, up = pair_increment_bounds(u, box)
        xs = rng.uniform(x0, x1, size=25)
        hs = rng.uniform(h0, h1, size=25)
        for x, h in zip(xs, hs):
            d = abs(u.eval(float(x + h)) - u.eval(float(x)))
            assert low - 1e-12 <= d <= up + 1e-12
