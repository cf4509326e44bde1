"""Certified enclosures for the exceedance functional of 1D BV functions.

For a kernel exponent gamma > 0 and a threshold slope lam > 0, the
functional evaluated here is

    F(u) = 2 * lam * nu(E),
    E = {(x, h) : h > 0, |u(x + h) - u(x)| > lam * h^(1 + gamma)},

where nu integrates h^(gamma - 1) dx dh (see :mod:`nugamma.numeasure`).
The factor 2 accounts for ordered pairs x > y, which contribute the same
mass by symmetry.

The computation is a branch-and-bound over axis-aligned boxes in the
(x, h) plane.  For each box we certify an upper and a lower bound on the
pair increment |u(x + h) - u(x)|; comparing these against the threshold
at the box's h-extremes classifies the box as fully inside E, fully
outside, or mixed.  Mixed boxes are bisected, the split point on the
h axis chosen so that both children carry equal kernel mass.  Inside
mass accumulates into the enclosure's lower end; unresolved mass widens
the upper end.  All boxes of a run live in flat numpy arrays, so many
sections (as used by the N-dimensional sectioning estimator) refine in
the same vectorised wave.

All bounds here err on the safe side: upper pair bounds only ever
over-estimate and lower pair bounds under-estimate, so the returned
interval is a true enclosure regardless of whether the width target was
reached (the ``tol_met`` flag records that separately).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .bvmodel import (
    BVFunction1D,
    CantorPiece,
    JumpPiece,
    PolynomialProfile,
    ShapedRamp,
    SmoothPiece,
    cantor_eval_array,
)
from .numeasure import Enclosure, PlaneBox, as_gamma

__all__ = [
    "ZeroVariationError",
    "ExceedanceQuery",
    "BoxVerdict",
    "truncation_radius",
    "classify_box",
    "pair_increment_bounds",
    "measure_exceedance",
    "F_value",
    "f_enclosures_batch",
    "closed_form_jump_F",
    "DEFAULT_TOL_SCALE",
]

#: Relative scale of the default enclosure width target; the absolute
#: default is DEFAULT_TOL_SCALE * max(1, jump-only functional value).
DEFAULT_TOL_SCALE = 1e-4

#: Boxes classified per vectorised slice; bounds peak memory.
_WAVE_CHUNK = 1 << 18

#: Hard cap on simultaneously alive boxes.  Beyond it the smallest-mass
#: boxes are retired into the enclosure's slack instead of splitting.
_WAVE_CAP = 3_000_000

#: Outward/inward safety nudge, in normalized-coordinate units, applied
#: before staircase evaluations so float rounding cannot flip a certified
#: bound across a point of increase.
_TNUDGE = 5e-15

_LOG3 = math.log(3.0)


class ZeroVariationError(ValueError):
    """Raised when a computation needs a nonconstant function."""


class BoxVerdict(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    MIXED = "mixed"


@dataclass(frozen=True)
class ExceedanceQuery:
    """Parameters of one functional evaluation.

    ``tol`` is the requested enclosure width in functional units (after
    the 2 * lam scaling); None picks a default proportional to the size
    of the function.  ``max_depth`` caps bisection depth per box.
    """

    gamma: float
    lam: float
    tol: float | None = None
    max_depth: int = 40

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_gamma(self.gamma))
        lam = float(self.lam)
        if not (math.isfinite(lam) and lam > 0.0):
            raise ValueError(f"lam must be a finite positive number, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)
        if self.tol is not None:
            t = float(self.tol)
            if not (math.isfinite(t) and t > 0.0):
                raise ValueError(f"tol must be positive when given, got {self.tol!r}")
            object.__setattr__(self, "tol", t)
        if int(self.max_depth) < 1:
            raise ValueError("max_depth must be at least 1")
        object.__setattr__(self, "max_depth", int(self.max_depth))


def truncation_radius(variation, lam: float, gamma) -> float:
    """Pair separation beyond which no pair can exceed the threshold.

    For |u(y) - u(x)| <= V the exceedance condition fails whenever
    h >= (V / lam)^(1 / (1 + gamma)).  Accepts the total variation as a
    number or any object with a ``total_variation`` attribute.
    """
    g = as_gamma(gamma)
    v = getattr(variation, "total_variation", variation)
    v = float(v)
    if not (math.isfinite(v) and v >= 0.0):
        raise ValueError("variation must be finite and nonnegative")
    if v == 0.0:
        raise ZeroVariationError("constant function: no exceedance pairs at any scale")
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValueError("lam must be a finite positive number")
    return (v / lam) ** (1.0 / (1.0 + g))


def closed_form_jump_F(height: float, gamma) -> float:
    """Functional value of a single jump: 2 |height| / (1 + gamma).

    Independent of lam: the exceedance set of a jump is the triangle of
    pairs straddling it below the cutoff separation, whose weighted mass
    scales exactly like 1 / lam.
    """
    g = as_gamma(gamma)
    return 2.0 * abs(float(height)) / (1.0 + g)


# ---------------------------------------------------------------------------
# Batched piece tables
# ---------------------------------------------------------------------------

_SHAPE_CODE = {"affine": 1, "smoothstep": 2, "sine": 3}


def _shape_unit(code: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = t.copy()
    m = code == 2
    if m.any():
        ts = t[m]
        out[m] = ts * ts * (3.0 - 2.0 * ts)
    m = code == 3
    if m.any():
        out[m] = 0.5 * (1.0 - np.cos(np.pi * t[m]))
    return out


def _shape_deriv(code: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.ones_like(t)
    m = code == 2
    if m.any():
        ts = t[m]
        out[m] = 6.0 * ts * (1.0 - ts)
    m = code == 3
    if m.any():
        out[m] = 0.5 * np.pi * np.sin(np.pi * t[m])
    return out


def _polyval_grid(coef: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate polynomials with trailing-axis coefficients on a grid.

    ``coef`` has shape (..., D) and ``t`` shape (..., M) sharing the
    leading axes; the result has the shape of ``t``.
    """
    r = np.zeros_like(t)
    for k in range(coef.shape[-1] - 1, -1, -1):
        r = r * t + coef[..., k, None]
    return r


class _Batch:
    """Padded struct-of-arrays view of several functions' pieces.

    Sections with different piece counts are padded with inert slots
    (zero rise, zero height, far-away features) so a whole wave of boxes
    indexes the tables with plain fancy indexing.
    """

    def __init__(self, funcs: Sequence[BVFunction1D]):
        S = len(funcs)
        self.S = S
        jumps: list[list[JumpPiece]] = []
        shaped: list[list[SmoothPiece]] = []
        cantor: list[list[CantorPiece]] = []
        poly: list[list[SmoothPiece]] = []
        feats: list[list[float]] = []
        tv = np.zeros(S)
        supp_lo = np.zeros(S)
        supp_hi = np.zeros(S)
        for i, u in enumerate(funcs):
            js, sh, ca, po = [], [], [], []
            ft: list[float] = []
            for p in u.pieces:
                if isinstance(p, JumpPiece):
                    js.append(p)
                    ft.append(p.location)
                elif isinstance(p, CantorPiece):
                    ca.append(p)
                    ft.extend(p.support)
                elif isinstance(p.profile, ShapedRamp):
                    sh.append(p)
                    ft.extend(p.support)
                else:
                    po.append(p)
                    a, b = p.support
                    ft.extend(p.support)
                    ft.extend(a + c * (b - a) for c in p.profile.crit)
            jumps.append(js)
            shaped.append(sh)
            cantor.append(ca)
            poly.append(po)
            feats.append(ft)
            tv[i] = u.total_variation
            hull = u.derivative_support()
            if hull is not None:
                supp_lo[i], supp_hi[i] = hull
        self.tv = tv
        self.supp_lo = supp_lo
        self.supp_hi = supp_hi

        self.Kj = max((len(v) for v in jumps), default=0)
        self.jloc = np.full((S, self.Kj), np.inf)
        self.jabs = np.zeros((S, self.Kj))
        self.jsgn = np.zeros((S, self.Kj))
        for i, v in enumerate(jumps):
            for k, p in enumerate(v):
                self.jloc[i, k] = p.location
                self.jabs[i, k] = abs(p.height)
                self.jsgn[i, k] = math.copysign(1.0, p.height)

        self.Ks = max((len(v) for v in shaped), default=0)
        self.sa = np.zeros((S, self.Ks))
        self.sb = np.ones((S, self.Ks))
        self.srise = np.zeros((S, self.Ks))
        self.scode = np.zeros((S, self.Ks), dtype=np.int8)
        # Non-affine ramps have varying slope, so boxes overlapping them
        # benefit from x-refinement (localising the derivative window).
        self.svar = np.zeros((S, self.Ks), dtype=bool)
        for i, v in enumerate(shaped):
            for k, p in enumerate(v):
                self.sa[i, k], self.sb[i, k] = p.support
                self.srise[i, k] = p.profile.rise
                self.scode[i, k] = _SHAPE_CODE[p.profile.shape]
                self.svar[i, k] = p.profile.shape != "affine"

        self.Kc = max((len(v) for v in cantor), default=0)
        self.ca = np.zeros((S, self.Kc))
        self.cb = np.ones((S, self.Kc))
        self.crabs = np.zeros((S, self.Kc))
        self.csgn = np.zeros((S, self.Kc))
        for i, v in enumerate(cantor):
            for k, p in enumerate(v):
                self.ca[i, k], self.cb[i, k] = p.support
                self.crabs[i, k] = abs(p.rise)
                self.csgn[i, k] = p.orientation

        self.Kp = max((len(v) for v in poly), default=0)
        D = 1
        C = 0
        C2 = 0
        for v in poly:
            for p in v:
                D = max(D, len(p.profile.coeffs))
                C = max(C, len(p.profile.crit))
                C2 = max(C2, len(p.profile.dcrit))
        self.pa = np.zeros((S, self.Kp))
        self.pb = np.ones((S, self.Kp))
        self.pcoef = np.zeros((S, self.Kp, D))
        self.pder = np.zeros((S, self.Kp, D))
        self.pcrit = np.full((S, self.Kp, C), np.nan)
        self.pdcrit = np.full((S, self.Kp, C2), np.nan)
        self.pmask = np.zeros((S, self.Kp), dtype=bool)
        self.pvar = np.zeros((S, self.Kp), dtype=bool)
        for i, v in enumerate(poly):
            for k, p in enumerate(v):
                prof = p.profile
                self.pa[i, k], self.pb[i, k] = p.support
                cs = prof.coeffs
                self.pcoef[i, k, : len(cs)] = cs
                if len(cs) > 1:
                    der = np.polynomial.polynomial.polyder(cs)
                    self.pder[i, k, : len(der)] = der
                    self.pvar[i, k] = any(c != 0.0 for c in der[1:])
                self.pcrit[i, k, : len(prof.crit)] = prof.crit
                self.pdcrit[i, k, : len(prof.dcrit)] = prof.dcrit
                self.pmask[i, k] = True

        self.Kf = max((len(v) for v in feats), default=0)
        self.feat = np.full((S, self.Kf), np.inf)
        for i, v in enumerate(feats):
            self.feat[i, : len(v)] = v


# ---------------------------------------------------------------------------
# Certified pair-increment bounds over a wave of boxes
# ---------------------------------------------------------------------------


def _holder_cap(r: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Staircase increment cap over windows of normalized length tau.

    A window of length tau <= 3^-k meets at most two triadic intervals
    of level k, each carrying staircase increment 2^-k, so the increment
    is at most 2 * 2^-k with k = floor(log3(1/tau)), taken a hair small
    to absorb log rounding.
    """
    out = np.where(tau >= 1.0, r, 0.0)
    m = (tau > 0.0) & (tau < 1.0)
    if m.any():
        k = np.floor(-np.log(tau[m]) / _LOG3 - 1e-12)
        k = np.maximum(k, 0.0)
        out[m] = r[m] * np.minimum(2.0 * np.exp2(-k), 1.0)
    return out


def _wave_bounds(B: _Batch, sid, x0, x1, h0, h1):
    """Upper/lower bounds on |u(x+h) - u(x)| over each box, plus two
    flags telling the splitter what x-structure the box's pair span
    holds: point features (jump locations, support ends, interior
    extrema) versus smooth slope variation.

    Upper bound: per piece, the smaller of its oscillation over the span
    [x0, x1 + h1] and a window cap (Lipschitz, or triadic for staircase
    pieces) using that pair separations never exceed h1.  Jumps count
    whenever some pair can straddle them.

    Lower bound: when every moving piece is monotone in one common
    direction on the span, guaranteed per-piece increments add: jumps
    that every pair straddles, piece increments over the core interval
    [x1, x0 + h0] that every pair's window contains, and the minimum
    pair increment at the shortest separation h0, evaluated at the two
    ends of the x range (the minimum lands there when the profile's
    derivative is unimodal or monotone over the window hull).
    Independently, an always-straddled jump of size J gives
    |increment| >= J minus the other pieces' upper contributions.  The
    returned value is the best of these, floored at zero.
    """
    W = x0.size
    span_hi = x1 + h1
    core_lo = x1
    core_hi = x0 + h0
    core_ok = core_hi > core_lo
    win_hi = x1 + h0

    up = np.zeros(W)
    low_mono = np.zeros(W)
    pos = np.zeros(W, dtype=bool)
    neg = np.zeros(W, dtype=bool)
    nonmono = np.zeros(W, dtype=bool)
    xfeat = np.zeros(W, dtype=bool)
    xsmooth = np.zeros(W, dtype=bool)
    best_echo = np.zeros(W)

    if B.Kf:
        f = B.feat[sid]
        xfeat |= ((f > x0[:, None]) & (f < span_hi[:, None])).any(axis=1)

    if B.Kj:
        jl = B.jloc[sid]
        ja = B.jabs[sid]
        js = B.jsgn[sid]
        poss = (x0[:, None] < jl) & (jl <= span_hi[:, None])
        contrib = np.where(poss, ja, 0.0)
        up += contrib.sum(axis=1)
        always = (core_lo[:, None] < jl) & (jl <= core_hi[:, None])
        low_mono += np.where(always, ja, 0.0).sum(axis=1)
        pos |= (poss & (js > 0)).any(axis=1)
        neg |= (poss & (js < 0)).any(axis=1)
        best_echo = np.max(np.where(always, 2.0 * ja, 0.0), axis=1)

    if B.Ks:
        a = B.sa[sid]
        b = B.sb[sid]
        w = b - a
        rise = B.srise[sid]
        code = B.scode[sid]
        xsmooth |= (
            B.svar[sid] & (a < span_hi[:, None]) & (b > x0[:, None])
        ).any(axis=1)
        t0 = np.clip((x0[:, None] - a) / w, 0.0, 1.0)
        t1 = np.clip((span_hi[:, None] - a) / w, 0.0, 1.0)
        osc = np.abs(rise) * (_shape_unit(code, t1) - _shape_unit(code, t0))
        ov = np.minimum(span_hi[:, None], b) - np.maximum(x0[:, None], a)
        win = np.minimum(h1[:, None], np.maximum(ov, 0.0))
        # Local slope cap: the unit derivative is unimodal, so its max
        # over the span's t range sits at an end or at the clamped peak.
        tm = np.clip(0.5, t0, t1)
        smax = np.maximum(
            np.maximum(_shape_deriv(code, t0), _shape_deriv(code, t1)),
            _shape_deriv(code, tm),
        )
        up += np.minimum(osc, np.abs(rise) * smax / w * win).sum(axis=1)
        moving = osc > 0.0
        pos |= (moving & (rise > 0)).any(axis=1)
        neg |= (moving & (rise < 0)).any(axis=1)
        tc0 = np.clip((core_lo[:, None] - a) / w, 0.0, 1.0)
        tc1 = np.clip((core_hi[:, None] - a) / w, 0.0, 1.0)
        inc = np.abs(rise) * (_shape_unit(code, tc1) - _shape_unit(code, tc0))
        inc = np.where(core_ok[:, None], np.maximum(inc, 0.0), 0.0)
        # Exact minimum pair increment at separation h0: the clipped
        # profile is monotone with a unimodal extended derivative, so
        # x -> F(x + h0) - F(x) is quasi-concave and attains its minimum
        # at an end of the box's x range.  Two evaluations certify it.
        th0 = np.clip(((x0 + h0)[:, None] - a) / w, 0.0, 1.0)
        tx1 = np.clip((x1[:, None] - a) / w, 0.0, 1.0)
        tw1 = np.clip((win_hi[:, None] - a) / w, 0.0, 1.0)
        inc_lo = _shape_unit(code, th0) - _shape_unit(code, t0)
        inc_hi = _shape_unit(code, tw1) - _shape_unit(code, tx1)
        dwin = np.abs(rise) * np.minimum(inc_lo, inc_hi)
        # Multiplicative floor for the same minimum: h0 times the least
        # slope over the window hull (at a hull end, the derivative
        # being unimodal).  The endpoint differences above quantise to
        # zero once h0 drops below one ulp of the x coordinates; this
        # product form cannot, so thin boxes deep inside the exceedance
        # region still certify.  Valid only for unclipped windows.
        win_in = (x0[:, None] >= a) & (win_hi[:, None] <= b) & (h0 > 0.0)[:, None]
        smin = np.minimum(_shape_deriv(code, t0), _shape_deriv(code, tw1))
        dmul = np.where(win_in, np.abs(rise) * (h0[:, None] / w) * smin, 0.0)
        low_mono += np.maximum(inc, np.maximum(dwin, dmul)).sum(axis=1)

    if B.Kc:
        a = B.ca[sid]
        b = B.cb[sid]
        w = b - a
        r = B.crabs[sid]
        sg = B.csgn[sid]
        act = r > 0.0
        xfeat |= (act & (a < span_hi[:, None]) & (b > x0[:, None])).any(axis=1)
        ts0 = np.clip((x0[:, None] - a) / w - _TNUDGE, 0.0, 1.0)
        ts1 = np.clip((span_hi[:, None] - a) / w + _TNUDGE, 0.0, 1.0)
        tc0 = np.clip((core_lo[:, None] - a) / w + _TNUDGE, 0.0, 1.0)
        tc1 = np.clip((core_hi[:, None] - a) / w - _TNUDGE, 0.0, 1.0)
        cv = cantor_eval_array(np.stack([ts0, ts1, tc0, tc1]))
        osc = r * np.maximum(cv[1] - cv[0], 0.0)
        ov = np.minimum(span_hi[:, None], b) - np.maximum(x0[:, None], a)
        tau = np.minimum(h1[:, None], np.maximum(ov, 0.0)) / w
        up_c = np.minimum(osc, _holder_cap(r, tau))
        up += np.where(act, up_c, 0.0).sum(axis=1)
        moving = act & (osc > 0.0)
        pos |= (moving & (sg > 0)).any(axis=1)
        neg |= (moving & (sg < 0)).any(axis=1)
        inc = r * np.maximum(cv[3] - cv[2], 0.0)
        inc = np.where(act & core_ok[:, None], inc, 0.0)
        low_mono += inc.sum(axis=1)

    if B.Kp:
        a = B.pa[sid]
        b = B.pb[sid]
        w = b - a
        coef = B.pcoef[sid]
        der = B.pder[sid]
        crit = B.pcrit[sid]
        dcrit = B.pdcrit[sid]
        act = B.pmask[sid]
        xsmooth |= (
            B.pvar[sid] & act & (a < span_hi[:, None]) & (b > x0[:, None])
        ).any(axis=1)
        t0 = np.clip((x0[:, None] - a) / w, 0.0, 1.0)
        t1 = np.clip((span_hi[:, None] - a) / w, 0.0, 1.0)
        cmask = np.isfinite(crit) & (crit > t0[..., None]) & (crit < t1[..., None])
        tcand = np.concatenate(
            [t0[..., None], t1[..., None], np.where(cmask, crit, t0[..., None])],
            axis=-1,
        )
        vals = _polyval_grid(coef, tcand)
        osc = vals.max(axis=-1) - vals.min(axis=-1)
        ov = np.minimum(span_hi[:, None], b) - np.maximum(x0[:, None], a)
        win = np.minimum(h1[:, None], np.maximum(ov, 0.0))
        # Local slope cap over the span's t range: |P'| peaks at an end
        # or at an inflection point inside it.
        smask = np.isfinite(dcrit) & (dcrit > t0[..., None]) & (dcrit < t1[..., None])
        scand = np.concatenate(
            [t0[..., None], t1[..., None], np.where(smask, dcrit, t0[..., None])],
            axis=-1,
        )
        smax = np.abs(_polyval_grid(der, scand)).max(axis=-1)
        up += np.where(act, np.minimum(osc, smax / w * win), 0.0).sum(axis=1)
        crit_in_span = cmask.any(axis=-1)
        moving = act & (osc > 0.0)
        nonmono |= (moving & crit_in_span).any(axis=1)
        mono_dir = vals[..., 1] - vals[..., 0]
        mono_move = moving & ~crit_in_span
        pos |= (mono_move & (mono_dir > 0)).any(axis=1)
        neg |= (mono_move & (mono_dir < 0)).any(axis=1)
        tc = np.stack(
            [
                np.clip((core_lo[:, None] - a) / w, 0.0, 1.0),
                np.clip((core_hi[:, None] - a) / w, 0.0, 1.0),
            ],
            axis=-1,
        )
        vc = _polyval_grid(coef, tc)
        inc = np.abs(vc[..., 1] - vc[..., 0])
        inc = np.where(core_ok[:, None] & ~crit_in_span, inc, 0.0)
        tw1 = np.clip((win_hi[:, None] - a) / w, 0.0, 1.0)
        dmask = np.isfinite(dcrit) & (dcrit > t0[..., None]) & (dcrit < tw1[..., None])
        dcand = np.concatenate(
            [t0[..., None], tw1[..., None], np.where(dmask, dcrit, t0[..., None])],
            axis=-1,
        )
        dvals = np.abs(_polyval_grid(der, dcand))
        dmin = dvals.min(axis=-1)
        win_in = (
            (x0[:, None] >= a)
            & (win_hi[:, None] <= b)
            & (h0 > 0.0)[:, None]
            & ~crit_in_span
        )
        dwin = np.where(win_in, h0[:, None] * dmin / w, 0.0)
        # With no inflection point in the window hull the derivative is
        # monotone there, so x -> P(x + h0) - P(x) is too and its minimum
        # sits at an end of the x range.  That beats the min-slope
        # product whenever the slope varies across the hull.
        tg = np.stack(
            [
                t0,
                np.clip(((x0 + h0)[:, None] - a) / w, 0.0, 1.0),
                np.clip((x1[:, None] - a) / w, 0.0, 1.0),
                tw1,
            ],
            axis=-1,
        )
        gv = _polyval_grid(coef, tg)
        ginc = np.minimum(
            np.abs(gv[..., 1] - gv[..., 0]), np.abs(gv[..., 3] - gv[..., 2])
        )
        gwin = np.where(win_in & ~dmask.any(axis=-1), ginc, 0.0)
        low_mono += np.where(act, np.maximum(inc, np.maximum(dwin, gwin)), 0.0).sum(
            axis=1
        )

    mono_ok = ~nonmono & ~(pos & neg)
    low = np.where(mono_ok, low_mono, 0.0)
    if B.Kj:
        low = np.maximum(low, best_echo - up)
    low = np.maximum(low, 0.0)
    return up, low, xfeat, xsmooth


# ---------------------------------------------------------------------------
# Wave-based branch and bound
# ---------------------------------------------------------------------------


def _split_wave(B, gamma, lam, tol_nu, max_depth):
    """Run the refinement for all sections of a batch at once.

    Returns arrays (lo, slack, tol_met) per section, in kernel-measure
    units: the certified enclosure is [lo, lo + slack].
    """
    S = B.S
    g = gamma
    lo_acc = np.zeros(S)
    stuck = np.zeros(S)
    frozen_extra = np.zeros(S)
    frozen = np.zeros(S, dtype=bool)

    # Root boxes: beyond separation H nothing exceeds, and pairs moving u
    # must touch the derivative support.  H is padded a hair to absorb
    # rounding in the power.
    H = (B.tv / lam) ** (1.0 / (1.0 + g)) * (1.0 + 1e-12)
    x0 = B.supp_lo - H
    x1 = B.supp_hi.copy()
    h0 = np.zeros(S)
    h1 = H.copy()
    sid = np.arange(S)
    depth = np.zeros(S, dtype=np.int32)

    supp_w = B.supp_hi - B.supp_lo

    while x0.size:
        W = x0.size
        up = np.empty(W)
        low = np.empty(W)
        xfeat = np.empty(W, dtype=bool)
        xsmooth = np.empty(W, dtype=bool)
        for i in range(0, W, _WAVE_CHUNK):
            sl = slice(i, min(i + _WAVE_CHUNK, W))
            up[sl], low[sl], xfeat[sl], xsmooth[sl] = _wave_bounds(
                B, sid[sl], x0[sl], x1[sl], h0[sl], h1[sl]
            )
        thr_lo = lam * h0 ** (1.0 + g)
        thr_hi = lam * h1 ** (1.0 + g)
        outside = up <= thr_lo
        inside = ~outside & (low > thr_hi)
        mass = (x1 - x0) * (h1**g - h0**g) / g
        if inside.any():
            lo_acc += np.bincount(sid[inside], weights=mass[inside], minlength=S)
        mixed = ~outside & ~inside
        gap = np.bincount(sid[mixed], weights=mass[mixed], minlength=S)
        rem = gap + stuck
        freeze_now = ~frozen & (rem <= tol_nu)
        if freeze_now.any():
            frozen_extra = np.where(freeze_now, rem, frozen_extra)
            frozen = frozen | freeze_now

        keep = mixed & ~frozen[sid]
        splittable = keep & (depth < max_depth)
        capped = keep & ~splittable
        if capped.any():
            stuck += np.bincount(sid[capped], weights=mass[capped], minlength=S)
        idx = np.nonzero(splittable)[0]
        if idx.size == 0:
            break
        if 2 * idx.size > _WAVE_CAP:
            order = np.argsort(-mass[idx], kind="stable")
            keep_n = _WAVE_CAP // 2
            dropped = idx[order[keep_n:]]
            stuck += np.bincount(sid[dropped], weights=mass[dropped], minlength=S)
            idx = np.sort(idx[order[:keep_n]])

        bx0, bx1 = x0[idx], x1[idx]
        bh0, bh1 = h0[idx], h1[idx]
        xm = 0.5 * (bx0 + bx1)
        with np.errstate(divide="ignore", invalid="ignore"):
            hk = (0.5 * (bh0**g + bh1**g)) ** (1.0 / g)
        hm = np.where(bh0 == 0.0, bh1 * 2.0 ** (-1.0 / g), hk)
        ha = 0.5 * (bh0 + bh1)
        hm = np.where((hm > bh0) & (hm < bh1), hm, ha)
        ok_x = (xm > bx0) & (xm < bx1)
        ok_h = (hm > bh0) & (hm < bh1)
        bxw = bx1 - bx0
        bhw = bh1 - bh0
        # Point features (jumps, support ends, interior extrema) pay off
        # at any h, so split toward them while x is the wider side.
        # Slope variation only matters relative to the support scale,
        # and tightening the h band is relative to its own height, so
        # those boxes compare the two improvement ratios instead.
        want_x = (xfeat[idx] & (bxw >= bhw)) | (
            xsmooth[idx] & (bxw * bh1 >= bhw * supp_w[sid[idx]])
        )
        do_x = (want_x & ok_x) | (~ok_h & ok_x)
        do_h = ~do_x & ok_h
        dead = ~do_x & ~do_h
        if dead.any():
            jd = idx[dead]
            stuck += np.bincount(sid[jd], weights=mass[jd], minlength=S)

        xi = np.nonzero(do_x)[0]
        hi_ = np.nonzero(do_h)[0]
        nx0 = np.concatenate([bx0[xi], xm[xi], bx0[hi_], bx0[hi_]])
        nx1 = np.concatenate([xm[xi], bx1[xi], bx1[hi_], bx1[hi_]])
        nh0 = np.concatenate([bh0[xi], bh0[xi], bh0[hi_], hm[hi_]])
        nh1 = np.concatenate([bh1[xi], bh1[xi], hm[hi_], bh1[hi_]])
        par = np.concatenate([idx[xi], idx[xi], idx[hi_], idx[hi_]])
        nsid = sid[par]
        ndepth = depth[par] + 1
        x0, x1, h0, h1, sid, depth = nx0, nx1, nh0, nh1, nsid, ndepth

    slack = np.where(frozen, frozen_extra, stuck)
    tol_met = frozen | (stuck <= tol_nu)
    return lo_acc, slack, tol_met


def _resolved_tolerances(funcs, gamma, lam, tol):
    g = as_gamma(gamma)
    out = np.empty(len(funcs))
    for i, u in enumerate(funcs):
        if tol is not None:
            out[i] = float(tol)
        else:
            v = u.total_variation
            out[i] = DEFAULT_TOL_SCALE * max(1.0, 2.0 * v / (1.0 + g))
    return out


def f_enclosures_batch(
    funcs: Sequence[BVFunction1D],
    gamma,
    lam: float,
    tol: float | None = None,
    max_depth: int = 40,
) -> list[Enclosure]:
    """Enclosures of the functional for many functions in one refinement.

    All functions share gamma, lam, and the width target semantics of
    :class:`ExceedanceQuery`.  Constant functions evaluate to the exact
    enclosure [0, 0] without entering the refinement.
    """
    g = as_gamma(gamma)
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValueError("lam must be a finite positive number")
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    results: list[Enclosure | None] = [None] * len(funcs)
    live: list[BVFunction1D] = []
    live_idx: list[int] = []
    for i, u in enumerate(funcs):
        if u.total_variation == 0.0:
            results[i] = Enclosure(0.0, 0.0)
        else:
            live.append(u)
            live_idx.append(i)
    if live:
        tol_f = _resolved_tolerances(live, g, lam, tol)
        batch = _Batch(live)
        lo, slack, met = _split_wave(batch, g, lam, tol_f / (2.0 * lam), max_depth)
        scale = 2.0 * lam
        for k, i in enumerate(live_idx):
            results[i] = Enclosure(
                scale * lo[k], scale * (lo[k] + slack[k]), bool(met[k])
            )
    return results  # type: ignore[return-value]


def measure_exceedance(u: BVFunction1D, query: ExceedanceQuery) -> Enclosure:
    """Enclosure of the kernel measure of the exceedance pair set."""
    enc = F_value(u, query)
    return enc.scaled(1.0 / (2.0 * query.lam))


def F_value(u: BVFunction1D, query: ExceedanceQuery) -> Enclosure:
    """Enclosure of the functional 2 * lam * nu(exceedance set)."""
    return f_enclosures_batch(
        [u], query.gamma, query.lam, query.tol, query.max_depth
    )[0]


def pair_increment_bounds(u: BVFunction1D, box: PlaneBox) -> tuple[float, float]:
    """Certified (lower, upper) bounds of |u(x+h) - u(x)| over a box."""
    batch = _Batch([u])
    (x0, x1), (h0, h1) = box.x_interval, box.h_interval
    up, low, _, _ = _wave_bounds(
        batch,
        np.zeros(1, dtype=np.intp),
        np.array([x0]),
        np.array([x1]),
        np.array([h0]),
        np.array([h1]),
    )
    return float(low[0]), float(up[0])


def classify_box(u: BVFunction1D, box: PlaneBox, query: ExceedanceQuery) -> BoxVerdict:
    """Classify one box against the exceedance threshold.

    OUTSIDE means no pair in the box exceeds, INSIDE means every pair
    does; MIXED is the undecided remainder that refinement would split.
    """
    low, up = pair_increment_bounds(u, box)
    (h0, h1) = box.h_interval
    if up <= query.lam * h0 ** (1.0 + query.gamma):
        return BoxVerdict.OUTSIDE
    if low > query.lam * h1 ** (1.0 + query.gamma):
        return BoxVerdict.INSIDE
    return BoxVerdict.MIXED
