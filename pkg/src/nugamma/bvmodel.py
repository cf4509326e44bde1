"""One-dimensional bounded-variation functions with explicit derivative parts.

A function here is a constant base value plus a finite sum of catalog
pieces, each constant outside a bounded interval:

* ``SmoothPiece``, a Lipschitz profile from a closed catalog (polynomial,
  affine ramp, clamped smoothstep, sine ramp) carrying its exact total
  variation and a Lipschitz bound supplied at construction;
* ``JumpPiece``, a single jump, evaluated with the right-continuous
  convention;
* ``CantorPiece``, a scaled copy of the Cantor staircase: monotone,
  continuous, and with zero classical derivative almost everywhere.

Keeping the catalog closed is what makes oscillation bounds, monotone
segmentation and variation masses exactly computable, which the box
classification in :mod:`nugamma.functional1d` relies on.  All objects are
immutable, hashable where practical, and safe to share between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
import numpy.polynomial.polynomial as npoly

__all__ = [
    "CANTOR_DIGITS",
    "cantor_eval",
    "cantor_eval_array",
    "ShapedRamp",
    "PolynomialProfile",
    "SmoothPiece",
    "JumpPiece",
    "CantorPiece",
    "Piece",
    "BVFunction1D",
    "VariationTriple",
    "affine_ramp",
    "smoothstep_piece",
    "sine_ramp",
    "polynomial_piece",
    "cantor_piece",
    "single_jump",
    "cantor_staircase",
]

Interval = tuple[float, float]

# ---------------------------------------------------------------------------
# Cantor staircase
# ---------------------------------------------------------------------------

#: Number of ternary digits consumed by the staircase evaluation.  The scan
#: is exact integer arithmetic on the binary rational input, so the only
#: error is the truncation of unconsumed digits, below 2**-63 absolutely.
CANTOR_DIGITS = 64


@lru_cache(maxsize=1 << 17)
def _cantor_unit(t) -> float:
    num, den = t.as_integer_ratio()
    acc = 0
    bits = 0
    for _ in range(CANTOR_DIGITS):
        num *= 3
        d = num // den
        num -= d * den
        bits += 1
        if d == 1:
            acc = (acc << 1) | 1
            break
        acc = (acc << 1) | (d >> 1)
        if num == 0:
            break
    return acc / (1 << bits)


def cantor_eval(t) -> float:
    """Value of the standard Cantor staircase at ``t`` in [0, 1].

    Ternary digits of ``t`` are consumed until the first digit 1; digits
    0 and 2 map to binary digits 0 and 1, and a trailing binary 1 is
    appended when a ternary 1 ended the scan.  The digit scan runs in
    exact integer arithmetic (floats and ``Fraction`` inputs both work),
    truncated at ``CANTOR_DIGITS`` digits.  Inputs whose expansion
    terminates or hits a 1 within the budget are evaluated exactly.
    """
    if t < 0 or t > 1:
        raise ValueError(f"cantor_eval needs 0 <= t <= 1, got {t!r}")
    if t == 0:
        return 0.0
    if t == 1:
        return 1.0
    return _cantor_unit(t)


def cantor_eval_array(values: np.ndarray) -> np.ndarray:
    """Vectorised staircase evaluation, deduplicating repeated abscissae."""
    flat = np.asarray(values, dtype=float).ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    out = np.fromiter(
        (_cantor_unit(float(v)) for v in uniq), dtype=float, count=uniq.size
    )
    return out[inv].reshape(np.shape(values))


# ---------------------------------------------------------------------------
# Smooth profiles (normalized coordinate t = (x - a) / (b - a) in [0, 1])
# ---------------------------------------------------------------------------

_SHAPE_MAX_DERIV = {"affine": 1.0, "smoothstep": 1.5, "sine": math.pi / 2.0}


@dataclass(frozen=True)
class ShapedRamp:
    """Monotone profile ``rise * s(t)`` with s(0) = 0 and s(1) = 1.

    ``shape`` is one of ``affine`` (s = t), ``smoothstep``
    (s = 3t^2 - 2t^3) or ``sine`` (s = (1 - cos pi t) / 2).  The unit
    derivative of each shape is unimodal, so its minimum over a
    subinterval is attained at an endpoint.
    """

    shape: str
    rise: float

    def __post_init__(self):
        if self.shape not in _SHAPE_MAX_DERIV:
            raise ValueError(f"unknown ramp shape {self.shape!r}")
        if not (math.isfinite(self.rise) and self.rise != 0.0):
            raise ValueError("ramp rise must be finite and nonzero")

    def unit(self, t):
        if self.shape == "affine":
            return t
        if self.shape == "smoothstep":
            return t * t * (3.0 - 2.0 * t)
        return 0.5 * (1.0 - np.cos(np.pi * t))

    def unit_deriv(self, t):
        if self.shape == "affine":
            return np.ones_like(np.asarray(t, dtype=float))
        if self.shape == "smoothstep":
            return 6.0 * t * (1.0 - t)
        return 0.5 * np.pi * np.sin(np.pi * t)

    @property
    def max_unit_deriv(self) -> float:
        return _SHAPE_MAX_DERIV[self.shape]

    def min_unit_deriv_on(self, t0: float, t1: float) -> float:
        if self.shape == "affine":
            return 1.0
        return float(min(self.unit_deriv(t0), self.unit_deriv(t1)))

    def value0(self, t):
        """Profile value relative to t = 0."""
        return self.rise * self.unit(t)


def _real_roots_in_unit(coeffs: Sequence[float]) -> tuple[float, ...]:
    """Real roots of the polynomial (ascending coeffs) strictly inside (0, 1)."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), trim="b")
    if c.size <= 1:
        return ()
    roots = npoly.polyroots(c)
    out = []
    for r in roots:
        if abs(r.imag) < 1e-9 and 1e-12 < r.real < 1.0 - 1e-12:
            out.append(float(r.real))
    out.sort()
    dedup = []
    for r in out:
        if not dedup or r - dedup[-1] > 1e-12:
            dedup.append(r)
    return tuple(dedup)


@dataclass(frozen=True)
class PolynomialProfile:
    """Free-form polynomial profile on the normalized coordinate.

    ``coeffs[k]`` multiplies t**k.  ``crit`` holds the derivative roots
    strictly inside (0, 1), ``dcrit`` the second-derivative roots; both
    are computed once at construction so that oscillation and slope
    ranges over subintervals reduce to candidate evaluations.
    """

    coeffs: tuple[float, ...]
    crit: tuple[float, ...]
    dcrit: tuple[float, ...]

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float]) -> "PolynomialProfile":
        cs = tuple(float(c) for c in coeffs)
        if not cs or not all(math.isfinite(c) for c in cs):
            raise ValueError("polynomial coefficients must be finite and nonempty")
        d1 = npoly.polyder(cs) if len(cs) > 1 else (0.0,)
        d2 = npoly.polyder(cs, 2) if len(cs) > 2 else (0.0,)
        return cls(cs, _real_roots_in_unit(d1), _real_roots_in_unit(d2))

    def unit(self, t):
        return npoly.polyval(t, self.coeffs)

    def unit_deriv(self, t):
        d = npoly.polyder(self.coeffs) if len(self.coeffs) > 1 else (0.0,)
        return npoly.polyval(t, d)

    def value0(self, t):
        return self.unit(t) - self.unit(0.0)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0, *self.crit, 1.0)


Profile = Union[ShapedRamp, PolynomialProfile]


# ---------------------------------------------------------------------------
# Pieces
# ---------------------------------------------------------------------------


def _check_interval(support) -> Interval:
    a, b = (float(support[0]), float(support[1]))
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise ValueError(f"support must be a finite interval with a < b, got {support}")
    return (a, b)


@dataclass(frozen=True)
class SmoothPiece:
    """Lipschitz catalog piece, constant outside ``support``.

    ``lipschitz_bound`` dominates the slope everywhere and ``exact_tv``
    is the true total variation of the profile; both are derived
    analytically by the factory functions below.
    """

    support: Interval
    profile: Profile
    lipschitz_bound: float
    exact_tv: float

    def _t(self, x):
        a, b = self.support
        return np.clip((np.asarray(x, dtype=float) - a) / (b - a), 0.0, 1.0)

    def increment(self, x):
        """Piece value relative to its value far to the left."""
        return self.profile.value0(self._t(x))

    def tspan(self, lo: float, hi: float) -> tuple[float, float]:
        a, b = self.support
        w = b - a
        return (
            min(max((lo - a) / w, 0.0), 1.0),
            min(max((hi - a) / w, 0.0), 1.0),
        )

    def osc_on(self, lo: float, hi: float) -> float:
        """Exact sup - inf of the piece over [lo, hi]."""
        t0, t1 = self.tspan(lo, hi)
        if t1 <= t0:
            return 0.0
        p = self.profile
        if isinstance(p, ShapedRamp):
            return abs(p.rise) * float(p.unit(t1) - p.unit(t0))
        cand = [float(p.unit(t0)), float(p.unit(t1))]
        cand.extend(float(p.unit(c)) for c in p.crit if t0 < c < t1)
        return max(cand) - min(cand)

    def monotone_sign_on(self, lo: float, hi: float):
        """+1, -1 or 0 when monotone (or constant) on [lo, hi]; None otherwise."""
        t0, t1 = self.tspan(lo, hi)
        if t1 <= t0:
            return 0
        p = self.profile
        if isinstance(p, ShapedRamp):
            return 1 if p.rise > 0 else -1
        if any(t0 < c < t1 for c in p.crit):
            return None
        diff = float(p.unit(t1) - p.unit(t0))
        if diff == 0.0:
            return 0
        return 1 if diff > 0 else -1

    def min_abs_slope_on(self, lo: float, hi: float) -> float:
        """Certified min |slope| over [lo, hi]; requires the interval inside
        the support and the profile monotone there, else returns 0."""
        a, b = self.support
        if lo < a or hi > b or hi <= lo:
            return 0.0
        w = b - a
        t0, t1 = (lo - a) / w, (hi - a) / w
        p = self.profile
        if isinstance(p, ShapedRamp):
            return abs(p.rise) * p.min_unit_deriv_on(t0, t1) / w
        if any(t0 < c < t1 for c in p.crit):
            return 0.0
        cand = [abs(float(p.unit_deriv(t0))), abs(float(p.unit_deriv(t1)))]
        cand.extend(abs(float(p.unit_deriv(c))) for c in p.dcrit if t0 < c < t1)
        return min(cand) / w


@dataclass(frozen=True)
class JumpPiece:
    location: float
    height: float

    def __post_init__(self):
        if not math.isfinite(self.location):
            raise ValueError("jump location must be finite")
        if not (math.isfinite(self.height) and self.height != 0.0):
            raise ValueError("jump height must be finite and nonzero")

    def increment(self, x: float) -> float:
        return self.height if x >= self.location else 0.0

    def increment_left(self, x: float) -> float:
        return self.height if x > self.location else 0.0

    def osc_on(self, lo: float, hi: float) -> float:
        # Right-continuity: a jump exactly at lo is already absorbed in
        # every value on [lo, hi], so only locations in (lo, hi] count.
        return abs(self.height) if lo < self.location <= hi else 0.0

    def monotone_sign_on(self, lo: float, hi: float):
        if lo < self.location <= hi:
            return 1 if self.height > 0 else -1
        return 0


@dataclass(frozen=True)
class CantorPiece:
    """Cantor staircase scaled onto ``support``, contributing |rise| of
    purely Cantor variation with the sign given by ``orientation``."""

    support: Interval
    rise: float
    orientation: int

    def __post_init__(self):
        if not (math.isfinite(self.rise) and self.rise != 0.0):
            raise ValueError("cantor rise must be finite and nonzero")
        if self.orientation not in (-1, 1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def signed_rise(self) -> float:
        return self.orientation * abs(self.rise)

    def _t(self, x: float) -> float:
        a, b = self.support
        return min(max((x - a) / (b - a), 0.0), 1.0)

    def increment(self, x: float) -> float:
        return self.signed_rise * cantor_eval(self._t(x))

    def osc_on(self, lo: float, hi: float) -> float:
        t0, t1 = self._t(lo), self._t(hi)
        if t1 <= t0:
            return 0.0
        return abs(self.rise) * (cantor_eval(t1) - cantor_eval(t0))

    def monotone_sign_on(self, lo: float, hi: float):
        t0, t1 = self._t(lo), self._t(hi)
        return self.orientation if t1 > t0 else 0


Piece = Union[SmoothPiece, JumpPiece, CantorPiece]


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------


def affine_ramp(a: float, b: float, slope: float) -> SmoothPiece:
    """Affine ramp of the given slope on [a, b], clamped outside."""
    a, b = _check_interval((a, b))
    if not (math.isfinite(slope) and slope != 0.0):
        raise ValueError("slope must be finite and nonzero")
    rise = slope * (b - a)
    return SmoothPiece((a, b), ShapedRamp("affine", rise), abs(slope), abs(rise))


def smoothstep_piece(a: float, b: float, rise: float) -> SmoothPiece:
    """Cubic smoothstep rising by ``rise`` across [a, b]."""
    a, b = _check_interval((a, b))
    prof = ShapedRamp("smoothstep", float(rise))
    return SmoothPiece((a, b), prof, 1.5 * abs(rise) / (b - a), abs(rise))


def sine_ramp(a: float, b: float, rise: float) -> SmoothPiece:
    """Half-cosine ramp rising by ``rise`` across [a, b]."""
    a, b = _check_interval((a, b))
    prof = ShapedRamp("sine", float(rise))
    return SmoothPiece((a, b), prof, 0.5 * math.pi * abs(rise) / (b - a), abs(rise))


def polynomial_piece(a: float, b: float, coeffs: Sequence[float]) -> SmoothPiece:
    """Polynomial profile on [a, b]; ``coeffs[k]`` multiplies the k-th power
    of the normalized coordinate.  Total variation and the Lipschitz bound
    come from the derivative's critical points."""
    a, b = _check_interval((a, b))
    prof = PolynomialProfile.from_coeffs(coeffs)
    vals = [float(prof.unit(t)) for t in prof.breakpoints]
    tv = float(sum(abs(v1 - v0) for v0, v1 in zip(vals, vals[1:])))
    dcand = [0.0, 1.0, *prof.dcrit]
    lip = max(abs(float(prof.unit_deriv(t))) for t in dcand) / (b - a)
    return SmoothPiece((a, b), prof, lip, tv)


def cantor_piece(a: float, b: float, rise: float, orientation: int | None = None) -> CantorPiece:
    a, b = _check_interval((a, b))
    if orientation is None:
        orientation = 1 if rise > 0 else -1
    return CantorPiece((a, b), float(rise), int(orientation))


# ---------------------------------------------------------------------------
# Assembled functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VariationTriple:
    """Masses of the absolutely continuous, jump and Cantor derivative parts."""

    a: float
    j: float
    c: float

    @property
    def total(self) -> float:
        return self.a + self.j + self.c


@dataclass(frozen=True)
class BVFunction1D:
    """Right-continuous BV function: base value plus catalog pieces.

    Pieces may overlap.  Evaluation sums piece increments relative to
    their values far to the left, so the function equals ``base_value``
    left of every support.
    """

    pieces: tuple[Piece, ...]
    base_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not math.isfinite(self.base_value):
            raise ValueError("base_value must be finite")

    # -- evaluation --------------------------------------------------------

    def eval(self, x: float) -> float:
        """Right-continuous value at x."""
        return self.base_value + sum(p.increment(x) for p in self.pieces)

    __call__ = eval

    def eval_left(self, x: float) -> float:
        """Left limit at x (differs from eval only across jump locations)."""
        total = self.base_value
        for p in self.pieces:
            if isinstance(p, JumpPiece):
                total += p.increment_left(x)
            else:
                total += p.increment(x)
        return total

    # -- structure ---------------------------------------------------------

    def variation_decomposition(self) -> VariationTriple:
        a = j = c = 0.0
        for p in self.pieces:
            if isinstance(p, SmoothPiece):
                a += p.exact_tv
            elif isinstance(p, JumpPiece):
                j += abs(p.height)
            else:
                c += abs(p.rise)
        return VariationTriple(a, j, c)

    @property
    def total_variation(self) -> float:
        return self.variation_decomposition().total

    def derivative_support(self) -> Interval | None:
        """Hull of the piece supports; None for a constant function."""
        lo = math.inf
        hi = -math.inf
        for p in self.pieces:
            if isinstance(p, JumpPiece):
                lo = min(lo, p.location)
                hi = max(hi, p.location)
            else:
                lo = min(lo, p.support[0])
                hi = max(hi, p.support[1])
        if lo > hi:
            return None
        return (lo, hi)

    def oscillation_bound(self, interval: Interval) -> tuple[bool, float]:
        """Certified bound on sup |u(y) - u(x)| over pairs in the interval.

        Returns ``(lower_exact, osc)``; ``lower_exact`` is True when the
        bound is attained, which holds when at most one piece moves on the
        interval or when all moving pieces are monotone in the same
        direction there.
        """
        lo, hi = float(interval[0]), float(interval[1])
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ValueError(f"interval must be finite with lo <= hi, got {interval}")
        oscs = [p.osc_on(lo, hi) for p in self.pieces]
        osc = float(sum(oscs))
        moving = [p for p, o in zip(self.pieces, oscs) if o > 0.0]
        if len(moving) <= 1:
            return True, osc
        signs = {p.monotone_sign_on(lo, hi) for p in moving}
        exact = None not in signs and len(signs - {0}) <= 1
        return exact, osc

    def monotone_sign_on(self, lo: float, hi: float):
        """Common monotone direction of all pieces on [lo, hi]; None if mixed."""
        sign = 0
        for p in self.pieces:
            s = p.monotone_sign_on(lo, hi)
            if s is None:
                return None
            if s != 0:
                if sign != 0 and s != sign:
                    return None
                sign = s
        return sign

    # -- exact transforms ---------------------------------------------------

    def scaled(self, c: float) -> "BVFunction1D":
        """The function c * u."""
        if not math.isfinite(c):
            raise ValueError("scale factor must be finite")
        if c == 0.0:
            return BVFunction1D((), 0.0)
        out: list[Piece] = []
        for p in self.pieces:
            if isinstance(p, JumpPiece):
                out.append(JumpPiece(p.location, c * p.height))
            elif isinstance(p, CantorPiece):
                sr = c * p.signed_rise
                out.append(CantorPiece(p.support, abs(sr), 1 if sr > 0 else -1))
            else:
                prof = p.profile
                if isinstance(prof, ShapedRamp):
                    nprof: Profile = ShapedRamp(prof.shape, c * prof.rise)
                else:
                    nprof = PolynomialProfile(
                        tuple(c * ck for ck in prof.coeffs), prof.crit, prof.dcrit
                    )
                out.append(
                    SmoothPiece(p.support, nprof, abs(c) * p.lipschitz_bound, abs(c) * p.exact_tv)
                )
        return BVFunction1D(tuple(out), c * self.base_value)

    def dilated(self, s: float) -> "BVFunction1D":
        """The function x -> u(x / s) for s > 0."""
        if not (s > 0 and math.isfinite(s)):
            raise ValueError("dilation factor must be positive and finite")
        out: list[Piece] = []
        for p in self.pieces:
            if isinstance(p, JumpPiece):
                out.append(JumpPiece(s * p.location, p.height))
            elif isinstance(p, CantorPiece):
                sup = (s * p.support[0], s * p.support[1])
                out.append(CantorPiece(sup, p.rise, p.orientation))
            else:
                sup = (s * p.support[0], s * p.support[1])
                out.append(SmoothPiece(sup, p.profile, p.lipschitz_bound / s, p.exact_tv))
        return BVFunction1D(tuple(out), self.base_value)

    def translated(self, dx: float) -> "BVFunction1D":
        """The function x -> u(x - dx)."""
        if not math.isfinite(dx):
            raise ValueError("translation must be finite")
        out: list[Piece] = []
        for p in self.pieces:
            if isinstance(p, JumpPiece):
                out.append(JumpPiece(p.location + dx, p.height))
            elif isinstance(p, CantorPiece):
                sup = (p.support[0] + dx, p.support[1] + dx)
                out.append(CantorPiece(sup, p.rise, p.orientation))
            else:
                sup = (p.support[0] + dx, p.support[1] + dx)
                out.append(SmoothPiece(sup, p.profile, p.lipschitz_bound, p.exact_tv))
        return BVFunction1D(tuple(out), self.base_value)


# ---------------------------------------------------------------------------
# Convenience constructors
# ---------------------------------------------------------------------------


def single_jump(height: float = 1.0, location: float = 0.0, base: float = 0.0) -> BVFunction1D:
    return BVFunction1D((JumpPiece(location, height),), base)


def cantor_staircase(a: float = 0.0, b: float = 1.0, rise: float = 1.0) -> BVFunction1D:
    return BVFunction1D((cantor_piece(a, b, rise),), 0.0)
