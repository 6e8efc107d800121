"""Fixed points, their linear stability, and the Hopf threshold."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .mapcore import (
    NotAFixedPointError,
    Params,
    Point,
    fixed_point_residual,
    fixed_point_tolerance,
    jacobian,
    step_xy,
)

NEUTRAL_BAND = 1e-9

Classification = Literal[
    "saddle", "source", "sink", "spiral-sink", "spiral-source", "neutral", "non-hyperbolic-real"
]
Family = Literal["axis-unit", "axis-reciprocal", "interior", "exterior"]


@dataclass(frozen=True)
class FixedPoint:
    location: Point
    eigenvalues: tuple[complex, complex]
    classification: Classification
    family: Family | None = None

    @property
    def moduli(self) -> tuple[float, float]:
        return abs(self.eigenvalues[0]), abs(self.eigenvalues[1])


@dataclass(frozen=True)
class HopfCoefficients:
    """Roots of s^2 - a s + b = 0 give the spectrum at the interior point."""

    a: float
    b: float
    sigma: complex | None
    location: Point

    @property
    def complex_pair(self) -> bool:
        return self.sigma is not None


@dataclass(frozen=True)
class ManifoldDescriptor:
    base: Point
    kind: Literal["stable-segment", "linear-unstable-line"]
    interval: tuple[float, float] | None = None
    slope: float | None = None

    def contains(self, p: Point, tol: float = 1e-12) -> bool:
        if self.kind == "stable-segment":
            lo, hi = self.interval
            return abs(p.y) <= tol and lo < p.x < hi
        return abs(p.y - self.base.y - self.slope * (p.x - self.base.x)) <= tol


# ---------------------------------------------------------------------------


def _newton_polish(params: Params, p: Point) -> Point:
    x, y = p
    u, v = step_xy(params.lam, params.mu, x, y)
    J = jacobian(params, p).matrix - np.eye(2)
    try:
        dx, dy = np.linalg.solve(J, [u - x, v - y])
    except np.linalg.LinAlgError:
        return p
    q = Point(x - dx, y - dy)
    return q if fixed_point_residual(params, q) <= fixed_point_residual(params, p) else p


def eigenvalues_from_jacobian(params: Params, p: Point) -> tuple[complex, complex]:
    """Quadratic formula on (trace, det); larger modulus first."""
    J = jacobian(params, p)
    tr, det = J.trace, J.det
    disc = tr * tr - 4 * det
    if disc >= 0:
        r = math.sqrt(disc)
        # avoid cancellation in the smaller root
        big = (tr + math.copysign(r, tr)) / 2 if tr != 0 else r / 2
        small = det / big if big != 0 else (tr - r) / 2
        e = sorted([complex(big), complex(small)], key=abs, reverse=True)
        return e[0], e[1]
    w = cmath.sqrt(disc)
    return (tr + w) / 2, (tr - w) / 2


def _classify_spectrum(ev: tuple[complex, complex]) -> Classification:
    m1, m2 = abs(ev[0]), abs(ev[1])
    if ev[0].imag != 0:
        if abs(m1 - 1) < NEUTRAL_BAND:
            return "neutral"
        return "spiral-sink" if m1 < 1 else "spiral-source"
    if abs(m1 - 1) < NEUTRAL_BAND or abs(m2 - 1) < NEUTRAL_BAND:
        return "non-hyperbolic-real"
    if m1 > 1 and m2 > 1:
        return "source"
    if m1 < 1 and m2 < 1:
        return "sink"
    return "saddle"


def classify(params: Params, location, family: Family | None = None) -> FixedPoint:
    p = location if isinstance(location, Point) else Point(*location)
    res = fixed_point_residual(params, p)
    if not res < fixed_point_tolerance(p):
        raise NotAFixedPointError(f"{p} is not a fixed point (residual {res:.3g})")
    if p.y == 0.0 and family in ("axis-unit", "axis-reciprocal"):
        # exact spectra on the axis: the Jacobian is upper triangular there
        J = jacobian(params, p)
        ev = tuple(sorted([complex(J.j11), complex(J.j22)], key=abs, reverse=True))
    else:
        ev = eigenvalues_from_jacobian(params, p)
    return FixedPoint(p, ev, _classify_spectrum(ev), family)


def interior_x(lam: float, mu: float) -> float:
    """x-coordinate of the interior fixed point (the '+' root)."""
    if lam == 1.0:
        return mu / (mu * (1 + lam) - 1)
    disc = (1 + lam - 1 / mu) ** 2 + 4 * (1 - lam)
    if disc < 0:
        raise ValueError("no off-axis fixed points: negative discriminant")
    return ((1 / mu - lam - 1) + math.sqrt(disc)) / (2 * (1 - lam))


def off_axis_candidates(params: Params) -> list[tuple[Point, Family]]:
    lam, mu = params.lam, params.mu
    if lam == 1.0:
        if 1 / mu == 2.0:
            return []
        x = mu / (mu * 2 - 1)
        return [(Point(x, x - 1 / mu), "interior")]
    disc = (1 + lam - 1 / mu) ** 2 + 4 * (1 - lam)
    if disc < 0:
        return []
    r = math.sqrt(disc)
    out = []
    for sign, fam in ((1, "interior"), (-1, "exterior")):
        x = ((1 / mu - lam - 1) + sign * r) / (2 * (1 - lam))
        out.append((Point(x, x - 1 / mu), fam))
    return out


def fixed_points(params: Params) -> list[FixedPoint]:
    """All fixed points: the two axis points plus the off-axis roots."""
    out = [classify(params, Point(1.0, 0.0), "axis-unit")]
    if params.lam != 1.0:
        out.append(classify(params, Point(1.0 / params.lam, 0.0), "axis-reciprocal"))
    for p, fam in off_axis_candidates(params):
        p = _newton_polish(params, p)
        out.append(classify(params, p, fam))
    return out


def interior_fixed_point(params: Params) -> FixedPoint:
    for fp in fixed_points(params):
        if fp.family == "interior":
            return fp
    raise ValueError(f"no interior fixed point for {params}")


def hopf_coefficients(params: Params) -> HopfCoefficients:
    """Closed-form trace ``a`` and determinant ``b`` at the interior point.

    ``sigma`` is the eigenvalue with positive imaginary part, or None when
    4b <= a^2 (real spectrum).
    """
    lam, mu = params.lam, params.mu
    x = interior_x(lam, mu)
    a = (2 * lam - mu - 1) * x + (2 - lam + 1 / mu)
    b = mu * ((lam * (4 / mu - 1) - 2 * (1 + 1 / mu)) * x + 2 * (1 - (lam - 1 / mu) / mu))
    if lam == 0.99:
        a9, b9 = _coefficients_at_099(mu)
        if not (math.isclose(a, a9, rel_tol=1e-12, abs_tol=1e-12) and math.isclose(b, b9, rel_tol=1e-12, abs_tol=1e-12)):
            raise RuntimeError("general and lam=0.99 coefficient formulas disagree")
    disc = 4 * b - a * a
    sigma = complex(a / 2, math.sqrt(disc) / 2) if disc > 0 else None
    return HopfCoefficients(a, b, sigma, Point(x, x - 1 / mu))


def _coefficients_at_099(mu: float) -> tuple[float, float]:
    x = 50 * ((1 / mu - 1.99) + math.sqrt((1.99 - 1 / mu) ** 2 + 0.04))
    a = (0.98 - mu) * x + (1.01 + 1 / mu)
    b = mu * ((0.99 * (4 / mu - 1) - 2 * (1 + 1 / mu)) * x + 2 * (1 - (0.99 - 1 / mu) / mu))
    return a, b


def b_coefficient(lam: float, mu: float) -> float:
    x = interior_x(lam, mu)
    return mu * ((lam * (4 / mu - 1) - 2 * (1 + 1 / mu)) * x + 2 * (1 - (lam - 1 / mu) / mu))


def mu_h(lam: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Parameter value where b(lam, mu) = 1, by bisection on (1, mu_max].

    b starts at lam < 1 when mu = 1, dips, and then grows without bound,
    so it crosses one exactly once.  The bracket is grown by doubling
    mu_max until b exceeds one.
    """
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = 1.0, 2.0
    while b_coefficient(lam, hi) <= 1.0:
        lo, hi = hi, 2 * hi
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if b_coefficient(lam, mid) > 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def manifolds_at_unit_fixed_point(params: Params) -> tuple[ManifoldDescriptor, ManifoldDescriptor]:
    """Stable x-axis segment and linear unstable line at (1, 0).

    On the axis the map reduces to g(x) = 1 - lam*x*(1 - x), which is
    symmetric about x = 1/2 and fixes 1/lam; its basin of x = 1 is the
    open interval (1 - 1/lam, 1/lam).
    """
    if not params.standard_regime:
        raise ValueError("requires 0 < lam < 1 < mu")
    base = Point(1.0, 0.0)
    stable = ManifoldDescriptor(base, "stable-segment", interval=(1.0 - 1.0 / params.lam, 1.0 / params.lam))
    unstable = ManifoldDescriptor(base, "linear-unstable-line", slope=params.lam - params.mu)
    return stable, unstable
