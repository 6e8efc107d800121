"""The quadratic flip-flop map and its derived forms.

The map acts on the plane as

    phi(x, y) = 1 - x * (lam * (1 - x) + y)
    psi(x, y) = mu * y * (x - y)

with positive parameters ``lam`` and ``mu``.  Besides the map itself this
module provides its Jacobian, the form translated to a fixed point, the
polar form about that fixed point, the polar paradigm map with a logistic
radial part, and a preimage solver.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

ESCAPE_RADIUS = 1e12
FIXED_POINT_TOL = 1e-10
PREIMAGE_TOL = 1e-9


class EscapeError(ArithmeticError):
    """An orbit left the disc of radius ``ESCAPE_RADIUS`` (or overflowed)."""

    def __init__(self, step: int, point: tuple[float, float]):
        self.step = step
        self.point = point
        super().__init__(f"orbit escaped at step {step}: {point}")


class NotAFixedPointError(ValueError):
    pass


class IllConditionedWarning(RuntimeWarning):
    """The preimage quartic has (nearly) repeated real roots."""


@dataclass(frozen=True)
class Params:
    lam: float
    mu: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and math.isfinite(self.mu)):
            raise ValueError("lam and mu must be finite")
        if self.lam <= 0 or self.mu <= 0:
            raise ValueError(f"lam and mu must be positive, got {self.lam}, {self.mu}")

    @property
    def standard_regime(self) -> bool:
        """True when 0 < lam < 1 < mu."""
        return 0 < self.lam < 1 < self.mu


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y

    def __sub__(self, other: Point) -> Point:
        return Point(self.x - other.x, self.y - other.y)

    def __add__(self, other: Point) -> Point:
        return Point(self.x + other.x, self.y + other.y)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def in_triangle(self, tol: float = 0.0) -> bool:
        """Membership in T = {0 <= x <= 1, 0 <= y <= x}."""
        return -tol <= self.x <= 1 + tol and -tol <= self.y <= self.x + tol


@dataclass(frozen=True)
class Jacobian:
    j11: float
    j12: float
    j21: float
    j22: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.j11, self.j12], [self.j21, self.j22]])

    @property
    def det(self) -> float:
        return self.j11 * self.j22 - self.j12 * self.j21

    @property
    def trace(self) -> float:
        return self.j11 + self.j22

    def apply(self, v: Sequence[float]) -> tuple[float, float]:
        return (self.j11 * v[0] + self.j12 * v[1], self.j21 * v[0] + self.j22 * v[1])


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radius must be nonnegative")

    def to_cartesian(self) -> Point:
        return Point(self.r * math.cos(self.theta), self.r * math.sin(self.theta))


def _as_point(p) -> Point:
    return p if isinstance(p, Point) else Point(float(p[0]), float(p[1]))


# ---------------------------------------------------------------------------
# the map


def step_xy(lam, mu, x, y):
    """Raw map on floats or numpy arrays; no validation."""
    return 1.0 - x * (lam * (1.0 - x) + y), mu * y * (x - y)


def fold_xy(x, y):
    """Reflect across the diagonal into the half-plane y <= x.

    This is the set/reset symmetry identification (x, y) ~ (y, x) that
    keeps iterates on the triangle side of the diagonal.
    """
    if np.ndim(x) == 0:
        return (y, x) if y > x else (x, y)
    swap = y > x
    return np.where(swap, y, x), np.where(swap, x, y)


def step(params: Params, p) -> Point:
    x, y = _as_point(p)
    return Point(*step_xy(params.lam, params.mu, x, y))


def _escaped(x: float, y: float) -> bool:
    return not (abs(x) <= ESCAPE_RADIUS and abs(y) <= ESCAPE_RADIUS)


def iterate(params: Params, p, n: int, fold: bool = False) -> Point:
    """Apply the map ``n`` times.

    Raises
    ------
    EscapeError
        If an iterate leaves the escape disc; carries the step index.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    x, y = _as_point(p)
    lam, mu = params.lam, params.mu
    for k in range(1, n + 1):
        x, y = 1.0 - x * (lam * (1.0 - x) + y), mu * y * (x - y)
        if fold and y > x:
            x, y = y, x
        if _escaped(x, y):
            raise EscapeError(k, (x, y))
    return Point(x, y)


@dataclass
class Orbit:
    """A finite forward orbit ``[p, F(p), ..., F^k(p)]``.

    ``escaped`` marks truncation: ``escape_step`` is the index of the first
    iterate that left the escape disc (that iterate is not stored).
    """

    points: np.ndarray
    escaped: bool = False
    escape_step: int | None = None

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i) -> Point:
        x, y = self.points[i]
        return Point(float(x), float(y))

    def __iter__(self) -> Iterator[Point]:
        for i in range(len(self)):
            yield self[i]


def orbit(params: Params, p, n: int, fold: bool = False) -> Orbit:
    if n < 0:
        raise ValueError("n must be nonnegative")
    x, y = _as_point(p)
    lam, mu = params.lam, params.mu
    out = np.empty((n + 1, 2))
    out[0] = x, y
    for k in range(1, n + 1):
        x, y = 1.0 - x * (lam * (1.0 - x) + y), mu * y * (x - y)
        if fold and y > x:
            x, y = y, x
        if _escaped(x, y):
            return Orbit(out[:k].copy(), True, k)
        out[k] = x, y
    return Orbit(out)


def jacobian(params: Params, p) -> Jacobian:
    x, y = _as_point(p)
    lam, mu = params.lam, params.mu
    return Jacobian(lam * (2 * x - 1) - y, -x, mu * y, mu * (x - 2 * y))


def singular_curve_value(params: Params, p) -> float:
    """lam(2x-1)(x-2y) + 2y^2; zero exactly where det of the Jacobian vanishes."""
    x, y = _as_point(p)
    return params.lam * (2 * x - 1) * (x - 2 * y) + 2 * y * y


def fixed_point_residual(params: Params, p) -> float:
    x, y = _as_point(p)
    u, v = step_xy(params.lam, params.mu, x, y)
    return math.hypot(u - x, v - y)


# ---------------------------------------------------------------------------
# translated and polar forms about a fixed point


def fixed_point_tolerance(p) -> float:
    """FIXED_POINT_TOL, scaled by |p|^2 away from the unit disc.

    The map is quadratic, so rounding in a single evaluation grows like
    |p|^2; distant fixed points cannot meet an absolute 1e-10.
    """
    return FIXED_POINT_TOL * max(1.0, _as_point(p).norm()) ** 2


def _check_fixed(params: Params, pstar) -> Point:
    pstar = _as_point(pstar)
    res = fixed_point_residual(params, pstar)
    if not res < fixed_point_tolerance(pstar):
        raise NotAFixedPointError(f"{pstar} is not fixed (residual {res:.3g})")
    return pstar


def translated_xy(lam, mu, xs, ys, xi, eta):
    """Map expressed in offsets from (xs, ys); works on arrays."""
    u, v = step_xy(lam, mu, xs + xi, ys + eta)
    return u - xs, v - ys


def translated_step(params: Params, pstar, q) -> Point:
    """F(q + p*) - p*, for a fixed point p*."""
    pstar = _check_fixed(params, pstar)
    xi, eta = _as_point(q)
    return Point(*translated_xy(params.lam, params.mu, pstar.x, pstar.y, xi, eta))


def translated_coefficients(params: Params, pstar) -> tuple[float, float, float, float]:
    """Linear coefficients (alpha, beta, gamma, delta) of the translated map.

    With these,
        phi_hat = -alpha*xi - beta*eta + xi*(lam*xi - eta)
        psi_hat =  gamma*xi + delta*eta + mu*eta*(xi - eta)
    exactly, where (x*, y*) is any fixed point off the x-axis, or any
    fixed point at all when y* = x* - 1/mu is not assumed.
    """
    x, y = _as_point(pstar)
    lam, mu = params.lam, params.mu
    alpha = -(lam * (2 * x - 1) - y)
    beta = x
    gamma = mu * y
    delta = mu * (x - 2 * y)
    return alpha, beta, gamma, delta


def radial_factor(params: Params, pstar, r, theta):
    """U(r, theta) with R = r * U for the translated map in polar form.

    Expanded form of |F_hat(r cos t, r sin t)| / r; accepts arrays.
    """
    alpha, beta, gamma, delta = translated_coefficients(params, pstar)
    lam, mu = params.lam, params.mu
    c, s = np.cos(theta), np.sin(theta)
    s2 = 2.0 * s * c
    lin = (alpha**2 + gamma**2) * c**2 + (alpha * beta + gamma * delta) * s2 + (beta**2 + delta**2) * s**2
    first = -r * (lam * c - s) * (2 * alpha * c**2 + beta * s2 - r * c**2 * (lam * c - s))
    second = mu * r * (c - s) * (gamma * s2 + 2 * delta * s**2 + mu * r * s**2 * (c - s))
    return np.sqrt(np.maximum(lin + first + second, 0.0))


def angle_increment(u, v, theta):
    """Counterclockwise lift of atan2(v, u) relative to ``theta``, in [0, 2*pi)."""
    return np.mod(np.arctan2(v, u) - theta, 2 * np.pi)


def polar_xy(params: Params, pstar, r, theta):
    """Vectorized polar step about a fixed point, returning (R, Theta)."""
    xs, ys = _as_point(pstar)
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    u, v = translated_xy(params.lam, params.mu, xs, ys, r * np.cos(theta), r * np.sin(theta))
    R = r * radial_factor(params, pstar, r, theta)
    Theta = theta + angle_increment(u, v, theta)
    Theta = np.where(r > 0, Theta, theta + np.pi)
    return R, Theta


def polar_step(params: Params, pstar, pp: PolarPoint) -> PolarPoint:
    """Translated map in polar coordinates about the fixed point ``pstar``.

    The image angle is taken on the counterclockwise branch
    ``theta < Theta < theta + 2*pi``.  At r = 0 the angle is undefined and
    ``theta + pi`` is returned.
    """
    pstar = _check_fixed(params, pstar)
    if pp.r == 0:
        return PolarPoint(0.0, pp.theta + math.pi)
    R, Theta = polar_xy(params, pstar, pp.r, pp.theta)
    return PolarPoint(float(R), float(Theta))


def paradigm_step(nu: float, a: float, k: float, pp: PolarPoint) -> PolarPoint:
    """Logistic radius with an Arnold-type circle map for the angle.

    For r > 1 the logistic factor is negative; the point is then returned
    as radius |R| on the opposite ray.
    """
    r, theta = pp.r, pp.theta
    R = (nu + 1.0) * r * (1.0 - r)
    Theta = theta + 2 * math.pi / (a + nu) * (1.0 + k * r * math.sin(theta))
    if R < 0:
        R, Theta = -R, Theta + math.pi
    return PolarPoint(R, Theta % (2 * math.pi))


# ---------------------------------------------------------------------------
# preimages


def preimage_quartic(lam: float, mu: float, u, v) -> list:
    """Coefficients (highest degree first) of the quartic in x whose real
    roots are the x-coordinates of preimages of (u, v).

    Eliminating y via x*y = A(x) = lam*x^2 - lam*x + (1 - u) from the second
    coordinate gives mu*A^2 - (mu*A - v)*x^2 = 0.
    """
    w = 1.0 - u
    c4 = mu * lam * (lam - 1.0)
    c3 = -mu * lam * (2 * lam - 1.0)
    c2 = mu * (lam * lam + 2 * lam * w) - mu * w + v
    c1 = -2.0 * mu * lam * w
    c0 = mu * w * w
    return [c4, c3, c2, c1, c0]


def _poly_roots_batch(coeffs: list) -> np.ndarray:
    """Roots of many polynomials at once via companion-matrix eigenvalues.

    ``coeffs`` is a list of arrays (highest degree first) whose leading
    entry is a nonzero scalar shared by all rows.
    """
    lead = coeffs[0]
    rest = [np.atleast_1d(np.asarray(c, dtype=float)) for c in coeffs[1:]]
    n = max(len(c) for c in rest)
    d = len(rest)
    comp = np.zeros((n, d, d))
    for j, c in enumerate(rest):
        comp[:, 0, j] = -np.broadcast_to(c, (n,)) / lead
    for j in range(1, d):
        comp[:, j, j - 1] = 1.0
    return np.linalg.eigvals(comp)


def preimages_batch(lam: float, mu: float, u, v, newton_steps: int = 4):
    """All real preimages of each target (u[i], v[i]).

    Returns
    -------
    X, Y : ndarray, shape (N, 8)
        Candidate preimages; only entries where ``valid`` is True are real
        preimages (deduplicated, residual below ``PREIMAGE_TOL``).
    valid : ndarray of bool, shape (N, 8)
    ill : ndarray of bool, shape (N,)
        True when the quartic has distinct real roots closer than 1e-6.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    coeffs = preimage_quartic(lam, mu, u, v)
    if coeffs[0] == 0.0:  # lam == 1: cubic
        coeffs = coeffs[1:]
    roots = _poly_roots_batch(coeffs)
    scale = np.maximum(1.0, np.abs(roots))
    real = np.abs(roots.imag) < 1e-8 * scale
    xr = np.where(real, roots.real, np.nan)

    # ill-conditioning: distinct real roots that nearly coincide
    dx = np.abs(xr[:, :, None] - xr[:, None, :])
    iu = np.triu_indices(xr.shape[1], 1)
    close = dx[:, iu[0], iu[1]] < 1e-6
    ill = np.any(close, axis=1)

    # each x gives up to two y from mu*y^2 - mu*x*y + v = 0
    disc = xr * xr - 4.0 * v[:, None] / mu
    sq = np.sqrt(np.maximum(disc, 0.0))
    X = np.concatenate([xr, xr], axis=1)
    Y = np.concatenate([(xr + sq) / 2, (xr - sq) / 2], axis=1)
    U = u[:, None]
    V = v[:, None]

    def resid(X, Y):
        a, b = step_xy(lam, mu, X, Y)
        return a - U, b - V

    fx, fy = resid(X, Y)
    scale_t = 1.0 + np.abs(U) + np.abs(V)
    good = np.isfinite(X) & (np.concatenate([disc, disc], axis=1) > -1e-8)
    good &= np.hypot(fx, fy) < 1e-5 * scale_t
    X = np.where(good, X, 0.0)
    Y = np.where(good, Y, 0.0)
    for _ in range(newton_steps):
        fx, fy = resid(X, Y)
        a = lam * (2 * X - 1) - Y
        b = -X
        c = mu * Y
        d = mu * (X - 2 * Y)
        det = a * d - b * c
        ok = np.abs(det) > 1e-300
        det = np.where(ok, det, 1.0)
        X = X - np.where(ok, (d * fx - b * fy) / det, 0.0)
        Y = Y - np.where(ok, (-c * fx + a * fy) / det, 0.0)
    fx, fy = resid(X, Y)
    valid = good & (np.hypot(fx, fy) < PREIMAGE_TOL)

    # deduplicate (keep first occurrence)
    k = X.shape[1]
    for j in range(1, k):
        same = np.zeros(len(u), dtype=bool)
        for i in range(j):
            same |= valid[:, i] & (np.hypot(X[:, i] - X[:, j], Y[:, i] - Y[:, j]) < 1e-7)
        valid[:, j] &= ~same
    return X, Y, valid, ill


def preimages(params: Params, target) -> list[Point]:
    """All real points p with step(p) == target (at most four).

    Emits ``IllConditionedWarning`` when the eliminating quartic has nearly
    repeated roots; the returned points still satisfy the residual bound.
    """
    u, v = _as_point(target)
    X, Y, valid, ill = preimages_batch(params.lam, params.mu, u, v)
    if ill[0]:
        warnings.warn(f"near-multiple preimage roots for target {(u, v)}", IllConditionedWarning, stacklevel=2)
    pts = [Point(float(x), float(y)) for x, y, ok in zip(X[0], Y[0], valid[0]) if ok]
    return sorted(pts, key=lambda p: (p.x, p.y))
