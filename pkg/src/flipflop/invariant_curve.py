"""Invariant closed curves about the interior fixed point.

The curve is stored as a radius function rho(theta) on a uniform angular
grid around p*.  Between grid angles it is evaluated with trigonometric
(band-limited) interpolation, which is spectrally accurate for the smooth
curves born at the Hopf point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .equilibria import interior_fixed_point, mu_h
from .mapcore import (
    EscapeError,
    Params,
    Point,
    _check_fixed,
    iterate,
    jacobian,
    orbit,
    polar_xy,
    translated_xy,
)

MIN_GRID = 64
COLLAPSE_RADIUS = 1e-12

# starting amplitudes (max radius) tried in turn by the Newton solver
_AMPLITUDE_LADDER = (0.05, 0.1, 0.02, 0.2, 0.01, 0.005)


class CurveNotFoundError(RuntimeError):
    """No invariant curve could be computed for the requested parameters."""


class CollapsedOrbitError(ArithmeticError):
    """Orbit fell onto the centre, where the polar angle is undefined."""


# ---------------------------------------------------------------------------
# periodic interpolation


def _dirichlet(d: np.ndarray, m: int) -> np.ndarray:
    s = np.sin(0.5 * d)
    with np.errstate(divide="ignore", invalid="ignore"):
        if m % 2 == 0:
            w = np.sin(0.5 * m * d) / (m * np.tan(0.5 * d))
        else:
            w = np.sin(0.5 * m * d) / (m * s)
    w[np.abs(s) < 1e-14] = 1.0
    return w


def interpolation_matrix(thetas: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Rows of weights W with ``W @ rhos`` = interpolant at ``targets``.

    ``thetas`` must be a uniform grid of M angles (any rotation and any
    cyclic ordering); index M wraps onto index 0.
    """
    thetas = np.asarray(thetas, dtype=float)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    d = targets[:, None] - thetas[None, :]
    return _dirichlet(d, thetas.size)


def _interpolation_slope(thetas: np.ndarray, targets: np.ndarray, h: float = 1e-6) -> np.ndarray:
    return (interpolation_matrix(thetas, targets + h) - interpolation_matrix(thetas, targets - h)) / (2 * h)


def periodic_interp(thetas: np.ndarray, rhos: np.ndarray, targets) -> np.ndarray:
    return interpolation_matrix(thetas, targets) @ np.asarray(rhos, dtype=float)


# ---------------------------------------------------------------------------


@dataclass
class PolarCurve:
    """Discretised invariant curve rho(theta) about ``center``.

    Attributes
    ----------
    nu : float
        Distance mu - mu_h past the bifurcation.
    center : Point
        The interior fixed point p*.
    thetas, rhos : ndarray
        Uniform angle grid and radii, both of length M.
    residual : float
        Max invariance defect, see :func:`invariance_residual`.
    """

    params: Params
    nu: float
    center: Point
    thetas: np.ndarray
    rhos: np.ndarray
    residual: float
    converged: bool = True
    iterations: int = 0
    history: list[float] = field(default_factory=list)
    method: str = "newton"

    def __post_init__(self) -> None:
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.rhos = np.asarray(self.rhos, dtype=float)
        if self.thetas.shape != self.rhos.shape or self.thetas.ndim != 1:
            raise ValueError("thetas and rhos must be 1-D arrays of equal length")
        if self.thetas.size < MIN_GRID:
            raise ValueError(f"grid must have at least {MIN_GRID} angles")
        if np.any(self.rhos < 0):
            raise ValueError("radii must be nonnegative")

    @property
    def size(self) -> int:
        return self.thetas.size

    @property
    def max_radius(self) -> float:
        return float(self.rhos.max())

    def radius(self, theta) -> np.ndarray:
        return periodic_interp(self.thetas, self.rhos, theta)

    def offsets(self, n: int | None = None) -> np.ndarray:
        """Curve points in the translated frame, resampled at ``n`` angles."""
        if n is None:
            t, r = self.thetas, self.rhos
        else:
            t = 2 * np.pi * np.arange(n) / n
            r = self.radius(t)
        return np.column_stack([r * np.cos(t), r * np.sin(t)])

    def points(self, n: int | None = None) -> np.ndarray:
        return self.offsets(n) + np.array([self.center.x, self.center.y])

    def rotated(self, k: int) -> PolarCurve:
        """Same curve with the stored grid cyclically shifted by ``k``."""
        return PolarCurve(
            self.params, self.nu, self.center, np.roll(self.thetas, k), np.roll(self.rhos, k),
            self.residual, self.converged, self.iterations, list(self.history), self.method,
        )


@dataclass(frozen=True)
class RotationEstimate:
    value: float
    n_iterates: int
    stderr: float


@dataclass(frozen=True)
class LoopCount:
    """Outcome of clustering one attracting-set cloud."""

    nu: float
    status: Literal["loops", "periodic", "inconclusive", "escaped"]
    multiplicity: int | None
    n_clusters: int
    note: str = ""


@dataclass
class CascadeReport:
    lam: float
    nu_grid: list[float]
    records: list[LoopCount]
    nu_breaks: list[float]
    cycle_multiplicities: list[int]
    notes: list[str]


# ---------------------------------------------------------------------------
# operator and solver


def _center(params: Params, pstar: Point | None) -> Point:
    if pstar is None:
        return interior_fixed_point(params).location
    _check_fixed(params, pstar)
    return pstar


def _local_maps(params: Params, c: Point, thetas: np.ndarray, rhos: np.ndarray):
    R, Th = polar_xy(params, c, rhos, thetas)
    return R / rhos, Th


def picard_operator(params: Params, pstar: Point, thetas: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """One application of rho -> rho(Theta) / U(rho, theta).

    With constant input ``rhos = nu`` this gives ``nu / U(nu, theta)``.
    """
    rhos = np.asarray(rhos, dtype=float)
    U, Th = _local_maps(params, pstar, thetas, rhos)
    return periodic_interp(thetas, rhos, Th) / U


def _residual_and_jacobian(params, c, thetas, rhos):
    U, Th = _local_maps(params, c, thetas, rhos)
    h = 1e-7 * rhos
    U2, Th2 = _local_maps(params, c, thetas, rhos + h)
    dU, dTh = (U2 - U) / h, (Th2 - Th) / h
    W = interpolation_matrix(thetas, Th)
    val = W @ rhos
    slope = _interpolation_slope(thetas, Th) @ rhos
    J = W / U[:, None]
    i = np.arange(rhos.size)
    J[i, i] += slope * dTh / U - val * dU / U**2
    return rhos - val / U, np.eye(rhos.size) - J


def _linear_shape(params: Params, c: Point, thetas: np.ndarray) -> np.ndarray:
    # ellipse traced by the linearisation's rotating eigen-frame
    ev, V = np.linalg.eig(jacobian(params, c).matrix)
    j = int(np.argmax(ev.imag))
    S = np.column_stack([V[:, j].real, V[:, j].imag])
    E = np.column_stack([np.cos(thetas), np.sin(thetas)])
    shape = 1.0 / np.linalg.norm(E @ np.linalg.inv(S).T, axis=1)
    return shape / shape.max()


def _newton(params, c, thetas, rho, max_iter, tol):
    history: list[float] = []
    for it in range(1, max_iter + 1):
        G, J = _residual_and_jacobian(params, c, thetas, rho)
        try:
            dx = np.linalg.solve(J, -G)
        except np.linalg.LinAlgError:
            return rho, history, False
        rho = rho + dx
        step = float(np.abs(dx).max())
        history.append(step)
        if not np.all(np.isfinite(rho)) or rho.min() <= 0 or rho.max() >= 1:
            return rho, history, False
        if step < tol * max(1.0, rho.max()):
            return rho, history, True
    return rho, history, False


def picard_solve(
    params: Params,
    pstar: Point | None = None,
    M: int = 512,
    max_iter: int = 60,
    tol: float = 1e-12,
    method: Literal["newton", "picard"] = "newton",
) -> PolarCurve:
    """Fixed point of rho = rho(Theta) / U(rho, theta) on an M-point grid.

    Parameters
    ----------
    method : {"newton", "picard"}
        ``"picard"`` applies the operator directly from rho = nu.  The
        radial direction is only weakly attracting for that iteration, so
        it rarely meets small tolerances.  ``"newton"`` solves the same
        equation by Newton's method from a ladder of elliptical starting
        guesses and is the default.

    Raises
    ------
    ValueError
        If mu <= mu_h(lam) or M < 64.
    CurveNotFoundError
        If every attempt diverges (radius >= 1 or non-positive).
    """
    if M < MIN_GRID:
        raise ValueError(f"M must be at least {MIN_GRID}")
    if not 0 < params.lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    nu = params.mu - mu_h(params.lam)
    if nu <= 0:
        raise ValueError(f"mu={params.mu} is not above the Hopf value (nu={nu:.3g})")
    c = _center(params, pstar)
    thetas = 2 * np.pi * np.arange(M) / M

    if method == "picard":
        rho = np.full(M, nu)
        history: list[float] = []
        converged = False
        for it in range(1, max_iter + 1):
            new = picard_operator(params, c, thetas, rho)
            if not np.all(np.isfinite(new)) or new.max() >= 1 or new.min() < 0:
                raise CurveNotFoundError(f"Picard iterates left the unit disc at step {it}")
            history.append(float(np.abs(new - rho).max()))
            rho = new
            if history[-1] < tol:
                converged = True
                break
        curve = PolarCurve(params, nu, c, thetas, rho, 0.0, converged, it, history, "picard")
        curve.residual = invariance_residual(params, curve)
        return curve
    if method != "newton":
        raise ValueError(f"unknown method {method!r}")

    shape = _linear_shape(params, c, thetas)
    for s0 in _AMPLITUDE_LADDER:
        rho, history, ok = _newton(params, c, thetas, s0 * shape, max_iter, tol)
        if ok:
            curve = PolarCurve(params, nu, c, thetas, rho, 0.0, True, len(history), history, "newton")
            curve.residual = invariance_residual(params, curve)
            return curve
    raise CurveNotFoundError(f"no invariant curve found at {params}")


def invariance_residual(params: Params, curve: PolarCurve) -> float:
    """Max distance between the image of each grid point and the curve at Theta."""
    c = curve.center
    t, r = curve.thetas, curve.rhos
    u, v = translated_xy(params.lam, params.mu, c.x, c.y, r * np.cos(t), r * np.sin(t))
    _, Th = polar_xy(params, c, r, t)
    rt = curve.radius(Th)
    return float(np.hypot(u - rt * np.cos(Th), v - rt * np.sin(Th)).max())


def winding_number(offsets: np.ndarray) -> int:
    """Winding number of a closed polygon about the origin."""
    a = np.arctan2(offsets[:, 1], offsets[:, 0])
    d = np.diff(np.append(a, a[0]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return int(round(d.sum() / (2 * np.pi)))


def distance_to_curve(curve: PolarCurve, offsets: np.ndarray, n: int = 8192) -> np.ndarray:
    """Euclidean distance from translated-frame points to the resampled curve."""
    tree = cKDTree(curve.offsets(n))
    d, _ = tree.query(np.atleast_2d(offsets))
    return d


# ---------------------------------------------------------------------------
# orbit clouds


def attracting_set(
    params: Params,
    seed: Point,
    transient: int = 10_000,
    samples: int = 10_000,
    fold: bool = False,
) -> np.ndarray:
    """Iterates ``transient + 1`` .. ``transient + samples`` of ``seed``.

    Raises :class:`EscapeError` if the orbit leaves the escape radius.
    """
    if transient < 0 or samples < 1:
        raise ValueError("transient must be >= 0 and samples >= 1")
    orb = orbit(params, seed, transient + samples, fold=fold)
    if orb.escaped:
        raise EscapeError(orb.escape_step, tuple(orb.points[-1]))
    return orb.points[transient + 1:]


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def rotation_number(
    params: Params,
    pstar: Point | None,
    seed: Point,
    n: int = 100_000,
    transient: int = 0,
    batches: int = 20,
) -> RotationEstimate:
    """Mean angular advance about p* per iterate, divided by 2 pi.

    Each increment is taken in (0, 2 pi), i.e. the counter-clockwise lift,
    which is the direction of rotation of the complex eigenvalue pair.
    """
    if n < 1000:
        raise ValueError("n must be at least 1000")
    c = _center(params, pstar)
    start = iterate(params, seed, transient)
    orb = orbit(params, start, n)
    if orb.escaped:
        raise EscapeError(transient + orb.escape_step, tuple(orb.points[-1]))
    pts = orb.points
    off = pts - np.array([c.x, c.y])
    r = np.hypot(off[:, 0], off[:, 1])
    if r.min() < COLLAPSE_RADIUS:
        raise CollapsedOrbitError(f"orbit came within {r.min():.3g} of the centre")
    a = np.arctan2(off[:, 1], off[:, 0])
    inc = np.mod(np.diff(a), 2 * np.pi)
    value = float(inc.mean() / (2 * np.pi))
    means = np.array([b.mean() for b in np.array_split(inc, batches)]) / (2 * np.pi)
    stderr = float(means.std(ddof=1) / math.sqrt(batches))
    return RotationEstimate(value % 1.0, n, stderr)


def detect_cycle(tail: Sequence, max_period: int, tol: float = 1e-9) -> int | None:
    """Smallest q <= max_period with |p[i+q] - p[i]| < tol across the tail."""
    pts = np.asarray([tuple(p) for p in tail], dtype=float)
    if max_period < 1:
        raise ValueError("max_period must be positive")
    if len(pts) < 3 * max_period:
        raise ValueError(f"tail needs at least {3 * max_period} points")
    for q in range(1, max_period + 1):
        if np.all(np.hypot(*(pts[q:] - pts[:-q]).T) < tol):
            return q
    return None


# ---------------------------------------------------------------------------
# loop counting and the cascade scan


def _is_loop(cloud: np.ndarray, link: float = 0.0) -> bool:
    c = cloud.mean(axis=0)
    off = cloud - c
    a = np.arctan2(off[:, 1], off[:, 0])
    pts = cloud[np.argsort(a)]
    gaps = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)
    med = np.median(gaps)
    # quasi-periodic samples have up to three gap lengths, so a gap the
    # linking step already bridges is not a break in the loop
    if not (med > 0 and gaps.max() < max(10 * med, link)):
        return False
    # a filled blob also sorts into a polygon; a loop leaves its centroid empty
    r = np.hypot(off[:, 0], off[:, 1])
    return r.min() > 0.25 * np.median(r)


def count_loops(
    cloud: np.ndarray,
    nu: float = math.nan,
    max_period: int = 64,
    tol: float = 1e-9,
    link_factor: float = 3.0,
    diameter_fraction: float = 0.02,
) -> LoopCount:
    """Cluster a cloud and count the closed loops it forms.

    Points closer than ``max(link_factor * median nearest-neighbour
    spacing, diameter_fraction * cloud diameter)`` are linked.  The second
    term matters for quasi-periodic orbits near a resonance, whose
    nearest-neighbour spacing can be far below the gaps along the loop.
    A cluster is a loop when its points, sorted by angle about the cluster
    centroid, form a polygon whose longest edge is under ten times the
    median edge (or under the linking radius), and the centroid lies in a
    hole of the cluster.
    """
    uniq = np.unique(np.round(cloud / tol) * tol, axis=0)
    if len(uniq) <= max_period:
        return LoopCount(nu, "periodic", len(uniq), len(uniq), f"{len(uniq)} distinct points")
    tree = cKDTree(cloud)
    d, _ = tree.query(cloud, k=2)
    diameter = float(np.hypot(*np.ptp(cloud, axis=0)))
    radius = max(link_factor * float(np.median(d[:, 1])), diameter_fraction * diameter)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    n = len(cloud)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    k, labels = connected_components(graph, directed=False)
    small = [i for i in range(k) if np.sum(labels == i) < 20]
    if small:
        return LoopCount(nu, "inconclusive", None, k, f"{len(small)} clusters with fewer than 20 points")
    loops = [_is_loop(cloud[labels == i], radius) for i in range(k)]
    if all(loops):
        return LoopCount(nu, "loops", k, k)
    return LoopCount(nu, "inconclusive", None, k, f"{loops.count(False)} of {k} clusters fail the loop test")


def cascade_scan(
    lam: float,
    nu_range: tuple[float, float],
    steps: int,
    transient: int = 10_000,
    samples: int = 10_000,
    seed_offset: tuple[float, float] = (0.01, 0.0),
) -> CascadeReport:
    """Count attracting loops on a nu grid and report where the count doubles.

    Each orbit starts on the solved invariant curve when
    :func:`picard_solve` finds one (normal contraction is only of order nu,
    so distant seeds need very long transients), otherwise at
    p* + ``seed_offset``.  Grid values whose cloud is inconclusive,
    periodic or escaping are kept in ``records`` but do not take part in
    break detection.
    """
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    lo, hi = nu_range
    if not 0 < lo < hi or steps < 1:
        raise ValueError("need 0 < nu_lo < nu_hi and steps >= 1")
    muh = mu_h(lam)
    grid = list(np.linspace(lo, hi, steps)) if steps > 1 else [float(lo)]
    records: list[LoopCount] = []
    breaks: list[float] = []
    mults: list[int] = []
    notes: list[str] = []
    for nu in grid:
        p = Params(lam, muh + nu)
        c = interior_fixed_point(p).location
        seed = Point(c.x + seed_offset[0], c.y + seed_offset[1])
        try:
            x, y = picard_solve(p, c).points()[0]
            seed = Point(float(x), float(y))
        except CurveNotFoundError:
            pass
        try:
            cloud = attracting_set(p, seed, transient, samples)
        except EscapeError as exc:
            records.append(LoopCount(float(nu), "escaped", None, 0, str(exc)))
            continue
        rec = count_loops(cloud, float(nu))
        records.append(rec)
        if rec.status != "loops":
            continue
        if not mults:
            mults.append(rec.multiplicity)
            notes.append(f"nu={nu:.6g}: {rec.multiplicity} loop(s) at scan start")
        elif rec.multiplicity == 2 * mults[-1]:
            breaks.append(float(nu))
            mults.append(rec.multiplicity)
            notes.append(f"nu={nu:.6g}: loop count doubled to {rec.multiplicity}")
    return CascadeReport(lam, [float(v) for v in grid], records, breaks, mults, notes)
