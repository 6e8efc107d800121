"""Chaos diagnostics: Lyapunov exponents, sensitivity, orbit density and
the horseshoe geometry of the map at lam = 0.99, mu = 5.

Several routines accept ``fold=True``.  The triangle 0 <= y <= x is a
fundamental domain for the set/reset symmetry, and folding swaps x and y
whenever an iterate lands above the diagonal.  At mu = 5 orbits of the raw
map started near (1, 0) leave the unit square within a few dozen steps,
while the folded dynamics stays on a bounded chaotic set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .mapcore import ESCAPE_RADIUS, EscapeError, Params, Point, preimages_batch, step, step_xy


@dataclass(frozen=True)
class LyapunovResult:
    exponents: tuple[float, float]
    n: int
    seed: Point
    transient: int
    fold: bool = False

    @property
    def total(self) -> float:
        return self.exponents[0] + self.exponents[1]


def _advance(lam: float, mu: float, x: float, y: float, fold: bool):
    x, y = 1.0 - x * (lam * (1.0 - x) + y), mu * y * (x - y)
    swapped = fold and y > x
    if swapped:
        x, y = y, x
    return x, y, swapped


def lyapunov(
    params: Params,
    seed: Point,
    n: int = 100_000,
    transient: int = 1000,
    fold: bool = False,
) -> LyapunovResult:
    """Both Lyapunov exponents by tangent-frame Gram-Schmidt at every step.

    The frame starts at the identity and is pushed through the Jacobian
    along the orbit; when ``fold`` swaps coordinates the frame is swapped
    too.  Log-stretch factors are summed with :func:`math.fsum`.

    Raises
    ------
    EscapeError
        If the orbit leaves the escape disc.
    """
    if n < 1 or transient < 0:
        raise ValueError("need n >= 1 and transient >= 0")
    lam, mu = params.lam, params.mu
    x, y = float(seed.x), float(seed.y)
    for k in range(1, transient + 1):
        x, y, _ = _advance(lam, mu, x, y, fold)
        if not (abs(x) <= ESCAPE_RADIUS and abs(y) <= ESCAPE_RADIUS):
            raise EscapeError(k, (x, y))

    a1, a2, b1, b2 = 1.0, 0.0, 0.0, 1.0  # frame columns (a1, a2), (b1, b2)
    l1: list[float] = []
    l2: list[float] = []
    for k in range(1, n + 1):
        j11 = lam * (2 * x - 1) - y
        j12 = -x
        j21 = mu * y
        j22 = mu * (x - 2 * y)
        a1, a2 = j11 * a1 + j12 * a2, j21 * a1 + j22 * a2
        b1, b2 = j11 * b1 + j12 * b2, j21 * b1 + j22 * b2
        x, y, swapped = _advance(lam, mu, x, y, fold)
        if not (abs(x) <= ESCAPE_RADIUS and abs(y) <= ESCAPE_RADIUS):
            raise EscapeError(transient + k, (x, y))
        if swapped:
            a1, a2 = a2, a1
            b1, b2 = b2, b1
        na = math.hypot(a1, a2)
        a1, a2 = a1 / na, a2 / na
        proj = a1 * b1 + a2 * b2
        b1, b2 = b1 - proj * a1, b2 - proj * a2
        nb = math.hypot(b1, b2)
        b1, b2 = b1 / nb, b2 / nb
        l1.append(math.log(na))
        l2.append(math.log(nb))
    e = sorted((math.fsum(l1) / n, math.fsum(l2) / n), reverse=True)
    return LyapunovResult((e[0], e[1]), n, Point(float(seed.x), float(seed.y)), transient, fold)


def mean_log_det(params: Params, seed: Point, n: int, transient: int = 1000, fold: bool = False) -> float:
    """Orbit average of ln|det J| over the same window :func:`lyapunov` uses."""
    lam, mu = params.lam, params.mu
    x, y = float(seed.x), float(seed.y)
    for _ in range(transient):
        x, y, _ = _advance(lam, mu, x, y, fold)
    logs = []
    for _ in range(n):
        logs.append(math.log(abs(mu * (lam * (2 * x - 1) * (x - 2 * y) + 2 * y * y))))
        x, y, _ = _advance(lam, mu, x, y, fold)
    return math.fsum(logs) / n


def sensitivity(
    params: Params,
    p: Point,
    delta0: float = 1e-8,
    n: int = 20,
    rng_seed: int = 0,
    direction: tuple[float, float] | None = None,
    fold: bool = False,
) -> float:
    """Finite-time separation rate (1/n) ln(|F^n(p + d) - F^n(p)| / delta0).

    ``d`` has length ``delta0`` and points along ``direction`` if given,
    otherwise along a uniformly random angle from ``default_rng(rng_seed)``.
    """
    if not 0 < delta0 <= 1e-6:
        raise ValueError("delta0 must lie in (0, 1e-6]")
    if n < 1:
        raise ValueError("n must be positive")
    if direction is None:
        t = np.random.default_rng(rng_seed).uniform(0.0, 2 * np.pi)
        ux, uy = math.cos(t), math.sin(t)
    else:
        nd = math.hypot(*direction)
        ux, uy = direction[0] / nd, direction[1] / nd
    lam, mu = params.lam, params.mu
    x, y = float(p.x), float(p.y)
    xq, yq = x + delta0 * ux, y + delta0 * uy
    for k in range(1, n + 1):
        x, y, _ = _advance(lam, mu, x, y, fold)
        xq, yq, _ = _advance(lam, mu, xq, yq, fold)
        for a, b in ((x, y), (xq, yq)):
            if not (abs(a) <= ESCAPE_RADIUS and abs(b) <= ESCAPE_RADIUS):
                raise EscapeError(k, (a, b))
    sep = math.hypot(xq - x, yq - y)
    if sep == 0.0:
        return -math.inf
    return math.log(sep / delta0) / n


def sensitivity_fraction(
    params: Params,
    p: Point,
    delta0: float = 1e-8,
    n: int = 20,
    trials: int = 100,
    rng_seed: int = 0,
    fold: bool = False,
) -> float:
    """Share of random directions with positive :func:`sensitivity`."""
    seeds = np.random.default_rng(rng_seed).integers(0, 2**32, size=trials)
    rates = [sensitivity(params, p, delta0, n, int(s), fold=fold) for s in seeds]
    return sum(r > 0 for r in rates) / trials


# ---------------------------------------------------------------------------
# orbit density


@dataclass
class SplatterHistogram:
    """Visit counts of orbits on a bins x bins grid over the unit square.

    ``counts[i, j]`` counts iterates with x in bin i and y in bin j.
    """

    counts: np.ndarray
    edges: np.ndarray
    n_per_seed: int
    seeds: list[Point]
    n_escaped_points: int
    n_outside: int
    escaped_seeds: list[int] = field(default_factory=list)

    @property
    def bins(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        e = self.edges
        return 0.5 * (e[i] + e[i + 1]), 0.5 * (e[j] + e[j + 1])

    def top_cells(self, fraction: float = 0.1) -> list[tuple[int, int]]:
        """Densest ceil(fraction * bins^2) cells, ignoring empty ones.

        Ties keep row-major order, so the selection is deterministic.
        """
        k = math.ceil(fraction * self.counts.size)
        flat = self.counts.ravel()
        order = np.argsort(-flat, kind="stable")[:k]
        order = order[flat[order] > 0]
        return [divmod(int(i), self.bins) for i in order]

    def accumulation_check(
        self, targets, radius: float = 0.1, fraction: float = 0.1
    ) -> list[tuple[tuple[float, float], float, bool]]:
        """For each target: distance to the nearest top cell centre and pass flag."""
        centers = np.array([self.cell_center(i, j) for i, j in self.top_cells(fraction)])
        out = []
        for t in targets:
            if len(centers) == 0:
                out.append((tuple(t), math.inf, False))
                continue
            d = float(np.hypot(centers[:, 0] - t[0], centers[:, 1] - t[1]).min())
            out.append((tuple(t), d, d <= radius))
        return out


def splatter_stats(
    params: Params,
    seeds: list[Point],
    n: int = 100_000,
    bins: int = 50,
    fold: bool = True,
) -> SplatterHistogram:
    """Histogram of iterates 1..n of every seed over [0, 1]^2.

    An orbit that escapes contributes nothing; its n points are added to
    ``n_escaped_points``.  Iterates outside the unit square are counted in
    ``n_outside``.
    """
    if n < 1 or bins < 1:
        raise ValueError("need n >= 1 and bins >= 1")
    lam, mu = params.lam, params.mu
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts = np.zeros((bins, bins), dtype=np.int64)
    escaped_pts = outside = 0
    escaped_seeds: list[int] = []
    for s, p in enumerate(seeds):
        pts = np.empty((n, 2))
        x, y = float(p.x), float(p.y)
        ok = True
        for k in range(n):
            x, y, _ = _advance(lam, mu, x, y, fold)
            if not (abs(x) <= ESCAPE_RADIUS and abs(y) <= ESCAPE_RADIUS):
                ok = False
                break
            pts[k] = x, y
        if not ok:
            escaped_pts += n
            escaped_seeds.append(s)
            continue
        h, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=[edges, edges])
        h = h.astype(np.int64)
        outside += n - int(h.sum())
        counts += h
    return SplatterHistogram(counts, edges, n, list(seeds), escaped_pts, outside, escaped_seeds)


# ---------------------------------------------------------------------------
# horseshoe geometry


@dataclass(frozen=True)
class EllipseRegion:
    """Axis-aligned ellipse; ``vertical`` puts the major axis along y."""

    center: Point
    semi_major: float
    semi_minor: float
    vertical: bool = True

    def __post_init__(self) -> None:
        if not (self.semi_major > 0 and self.semi_minor > 0):
            raise ValueError("semi-axes must be positive")
        if self.semi_minor > self.semi_major:
            raise ValueError("semi_minor exceeds semi_major")

    @property
    def semi_axes(self) -> tuple[float, float]:
        """(x half-width, y half-height)."""
        if self.vertical:
            return self.semi_minor, self.semi_major
        return self.semi_major, self.semi_minor

    def normalized_radius(self, x, y):
        ax, ay = self.semi_axes
        return np.hypot((np.asarray(x) - self.center.x) / ax, (np.asarray(y) - self.center.y) / ay)

    def contains(self, x, y):
        return self.normalized_radius(x, y) <= 1.0

    def sample(self, resolution: int) -> np.ndarray:
        """Points of a resolution x resolution lattice that fall inside."""
        u = (np.arange(resolution) + 0.5) / resolution * 2 - 1
        X, Y = np.meshgrid(u, u, indexing="ij")
        m = X * X + Y * Y <= 1.0
        ax, ay = self.semi_axes
        return np.column_stack([self.center.x + ax * X[m], self.center.y + ay * Y[m]])

    def boundary(self, n: int) -> np.ndarray:
        t = 2 * np.pi * np.arange(n) / n
        ax, ay = self.semi_axes
        return np.column_stack([self.center.x + ax * np.cos(t), self.center.y + ay * np.sin(t)])


DEFAULT_ELLIPSE = EllipseRegion(Point(0.95, 0.1), 0.13, 0.075, vertical=True)


@dataclass(frozen=True)
class KeyPointCheck:
    input: tuple[float, float]
    expected: tuple[float, float]
    observed: tuple[float, float]
    error: float
    passed: bool


@dataclass
class HorseshoeWitness:
    """Forward-image geometry of the ellipse D.

    ``components`` holds, for each connected piece of the second image
    inside the strip |y| <= strip_h over 0 <= x <= 1, its pixel count and
    x-extent.
    """

    ellipse: EllipseRegion
    resolution: int
    grid: int
    strip_h: float
    key_points: list[KeyPointCheck]
    containment: list[tuple[tuple[float, float], float, bool]]
    image1: np.ndarray
    image2: np.ndarray
    diagonal_above: int
    diagonal_below: int
    components: list[tuple[int, float, float]]
    forward_components: int
    inconclusive: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def diagonal_crossing(self) -> bool:
        return self.diagonal_above > 0 and self.diagonal_below > 0

    @property
    def component_count(self) -> int:
        return len(self.components)

    @property
    def left_right_split(self) -> bool:
        """One component lies in x < 0.4 and another in x > 0.6."""
        left = any(hi < 0.4 for _, lo, hi in self.components)
        right = any(lo > 0.6 for _, lo, hi in self.components)
        return left and right

    @property
    def passed(self) -> bool:
        return (
            all(k.passed for k in self.key_points)
            and self.diagonal_crossing
            and self.component_count >= 2
        )


def _key_point_checks(params: Params, tol: float) -> list[KeyPointCheck]:
    out = []
    for src, exp in (((1.0, 0.2), (0.8, 0.8)), ((0.8, 0.8), (0.2016, 0.0))):
        q = step(params, Point(*src))
        err = max(abs(q.x - exp[0]), abs(q.y - exp[1]))
        out.append(KeyPointCheck(src, exp, (q.x, q.y), err, err <= tol))
    return out


def _second_image_raster(params, ellipse, bbox, grid, strip_h):
    # a pixel centre lies in F^2(D) iff one of its second preimages lies in D
    lam, mu = params.lam, params.mu
    xs = (np.arange(grid) + 0.5) / grid
    ys = -strip_h + (np.arange(grid) + 0.5) / grid * 2 * strip_h
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    u, v = X.ravel(), Y.ravel()
    P1x, P1y, ok1, _ = preimages_batch(lam, mu, u, v)
    x0, x1, y0, y1 = bbox
    ok1 &= (P1x >= x0) & (P1x <= x1) & (P1y >= y0) & (P1y <= y1)
    rows, cols = np.nonzero(ok1)
    inside = np.zeros(u.size, dtype=bool)
    if rows.size:
        P2x, P2y, ok2, _ = preimages_batch(lam, mu, P1x[rows, cols], P1y[rows, cols])
        hit = np.any(ok2 & ellipse.contains(P2x, P2y), axis=1)
        np.logical_or.at(inside, rows, hit)
    return inside.reshape(grid, grid)


def horseshoe_witness(
    params: Params = Params(0.99, 5.0),
    resolution: int = 1000,
    grid: int = 512,
    strip_h: float = 0.05,
    ellipse: EllipseRegion = DEFAULT_ELLIPSE,
    tol: float = 1e-12,
) -> HorseshoeWitness:
    """Check the stretch-and-fold geometry of D under one and two steps.

    Parameters
    ----------
    resolution : int
        D is sampled on a resolution x resolution lattice (about
        0.79 * resolution**2 points).  Below 200 the result is flagged
        inconclusive.
    grid : int
        Pixel grid for the strip |y| <= strip_h, 0 <= x <= 1.

    Notes
    -----
    Pixel membership in the second image is decided by pulling each pixel
    centre back two steps with the exact preimage solver, which avoids the
    gaps that a forward-sampled raster leaves where the image is strongly
    stretched.  The forward-sampled count is kept as a diagnostic.
    """
    if params.lam != 0.99 or params.mu != 5.0:
        raise ValueError("the horseshoe witness is defined at lam=0.99, mu=5")
    notes: list[str] = []
    inconclusive = resolution < 200 or grid < 64
    if inconclusive:
        notes.append("resolution below 200 samples or grid below 64 pixels")
    keys = _key_point_checks(params, tol)
    containment = [
        (p, float(ellipse.normalized_radius(*p)), bool(ellipse.contains(*p))) for p in ((1.0, 0.0), (1.0, 0.2))
    ]
    for p, r, inside in containment:
        if not inside:
            notes.append(f"{p} lies outside D (normalized radius {r:.4f})")

    pts = ellipse.sample(resolution)
    x1, y1 = step_xy(params.lam, params.mu, pts[:, 0], pts[:, 1])
    x2, y2 = step_xy(params.lam, params.mu, x1, y1)
    img1 = np.column_stack([x1, y1])
    img2 = np.column_stack([x2, y2])

    d = y1 - x1
    near = (np.abs(d) < 1e-2 * math.sqrt(2)) & (np.hypot(x1 - 0.8, y1 - 0.8) < 0.1)
    above, below = int(np.sum(near & (d > 0))), int(np.sum(near & (d < 0)))

    pad = 1e-3
    bbox = (x1.min() - pad, x1.max() + pad, y1.min() - pad, y1.max() + pad)
    raster = _second_image_raster(params, ellipse, bbox, grid, strip_h)
    eight = np.ones((3, 3), dtype=int)
    lab, k = ndimage.label(raster, structure=eight)
    comps = []
    for i in range(1, k + 1):
        ix = np.nonzero(lab == i)[0]
        comps.append((int(ix.size), (ix.min() + 0.5) / grid, (ix.max() + 0.5) / grid))
    comps.sort(key=lambda c: c[1])

    sel = (x2 >= 0) & (x2 <= 1) & (np.abs(y2) <= strip_h)
    fwd = np.zeros((grid, grid), dtype=bool)
    i = np.clip((x2[sel] * grid).astype(int), 0, grid - 1)
    j = np.clip(((y2[sel] + strip_h) / (2 * strip_h) * grid).astype(int), 0, grid - 1)
    fwd[i, j] = True
    _, kf = ndimage.label(fwd, structure=eight)

    return HorseshoeWitness(
        ellipse, resolution, grid, strip_h, keys, containment, img1, img2,
        above, below, comps, int(kf), inconclusive, notes,
    )
