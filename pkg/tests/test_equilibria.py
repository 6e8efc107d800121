from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from flipflop.equilibria import (
    b_coefficient,
    classify,
    fixed_points,
    hopf_coefficients,
    interior_fixed_point,
    manifolds_at_unit_fixed_point,
    mu_h,
)
from flipflop.mapcore import NotAFixedPointError, Params, Point, iterate, jacobian, orbit, step


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(7)


def _by_family(params):
    return {fp.family: fp for fp in fixed_points(params)}


def test_axis_points_always_present(rng):
    for lam, mu in zip(rng.uniform(0.05, 3, 50), rng.uniform(0.2, 10, 50)):
        fams = _by_family(Params(lam, mu))
        for key in ("axis-unit", "axis-reciprocal"):
            p = fams[key].location
            assert math.hypot(*(np.subtract(tuple(step(Params(lam, mu), p)), tuple(p)))) < 1e-12


def test_every_fixed_point_has_small_residual(rng):
    for lam, mu in zip(rng.uniform(0.05, 1.5, 200), rng.uniform(0.3, 12, 200)):
        p = Params(lam, mu)
        for fp in fixed_points(p):
            q = step(p, fp.location)
            scale = max(1.0, fp.location.norm()) ** 2
            assert math.hypot(q.x - fp.location.x, q.y - fp.location.y) < 1e-10 * scale


def test_interior_point_residual_is_absolute(rng):
    for lam, mu in zip(rng.uniform(0.05, 0.99, 200), rng.uniform(1.05, 12, 200)):
        p = Params(lam, mu)
        loc = interior_fixed_point(p).location
        q = step(p, loc)
        assert math.hypot(q.x - loc.x, q.y - loc.y) < 1e-10


def test_off_axis_points_lie_on_shifted_diagonal(rng):
    for lam, mu in zip(rng.uniform(0.05, 0.99, 100), rng.uniform(1.1, 10, 100)):
        for fp in fixed_points(Params(lam, mu)):
            if fp.family in ("interior", "exterior"):
                assert fp.location.y == pytest.approx(fp.location.x - 1 / mu, abs=1e-12)


def test_interior_point_golden_values():
    fp = interior_fixed_point(Params(0.99, 4.5))
    assert fp.location.x == pytest.approx(0.5639, abs=5e-4)
    assert fp.location.y == pytest.approx(0.3417, abs=5e-4)
    assert fp.eigenvalues[0].real == pytest.approx(-0.3763, abs=1e-3)
    assert abs(fp.eigenvalues[0].imag) == pytest.approx(0.9171, abs=1e-3)
    assert fp.classification == "spiral-sink"


def test_interior_point_near_hopf_value():
    fp = interior_fixed_point(Params(0.99, 4.5438))
    assert fp.location.x == pytest.approx(0.5632, abs=5e-4)
    assert fp.location.y == pytest.approx(0.3431, abs=5e-4)


def test_lambda_one_branch():
    fams = _by_family(Params(1.0, 3.0))
    assert fams["interior"].location.x == pytest.approx(3 / 5)
    assert "exterior" not in fams


def test_lambda_one_half_inverse_mu_has_only_axis_points():
    fps = fixed_points(Params(1.0, 0.5))
    assert {fp.family for fp in fps} <= {"axis-unit", "axis-reciprocal"}


def test_negative_discriminant_drops_off_axis_points():
    # (1 + lam - 1/mu)^2 + 4(1 - lam) < 0 needs lam > 1
    fps = fixed_points(Params(3.0, 0.5))
    assert [fp.family for fp in fps] == ["axis-unit", "axis-reciprocal"]


def test_axis_spectra_exact():
    p = Params(0.99, 4.5)
    fams = _by_family(p)
    assert sorted(e.real for e in fams["axis-unit"].eigenvalues) == [0.99, 4.5]
    assert fams["axis-unit"].classification == "saddle"
    got = sorted(e.real for e in fams["axis-reciprocal"].eigenvalues)
    assert got == pytest.approx(sorted([2 - 0.99, 4.5 / 0.99]), rel=1e-15)
    assert fams["axis-reciprocal"].classification == "source"


def test_classify_matches_numpy_eigenvalues(rng):
    for lam, mu in zip(rng.uniform(0.05, 0.99, 300), rng.uniform(1.05, 10, 300)):
        p = Params(lam, mu)
        for fp in fixed_points(p):
            ref = np.linalg.eigvals(jacobian(p, fp.location).matrix)
            assert sorted(abs(e) for e in fp.eigenvalues) == pytest.approx(sorted(abs(ref)), rel=1e-9)


def test_classify_rejects_non_fixed_point():
    with pytest.raises(NotAFixedPointError):
        classify(Params(0.99, 4.5), Point(0.5, 0.3))


def test_fixed_point_sink_classification():
    # lam < 1 and mu < 1 makes (1, 0) attracting in both directions
    fams = _by_family(Params(0.5, 0.8))
    assert fams["axis-unit"].classification == "sink"


def test_hopf_coefficients_match_trace_and_det(rng):
    for lam, mu in zip(rng.uniform(0.01, 0.999, 1000), rng.uniform(1.01, 10, 1000)):
        p = Params(lam, mu)
        h = hopf_coefficients(p)
        J = jacobian(p, interior_fixed_point(p).location)
        assert h.a == pytest.approx(J.trace, rel=1e-10, abs=1e-12)
        assert h.b == pytest.approx(J.det, rel=1e-10, abs=1e-12)
        if h.sigma is not None:
            assert abs(h.sigma) ** 2 == pytest.approx(h.b, rel=1e-12)


def test_hopf_coefficients_real_spectrum():
    # near mu = 1 the interior point sits on the axis and the spectrum is real
    h = hopf_coefficients(Params(0.5, 1.05))
    assert h.sigma is None and not h.complex_pair


def test_b_at_fig2_parameters():
    ev = np.linalg.eigvals(jacobian(Params(0.99, 4.5), interior_fixed_point(Params(0.99, 4.5)).location).matrix)
    assert b_coefficient(0.99, 4.5) == pytest.approx(abs(ev[0]) ** 2, rel=1e-12)
    assert b_coefficient(0.99, 4.5) == pytest.approx(0.9827, abs=1e-4)


def test_mu_h_value_and_contract():
    m = mu_h(0.99)
    assert m == pytest.approx(4.5438, abs=5e-4)
    assert b_coefficient(0.99, m) == pytest.approx(1.0, abs=1e-9)
    assert b_coefficient(0.99, m - 0.1) < 1 < b_coefficient(0.99, m + 0.1)
    h = hopf_coefficients(Params(0.99, m))
    assert abs(h.sigma) == pytest.approx(1.0, abs=1e-6)
    assert h.location.x == pytest.approx(0.5632, abs=5e-4)
    assert h.location.y == pytest.approx(0.3431, abs=5e-4)


@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
def test_mu_h_other_lambdas(lam):
    m = mu_h(lam)
    assert m > 1
    assert b_coefficient(lam, m) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("lam,tol", [(0.0, 1e-12), (1.0, 1e-12), (0.5, 0.0)])
def test_mu_h_rejects_bad_input(lam, tol):
    with pytest.raises(ValueError):
        mu_h(lam, tol)


@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9, 0.99])
def test_b_dips_then_increases(lam):
    mus = np.linspace(1.0, 20.0, 10_001)[1:]
    b = np.array([b_coefficient(lam, m) for m in mus])
    k = int(np.argmin(b))
    assert np.all(np.diff(b[k:]) > 0)
    # on the falling part b stays below lam, hence below one
    assert np.all(b[: k + 1] <= lam)
    assert b_coefficient(lam, 1.0) == pytest.approx(lam)


@pytest.mark.xfail(strict=True, reason="b falls just above mu = 1 before it starts to grow")
@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9, 0.99])
def test_b_increasing_for_all_mu_above_one(lam):
    mus = np.linspace(1.0, 20.0, 10_001)[1:]
    b = np.array([b_coefficient(lam, m) for m in mus])
    assert np.all(np.diff(b) > 0)


def test_stability_flip_across_mu_h():
    m = mu_h(0.99)
    assert interior_fixed_point(Params(0.99, m * (1 - 1e-3))).classification == "spiral-sink"
    assert interior_fixed_point(Params(0.99, m * (1 + 1e-3))).classification == "spiral-source"


def test_fig3_eigenvalues():
    fp = interior_fixed_point(Params(0.99, 4.5449))
    assert fp.eigenvalues[0].real == pytest.approx(-0.3889, abs=1e-3)
    assert abs(fp.eigenvalues[0].imag) == pytest.approx(0.9215, abs=1e-3)


def test_mu5_interior_is_spiral_source():
    fp = interior_fixed_point(Params(0.99, 5.0))
    assert fp.classification == "spiral-source"
    assert b_coefficient(0.99, 5.0) > 1
    # reference values for the chaotic-orbit figure
    assert fp.location.x == pytest.approx(0.5569, abs=5e-4)
    assert fp.eigenvalues[0].real == pytest.approx(-0.5144, abs=1e-3)
    assert abs(fp.eigenvalues[0].imag) == pytest.approx(0.9596, abs=1e-3)


def test_sigma_argument_at_mu_h():
    h = hopf_coefficients(Params(0.99, mu_h(0.99)))
    assert cmath.phase(h.sigma) / (2 * math.pi) == pytest.approx(0.3136, abs=2e-4)


# ---------------------------------------------------------------------------
# manifolds at (1, 0)


def test_manifold_descriptors():
    stable, unstable = manifolds_at_unit_fixed_point(Params(0.99, 5.0))
    assert unstable.slope == pytest.approx(-4.01)
    J = jacobian(Params(0.99, 5.0), Point(1, 0))
    v = J.apply((1.0, unstable.slope))
    assert v == pytest.approx((5.0, 5.0 * unstable.slope))
    assert stable.contains(Point(0.5, 0.0))
    assert not stable.contains(Point(0.5, 1e-3))


def test_stable_segment_orbit_converges():
    q = iterate(Params(0.99, 4.5), Point(0.5, 0.0), 10_000)
    assert math.hypot(q.x - 1, q.y) < 1e-8


def test_stable_segment_lower_end():
    p = Params(0.99, 4.5)
    stable, _ = manifolds_at_unit_fixed_point(p)
    lo, hi = stable.interval
    assert lo == pytest.approx(1 - 1 / 0.99) and hi == pytest.approx(1 / 0.99)
    assert math.hypot(iterate(p, Point(lo + 1e-3, 0.0), 10_000).x - 1, 0) < 1e-8
    # just below the lower end the axis orbit runs away
    assert orbit(p, Point(lo - 1e-3, 0.0), 3000).escaped


@pytest.mark.xfail(strict=True, reason="points left of 1 - 1/lam on the axis do not converge to (1, 0)")
def test_whole_left_axis_is_stable():
    orb = orbit(Params(0.99, 4.5), Point(-0.5, 0.0), 200)
    assert not orb.escaped and math.hypot(orb.points[-1, 0] - 1, orb.points[-1, 1]) < 1e-8


def test_manifolds_require_standard_regime():
    with pytest.raises(ValueError):
        manifolds_at_unit_fixed_point(Params(1.2, 4.5))
