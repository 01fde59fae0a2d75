import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqgrad.distributions import (
    GaussianMixture,
    HalfCosine,
    RaisedCosine,
    TabulatedSymmetric,
    Triangular,
    TwoPoint,
    UniformInterval,
    check_calibrated_key,
    parse_distribution,
)
from sqgrad.errors import (
    ConfigError,
    ConstructionError,
    DomainError,
    NoDensityError,
    NotInvertibleError,
)

CLOSED_FORM = [
    UniformInterval(0.5),
    Triangular(0.5),
    HalfCosine(0.5),
    RaisedCosine(0.5),
    GaussianMixture(math.pi, 1.0),
]


def test_uniform_interval_spot_values():
    u = UniformInterval(0.5)
    assert u.cdf(-0.5) == 0.0
    assert u.cdf(0.0) == 0.5
    assert u.cdf(0.5) == 1.0
    assert u.cdf(-1.3) == 0.0 and u.cdf(2.0) == 1.0
    assert u.inv_cdf(0.75) == pytest.approx(0.25)
    assert u.density(0.3) == 1.0 and u.density(0.7) == 0.0


def test_triangular_spot_values():
    t = Triangular(0.5)
    # right half: 1 - (c - z)^2 / (2 c^2), by hand at z = 1/4.
    assert t.cdf(0.25) == pytest.approx(0.875, abs=1e-15)
    assert t.cdf(0.0) == pytest.approx(0.5)
    assert t.density(0.0) == pytest.approx(2.0)
    assert t.density(0.5) == 0.0


def test_half_cosine_spot_values():
    h = HalfCosine(0.5)
    assert h.cdf(0.25) == pytest.approx(0.5 * (1 + math.sin(math.pi / 4)), abs=1e-15)
    assert h.inv_cdf(0.5) == pytest.approx(0.0, abs=1e-15)
    # density integrates the cdf: peak pi/(4c) at the origin.
    assert h.density(0.0) == pytest.approx(math.pi / 2.0)


def test_raised_cosine_spot_values():
    r = RaisedCosine(0.5)
    assert r.cdf(0.25) == pytest.approx(0.75 + 1.0 / (2 * math.pi), abs=1e-15)
    assert r.density(0.0) == pytest.approx(2.0)
    assert r.density(0.5) == 0.0
    assert r.inv_cdf(r.cdf(0.17)) == pytest.approx(0.17, abs=1e-10)


@pytest.mark.parametrize("dist", CLOSED_FORM, ids=lambda d: type(d).__name__)
def test_symmetry_and_monotonicity(dist):
    lo, hi = dist.support
    if math.isinf(hi):
        lo, hi = -10.0, 10.0
    zs = np.linspace(lo, hi, 301)
    cdf = np.asarray(dist.cdf(zs))
    assert np.all(np.diff(cdf) >= -1e-12)
    np.testing.assert_allclose(cdf + np.asarray(dist.cdf(-zs)), 1.0, atol=1e-9)
    assert dist.cdf(0.0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("dist", CLOSED_FORM, ids=lambda d: type(d).__name__)
def test_inverse_round_trip(dist):
    xs = np.linspace(0.01, 0.99, 49)
    zs = dist.inv_cdf(xs)
    np.testing.assert_allclose(dist.cdf(zs), xs, atol=1e-9)


@pytest.mark.parametrize("dist", CLOSED_FORM, ids=lambda d: type(d).__name__)
def test_inv_cdf_rejects_boundary(dist):
    for bad in (0.0, 1.0, -0.1, 1.7):
        with pytest.raises(DomainError):
            dist.inv_cdf(bad)


@pytest.mark.parametrize("dist", CLOSED_FORM, ids=lambda d: type(d).__name__)
def test_density_matches_cdf_slope(dist):
    lo, hi = dist.support
    if math.isinf(hi):
        lo, hi = -8.0, 8.0
    zs = np.linspace(lo + 0.05, hi - 0.05, 57)
    h = 1e-6
    slope = (np.asarray(dist.cdf(zs + h)) - np.asarray(dist.cdf(zs - h))) / (2 * h)
    # atol leaves room for the density kink at the triangular peak.
    np.testing.assert_allclose(np.asarray(dist.density(zs)), slope, rtol=0, atol=1e-5)


@pytest.mark.parametrize(
    "dist",
    CLOSED_FORM + [TwoPoint(1.0)],
    ids=lambda d: type(d).__name__,
)
def test_sampling_follows_cdf(dist):
    rng = np.random.default_rng(101)
    draws = np.asarray(dist.sample(rng, 200_000))
    tol = 4.5 / math.sqrt(draws.size)
    for z in (-0.9, -0.3, 0.0, 0.4, 1.1):
        assert abs(np.mean(draws <= z) - dist.cdf(z)) < tol + 1e-12


def test_sampling_shapes():
    u = UniformInterval(0.5)
    rng = np.random.default_rng(0)
    assert np.shape(u.sample(rng)) == ()
    assert u.sample(rng, 7).shape == (7,)
    assert u.sample(rng, (3, 2)).shape == (3, 2)


def test_two_point_law():
    tp = TwoPoint(1.0)
    assert tp.cdf(-1.5) == 0.0
    assert tp.cdf(-1.0) == 0.5  # right-continuous at the atom
    assert tp.cdf(0.0) == 0.5
    assert tp.cdf(1.0) == 1.0
    with pytest.raises(NotInvertibleError):
        tp.inv_cdf(0.3)
    with pytest.raises(NoDensityError):
        tp.density(0.0)
    draws = tp.sample(np.random.default_rng(2), 10_000)
    assert set(np.unique(draws)) == {-1.0, 1.0}
    assert abs(np.mean(draws)) < 0.05


def test_gaussian_mixture_density_normalises():
    gm = GaussianMixture(math.pi, 1.0)
    from scipy.integrate import quad

    total, _ = quad(gm.density, -20, 20, limit=200)
    assert total == pytest.approx(1.0, abs=1e-10)
    draws = gm.sample(np.random.default_rng(3), 200_000)
    assert abs(np.mean(draws)) < 0.03
    assert np.std(draws) == pytest.approx(math.sqrt(1.0 + math.pi**2), rel=0.02)


def test_parameter_validation():
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            UniformInterval(bad)
        with pytest.raises(DomainError):
            TwoPoint(bad)
        with pytest.raises(DomainError):
            Triangular(bad)
    with pytest.raises(DomainError):
        GaussianMixture(1.0, 0.0)
    with pytest.raises(DomainError):
        GaussianMixture(-1.0, 1.0)


def test_tabulated_symmetric_round_trip():
    base = RaisedCosine(0.5)
    grid = np.linspace(-0.5, 0.5, 257)
    tab = TabulatedSymmetric(grid, np.asarray(base.cdf(grid)))
    xs = np.linspace(0.02, 0.98, 33)
    np.testing.assert_allclose(tab.inv_cdf(xs), base.inv_cdf(xs), atol=1e-6)
    np.testing.assert_allclose(tab.cdf(tab.inv_cdf(xs)), xs, atol=1e-12)
    # outside the grid the cdf saturates (up to interpolation roundoff)
    assert tab.cdf(-2.0) == pytest.approx(0.0, abs=1e-12)
    assert tab.cdf(2.0) == pytest.approx(1.0, abs=1e-12)
    assert tab.density(3.0) == 0.0


def test_tabulated_symmetric_construction_errors():
    g = np.linspace(-1, 1, 9)
    with pytest.raises(ConstructionError):
        TabulatedSymmetric(g, np.linspace(0, 1, 8))
    with pytest.raises(ConstructionError):
        TabulatedSymmetric(np.zeros(9), np.linspace(0, 1, 9))
    with pytest.raises(ConstructionError):
        TabulatedSymmetric(g, np.linspace(1, 0, 9))
    with pytest.raises(ConstructionError):
        TabulatedSymmetric(g, np.linspace(0, 1.5, 9))


def test_parse_distribution():
    assert parse_distribution("uniform(0.5)") == UniformInterval(0.5)
    assert parse_distribution("TWOPOINT(1)") == TwoPoint(1.0)
    gm = parse_distribution("bigauss(3.14159, 1.0)")
    assert isinstance(gm, GaussianMixture)
    for bad in ("uniform", "uniform()", "uniform(a)", "nope(1)", "uniform(0)"):
        with pytest.raises(ConfigError):
            parse_distribution(bad)


def test_check_calibrated_key_matches_x():
    rng = np.random.default_rng(17)
    for dist in (UniformInterval(0.5), Triangular(0.5), GaussianMixture(math.pi, 1.0)):
        for x in (0.2, 0.5, 0.9):
            freq = check_calibrated_key(dist, x, 100_000, rng)
            assert abs(freq - x) < 4.5 * math.sqrt(x * (1 - x) / 100_000) + 1e-6
    with pytest.raises(DomainError):
        check_calibrated_key(UniformInterval(0.5), 1.0, 10, rng)


@settings(max_examples=60, deadline=None)
@given(
    x=st.floats(min_value=1e-6, max_value=1.0 - 1e-6),
    c=st.floats(min_value=0.1, max_value=3.0),
)
def test_uniform_inverse_is_exact_inverse(x, c):
    u = UniformInterval(c)
    assert u.cdf(u.inv_cdf(x)) == pytest.approx(x, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(z=st.floats(min_value=-8.0, max_value=8.0))
def test_mixture_cdf_inverse_round_trip(z):
    # Far tails are excluded: there the cdf is flat at double precision
    # and no inverse can recover z.
    gm = GaussianMixture(math.pi, 1.0)
    p = gm.cdf(z)
    if 1e-7 < p < 1.0 - 1e-7:
        assert gm.inv_cdf(p) == pytest.approx(z, abs=1e-6)
