import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamecontact import analysis as an
from lamecontact.params import DomainError, GridSpec, RealField, derive_constants

materials = st.tuples(st.floats(0.1, 10), st.floats(0.1, 10))


def test_profile_coefficients(unit_params):
    p = an.P32Profile(unit_params, sign=1)
    assert (p.a, p.c3, p.b) == pytest.approx((5 / 6, 1 / 2, 1 / 2))


@settings(max_examples=100, deadline=None)
@given(materials)
def test_profile_coefficient_invariants(m):
    p = an.P32Profile(derive_constants(*m))
    assert p.a > p.c3 > 0 and p.b > 0
    assert (3 * (p.c3 - p.a) + 2 * p.b) / 2 == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("theta, expected", [(0.0, (1 / 3, 0.0)), (np.pi, (0.0, -1.0)),
                                             (np.pi / 2, (-2 * np.sqrt(2) / 3, 0.0))])
def test_profile_values(unit_params, theta, expected):
    val = an.p32_eval(an.P32Profile(unit_params, sign=1), 1.0, theta)
    assert val == pytest.approx(np.array(expected), abs=1e-15)
    neg = an.p32_eval(an.P32Profile(unit_params), 1.0, theta)
    assert neg == pytest.approx(-np.array(expected), abs=1e-15)


def test_profile_default_sign_gives_nonnegative_normal_trace(unit_params):
    p = an.P32Profile(unit_params)
    assert p.sign == -1
    s = np.linspace(-2, 2, 41)
    tr = an.p32_boundary_trace(p, s)
    assert np.all(tr >= 0) and np.all(tr[s >= 0] == 0)
    assert tr[0] == pytest.approx(2**1.5)


@settings(max_examples=100, deadline=None)
@given(materials, st.floats(0.01, 5), st.floats(0, np.pi))
def test_profile_homogeneity(m, r, theta):
    p = an.P32Profile(derive_constants(*m))
    assert np.allclose(an.p32_eval(p, 2 * r, theta), 2**1.5 * an.p32_eval(p, r, theta),
                       rtol=1e-14, atol=1e-300)


@pytest.mark.parametrize("r, theta", [(1.0, -0.1), (1.0, 3.2), (-1.0, 1.0)])
def test_profile_domain(unit_params, r, theta):
    with pytest.raises(DomainError):
        an.p32_eval(an.P32Profile(unit_params), r, theta)


def test_profile_validation_rates_and_signs(unit_params):
    p = an.P32Profile(unit_params)
    coarse, fine = an.p32_validate(p, 0.02), an.p32_validate(p, 0.01)
    assert coarse.pde_residual / fine.pde_residual == pytest.approx(4, rel=0.2)
    assert coarse.bc_residual / fine.bc_residual == pytest.approx(4, rel=0.2)
    assert fine.pde_residual < 1e-3 and fine.bc_residual < 1e-4
    r = np.linspace(0.5, 1.0, fine.sigma_contact.size)
    assert np.allclose(fine.sigma_contact, -2 * np.sqrt(r), atol=1e-3)
    assert np.max(np.abs(fine.sigma_noncontact)) < 1e-4
    assert fine.complementarity["sign_admissible"]
    flipped = an.p32_validate(an.P32Profile(unit_params, sign=1), 0.01)
    assert not flipped.complementarity["sign_admissible"]
    with pytest.raises(DomainError):
        an.p32_validate(p, 0.3)


def _line(N=1024, L=2.0):
    g = GridSpec.uniform(1, L, N)
    return g, g.axis()


def _radii(g, hi=0.25):
    return np.geomspace(4 * g.spacing, hi, 6)


@pytest.mark.parametrize("fn, expected", [(lambda x: np.maximum(x, 0) ** 1.5, 1.5),
                                          (lambda x: x**2, 2.0)])
def test_vanishing_order_of_homogeneous_traces(fn, expected):
    g, x = _line()
    fit = an.vanishing_order(RealField(g, fn(x)), 0.0, _radii(g))
    assert fit.slope == pytest.approx(expected, abs=0.05)
    assert fit.confidence < 0.05


def test_vanishing_order_of_profile_trace(unit_params):
    g, x = _line()
    tr = an.p32_boundary_trace(an.P32Profile(unit_params), x)
    assert an.vanishing_order(RealField(g, tr), 0.0, _radii(g)).slope == pytest.approx(1.5, abs=0.05)


def test_vanishing_order_off_node_and_affine_removal():
    g, x = _line()
    x0 = 0.3 * g.spacing
    tr = 0.7 + 0.2 * (x - x0) + np.maximum(x - x0, 0) ** 1.5
    plain = an.vanishing_order(RealField(g, tr), x0, _radii(g))
    assert plain.slope < 0.2
    fit = an.vanishing_order(RealField(g, tr), x0, _radii(g), affine_removal=True)
    assert fit.slope == pytest.approx(1.5, abs=0.1)


def test_vanishing_order_in_two_dimensions():
    g = GridSpec.uniform(2, 2.0, 256)
    X, Y = g.coords()
    fit = an.vanishing_order(RealField(g, X**2 + Y**2), (0.0, 0.0), _radii(g, 0.3))
    assert fit.slope == pytest.approx(2.0, abs=0.05)
    fit = an.vanishing_order(RealField(g, np.maximum(X, 0) ** 1.5), (0.0, 0.0), _radii(g, 0.3))
    assert fit.slope == pytest.approx(1.5, abs=0.05)


def test_vanishing_order_preconditions():
    g, x = _line(64)
    f = RealField(g, x**2)
    with pytest.raises(DomainError, match="2h"):
        an.vanishing_order(f, 0.0, np.geomspace(g.spacing, 0.5, 5))
    with pytest.raises(DomainError, match="factor"):
        an.vanishing_order(f, 0.0, np.geomspace(0.1, 0.4, 5))
    with pytest.raises(DomainError, match="4 radii"):
        an.vanishing_order(f, 0.0, [0.1, 0.5, 0.9])


@pytest.mark.parametrize("slope, density, label", [(1.5, 0.5, "regular"),
                                                   (2.0, 0.05, "singular_candidate"),
                                                   (1.95, 0.4, "undetermined")])
def test_classification(slope, density, label):
    assert an.classify_point(slope, density).value == label


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.floats(0, 1))
def test_classification_is_total(slope, density):
    lab = an.classify_point(slope, density)
    assert (lab is an.PointLabel.REGULAR) == (slope < 1.85)


@pytest.mark.parametrize("N", [256, 512, 1024])
def test_contact_density_on_synthetic_masks(N):
    g, x = _line(N, 2 * np.pi)
    radii = np.geomspace(np.pi / 2, 3 * np.pi / 4, 4)
    _, half = an.contact_density(x <= 0, g, 0.0, radii)
    assert np.max(np.abs(half - 0.5)) <= 2 / N
    _, point = an.contact_density(np.isclose(x, 0), g, 0.0, radii)
    assert np.max(point) <= 2 / N
    assert np.all(point > 0)


def test_contact_density_half_plane():
    g = GridSpec.uniform(2, 2.0, 128)
    X, _ = g.coords()
    _, dens = an.contact_density(X <= 0, g, (0.0, 0.0), [0.2, 0.4])
    assert np.max(np.abs(dens - 0.5)) <= 4 * g.spacing / 0.2


def test_contact_density_drops_unresolved_radii():
    g, x = _line(64)
    with pytest.warns(UserWarning, match="dropping"):
        kept, dens = an.contact_density(x <= 0, g, 0.0, [g.spacing, 0.2, 0.4])
    assert kept.tolist() == [0.2, 0.4] and dens.size == 2


def test_profile_correlation_and_direction(unit_params):
    g, x = _line(1024)
    gap = an.p32_boundary_trace(an.P32Profile(unit_params), x)
    mask = x >= 0
    assert an.contact_direction(mask, g, 0.0, 0.2) == pytest.approx([1.0])
    assert an.profile_correlation(RealField(g, gap), mask, unit_params, 0.0, 0.01, 0.2) == pytest.approx(1.0)
    mirrored = RealField(g, np.roll(gap[::-1], 1))
    assert an.profile_correlation(mirrored, ~mask | (x == 0), unit_params, 0.0, 0.01, 0.2) \
        == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(DomainError):
        an.contact_direction(np.zeros(1024, bool), g, 0.0, 0.2)


def test_classify_free_boundary_on_half_line():
    g, x = _line(1024)
    gap = np.maximum(x, 0) ** 1.5
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = an.classify_free_boundary(RealField(g, gap), x <= 0, np.array([[0.0]]), _radii(g))
    assert len(rep) == 1 and rep[0].label is an.PointLabel.REGULAR
    assert rep[0].density == pytest.approx(5 / 9)  # 5 of the 9 nodes within 4h
