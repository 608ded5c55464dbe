import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamecontact import halfspace as hs
from lamecontact import spectral
from lamecontact.params import GridSpec, RealField, SingularFrequencyError, derive_constants

E = np.exp(-1.0)


def test_fundamental_matrix_at_boundary(unit_params):
    W = hs.fundamental_matrix(unit_params, [1.0], 0.0)
    assert np.allclose(W, 2 * np.pi * np.diag([1 / 3, 1 / 3]), atol=1e-15)


def test_fundamental_matrix_off_diagonal(unit_params):
    W = hs.fundamental_matrix(unit_params, [1.0], 1.0)
    assert W[0, 1] == pytest.approx(2 * np.pi * E * (-1j / 6), abs=1e-15)
    assert W[1, 0] == pytest.approx(W[0, 1], abs=1e-15)


def test_fundamental_matrix_decays(unit_params):
    assert np.max(np.abs(hs.fundamental_matrix(unit_params, [0.7, -0.2], 80.0))) < 1e-20


def test_fundamental_matrix_tangential_block_symmetric(unit_params):
    W = hs.fundamental_matrix(unit_params, [0.3, 1.1], 0.4)
    assert np.allclose(W[:2, :2], W[:2, :2].T)


@pytest.mark.parametrize("call", [
    lambda p: hs.fundamental_matrix(p, [0.0], 1.0),
    lambda p: hs.dirichlet_coefficients(p, [0.0, 0.0]),
    lambda p: hs.extension_kernel(p, 0.0, 0.5),
    lambda p: hs.boundary_traces(p, [0.0]),
])
def test_zero_frequency_is_singular(unit_params, call):
    with pytest.raises(SingularFrequencyError):
        call(unit_params)


def test_dirichlet_coefficients_values(unit_params):
    C = hs.dirichlet_coefficients(unit_params, [1.0], 1.0)
    assert np.allclose(C, [1j / (2 * np.pi), 3 / (2 * np.pi)], atol=1e-15)
    assert np.allclose(hs.fundamental_matrix(unit_params, [1.0], 0.0) @ C, [1j / 3, 1])
    assert np.all(hs.dirichlet_coefficients(unit_params, [1.0], 0.0) == 0)
    Cm = hs.dirichlet_coefficients(unit_params, [-1.0], 1.0)
    assert Cm[0] == pytest.approx(-C[0]) and Cm[1] == pytest.approx(C[1])


def test_extension_kernel_values(unit_params):
    k0 = hs.extension_kernel(unit_params, [1.0], 0.0)
    assert k0.tangential[0] == pytest.approx(1j / 3) and k0.normal == pytest.approx(1.0)
    k1 = hs.extension_kernel(unit_params, [1.0], 1.0)
    assert k1.tangential[0] == pytest.approx(-1j / 3 * E, abs=1e-15)
    assert k1.normal == pytest.approx(5 / 3 * E, abs=1e-15)
    assert abs(k1.tangential[0]) == pytest.approx(0.1226, abs=1e-4)
    assert k1.normal.real == pytest.approx(0.6131, abs=1e-4)


def test_kernel_satisfies_fourier_boundary_row(unit_params):
    d = hs.extension_kernel(unit_params, [1.0], 0.0, derivative=1)
    k = hs.extension_kernel(unit_params, [1.0], 0.0)
    assert d.tangential[0] == pytest.approx(-1j, abs=1e-15)
    assert d.tangential[0] / 1j + 1.0 * k.normal == pytest.approx(0.0, abs=1e-15)


def test_kernel_derivative_matches_difference_quotient():
    p = derive_constants(0.7, 2.3)
    xi, t, e = np.array([0.4, -1.3]), 0.8, 1e-6
    fd = (hs.extension_kernel(p, xi, t + e).normal - hs.extension_kernel(p, xi, t - e).normal) / (2 * e)
    assert hs.extension_kernel(p, xi, t, derivative=1).normal == pytest.approx(fd, rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 20), st.floats(0.05, 20), st.lists(st.floats(-5, 5), min_size=1, max_size=2),
       st.floats(0, 4))
def test_kernel_matrix_consistency(mu, lam, xi, t):
    xi = np.asarray(xi)
    if np.linalg.norm(xi) < 1e-2:
        xi = xi + 0.5
    p = derive_constants(mu, lam)
    k = hs.extension_kernel(p, xi, t)
    scale = max(1.0, np.max(np.abs(np.append(k.tangential, k.normal))))
    assert hs.kernel_matrix_discrepancy(p, xi, t) <= 1e-12 * scale


def test_boundary_traces_values(unit_params):
    tb = hs.boundary_traces(unit_params, [1.0])
    assert tb.tangential_traces[0] == pytest.approx(1j / 3)
    assert tb.normal_derivative == pytest.approx(-1 / 3)
    assert tb.divergence == pytest.approx(-2 / 3)
    assert tb.dtn == pytest.approx(4 / 3)
    assert hs.boundary_traces(unit_params, [2.0]).dtn == pytest.approx(8 / 3)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 20), st.floats(0.05, 20), st.lists(st.floats(0.1, 5), min_size=1, max_size=2))
def test_traced_dtn_equals_closed_symbol(mu, lam, xi):
    p = derive_constants(mu, lam)
    tb = hs.boundary_traces(p, xi)
    q = np.linalg.norm(xi)
    assert tb.dtn == pytest.approx(-2 * mu * tb.normal_derivative - lam * tb.divergence, rel=1e-14)
    assert tb.dtn.real == pytest.approx(p.dtn_constant * q, rel=1e-12)
    assert tb.normal_derivative.real == pytest.approx(-mu * q / (2 * mu + lam), rel=1e-12)


def test_only_kappa_trace_factor_satisfies_boundary_row(unit_params):
    xi = np.array([1.0, 1.0]) / np.sqrt(2)
    cands = hs.tangential_trace_candidates(unit_params, xi)
    good = hs.boundary_condition_residual(unit_params, xi, cands["factor_1_minus_2mu_kappa"])
    bad = hs.boundary_condition_residual(unit_params, xi, cands["factor_1_minus_2mu_nu"])
    assert np.max(np.abs(good)) < 1e-12
    assert np.max(np.abs(bad)) > 0.1
    c1 = hs.tangential_trace_candidates(unit_params, [1.0])
    assert c1["factor_1_minus_2mu_kappa"][0] == pytest.approx(1j / 3)
    assert c1["factor_1_minus_2mu_nu"][0] == pytest.approx(1j / 6)


def test_lattice_traced_symbol(unit_params):
    g = GridSpec.uniform(2, 2 * np.pi, 8)
    a, b = hs.traced_dtn_symbol(unit_params, g), hs.dtn_symbol(unit_params, g)
    assert np.max(np.abs(a - b)) <= 1e-13 * np.max(b)


def test_dtn_apply_examples(unit_params, grid1d, rng):
    x = grid1d.axis()
    assert np.max(np.abs(hs.dtn_apply(unit_params, RealField(grid1d, np.full(32, 3.0))).values)) < 1e-14
    out = hs.dtn_apply(unit_params, RealField(grid1d, np.sin(2 * x))).values
    assert np.max(np.abs(out - 8 / 3 * np.sin(2 * x))) < 1e-13
    f = RealField(grid1d, rng.standard_normal(32))
    half = spectral.to_real(spectral.frac_laplacian_apply(spectral.to_spectral(f), 0.5)).values
    assert np.max(np.abs(hs.dtn_apply(unit_params, f).values - 4 / 3 * half)) < 1e-12


def test_dtn_scales_with_dilation(unit_params):
    # sampling phi(x/r) on a period r*L reproduces the same samples; the symbol shrinks by 1/r
    g1 = GridSpec.uniform(1, 2 * np.pi, 32)
    g2 = GridSpec.uniform(1, 4 * np.pi, 32)
    f = np.cos(g1.axis()) + 0.3 * np.sin(3 * g1.axis())
    a = hs.dtn_apply(unit_params, RealField(g1, f)).values
    b = hs.dtn_apply(unit_params, RealField(g2, f)).values
    assert np.allclose(b, a / 2, atol=1e-13)


def test_lame_extend_single_mode(unit_params):
    g = GridSpec(1, 2 * np.pi, 32, heights=(0.0, 1.0))
    x = g.axis()
    slab = hs.lame_extend(unit_params, RealField(g, np.sin(x)))
    assert np.max(np.abs(slab.normal[0] - np.sin(x))) < 1e-12
    assert np.max(np.abs(slab.normal[1] - E * 5 / 3 * np.sin(x))) < 1e-12
    assert np.max(np.abs(slab.tangential[0, 1] + E / 3 * np.cos(x))) < 1e-12
    zero = hs.lame_extend(unit_params, RealField(g, np.zeros(32)))
    assert np.all(zero.samples == 0)


def test_lame_extend_projects_mean(unit_params, rng):
    g = GridSpec(2, 3.0, 16, heights=(0.0, 0.2))
    phi = rng.standard_normal(g.shape)
    slab = hs.lame_extend(unit_params, RealField(g, phi))
    assert np.max(np.abs(slab.normal[0] - (phi - phi.mean()))) < 1e-10
    with pytest.raises(spectral.ZeroModeError):
        hs.lame_extend(unit_params, RealField(g, phi + 1.0),
                       zero_mode_policy=spectral.ZeroModePolicy.REQUIRE_ZERO_MEAN)


def _slab(params, dt, levels=8):
    g = GridSpec(1, 2 * np.pi, 32, heights=tuple(np.arange(levels + 1) * dt))
    x = g.axis()
    return hs.lame_extend(params, RealField(g, np.sin(x) + 0.5 * np.cos(2 * x)))


def test_finite_difference_rates():
    p = derive_constants(1.3, 0.6)
    bc, bulk, dtn = [], [], []
    for dt in (0.02, 0.01, 0.005):
        s = _slab(p, dt)
        bc.append(np.max(np.abs(hs.slab_boundary_residual(p, s))))
        bulk.append(np.max(np.abs(hs.slab_bulk_residual(p, s))))
        exact = hs.dtn_apply(p, RealField(s.grid, s.normal[0])).values
        dtn.append(np.max(np.abs(hs.slab_traction_fd(p, s) - exact)))
    for errs, rate in ((bc, 2.0), (dtn, 2.0), (bulk, 4.0)):
        assert errs[0] / errs[1] == pytest.approx(rate, rel=0.15)
        assert errs[1] / errs[2] == pytest.approx(rate, rel=0.15)
    assert dtn[-1] < 0.02
