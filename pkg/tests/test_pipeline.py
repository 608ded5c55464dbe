import numpy as np
import pytest

from cases import bump_problem
from lamecontact import halfspace
from lamecontact.obstacle import ObstacleProblem, obstacle_solve
from lamecontact.params import DomainError, GridSpec, RealField, derive_constants
from lamecontact.pipeline import (ConvergenceError, Cutoff, SignoriniProblem, cutoff_derivatives,
                                  extend_with_mean, forward_embed, localize, make_cutoff,
                                  signorini_solve)


@pytest.fixture(scope="module")
def bump256():
    prob = bump_problem(256)
    return prob, signorini_solve(prob, tol=1e-10)


def _radial_values(field, grid, radii):
    x = grid.axis()
    return np.interp(radii, x[x >= 0], field[x >= 0])


def test_cutoff_profile():
    g = GridSpec.uniform(1, 8.0, 1024)
    eta = make_cutoff(g, 0.0, 1.0, 2.0).values
    x = g.axis()
    assert np.all((eta >= 0) & (eta <= 1))
    assert np.all(eta[np.abs(x) <= 1.0] == 1.0) and np.all(eta[np.abs(x) >= 2.0] == 0.0)
    i = np.argmin(np.abs(x - 1.5))
    assert x[i] == pytest.approx(1.5, abs=1e-12) and eta[i] == pytest.approx(0.5, abs=1e-14)
    assert np.all(np.diff(eta[x >= 0]) <= 0)


def test_cutoff_derivatives_vanish_at_radii_and_match_differences():
    g = GridSpec.uniform(1, 2 * np.pi, 4096)
    c = Cutoff((0.3,), 1.0, 2.0)
    eta, grad, lap = cutoff_derivatives(g, c)
    x = g.axis() - 0.3
    for rad in (1.0, 2.0):
        i = np.argmin(np.abs(x - rad))
        assert abs(grad[0, i]) <= 1e-12 + 60 * abs(x[i] - rad)
    h = g.spacing
    fd = (np.roll(eta, -1) - np.roll(eta, 1)) / (2 * h)
    assert np.max(np.abs(fd - grad[0])) < 1e-4
    fd2 = (np.roll(eta, -1) - 2 * eta + np.roll(eta, 1)) / h**2
    assert np.max(np.abs(fd2 - lap)) < 2e-2
    assert np.allclose(eta, make_cutoff(g, 0.3, 1.0, 2.0).values)


@pytest.mark.parametrize("r, R", [(2.0, 2.0), (2.5, 2.0), (0.0, 1.0)])
def test_cutoff_radii_validated(r, R):
    g = GridSpec.uniform(1, 2 * np.pi, 32)
    with pytest.raises(DomainError):
        make_cutoff(g, 0.0, r, R)
    with pytest.raises(DomainError):
        Cutoff((0.0,), r, R)


def test_cutoff_must_fit_in_period():
    with pytest.raises(DomainError):
        make_cutoff(GridSpec.uniform(1, 2.0, 32), 0.0, 0.5, 1.5)


def test_problem_validation(unit_params):
    g = GridSpec.uniform(1, 2 * np.pi, 32)
    with pytest.raises(DomainError, match="outside"):
        SignoriniProblem(unit_params, g, RealField(g, np.full(32, 0.1)), Cutoff((0.0,), 1.0, 2.0))
    with pytest.raises(DomainError, match="force"):
        SignoriniProblem(unit_params, g, RealField(g, -np.ones(32)), Cutoff((0.0,), 1.0, 2.0),
                         np.zeros((2, 3, 32)))


def test_slack_obstacle_gives_zero(unit_params):
    g = GridSpec.uniform(1, 2 * np.pi, 64)
    prob = SignoriniProblem(unit_params, g, RealField(g, -np.ones(64)), Cutoff((0.0,), 1.5, 2.5))
    sol = signorini_solve(prob)
    assert np.all(sol.trace_un.values == 0) and np.all(sol.displacement.samples == 0)
    assert not sol.contact_set.any() and sol.scalar_solution.residual == 0.0


def test_bump_solution_properties(bump256):
    prob, sol = bump256
    w = prob.window
    x = prob.grid.axis()
    assert sol.contact_set[np.argmin(np.abs(x))]
    assert np.all(sol.trace_un.values[w] >= prob.phi.values[w] - 1e-8)
    assert np.all(sol.traction.values[w] >= -10 * 1e-10)
    free = w & ~sol.contact_set
    assert np.max(np.abs(sol.traction.values[free])) <= 1e-9
    # without force the scalar obstacle is the physical one
    assert np.array_equal(sol.psi_effective.values, prob.phi.values)
    thresholded = w & (sol.trace_un.values - prob.phi.values <= sol.scalar_solution.active_tol)
    assert np.array_equal(thresholded, sol.contact_set)
    assert np.all(sol.trace_un.values[prob.collar] == 0.0)


def test_trace_is_scaled_scalar_obstacle_solution(bump256):
    prob, sol = bump256
    scalar = ObstacleProblem(prob.phi, prob.window, prob.collar)
    ref = obstacle_solve(scalar, tol=1e-11)
    assert np.max(np.abs(ref.v.values - sol.trace_un.values)) <= 1e-8


def test_contact_set_invariant_under_material_scaling():
    a = signorini_solve(bump_problem(128, 1.0, 1.0))
    b = signorini_solve(bump_problem(128, 2.0, 2.0))
    assert np.array_equal(a.contact_set, b.contact_set)
    assert np.max(np.abs(a.trace_un.values - b.trace_un.values)) <= 1e-8


def test_traction_from_displacement_matches_symbol(bump256):
    prob, sol = bump256
    fd = halfspace.slab_traction_fd(prob.params, sol.displacement, order=2)
    inner = prob.grid.distance(0.0) <= 1.0
    err = np.abs(fd - sol.traction.values)[inner]
    contact = sol.contact_set[inner]
    # smooth away from the free boundary; the slab spacing equals the tangential one
    assert np.max(err[~contact]) <= 0.05 * np.max(np.abs(sol.traction.values))


def test_forward_embedding(bump256):
    prob, sol = bump256
    emb = forward_embed(prob.params, sol.scalar_solution)
    assert np.max(np.abs(emb.displacement.samples - sol.displacement.samples)) <= 1e-9
    assert np.array_equal(emb.contact_set, sol.scalar_solution.active_set)
    tau = emb.traction.values
    w = prob.window
    assert np.all(tau[w] >= -1e-9)
    assert np.max(np.abs(tau[w & ~emb.contact_set])) <= 1e-9
    assert np.allclose(tau, prob.params.dtn_constant
                       * halfspace.spectral.half_laplacian(sol.scalar_solution.v.values, prob.grid))


def test_forward_embedding_of_zero(unit_params):
    g = GridSpec.uniform(1, 2 * np.pi, 32)
    d = g.distance(0.0)
    sol = obstacle_solve(ObstacleProblem(RealField(g, -np.ones(32)), d <= 1.5, d >= 2.5))
    assert np.all(forward_embed(unit_params, sol).displacement.samples == 0)


def test_extend_with_mean_keeps_rigid_shift(unit_params, rng):
    g = GridSpec.uniform(1, 2 * np.pi, 32, levels=8, depth=1.0)
    trace = rng.standard_normal(32) + 0.7
    slab = extend_with_mean(unit_params, RealField(g, trace))
    assert np.max(np.abs(slab.normal[0] - trace)) <= 1e-12
    assert np.mean(slab.normal[-1]) == pytest.approx(np.mean(trace))
    plain = halfspace.lame_extend(unit_params, RealField(g, trace))
    assert np.allclose(slab.samples[:-1], plain.samples[:-1])


def test_nonconvergence_raises():
    with pytest.raises(ConvergenceError) as exc:
        signorini_solve(bump_problem(64), tol=1e-14, max_iter=5)
    assert exc.value.solution.iterations == 5


def test_buried_force_shifts_contact():
    # the force enters as L u = F, so F^n > 0 pushes the body onto the obstacle
    runs = {a: signorini_solve(bump_problem(64, force_amplitude=a)) for a in (-1.0, 0.0, 0.5)}
    prob = bump_problem(64, force_amplitude=-1.0)
    sol = runs[-1.0]
    assert sol.mean_removed != 0.0
    assert any("mean" in m for m in sol.log)
    w = prob.window
    assert np.all(sol.trace_un.values[w] >= prob.phi.values[w] - 1e-8)
    assert np.all(sol.trace_un.values[prob.collar] == pytest.approx(0.0, abs=1e-12))
    counts = [runs[a].contact_set.sum() for a in (-1.0, 0.0, 0.5)]
    assert counts[0] < counts[1] < counts[2]


@pytest.mark.parametrize("N, bound", [(64, 0.06), (128, 0.03)])
def test_localization_identity_on_contact_solution(N, bound):
    prob = bump_problem(N)
    sol = signorini_solve(prob)
    rep = localize(prob.params, sol.trace_un, prob.phi, Cutoff((0.0,), 1.0, 2.0))
    assert rep.traction_mismatch <= bound
    assert rep.contact_sets_agree


def test_localization_identity_on_smooth_data(unit_params):
    g = GridSpec.uniform(1, 2 * np.pi, 64, levels=256)
    x = g.axis()
    trace = RealField(g, np.exp(-x**2) * np.cos(x))
    rep = localize(unit_params, trace, RealField(g, np.full(64, -5.0)), Cutoff((0.2,), 0.8, 2.0))
    assert rep.traction_mismatch <= 0.01
    assert not rep.contact_global.any() and rep.contact_sets_agree
