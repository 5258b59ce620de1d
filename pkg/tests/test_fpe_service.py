import numpy as np
import pytest
from scipy.special import ndtr

from models.fpe import FpeProblem, SurfaceQuadrature
from models.measures import GridSpec, GridDensity
from services.exceptions import StabilityError, DomainError
from services.field_service import FieldService
from services.fpe_service import FokkerPlanckService


@pytest.fixture(scope='module')
def ou_stationary(injector):
    """Stationary grid density of f = -0.5 x, G = 0.4 I on [-2.5, 2.5]^2."""
    fields = injector.get(FieldService)
    solver = injector.get(FokkerPlanckService)
    f, G = fields.catalog_pair('ou_linear', {'c': 0.5}, 'constant_isotropic_diffusion', {'omega': 0.4})
    problem = FpeProblem(f, G, GridSpec(-2.5, 2.5, 50, -2.5, 2.5, 50), scheme='scharfetter_gummel')
    start = solver.initial_density(problem.grid, 'gaussian', [0.3, -0.2], 1.0)
    return problem, solver.solve_stationary(problem, start, tol=1e-8)


@pytest.mark.parametrize('scheme', ['scharfetter_gummel', 'upwind'])
def test_step_conserves_mass(fpe_service, ou, scheme):
    f, G = ou
    problem = FpeProblem(f, G, GridSpec(-4.0, 4.0, 40, -4.0, 4.0, 40), scheme=scheme)
    density = fpe_service.initial_density(problem.grid, 'gaussian', [1.0, 0.5], 0.5)
    for _ in range(50):
        mass = density.total_mass()
        density = fpe_service.fpe_step(problem, density)
        assert abs(density.total_mass() - mass) < 1e-12
        assert density.values.min() >= 0.0


def test_step_does_not_alias_input(fpe_service, ou):
    f, G = ou
    problem = FpeProblem(f, G, GridSpec(-4.0, 4.0, 40, -4.0, 4.0, 40))
    density = fpe_service.initial_density(problem.grid, 'gaussian', [1.0, 0.5], 0.5)
    before = density.values.copy()
    stepped = fpe_service.fpe_step(problem, density)
    np.testing.assert_array_equal(density.values, before)
    assert stepped.time > density.time


def test_heat_equation_variance_grows_linearly(fpe_service, field_service):
    f, G = field_service.catalog_pair('zero_drift', {}, 'constant_isotropic_diffusion', {'omega': 0.4})
    problem = FpeProblem(f, G, GridSpec(-4.0, 4.0, 80, -4.0, 4.0, 80))
    density = fpe_service.initial_density(problem.grid, 'gaussian', [0.0, 0.0], 0.3)
    later = fpe_service.evolve(problem, density, 1.0)
    assert later.time == pytest.approx(1.0)
    growth = np.diag(later.covariance()) - np.diag(density.covariance())
    np.testing.assert_allclose(growth, [0.16, 0.16], rtol=1e-3)


def test_evolve_callback_sees_snapshots(fpe_service, ou):
    f, G = ou
    problem = FpeProblem(f, G, GridSpec(-4.0, 4.0, 40, -4.0, 4.0, 40), dt=0.01)
    density = fpe_service.initial_density(problem.grid, 'gaussian', [0.0, 0.0], 1.0)
    seen = []
    fpe_service.evolve(problem, density, 0.5, callback=lambda d, k: seen.append(k), callback_every=10)
    assert seen == [10, 20, 30, 40, 50]


def test_ou_stationary_covariance(ou_stationary):
    _, stationary = ou_stationary
    assert stationary.total_mass() == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(stationary.mean(), [0.0, 0.0], atol=1e-4)
    np.testing.assert_allclose(stationary.covariance(), 0.16 * np.eye(2), atol=0.16 * 0.02)


def test_stationary_density_is_a_fixed_point(fpe_service, ou_stationary):
    problem, stationary = ou_stationary
    stepped = fpe_service.fpe_step(problem, stationary)
    assert np.max(np.abs(stepped.values - stationary.values)) < 1e-6


@pytest.mark.slow
def test_double_well_matches_boltzmann_density(fpe_service, field_service):
    omega = 0.8
    f, G = field_service.catalog_pair('double_well_gradient', {'tilt': 0.1},
                                      'constant_isotropic_diffusion', {'omega': omega})
    problem = FpeProblem(f, G, GridSpec(-2.5, 2.5, 50, -2.5, 2.5, 50), scheme='scharfetter_gummel')
    start = fpe_service.initial_density(problem.grid, 'gaussian', [0.0, 0.0], 1.0)
    stationary = fpe_service.solve_stationary(problem, start, tol=1e-7)

    boltzmann = np.exp(-2.0 * f.potential(0.0, problem.grid.points()) / omega ** 2)
    expected = GridDensity(problem.grid, boltzmann).normalized()
    heavy = expected.values * problem.grid.cell_area >= 1e-4
    relative = np.abs(stationary.values[heavy] - expected.values[heavy]) / expected.values[heavy]
    assert relative.max() < 0.03


def test_fixed_dt_above_bound_raises(fpe_service, ou):
    f, G = ou
    problem = FpeProblem(f, G, GridSpec(-4.0, 4.0, 40, -4.0, 4.0, 40), dt=1.0)
    density = fpe_service.initial_density(problem.grid, 'gaussian', [0.0, 0.0], 1.0)
    with pytest.raises(StabilityError):
        fpe_service.fpe_step(problem, density)


def test_chosen_dt_respects_bound(fpe_service, ou):
    f, G = ou
    problem = FpeProblem(f, G, GridSpec(-4.0, 4.0, 40, -4.0, 4.0, 40))
    assert 0 < fpe_service.choose_dt(problem) <= fpe_service.stability_bound(problem)


def test_surface_integral_of_one_is_circumference(fpe_service):
    q = SurfaceQuadrature(center=np.array([0.5, -0.5]), radius=1.5, n_nodes=64)
    value = fpe_service.surface_integral(lambda x: np.ones(len(x)), q)
    assert value == pytest.approx(2 * np.pi * 1.5, rel=1e-12)


def test_flux_of_position_field(fpe_service):
    grid = GridSpec(-3.0, 3.0, 60, -3.0, 3.0, 60)
    q = SurfaceQuadrature(center=np.zeros(2), radius=2.0, n_nodes=128)
    value = fpe_service.surface_integral(grid.points(), q, 'flux_against_normal', grid=grid)
    assert value == pytest.approx(2 * np.pi * 4.0, rel=1e-10)


def test_circle_outside_grid_raises(fpe_service):
    grid = GridSpec(-1.0, 1.0, 20, -1.0, 1.0, 20)
    q = SurfaceQuadrature(center=np.zeros(2), radius=2.0, n_nodes=32)
    with pytest.raises(DomainError):
        fpe_service.surface_integral(np.ones(grid.shape), q, grid=grid)


def test_sink_functional_and_boundary_flux_at_stationarity(fpe_service, ou, ou_stationary):
    f, _ = ou
    _, stationary = ou_stationary
    q = SurfaceQuadrature(center=np.zeros(2), radius=1.0, n_nodes=256)
    sink = fpe_service.mass_sink_functional(stationary, f, 0.4, q)
    flux = fpe_service.boundary_mass_flux(stationary, f, 0.4, q)
    assert sink == pytest.approx(0.0933, rel=0.05)
    assert abs(flux) < 0.2 * sink


def test_trace_identity_cases(fpe_service):
    q = SurfaceQuadrature(center=np.zeros(2), radius=1.0, n_nodes=256)
    identity = lambda x: x
    eye = lambda x: np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2))

    zero = fpe_service.lemma_tr_two_sided(lambda x: np.zeros(x.shape[:-1] + (2, 2)), identity, q)
    assert zero['lhs'] == pytest.approx(0.0, abs=1e-12)
    assert zero['rhs'] == pytest.approx(0.0, abs=1e-12)

    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    constant = fpe_service.lemma_tr_two_sided(lambda x: np.broadcast_to(A, x.shape[:-1] + (2, 2)), identity, q,
                                              div_A=lambda x: np.zeros_like(x), jac_v=eye)
    assert constant['lhs'] == pytest.approx(0.0, abs=1e-12)
    assert constant['rhs'] == pytest.approx(-np.trace(A) * 2 * np.pi, rel=1e-12)
    assert constant['gap'] == pytest.approx(np.trace(A) * 2 * np.pi, rel=1e-12)


def test_trace_identity_finite_differences(fpe_service):
    q = SurfaceQuadrature(center=np.zeros(2), radius=1.0, n_nodes=256)

    def A(x):
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = x[..., 0] ** 2
        out[..., 1, 1] = x[..., 1] ** 2
        return out

    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    result = fpe_service.lemma_tr_two_sided(A, lambda x: x @ rotation.T, q)
    assert result['lhs'] == pytest.approx(0.0, abs=1e-6)
    assert result['rhs'] == pytest.approx(0.0, abs=1e-6)


def test_initial_density_outside_grid_raises(fpe_service):
    grid = GridSpec(-1.0, 1.0, 20, -1.0, 1.0, 20)
    with pytest.raises(DomainError):
        fpe_service.initial_density(grid, 'gaussian', [3.0, 0.0], 0.5)


@pytest.mark.parametrize('kind', ['dirac', 'gaussian', 'uniform_disk', 'uniform_box'])
def test_initial_density_has_unit_mass(fpe_service, kind):
    grid = GridSpec(-2.0, 2.0, 40, -2.0, 2.0, 40)
    density = fpe_service.initial_density(grid, kind, [0.2, -0.3], 0.6)
    assert density.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_check_coverage(fpe_service, ou):
    f, G = ou
    problem = FpeProblem(f, G, GridSpec(-4.0, 4.0, 40, -4.0, 4.0, 40))
    assert fpe_service.check_coverage(problem, [np.zeros(2)], contraction_rate=0.5)
    assert not fpe_service.check_coverage(problem, [np.array([3.0, 0.0])], contraction_rate=0.5)


def test_coverage_uses_local_linearisation(fpe_service, field_service):
    f, G = field_service.catalog_pair('double_well_gradient', {}, 'constant_isotropic_diffusion', {'omega': 0.8})
    problem = FpeProblem(f, G, GridSpec(-2.5, 2.5, 40, -2.5, 2.5, 40))
    # J = diag(-2, -1) at the minima: spreads 0.8 / 2 and 0.8 / sqrt(2)
    np.testing.assert_allclose(fpe_service.stationary_spread(problem, np.array([-1.0, 0.0])),
                               [0.4, 0.8 / np.sqrt(2.0)], rtol=1e-6)
    assert fpe_service.check_coverage(problem, [np.array([-1.0, 0.0]), np.array([1.0, 0.0])])
    assert not fpe_service.check_coverage(problem, [np.array([-1.0, 0.0])], radius=1.6)
    narrow = FpeProblem(f, G, GridSpec(-2.0, 2.0, 32, -2.0, 2.0, 32))
    assert not fpe_service.check_coverage(narrow, [np.array([1.0, 0.0])])
    # the saddle at the origin has no local stationary law
    assert not fpe_service.check_coverage(problem, [np.zeros(2)])


def test_grid_refinement_halves_stationary_error(fpe_service, ou):
    f, G = ou
    errors = []
    for n in (20, 40):
        grid = GridSpec(-2.5, 2.5, n, -2.5, 2.5, n)
        problem = FpeProblem(f, G, grid, scheme='scharfetter_gummel')
        start = fpe_service.initial_density(grid, 'gaussian', [0.0, 0.0], 0.5)
        stationary = fpe_service.solve_stationary(problem, start, tol=1e-8)
        # cell averages of N(0, 0.16 I)
        px = np.diff(ndtr(grid.edges_x() / 0.4)) / grid.hx
        py = np.diff(ndtr(grid.edges_y() / 0.4)) / grid.hy
        exact = np.outer(px, py)
        errors.append(np.sqrt(np.sum((stationary.values - exact) ** 2) * grid.hx * grid.hy))
    assert errors[1] <= 0.5 * errors[0]


def test_lemma_sides_stable_under_refinement(fpe_service):
    def A(x):
        x1, x2 = x[..., 0], x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0 + x1 ** 2
        out[..., 1, 1] = 2.0 + np.sin(x2)
        out[..., 0, 1] = out[..., 1, 0] = 0.3 * x1 * x2
        return out

    def div_A(x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([2.3 * x1, 0.3 * x2 + np.cos(x2)], axis=-1)

    def v(x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([x1 * x2, x1 - x2 ** 2], axis=-1)

    def jac_v(x):
        x1, x2 = x[..., 0], x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = x2
        out[..., 0, 1] = x1
        out[..., 1, 0] = 1.0
        out[..., 1, 1] = -2.0 * x2
        return out

    q = SurfaceQuadrature(np.array([0.3, -0.2]), 0.8, 256)
    for derivatives in ({'div_A': div_A, 'jac_v': jac_v}, {}):
        coarse = fpe_service.lemma_tr_two_sided(A, v, q, **derivatives)
        fine = fpe_service.lemma_tr_two_sided(A, v, q.refined(), **derivatives)
        assert abs(fine['lhs'] - coarse['lhs']) <= 1e-6
        assert abs(fine['rhs'] - coarse['rhs']) <= 1e-6
        assert abs(fine['gap'] - coarse['gap']) <= 2e-6


def test_default_scheme_is_upwind_and_first_order(fpe_service, ou, ou_stationary):
    f, G = ou
    problem = FpeProblem(f, G, GridSpec(-2.5, 2.5, 50, -2.5, 2.5, 50))
    assert problem.scheme == 'upwind'
    start = fpe_service.initial_density(problem.grid, 'gaussian', [0.3, -0.2], 1.0)
    upwind = fpe_service.solve_stationary(problem, start, tol=1e-8)
    assert upwind.total_mass() == pytest.approx(1.0, abs=1e-10)
    # upwinding adds diffusion of order |f| h / 2 on top of the centred term
    np.testing.assert_allclose(np.diag(upwind.covariance()), [0.16, 0.16], rtol=0.2)
    fitted = np.diag(ou_stationary[1].covariance())
    assert np.all(np.abs(np.diag(upwind.covariance()) - 0.16) >= np.abs(fitted - 0.16))
