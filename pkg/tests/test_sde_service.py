import numpy as np
import pytest

from models.ensemble import ParticleEnsemble
from models.fields import DriftField, DiffusionField
from services.exceptions import DivergenceError, ValidationError
from services.sde_service import SDEService


def zero_diffusion():
    return DiffusionField(name='zero', dimension=2, func=lambda t, x: np.zeros(x.shape[:-1] + (2, 2)))


def test_zero_dynamics_leave_state(field_service, sde_service):
    f = field_service.catalog_field('zero_drift', {})
    x = np.array([0.3, -0.7])
    out = sde_service.step_em(x, f, zero_diffusion(), 0.0, 0.5, np.array([1.0, 2.0]))
    np.testing.assert_array_equal(out, x)


def test_deterministic_euler_step(field_service, sde_service):
    f = field_service.catalog_field('ou_linear', {'c': 0.5})
    out = sde_service.step_em(np.array([1.0, 0.0]), f, zero_diffusion(), 0.0, 0.01, np.zeros(2))
    np.testing.assert_allclose(out, [0.995, 0.0], atol=1e-15)


def test_pure_diffusion_step(field_service, sde_service):
    f = field_service.catalog_field('zero_drift', {})
    G = field_service.catalog_field('constant_isotropic_diffusion', {'omega': 0.4})
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    dW = np.array([[0.1, -0.2], [0.0, 0.5]])
    np.testing.assert_allclose(sde_service.step_em(x, f, G, 0.0, 0.01, dW), x + 0.4 * dW, atol=1e-15)


def test_step_rejects_bad_input(ou, sde_service):
    f, G = ou
    with pytest.raises(ValidationError):
        sde_service.step_em(np.zeros(2), f, G, 0.0, 0.0, np.zeros(2))
    with pytest.raises(ValidationError):
        sde_service.step_em(np.zeros(2), f, G, 0.0, 0.01, np.zeros(3))


def test_divergence_reports_step_and_index(sde_service):
    f = DriftField(name='blowup', dimension=2, func=lambda t, x: x ** 3)
    G = zero_diffusion()
    with pytest.raises(DivergenceError) as err:
        sde_service.step_em(np.array([[0.0, 0.0], [1e200, 0.0]]), f, G, 0.0, 1.0, np.zeros((2, 2)), step=7)
    assert err.value.step == 7
    assert err.value.index == 1


def test_equal_starts_give_identical_paths(ou, sde_service):
    f, G = ou
    pair = sde_service.simulate_coupled_pair(f, G, [1.0, -1.0], [1.0, -1.0], 2.0, 0.01, seed=5)
    np.testing.assert_array_equal(pair.trajectory_x.states, pair.trajectory_z.states)


def test_constant_diffusion_cancels_in_difference(ou, sde_service):
    f, G = ou
    x0, z0 = np.array([2.0, 1.0]), np.array([-1.0, 0.5])
    pair = sde_service.simulate_coupled_pair(f, G, x0, z0, 5.0, 0.01, seed=11)
    k = np.arange(len(pair.trajectory_x.times))
    expected = np.linalg.norm(x0 - z0) * (1 - 0.5 * 0.01) ** k
    np.testing.assert_allclose(pair.separation(), expected, rtol=1e-9)


def test_trajectory_is_reproducible(ou, sde_service):
    f, G = ou
    a = sde_service.simulate_trajectory(f, G, [0.5, 0.5], 1.0, 0.01, seed=3)
    b = sde_service.simulate_trajectory(f, G, [0.5, 0.5], 1.0, 0.01, seed=3)
    c = sde_service.simulate_trajectory(f, G, [0.5, 0.5], 1.0, 0.01, seed=4)
    np.testing.assert_array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)
    assert len(a.times) == 101


def test_zero_steps_is_identity(ou, sde_service):
    f, G = ou
    e = sde_service.sample_initial('gaussian', [0.0, 0.0], 1.0, 50, seed=1)
    assert sde_service.evolve_ensemble(e, f, G, 0.01, 0) is e


def test_ensemble_independent_of_worker_count(ou):
    f, G = ou
    serial = SDEService(workers=1, block_size=64)
    parallel = SDEService(workers=4, block_size=64)
    e = serial.sample_initial('uniform_box', [0.0, 0.0], 2.0, 300, seed=9)
    a = serial.evolve_ensemble(e, f, G, 0.01, 50)
    b = parallel.evolve_ensemble(e, f, G, 0.01, 50)
    np.testing.assert_array_equal(a.particles, b.particles)


def test_split_run_matches_single_run(ou, sde_service):
    f, G = ou
    e = sde_service.sample_initial('gaussian', [1.0, 0.0], 0.5, 100, seed=2)
    whole = sde_service.evolve_ensemble(e, f, G, 0.01, 20)
    half = sde_service.evolve_ensemble(e, f, G, 0.01, 10)
    split = sde_service.evolve_ensemble(half, f, G, 0.01, 10)
    np.testing.assert_array_equal(whole.particles, split.particles)
    assert split.steps_taken == 20
    assert split.time == pytest.approx(0.2)


def test_initial_measures(sde_service):
    dirac = sde_service.sample_initial('dirac', [1.0, 2.0], 0.0, 10, seed=0)
    np.testing.assert_array_equal(dirac.particles, np.tile([1.0, 2.0], (10, 1)))
    disk = sde_service.sample_initial('uniform_disk', [1.0, 1.0], 0.5, 500, seed=0)
    assert np.all(np.linalg.norm(disk.particles - 1.0, axis=1) <= 0.5 + 1e-12)
    box = sde_service.sample_initial('uniform_box', [0.0, 0.0], 2.0, 500, seed=0)
    assert np.all(np.abs(box.particles) <= 2.0)
    other = sde_service.sample_initial('uniform_box', [0.0, 0.0], 2.0, 500, seed=0, stream=2)
    assert not np.array_equal(box.particles, other.particles)
    with pytest.raises(ValidationError):
        sde_service.sample_initial('cauchy', [0.0, 0.0], 1.0, 5, seed=0)


def test_horizon_must_be_multiple_of_dt():
    assert SDEService.steps_for(20.0, 0.01) == 2000
    with pytest.raises(ValidationError):
        SDEService.steps_for(1.005, 0.01)


def test_brownian_variance(field_service, sde_service):
    f = field_service.catalog_field('zero_drift', {})
    G = field_service.catalog_field('constant_isotropic_diffusion', {'omega': 0.4})
    e = sde_service.sample_initial('dirac', [0.0, 0.0], 0.0, 20000, seed=21)
    e = sde_service.evolve_ensemble(e, f, G, 0.01, 100)
    np.testing.assert_allclose(np.diag(e.covariance()), [0.16, 0.16], rtol=0.05)


@pytest.mark.slow
def test_ou_stationary_covariance(ou, sde_service):
    f, G = ou
    e = sde_service.sample_initial('gaussian', [0.0, 0.0], 1.0, 20000, seed=7)
    e = sde_service.evolve_ensemble(e, f, G, 0.01, 2000)
    cov = e.covariance()
    np.testing.assert_allclose(np.diag(cov), [0.16, 0.16], rtol=0.03)
    assert abs(cov[0, 1]) < 0.03 * 0.16


def test_ensemble_rejects_non_finite():
    with pytest.raises(ValueError):
        ParticleEnsemble(particles=np.array([[np.nan, 0.0]]), master_seed=0)


@pytest.fixture
def hopfield_pairs(field_service, sde_service):
    f, G = field_service.catalog_pair('hopfield_global', {'beta': 2.0, 'u': [0.2, 0.25]},
                                      'paper_inhomogeneous_diffusion', {'a': 0.4})
    n_pairs = 200
    x0 = np.tile([1.0, 0.5], (n_pairs, 1))
    z0 = np.tile([-1.0, -0.5], (n_pairs, 1))
    squared = sde_service.coupled_pair_separations(f, G, x0, z0, 3.0, 0.01, seeds=list(range(n_pairs)))
    rate = 2 * f.constants.contraction_rate - G.constants.squared_lipschitz
    return squared, rate


def test_coupled_pairs_decay_at_guaranteed_rate(hopfield_pairs):
    squared, rate = hopfield_pairs
    assert squared.shape == (200, 301)
    assert rate == pytest.approx(0.84)
    mean = squared.mean(axis=0)
    times = np.arange(mean.size) * 0.01
    slope = np.polyfit(times, np.log(mean), 1)[0]
    assert slope <= -rate


def test_coupled_pairs_respect_mean_bound(hopfield_pairs):
    squared, rate = hopfield_pairs
    initial = squared[0, 0]
    assert initial == pytest.approx(5.0)
    for k in (50, 100, 200, 300):
        assert squared[:, k].mean() <= initial * np.exp(-rate * k * 0.01) * 1.1


def test_halving_dt_moves_terminal_mean_by_order_dt(ou, sde_service):
    f, G = ou
    means = {}
    for dt in (0.1, 0.05, 0.025):
        e = sde_service.sample_initial('dirac', [2.0, -1.0], 0.0, 20000, seed=5)
        means[dt] = sde_service.evolve_ensemble(e, f, G, dt, int(round(2.0 / dt))).particles.mean(axis=0)
    exact = np.array([2.0, -1.0]) * np.exp(-1.0)
    assert np.max(np.abs(means[0.1] - means[0.05])) < 0.5 * 0.1
    assert np.max(np.abs(means[0.05] - means[0.025])) < 0.5 * 0.05
    assert np.max(np.abs(means[0.025] - exact)) < 0.8 * 0.025
