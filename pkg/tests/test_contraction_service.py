import numpy as np
import pytest

from models.contraction import Box, GLOBALLY_CONTRACTING
from services.exceptions import ValidationError


def test_linear_field_rate_exact_on_every_pair(field_service, contraction_service):
    f = field_service.catalog_field('ou_linear', {'c': 0.5})
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-3, 3, size=(2, 500, 2))
    np.testing.assert_allclose(contraction_service.pair_rates(f, x, y), -0.5, atol=1e-12)
    report = contraction_service.estimate_one_sided_rate(f, Box.symmetric(3.0, 2), 500, seed=0)
    assert report.classification == GLOBALLY_CONTRACTING
    assert report.contraction_rate == pytest.approx(0.5, abs=1e-9)


def test_hopfield_global_rate(field_service, contraction_service):
    f = field_service.catalog_field('hopfield_global', {'beta': 2.0, 'u': [0.2, 0.25]})
    report = contraction_service.estimate_one_sided_rate(f, Box.symmetric(3.0, 2), 2000, seed=1)
    assert report.classification == GLOBALLY_CONTRACTING
    assert 0.45 <= report.contraction_rate <= 0.6


def test_double_well_expands_only_near_origin(field_service, contraction_service):
    f = field_service.catalog_field('double_well_gradient', {'d': 1})
    grid = np.linspace(-2, 2, 201)
    x, y = np.meshgrid(grid, grid, indexing='ij')
    keep = x != y
    xs, ys = x[keep][:, None], y[keep][:, None]
    rates = contraction_service.pair_rates(f, xs, ys)
    inner = (np.abs(xs[:, 0]) < 1 / np.sqrt(3)) & (np.abs(ys[:, 0]) < 1 / np.sqrt(3))
    outer = (np.abs(xs[:, 0]) > 1.0) & (np.abs(ys[:, 0]) > 1.0) & (np.sign(xs[:, 0]) == np.sign(ys[:, 0]))
    assert np.all(rates[inner] > 0)
    assert np.max(rates) <= 1.0 + 1e-12
    assert np.all(rates[outer] < 0)


def test_exclusion_ball_splits_rates(field_service, contraction_service):
    f = field_service.catalog_field('double_well_gradient', {'d': 1})
    report = contraction_service.estimate_one_sided_rate(f, Box((-3.0,), (3.0,)), 1000, seed=2,
                                                         exclusion_ball=(np.zeros(1), 0.5))
    assert report.rate_inside > 0
    assert report.global_rate_estimate >= report.rate_inside


def test_constant_diffusion_has_zero_lipschitz(field_service, contraction_service):
    G = field_service.catalog_field('constant_isotropic_diffusion', {'omega': 0.4})
    est = contraction_service.estimate_diffusion_constants(G, Box.symmetric(3.0, 2), 500, seed=0)
    assert est.L_G_squared_convention == 0.0
    assert est.L_G_plain == 0.0
    assert est.frobenius_sup == pytest.approx(0.4 * np.sqrt(2))
    assert est.sublinearity == pytest.approx(2 * 0.16, rel=1e-2)


def test_inhomogeneous_diffusion_constants(field_service, contraction_service):
    G = field_service.catalog_field('paper_inhomogeneous_diffusion', {'a': 0.4})
    est = contraction_service.estimate_diffusion_constants(G, Box.symmetric(4.0, 2), 5000, seed=3)
    assert est.L_G_squared_convention == pytest.approx(0.16, rel=0.03)
    assert est.L_G_squared_convention <= 0.16 + 1e-9
    assert est.L_G_plain == pytest.approx(0.4, rel=0.02)
    assert est.frobenius_sup <= 0.4 * np.sqrt(2) + 1e-12


def test_drift_growth(field_service, contraction_service):
    f = field_service.catalog_field('ou_linear', {'c': 0.5})
    growth = contraction_service.estimate_drift_growth(f, Box.symmetric(3.0, 2), 500, seed=0)
    assert growth['lipschitz'] == pytest.approx(0.5)
    assert growth['sublinearity'] <= 0.25 + 1e-12


def test_sampling_guards(field_service, contraction_service):
    f = field_service.catalog_field('ou_linear', {'c': 0.5})
    with pytest.raises(ValidationError):
        contraction_service.estimate_one_sided_rate(f, Box.symmetric(1.0, 2), 10, seed=0)
    with pytest.raises(ValidationError):
        contraction_service.estimate_one_sided_rate(f, Box.symmetric(1.0, 3), 500, seed=0)


def test_linear_equilibrium(field_service, contraction_service):
    f = field_service.catalog_field('ou_linear', {'c': 0.5})
    records = contraction_service.find_equilibria(f, Box.symmetric(3.0, 2), n_starts=20)
    assert len(records) == 1
    assert records[0].is_stable
    np.testing.assert_allclose(records[0].x_star, 0.0, atol=1e-10)


def test_hopfield_global_has_single_equilibrium(field_service, contraction_service):
    f = field_service.catalog_field('hopfield_global', {})
    records = contraction_service.find_equilibria(f, Box.symmetric(4.0, 2), n_starts=50)
    assert len(records) == 1
    assert records[0].is_stable
    np.testing.assert_allclose(records[0].x_star, 0.0, atol=1e-8)


def test_hopfield_multistable_equilibria(field_service, contraction_service):
    f = field_service.catalog_field('hopfield_multistable', {'beta': 2.0, 'u': [1.0, 3.0]})
    records = contraction_service.find_equilibria(f, Box.symmetric(4.0, 2), n_starts=300, seed=4)
    stable = sorted((r.x_star for r in records if r.is_stable), key=lambda x: (x[0], x[1]))
    assert len(stable) == 4
    gamma1, gamma2 = 0.9575, 2.99996
    expected = sorted([gamma1 * np.array([1, 1]), -gamma1 * np.array([1, 1]),
                       gamma2 * np.array([1, -1]), -gamma2 * np.array([1, -1])], key=lambda x: (x[0], x[1]))
    for got, want in zip(stable, expected):
        np.testing.assert_allclose(got, want, atol=2e-4)
    origin = [r for r in records if np.linalg.norm(r.x_star) < 1e-8]
    assert len(origin) == 1 and not origin[0].is_stable


def test_non_autonomous_rejected(contraction_service):
    from models.fields import DriftField
    f = DriftField(name='forced', dimension=1, func=lambda t, x: -x + np.sin(t), autonomous=False)
    with pytest.raises(ValidationError):
        contraction_service.find_equilibria(f, Box((-1.0,), (1.0,)))


def test_linear_local_ball_is_whole_radius(field_service, contraction_service):
    f = field_service.catalog_field('ou_linear', {'c': 0.5})
    r_star, c_star = contraction_service.local_contraction_ball(f, np.zeros(2), 2.0, 400, seed=0)
    assert r_star == pytest.approx(2.0)
    assert c_star == pytest.approx(0.5, abs=1e-9)


def test_double_well_local_ball(field_service, contraction_service):
    f = field_service.catalog_field('double_well_gradient', {'d': 1})
    ball = contraction_service.local_contraction_ball(f, np.ones(1), 0.3, 2000, seed=0)
    assert ball.r_star == pytest.approx(0.3)
    # the rate on the ball is set by f'(0.7) = -0.47 at the inner rim
    assert 0.45 <= ball.c_star <= 0.6
    assert np.all(np.diff(ball.rates) >= 0)


def test_mass_sink_threshold(contraction_service):
    assert contraction_service.mass_sink_threshold(1, 0.4, 0.3) == pytest.approx(0.5 * (0.4 / 0.3) ** 2)
    assert contraction_service.mass_sink_threshold(2, 0.4, 1.0) == pytest.approx(0.16)


def test_local_ball_needs_equilibrium(field_service, contraction_service):
    f = field_service.catalog_field('ou_linear', {'c': 0.5})
    with pytest.raises(ValidationError):
        contraction_service.local_contraction_ball(f, np.ones(2), 1.0, 400, seed=0)
