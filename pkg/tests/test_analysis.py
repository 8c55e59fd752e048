"""
Analysis tests: distance law, hitting probabilities, Laplace transform, coverage
"""
import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from scipy import integrate

from models.coverage_models import AntennaParams, RoomGeometry, SystemParams
from models.exceptions import DomainError
from services import analysis_service as an
from services import channel_service as ch
from services import geometry_service as geo
from services.analysis_service import CoverageAnalysisService
from services.specfun_service import ftr_cdf, ftr_laplace

from conftest import PLACEMENTS


def _room_integral(room, sys):
    """lambda_A times the LoS-weighted room area, integrated over the four rectangles around the UE"""
    alpha = ch.blockage_coefficient(sys)
    total = 0.0
    for width in (room.r_x1, room.r_x2):
        for depth in (room.r_y1, room.r_y2):
            value, _ = integrate.dblquad(lambda y, x: math.exp(-alpha * math.hypot(x, y)),
                                         0.0, width, 0.0, depth, epsabs=1e-11, epsrel=1e-11)
            total += value
    return sys.lambda_a * total


# ---------------------------------------------------------------------------
# Distance law
# ---------------------------------------------------------------------------

@pytest.mark.parametrize('placement', PLACEMENTS)
def test_void_probability_matches_area_integral(placement):
    room = RoomGeometry(20.0, 15.0, *placement)
    sys = SystemParams()
    expected = _room_integral(room, sys)
    assert an.los_mass(room, sys, geo.max_corner_distance(room)) == pytest.approx(expected, rel=1e-7)
    assert -math.log(an.void_probability(room, sys)) == pytest.approx(expected, rel=1e-7)


def test_los_mass_without_blockers(corner_room):
    sys = SystemParams(lambda_b=0.0)
    d_max = geo.max_corner_distance(corner_room)
    assert an.los_mass(corner_room, sys, d_max) == pytest.approx(sys.lambda_a * corner_room.area, rel=1e-9)
    assert an.los_mass(corner_room, sys, 2 * d_max) == an.los_mass(corner_room, sys, d_max)


@pytest.mark.parametrize('lambda_a', [0.1, 0.05])
def test_pdf_integrates_to_non_void_mass(corner_room, lambda_a):
    sys = SystemParams(lambda_a=lambda_a)
    d_max = geo.max_corner_distance(corner_room)
    mass, _ = integrate.quad(lambda d: an.nearest_los_pdf(corner_room, sys, d), 0.0, d_max,
                             points=geo.geometric_breakpoints(corner_room)[:-1], epsabs=1e-12, limit=200)
    assert mass == pytest.approx(1.0 - an.void_probability(corner_room, sys), abs=1e-8)
    assert an.nearest_los_cdf(corner_room, sys, d_max) == pytest.approx(mass, abs=1e-8)


def test_pdf_is_cdf_derivative(center_room):
    system = SystemParams(lambda_a=0.02)
    h = 1e-4
    for d in (0.7, 3.3, 9.1):
        slope = (an.nearest_los_cdf(center_room, system, d + h)
                 - an.nearest_los_cdf(center_room, system, d - h)) / (2 * h)
        assert an.nearest_los_pdf(center_room, system, d) == pytest.approx(slope, rel=1e-6)


@pytest.mark.parametrize('lambda_a', [0.1, 0.05])
def test_corner_cdf_below_center_cdf(lambda_a):
    sys = SystemParams(lambda_a=lambda_a)
    center = RoomGeometry(20.0, 15.0, 0.5, 0.5)
    near = RoomGeometry(20.0, 15.0, 0.2, 0.2)
    corner = RoomGeometry(20.0, 15.0, 1 / 20, 1 / 15)
    for d in np.linspace(0.5, 12.0, 24):
        c_center = an.nearest_los_cdf(center, sys, d)
        assert an.nearest_los_cdf(near, sys, d) <= c_center + 1e-12
        assert an.nearest_los_cdf(corner, sys, d) <= c_center + 1e-12


def test_distance_domain(center_room, system):
    with pytest.raises(DomainError):
        an.nearest_los_pdf(center_room, system, -1.0)
    with pytest.raises(DomainError):
        an.nearest_los_cdf(center_room, system, -1.0)


def test_mean_serving_distance(light_scenario):
    service = CoverageAnalysisService(light_scenario)
    mean = service.nearest_los_mean_distance()
    assert 0.0 < mean < service.d_max


# ---------------------------------------------------------------------------
# Hitting probabilities and gains
# ---------------------------------------------------------------------------

def test_ap_hit_prob(default_scenario):
    ap, sys = default_scenario.ap, default_scenario.system
    vertical = ap.phi_v / (math.pi / 2 - math.atan(sys.delta_h / ap.r_cov))
    assert an.ap_hit_prob(ap, sys) == pytest.approx(vertical * ap.phi_h / (2 * math.pi))


def _segment_hit_by_quadrature(theta, phi):
    # |x - y| of two uniform points on [0, theta] has density 2 (theta - t) / theta^2
    density = lambda t: 2 * (theta - t) / theta ** 2
    direct, _ = integrate.quad(density, 0.0, min(phi / 2, theta))
    wrapped = 0.0
    if theta > 2 * math.pi - phi / 2:
        wrapped, _ = integrate.quad(density, 2 * math.pi - phi / 2, theta)
    return direct + wrapped


@pytest.mark.parametrize('theta', [0.1, 0.5, 1.0, 2.0, math.pi, 5.0, 6.1, 2 * math.pi])
def test_segment_hit_prob(theta):
    phi = math.radians(33)
    assert an.segment_hit_prob(theta, phi) == pytest.approx(_segment_hit_by_quadrature(theta, phi), rel=1e-10)


def test_segment_hit_prob_continuity():
    phi = math.radians(33)
    for edge in (phi / 2, 2 * math.pi - phi / 2):
        assert an.segment_hit_prob(edge - 1e-9, phi) == pytest.approx(an.segment_hit_prob(edge + 1e-9, phi), abs=1e-7)


def test_ue_horizontal_hit_prob(center_room):
    ue = AntennaParams(phi_h=math.radians(33), phi_v=math.radians(33))
    assert an.ue_horizontal_hit_prob(center_room, ue, 3.0) == pytest.approx(33 / 360)
    # four short corner segments, each narrower than half the beam
    assert an.ue_horizontal_hit_prob(center_room, ue, 12.0) == pytest.approx(0.25)
    assert an.ue_horizontal_hit_prob(center_room, ue, 13.0) == 0.0


@pytest.mark.parametrize('placement', PLACEMENTS)
def test_ue_hit_prob_grows_toward_the_walls(placement):
    room = RoomGeometry(20.0, 15.0, *placement)
    ue = AntennaParams(phi_h=math.radians(33), phi_v=math.radians(33))
    assert an.ue_horizontal_hit_prob(room, ue, 12.0) > an.ue_horizontal_hit_prob(room, ue, 0.5)


def test_ue_hit_prob_cutoff(default_scenario):
    room, ue, sys = default_scenario.room, default_scenario.ue, default_scenario.system
    r_max = ch.ue_max_horizontal_distance(ue, sys, 5.0)
    assert an.ue_hit_prob(room, ue, sys, 5.0, 6.0) == an.ue_horizontal_hit_prob(room, ue, 5.0)
    assert an.ue_hit_prob(room, ue, sys, 5.0, r_max + 0.1) == 0.0
    with pytest.raises(DomainError):
        an.ue_hit_prob(room, ue, sys, 5.0, 4.0)


def test_gain_distribution_sums_to_one(default_scenario):
    rng = np.random.default_rng(21)
    for p_a, p_u in rng.uniform(0.0, 1.0, (1000, 2)):
        dist = an.gain_distribution(p_a, p_u, default_scenario.ap, default_scenario.ue)
        assert math.fsum(dist.probs) == pytest.approx(1.0, abs=1e-12)
        assert all(p >= 0 for p in dist.probs)
    with pytest.raises(DomainError):
        an.gain_distribution(1.5, 0.5, default_scenario.ap, default_scenario.ue)


def test_gain_distribution_labels(default_scenario):
    dist = an.gain_distribution(0.2, 0.5, default_scenario.ap, default_scenario.ue)
    table = dist.to_dict()
    assert list(table) == list(dist.LABELS)
    assert table['main-main']['gain'] == max(dist.gains)
    assert table['side-side']['probability'] == pytest.approx(0.8 * 0.5)


# ---------------------------------------------------------------------------
# Laplace transform
# ---------------------------------------------------------------------------

def test_exp_series_of_linear_exponent():
    c = np.zeros(30)
    c[0], c[1] = -0.3, 2.5
    l = np.arange(30)
    expected = np.exp(c[0] + l * math.log(c[1]) - np.array([math.lgamma(k + 1) for k in l]))
    np.testing.assert_allclose(an.exp_series(c), expected, rtol=1e-12)


def test_exp_series_rescales_large_coefficients():
    c = np.zeros(60)
    c[0], c[1] = -2.0, 1e5
    l = np.arange(60)
    expected = np.exp(c[0] + l * math.log(c[1]) - np.array([math.lgamma(k + 1) for k in l]))
    got = an.exp_series(c)
    assert np.all(np.isfinite(got))
    np.testing.assert_allclose(got, expected, rtol=1e-10)


def test_exp_series_matches_mpmath_taylor():
    mpmath.mp.dps = 30
    poly = [-0.4, 0.8, 0.3, 0.05]
    coeffs = mpmath.taylor(lambda t: mpmath.exp(sum(a * t ** k for k, a in enumerate(poly))), 0, 11)
    got = an.exp_series(np.array(poly + [0.0] * 8))
    np.testing.assert_allclose(got, [float(v) for v in coeffs], rtol=1e-12)


@pytest.fixture(scope='module')
def tight_service(light_scenario):
    return CoverageAnalysisService(light_scenario, inner_epsabs=1e-14, inner_epsrel=1e-13)


def test_laplace_at_zero_is_one(tight_service):
    for d0 in (0.5, 2.0, 4.0):
        assert tight_service.laplace_in_derivatives(0.0, d0, 0)[0] == pytest.approx(1.0, abs=1e-9)


def test_laplace_matches_direct_integral(tight_service):
    service = tight_service
    sys, ftr = service.system, service.ftr
    d0 = 2.0
    s = service.laplace_argument(10.0, d0)
    r_max = ch.ue_max_horizontal_distance(service.scenario.ue, sys, d0)

    def integrand(d):
        dist = service.gain_distribution_at(d0, d)
        lost = sum(p * (1.0 - ftr_laplace(s, service.link_scale * g * ch.path_gain(d, sys), ftr))
                   for g, p in dist.pairs())
        return an.los_intensity(service.room, sys, d) * lost

    points = sorted(p for p in geo.geometric_breakpoints(service.room) + [r_max] if d0 < p < service.d_max)
    exponent, _ = integrate.quad(integrand, d0, service.d_max, points=points, epsabs=1e-13, limit=200)
    expected = math.exp(-s * sys.n0 - exponent)
    assert service.laplace_in_derivatives(s, d0, 0)[0] == pytest.approx(expected, rel=1e-7)


@pytest.mark.parametrize('snr_scale', [0.5, 1.0, 2.0])
@pytest.mark.parametrize('d0', [1.0, 3.0])
def test_laplace_derivatives_match_finite_differences(tight_service, snr_scale, d0):
    service = tight_service
    # s N0 of order one keeps every derivative comparable to L itself
    s = snr_scale / service.system.n0
    # derivatives of F(t) = L(s (1 + t)) at t = 0 equal s^l L^(l)(s)
    F = lambda t: service.laplace_in_derivatives(s * (1.0 + t), d0, 0)[0]
    h = 1e-2
    f = {k: F(k * h) for k in (-2, -1, 0, 1, 2)}
    fd = [
        (f[1] - f[-1]) / (2 * h),
        (f[1] - 2 * f[0] + f[-1]) / h ** 2,
        (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * h ** 3),
    ]
    derivs = service.laplace_in_derivatives(s, d0, 3, scale=s)
    assert derivs[0] == pytest.approx(f[0], rel=1e-10)
    for order in (1, 2, 3):
        assert derivs[order] == pytest.approx(fd[order - 1], rel=1e-3)
    # completely monotone: derivatives alternate in sign
    assert derivs[1] < 0 < derivs[2] and derivs[3] < 0


def test_derivative_order_beyond_series_length(tight_service):
    service = tight_service
    s = 1.0 / service.system.n0
    high = service.weights.size + 3
    short, _ = service.exponent_coefficients(s, 2.0, 3, scale=s)
    long, _ = service.exponent_coefficients(s, 2.0, high, scale=s)
    assert long.shape == (high + 1,)
    np.testing.assert_allclose(long[:4], short, rtol=1e-8)
    assert np.all(long[1:] >= 0.0)


def test_module_level_derivatives(light_scenario):
    sc = light_scenario
    values = an.laplace_in_derivatives(1e9, 2.0, 2, sc.room, sc.system, sc.ap, sc.ue, sc.ftr, sc.series)
    assert isinstance(values, list) and len(values) == 3
    assert values[0] == pytest.approx(
        CoverageAnalysisService(sc).laplace_in_derivatives(1e9, 2.0, 0)[0], rel=1e-6)


# ---------------------------------------------------------------------------
# Coverage
# ---------------------------------------------------------------------------

def test_coverage_without_interferers_beyond_serving_ap(light_scenario):
    service = CoverageAnalysisService(light_scenario)
    beta = 10.0
    d0 = service.d_max
    # no AP can be farther than the farthest corner, so only noise remains
    noise_only = 1.0 - ftr_cdf(beta * service.system.n0 / (service.g0 * ch.path_gain(d0, service.system)),
                               service.ftr, light_scenario.series)
    value, clamp = service.conditional_coverage(beta, d0)
    assert value == pytest.approx(noise_only, rel=1e-9)
    assert clamp < 1e-12


@pytest.mark.parametrize('d0', [1.0, 3.0, 5.0])
def test_interference_lowers_conditional_coverage(light_scenario, d0):
    service = CoverageAnalysisService(light_scenario)
    beta = 10.0
    noise_only = 1.0 - ftr_cdf(beta * service.system.n0 / (service.g0 * ch.path_gain(d0, service.system)),
                               service.ftr, light_scenario.series)
    value, _ = service.conditional_coverage(beta, d0)
    assert 0.0 <= value <= noise_only + 1e-9


def test_conditional_coverage_non_increasing_in_threshold(light_scenario):
    service = CoverageAnalysisService(light_scenario)
    values = [service.conditional_coverage(10 ** (b / 10), 2.0)[0] for b in range(-10, 35, 5)]
    assert np.all(np.diff(values) <= 1e-9)


def test_threshold_must_be_positive(light_scenario):
    service = CoverageAnalysisService(light_scenario)
    with pytest.raises(DomainError):
        service.conditional_coverage(0.0, 1.0)
    with pytest.raises(DomainError):
        service.coverage_probability(-1.0)


def test_empty_deployment_is_outage(light_scenario):
    scenario = replace(light_scenario, system=replace(light_scenario.system, lambda_a=0.0))
    result = CoverageAnalysisService(scenario).coverage_probability(10.0)
    assert result.coverage == 0.0
    assert result.void_prob == 1.0


@pytest.mark.slow
def test_coverage_probability_bounds_and_trend(light_scenario):
    service = CoverageAnalysisService(light_scenario)
    results = [service.coverage_probability(10 ** (b / 10)) for b in (0.0, 10.0, 20.0)]
    for result in results:
        assert 0.0 <= result.coverage <= 1.0 - result.void_prob + 1e-12
        assert result.trunc_err < 1e-8
        assert result.clamp_err < 1e-6
    coverages = [r.coverage for r in results]
    assert coverages[0] >= coverages[1] >= coverages[2]
    payload = results[1].to_dict()
    assert set(payload) == {'coverage', 'voidProb', 'truncErr', 'quadErr', 'clampErr', 'beta'}


@pytest.mark.slow
def test_coverage_lower_in_corner(scenario_service):
    params = scenario_service.merge(scenario_service.default_parameters(),
                                    {'r_x': 10.0, 'r_y': 7.5, 'big_k': 1.0, 'beta_db': 20.0})
    center = scenario_service.build(params)
    corner = scenario_service.build(scenario_service.merge(params, {'placement': 'corner'}))
    beta = center.system.beta
    p_center = CoverageAnalysisService(center).coverage_probability(beta).coverage
    p_corner = CoverageAnalysisService(corner).coverage_probability(beta).coverage
    assert p_corner < p_center


def _coverage_at(scenario_service, overrides):
    params = scenario_service.merge(scenario_service.default_parameters(), overrides)
    scenario = scenario_service.build(params)
    return CoverageAnalysisService(scenario).coverage_probability(scenario.system.beta).coverage


@pytest.mark.slow
def test_default_room_coverage_lower_in_corner(scenario_service):
    p_center = _coverage_at(scenario_service, {'beta_db': 20.0})
    p_corner = _coverage_at(scenario_service, {'beta_db': 20.0, 'placement': 'corner'})
    assert p_corner < p_center


@pytest.mark.slow
def test_coverage_peaks_at_intermediate_room_size(scenario_service):
    small, medium, large = (_coverage_at(scenario_service, {'r_x': r_x, 'ry_ratio': 0.75, 'beta_db': 20.0})
                            for r_x in (5.0, 15.0, 40.0))
    assert medium > small
    assert medium > large


@pytest.mark.slow
def test_corner_needs_denser_deployment(scenario_service):
    densities = [0.1, 0.2, 0.3, 0.4, 0.6]
    peaks = {}
    for placement in ('center', 'corner'):
        curve = [_coverage_at(scenario_service, {'lambda_a': lam, 'beta_db': 10.0, 'placement': placement})
                 for lam in densities]
        peaks[placement] = densities[int(np.argmax(curve))]
    assert peaks['corner'] / peaks['center'] > 1.5
