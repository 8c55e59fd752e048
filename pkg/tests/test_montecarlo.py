"""
Monte Carlo simulator tests
"""
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from models.coverage_models import (
    AntennaParams, BeamMode, BlockageMode, DistanceHistogram, FtrParams, Scene, SimConfig, SystemParams,
)
from models.exceptions import DomainError
from services import analysis_service as an
from services import channel_service as ch
from services import montecarlo_service as mc
from services import specfun_service as sf
from services.analysis_service import CoverageAnalysisService


UE = AntennaParams(phi_h=math.radians(33), phi_v=math.radians(33), k_ratio=0.1)


def _within(estimate, expected, slack):
    return abs(estimate.mean - expected) <= 4 * estimate.stderr + slack


def test_trial_streams_are_reproducible():
    a = mc.trial_rng(5, 3).random(4)
    b = mc.trial_rng(5, 3).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, mc.trial_rng(5, 4).random(4))
    assert not np.array_equal(a, mc.trial_rng(6, 3).random(4))


def test_chunks_cover_every_trial():
    assert mc._chunks(10, 4) == [(0, 4), (4, 8), (8, 10)]
    assert mc._chunks(3, 0) == [(0, 1), (1, 2), (2, 3)]
    assert mc._chunks(0, 5) == []


def test_scene_points_lie_in_room(center_room, system):
    counts = []
    for trial in range(2000):
        scene = mc.sample_scene(center_room, system, mc.trial_rng(1, trial))
        counts.append(scene.ap_count)
        for points in (scene.ap_positions, scene.blocker_positions):
            assert np.all(points >= 0.0)
            assert np.all(points[:, 0] <= center_room.r_x) and np.all(points[:, 1] <= center_room.r_y)
        np.testing.assert_allclose(scene.ue_position, [10.0, 7.5])
    assert np.mean(counts) == pytest.approx(system.lambda_a * center_room.area, abs=0.6)


def test_empty_densities_give_empty_scene(center_room):
    scene = mc.sample_scene(center_room, SystemParams(lambda_a=0.0, lambda_b=0.0), mc.trial_rng(0, 0))
    assert scene.ap_count == 0
    assert scene.blocker_positions.shape == (0, 2)


def test_cylinder_blockage_uses_shadow_length(system):
    ue = np.array([10.0, 7.5])
    ap = np.array([[15.0, 7.5]])
    rng = np.random.default_rng(0)
    # ground shadow of the 5 m link is 5 * 0.7 / 2 = 1.75 m long
    near = Scene(ap, np.array([[10.5, 7.6]]), ue, rng)
    far = Scene(ap, np.array([[13.0, 7.5]]), ue, rng)
    side = Scene(ap, np.array([[11.0, 8.0]]), ue, rng)
    assert not mc.is_los(near, 0, system, BlockageMode.CYLINDER)
    assert mc.is_los(far, 0, system, BlockageMode.CYLINDER)
    assert mc.is_los(side, 0, system, BlockageMode.CYLINDER)


def test_is_los_rejects_bad_index(system):
    scene = Scene(np.array([[1.0, 1.0]]), np.zeros((0, 2)), np.array([0.0, 0.0]), np.random.default_rng(0))
    with pytest.raises(DomainError):
        mc.is_los(scene, 1, system, BlockageMode.BERNOULLI)


def test_histogram_bins():
    hist = DistanceHistogram(edges=np.array([0.0, 0.5, 1.0]), density=np.zeros(2), stderr=np.zeros(2),
                             void_fraction=0.0, void_stderr=0.0, trials=1)
    assert hist.bin_of(0.2) == 0
    assert hist.bin_of(0.7) == 1
    assert hist.bin_of(1.0) is None
    assert hist.bin_of(-0.1) is None
    np.testing.assert_allclose(hist.centers, [0.25, 0.75])


def test_coverage_is_schedule_independent(light_scenario):
    s = light_scenario
    args = (s.room, s.system, s.ap, s.ue, s.ftr, [1.0, 10.0])
    base = SimConfig(trials=60, seed=42, chunk_size=20)
    serial = mc.simulate_coverage(*args, base)
    pooled = mc.simulate_coverage(*args, replace(base, workers=2))
    rechunked = mc.simulate_coverage(*args, replace(base, chunk_size=7))
    assert [e.mean for e in serial] == [e.mean for e in pooled] == [e.mean for e in rechunked]
    assert serial[0].mean >= serial[1].mean


def test_coverage_needs_trials(light_scenario):
    s = light_scenario
    with pytest.raises(DomainError):
        mc.simulate_coverage(s.room, s.system, s.ap, s.ue, s.ftr, 10.0, SimConfig(trials=0))


def test_scalar_threshold_gives_single_estimate(light_scenario):
    s = light_scenario
    estimate = mc.simulate_coverage(s.room, s.system, s.ap, s.ue, s.ftr, 10.0, SimConfig(trials=20, seed=1))
    assert estimate.trials == 20
    assert 0.0 <= estimate.mean <= 1.0


@pytest.mark.parametrize('room_fixture,d0', [('center_room', 3.0), ('center_room', 8.0),
                                             ('center_room', 11.0), ('corner_room', 1.2)])
def test_hitting_matches_segment_formula(request, system, room_fixture, d0):
    room = request.getfixturevalue(room_fixture)
    # every out-of-room gap is wider than half the beam, so the formula is exact here
    estimate = mc.simulate_hitting(room, system, UE, d0, SimConfig(trials=200_000, seed=9))
    assert _within(estimate, an.ue_horizontal_hit_prob(room, UE, d0), 1e-3)


def test_hitting_needs_an_arc(center_room, system):
    with pytest.raises(DomainError):
        mc.simulate_hitting(center_room, system, UE, 13.0, SimConfig(trials=10))


def test_distance_histogram_rejects_bad_bin(center_room, system):
    with pytest.raises(DomainError):
        mc.simulate_distance_pdf(center_room, system, SimConfig(trials=10), 0.0)


@pytest.mark.slow
def test_los_rate_bernoulli(center_room, system):
    estimate = mc.simulate_los_rate(center_room, system, 5.0, SimConfig(trials=20_000, seed=3))
    assert _within(estimate, ch.los_probability(5.0, system), 0.0)


@pytest.mark.slow
def test_los_rate_cylinder(center_room, system):
    cfg = SimConfig(trials=20_000, seed=4, blockage_mode=BlockageMode.CYLINDER)
    estimate = mc.simulate_los_rate(center_room, system, 5.0, cfg)
    # blockers whose centers fall in the capsule around the ground shadow
    expected = math.exp(-5.0 * ch.blockage_coefficient(system) - system.lambda_b * math.pi * system.r_b ** 2)
    assert _within(estimate, expected, 0.0)


@pytest.mark.slow
def test_ftr_sampler_matches_law():
    p = FtrParams()
    samples = mc.sample_ftr(p, np.random.Generator(np.random.Philox(key=17)), 100_000)
    assert np.mean(samples) == pytest.approx(p.mean_power, rel=0.02)
    result = stats.kstest(samples, lambda x: sf.ftr_cdf(x, p))
    assert result.statistic < 0.007


@pytest.mark.slow
def test_distance_histogram_matches_law(center_room):
    sys = SystemParams(lambda_a=0.02)
    hist = mc.simulate_distance_pdf(center_room, sys, SimConfig(trials=20_000, seed=5), 0.5)
    assert hist.void_fraction == pytest.approx(an.void_probability(center_room, sys),
                                               abs=4 * hist.void_stderr + 0.003)
    for idx, (lo, hi) in enumerate(zip(hist.edges[:-1], hist.edges[1:])):
        hi = min(hi, 12.5)
        if lo >= hi:
            continue
        expected = (an.nearest_los_cdf(center_room, sys, hi) - an.nearest_los_cdf(center_room, sys, lo)) / 0.5
        assert abs(hist.density[idx] - expected) <= 4 * hist.stderr[idx] + 0.005


@pytest.mark.slow
def test_simulated_coverage_matches_analysis(light_scenario):
    s = light_scenario
    beta = 10.0
    estimate = mc.simulate_coverage(s.room, s.system, s.ap, s.ue, s.ftr, beta,
                                    SimConfig(trials=20_000, seed=11))
    analytic = CoverageAnalysisService(s).coverage_probability(beta).coverage
    assert _within(estimate, analytic, 0.02)


def test_single_ap_without_interference_follows_fading_law(light_scenario, monkeypatch):
    s = light_scenario
    d0 = 3.0
    ue_xy = np.array(s.room.ue_position, dtype=float)

    def lone_ap(room, sys, rng):
        return Scene(ap_positions=(ue_xy + [d0, 0.0])[None, :], blocker_positions=np.zeros((0, 2)),
                     ue_position=ue_xy.copy(), rng_state=rng)

    monkeypatch.setattr(mc, 'sample_scene', lone_ap)
    ap_main, _ = ch.lobe_gains(s.ap)
    ue_main, _ = ch.lobe_gains(s.ue)
    snr_scale = ch.link_constant(ap_main, ue_main, s.system) * ch.path_gain(d0, s.system) / s.system.n0
    levels = [0.25 * s.ftr.mean_power, s.ftr.mean_power, 3.0 * s.ftr.mean_power]
    betas = [snr_scale * h for h in levels]
    cfg = SimConfig(trials=20_000, seed=21, blockage_mode=BlockageMode.CYLINDER)
    estimates = mc.simulate_coverage(s.room, s.system, s.ap, s.ue, s.ftr, betas, cfg)
    for estimate, h in zip(estimates, levels):
        assert _within(estimate, 1.0 - sf.ftr_cdf(h, s.ftr), 0.0)


def test_geometric_beams_are_reproducible(light_scenario):
    s = light_scenario
    cfg = SimConfig(trials=50, seed=13, beam_mode=BeamMode.GEOMETRIC, chunk_size=20)
    args = (s.room, s.system, s.ap, s.ue, s.ftr, [1.0, 10.0])
    first = mc.simulate_coverage(*args, cfg)
    again = mc.simulate_coverage(*args, replace(cfg, chunk_size=9))
    assert [e.mean for e in first] == [e.mean for e in again]


def test_cylinder_coverage_is_reproducible(light_scenario):
    s = light_scenario
    cfg = SimConfig(trials=50, seed=14, blockage_mode=BlockageMode.CYLINDER, chunk_size=20)
    args = (s.room, s.system, s.ap, s.ue, s.ftr, 10.0)
    assert mc.simulate_coverage(*args, cfg).mean == mc.simulate_coverage(*args, replace(cfg, workers=2)).mean


@pytest.mark.slow
def test_geometric_beams_agree_with_probabilistic(light_scenario):
    s = light_scenario
    args = (s.room, s.system, s.ap, s.ue, s.ftr, 10.0)
    cfg = SimConfig(trials=20_000, seed=15)
    probabilistic = mc.simulate_coverage(*args, cfg)
    geometric = mc.simulate_coverage(*args, replace(cfg, beam_mode=BeamMode.GEOMETRIC))
    # both modes share scenes and fading, only the beam draws differ
    assert _within(geometric, probabilistic.mean, 0.02)


@pytest.mark.slow
def test_cylinder_coverage(light_scenario):
    s = light_scenario
    args = (s.room, s.system, s.ap, s.ue, s.ftr, 10.0)
    cfg = SimConfig(trials=20_000, seed=16, blockage_mode=BlockageMode.CYLINDER)
    cylinder = mc.simulate_coverage(*args, cfg)
    bernoulli = mc.simulate_coverage(*args, replace(cfg, blockage_mode=BlockageMode.BERNOULLI))
    # a blocker standing on the UE cuts every link
    body_on_ue = math.exp(-s.system.lambda_b * math.pi * s.system.r_b ** 2)
    assert cylinder.mean <= body_on_ue + 4 * cylinder.stderr
    assert _within(cylinder, bernoulli.mean, 0.05)
